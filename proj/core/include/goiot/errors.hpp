#pragma once

#include <stdexcept>
#include <string>

namespace goiot {

// Base type for everything the library throws on purpose.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class ConfigInvalid : public Error { public: using Error::Error; };
class IoError : public Error { public: using Error::Error; };

// physics
class ZeroGain : public Error { public: using Error::Error; };
class InfeasiblePower : public Error { public: using Error::Error; };

// per-slot optimization
class EmptyActionSpace : public Error { public: using Error::Error; };
class TraceTooShort : public Error { public: using Error::Error; };

// sensing
class SubspaceTooLarge : public Error { public: using Error::Error; };
class RankDeficient : public Error { public: using Error::Error; };
class Infeasible : public Error { public: using Error::Error; };

// inference
class InfeasibleAction : public Error { public: using Error::Error; };

// federated learning
class EmptySelection : public Error { public: using Error::Error; };

}  // namespace goiot
