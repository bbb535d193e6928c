#pragma once

#include <string>
#include <vector>

namespace goiot {

// Number formatting used in every emitted CSV cell: 9 significant digits,
// '.' decimal separator. Keeping one formatter makes outputs byte-stable.
std::string format_number(double value);

// Per-slot records with a fixed column schema. The first column is the slot
// index by convention.
struct RecordTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void append(const std::vector<double>& row);
  std::size_t column_index(const std::string& name) const;
};

struct SummaryEntry {
  std::string name;
  std::string text;
  double value = 0.0;
  bool numeric = false;
};

// Scalar digest of one run: window averages, violation statistics, and
// queue-stability verdicts. wall_seconds stays out of the CSV because
// timing is not reproducible.
struct RunSummary {
  std::vector<SummaryEntry> entries;
  double wall_seconds = 0.0;

  void add_number(const std::string& name, double value);
  void add_text(const std::string& name, std::string text);
  bool has(const std::string& name) const;
  double number(const std::string& name) const;
  const std::string& text(const std::string& name) const;
};

// First row index of the post-burn-in window.
long burn_in_begin(long slots, double fraction);

double window_mean(const RecordTable& table, const std::string& column,
                   long begin_row);

// Fraction of post-burn-in rows where the column compares true against the
// bound; direction is +1 for "value > bound" and -1 for "value < bound".
double window_violation_fraction(const RecordTable& table, const std::string& column,
                                 long begin_row, double bound, int direction);

void write_records_csv(const RecordTable& table, const std::string& path);
void write_summary_csv(const RunSummary& summary, const std::string& path);

}  // namespace goiot
