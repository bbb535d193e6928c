#include "goiot/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "goiot/errors.hpp"

namespace goiot {

std::string format_number(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", value);
  return buf;
}

void RecordTable::append(const std::vector<double>& row) {
  if (row.size() != columns.size()) {
    throw Error("record row has " + std::to_string(row.size()) +
                " values, schema has " + std::to_string(columns.size()));
  }
  rows.push_back(row);
}

std::size_t RecordTable::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return i;
  }
  throw Error("no record column named \"" + name + "\"");
}

void RunSummary::add_number(const std::string& name, double value) {
  entries.push_back({name, format_number(value), value, true});
}

void RunSummary::add_text(const std::string& name, std::string text) {
  entries.push_back({name, std::move(text), 0.0, false});
}

bool RunSummary::has(const std::string& name) const {
  for (const SummaryEntry& e : entries) {
    if (e.name == name) return true;
  }
  return false;
}

double RunSummary::number(const std::string& name) const {
  for (const SummaryEntry& e : entries) {
    if (e.name == name) {
      if (!e.numeric) throw Error("summary entry \"" + name + "\" is not numeric");
      return e.value;
    }
  }
  throw Error("no summary entry named \"" + name + "\"");
}

const std::string& RunSummary::text(const std::string& name) const {
  for (const SummaryEntry& e : entries) {
    if (e.name == name) return e.text;
  }
  throw Error("no summary entry named \"" + name + "\"");
}

long burn_in_begin(long slots, double fraction) {
  if (slots <= 0) return 0;
  const double raw = static_cast<double>(slots) * fraction;
  long begin = static_cast<long>(std::floor(raw + 1e-9));
  if (begin < 0) begin = 0;
  if (begin > slots) begin = slots;
  return begin;
}

double window_mean(const RecordTable& table, const std::string& column,
                   long begin_row) {
  const std::size_t col = table.column_index(column);
  const std::size_t begin = static_cast<std::size_t>(begin_row);
  if (begin >= table.rows.size()) {
    throw Error("window for column \"" + column + "\" is empty");
  }
  double sum = 0.0;
  for (std::size_t r = begin; r < table.rows.size(); ++r) sum += table.rows[r][col];
  return sum / static_cast<double>(table.rows.size() - begin);
}

double window_violation_fraction(const RecordTable& table, const std::string& column,
                                 long begin_row, double bound, int direction) {
  const std::size_t col = table.column_index(column);
  const std::size_t begin = static_cast<std::size_t>(begin_row);
  if (begin >= table.rows.size()) {
    throw Error("window for column \"" + column + "\" is empty");
  }
  std::size_t hits = 0;
  for (std::size_t r = begin; r < table.rows.size(); ++r) {
    const double v = table.rows[r][col];
    if ((direction > 0 && v > bound) || (direction < 0 && v < bound)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(table.rows.size() - begin);
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  return out;
}

void close_out(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace

void write_records_csv(const RecordTable& table, const std::string& path) {
  std::ofstream out = open_out(path);
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    if (i > 0) out << ',';
    out << table.columns[i];
  }
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) out << ',';
      out << format_number(row[i]);
    }
    out << '\n';
  }
  close_out(out, path);
}

void write_summary_csv(const RunSummary& summary, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "metric,value\n";
  for (const SummaryEntry& e : summary.entries) {
    out << e.name << ',' << e.text << '\n';
  }
  close_out(out, path);
}

}  // namespace goiot
