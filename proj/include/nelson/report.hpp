#pragma once

#include <string>
#include <vector>

#include "nelson/types.hpp"

namespace nelson {

struct LedgerEntry {
  std::string name;
  std::string anchor;  // the inequality being tested
  double margin = 0;   // >= 0 means satisfied
  bool pass = false;
  int step = -1;
};

LedgerEntry ledger_entry(std::string name, std::string anchor, double margin, int step = -1);

struct PowerFit {
  double exponent = 0;
  double prefactor = 0;
  bool saturated = false;  // every value below the floor
  int points = 0;
};

// least-squares fit of log y = log C + p log x over entries with y > floor
PowerFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y,
                       double floor = 1e-14, int min_points = 3);

// 17 significant digits, "nan"/"inf" spelled out
std::string fmt_double(double v);

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  void row(const std::vector<std::string>& cells);
  std::string str() const { return text_; }

 private:
  std::size_t width_;
  std::string text_;
};

// write to path.tmp then rename over path
void write_atomic(const std::string& path, const std::string& content);

std::string ledger_json(const std::vector<LedgerEntry>& entries, const std::string& command);

}  // namespace nelson
