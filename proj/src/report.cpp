#include "nelson/report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace nelson {

LedgerEntry ledger_entry(std::string name, std::string anchor, double margin, int step) {
  LedgerEntry e;
  e.name = std::move(name);
  e.anchor = std::move(anchor);
  e.margin = margin;
  e.pass = margin >= 0.0;
  e.step = step;
  return e;
}

PowerFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y, double floor,
                       int min_points) {
  PowerFit f;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
    if (!(y[i] > floor) || !(x[i] > 0)) continue;
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  f.points = static_cast<int>(lx.size());
  if (lx.empty()) {
    f.saturated = true;
    return f;
  }
  if (f.points < min_points)
    fail(ErrorKind::fit_undefined, "only " + std::to_string(f.points) + " usable points, need " +
                                       std::to_string(min_points));
  double mx = 0, my = 0;
  for (int i = 0; i < f.points; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= f.points;
  my /= f.points;
  double sxx = 0, sxy = 0;
  for (int i = 0; i < f.points; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx == 0.0) fail(ErrorKind::fit_undefined, "abscissae coincide");
  f.exponent = sxy / sxx;
  f.prefactor = std::exp(my - f.exponent * mx);
  return f;
}

std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : width_(header.size()) { row(header); }

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != width_) fail(ErrorKind::io, "csv row width mismatch");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) text_ += ',';
    text_ += cells[i];
  }
  text_ += '\n';
}

void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::io, "cannot open " + tmp.string());
    out << content;
    if (!out) fail(ErrorKind::io, "write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string ledger_json(const std::vector<LedgerEntry>& entries, const std::string& command) {
  nlohmann::ordered_json doc;
  doc["command"] = command;
  auto arr = nlohmann::ordered_json::array();
  int failed = 0;
  for (const auto& e : entries) {
    nlohmann::ordered_json j;
    j["name"] = e.name;
    j["anchor"] = e.anchor;
    // json has no nan; keep the text form so the file stays valid
    if (std::isfinite(e.margin))
      j["margin"] = e.margin;
    else
      j["margin"] = fmt_double(e.margin);
    j["pass"] = e.pass;
    if (e.step >= 0) j["step"] = e.step;
    arr.push_back(j);
    if (!e.pass) ++failed;
  }
  doc["entries"] = arr;
  doc["summary"] = {{"total", entries.size()}, {"failed", failed}};
  return doc.dump(2) + "\n";
}

}  // namespace nelson
