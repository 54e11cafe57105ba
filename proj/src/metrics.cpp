#include "vcr/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "vcr/errors.hpp"

namespace vcr {

double settling_time(const std::vector<double>& t, const std::vector<double>& y, double t0,
                     double band) {
  if (t.size() != y.size() || t.empty()) throw DomainError("settling_time: size mismatch");
  const auto it = std::lower_bound(t.begin(), t.end(), t0 - 1e-9);
  if (it == t.end()) throw DomainError("settling_time: t0 beyond the series");
  const std::size_t i0 = static_cast<std::size_t>(it - t.begin());
  const double y_end = y.back();
  const double change = std::abs(y_end - y[i0]);
  if (change <= 1e-12 * std::max(1.0, std::abs(y_end))) return 0;
  const double tol = band * change;
  std::size_t last_out = i0;
  bool any_out = false;
  for (std::size_t i = i0; i < y.size(); ++i)
    if (std::abs(y[i] - y_end) > tol) {
      last_out = i;
      any_out = true;
    }
  if (!any_out) return 0;
  return t[std::min(last_out + 1, t.size() - 1)] - t[i0];
}

double window_mean(const std::vector<double>& t, const std::vector<double>& y, double window) {
  if (t.size() != y.size() || t.empty()) throw DomainError("window_mean: size mismatch");
  const double from = t.back() - window;
  double s = 0;
  int n = 0;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t[i] >= from - 1e-9) {
      s += y[i];
      ++n;
    }
  return s / n;
}

const std::vector<double>& Table::col(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return cols[i];
  throw SchemaMismatch("missing column " + name);
}

bool Table::has(const std::string& name) const {
  return std::find(header.begin(), header.end(), name) != header.end();
}

namespace {
// Keeps empty trailing cells; commas inside double quotes do not split.
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') quoted = !quoted;
    else if (ch == ',' && !quoted) out.emplace_back();
    else if (ch != '\r') out.back() += ch;
  }
  return out;
}
}  // namespace

Table read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaMismatch("cannot open " + path);
  Table tb;
  std::string line;
  if (!std::getline(in, line)) throw SchemaMismatch("empty file " + path);
  tb.header = split_csv_line(line);
  tb.cols.resize(tb.header.size());
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    const std::size_t c = cells.size();
    for (std::size_t i = 0; i < std::min(c, tb.header.size()); ++i) {
      double v = std::numeric_limits<double>::quiet_NaN();
      std::from_chars(cells[i].data(), cells[i].data() + cells[i].size(), v);
      tb.cols[i].push_back(v);
    }
    if (c != tb.header.size())
      throw SchemaMismatch(fmt::format("{}: row {} has {} cells, header has {}", path, row, c,
                                       tb.header.size()));
  }
  return tb;
}

RunSummary summarize_run(const std::string& dir, double t_close, double window) {
  const Table lg = read_csv(dir + "/control_log.csv");
  const Table tr = read_csv(dir + "/trajectory.csv");
  RunSummary s;
  s.dir = dir;
  s.t_close = t_close;
  const auto& t = lg.col("t");
  const char* ys[3] = {"P_e", "P_c", "T_e_sec_out"};
  const char* rs[3] = {"ref_P_e", "ref_P_c", "ref_T_e_sec_out"};
  for (int i = 0; i < 3; ++i) {
    const auto& y = lg.col(ys[i]);
    s.settling(i) = settling_time(t, y, t_close);
    s.offset(i) = window_mean(t, y, window) - lg.col(rs[i]).back();
  }
  s.cop = window_mean(tr.col("t"), tr.col("COP"), window);
  return s;
}

namespace {
// A run is named by its directory or by its manifest.
std::string run_dir(const std::string& path) {
  const std::string m = "manifest.json";
  if (path.size() >= m.size() && path.compare(path.size() - m.size(), m.size(), m) == 0) {
    const auto slash = path.find_last_of('/');
    return slash == std::string::npos ? "." : path.substr(0, slash);
  }
  return path;
}
}  // namespace

std::vector<RunSummary> compare_runs(const std::string& run_a, const std::string& run_b,
                                     double t_close, double window) {
  const std::string dir_a = run_dir(run_a), dir_b = run_dir(run_b);
  for (const char* f : {"/control_log.csv", "/trajectory.csv"}) {
    const Table a = read_csv(dir_a + f), b = read_csv(dir_b + f);
    if (a.header != b.header)
      throw SchemaMismatch(fmt::format("{} headers differ between runs", f + 1));
  }
  return {summarize_run(dir_a, t_close, window), summarize_run(dir_b, t_close, window)};
}

}  // namespace vcr
