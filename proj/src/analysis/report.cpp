#include "hyperinv/analysis/report.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

#include "hyperinv/errors.hpp"

namespace hyperinv::analysis {

namespace {

std::string exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fixed(double v, int digits) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("report CSV line " + std::to_string(line) + ": '" + s + "' is not a number", line);
  }
}

std::string pad(const std::string& s, std::size_t width) {
  return std::string(width > s.size() ? width - s.size() : 0, ' ') + s;
}

}  // namespace

MeanStd mean_std(std::span<const double> values) {
  MeanStd m;
  m.count = values.size();
  if (values.empty()) return m;
  m.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double s = 0.0;
    for (double v : values) s += (v - m.mean) * (v - m.mean);
    m.stddev = std::sqrt(s / static_cast<double>(values.size() - 1));
  }
  return m;
}

Report make_report(std::span<const training::DownstreamResult> results,
                   std::span<const training::BaselineResult> baseline) {
  Report report;
  if (!results.empty()) report.task = results.front().task;
  std::map<std::size_t, std::vector<const training::DownstreamResult*>> by_n;
  for (const auto& r : results) by_n[r.n_per_class].push_back(&r);
  std::map<std::size_t, std::vector<double>> base_by_n;
  for (const auto& b : baseline) base_by_n[b.n_per_class].push_back(100.0 * b.test.accuracy);

  for (const auto& [n, cell] : by_n) {
    ReportRow row;
    row.n = n;
    const std::size_t k = cell.front()->continuous.size();
    row.descriptor_percent.assign(k, 0.0);
    std::vector<double> disc, cont;
    for (const auto* r : cell) {
      for (std::size_t c = 0; c < k; ++c) row.descriptor_percent[c] += 100.0 * r->continuous[c];
      disc.push_back(100.0 * r->test_discrete.accuracy);
      cont.push_back(100.0 * r->test_continuous.accuracy);
    }
    for (auto& v : row.descriptor_percent) v /= static_cast<double>(cell.size());
    row.discrete = mean_std(disc);
    row.continuous = mean_std(cont);
    if (auto it = base_by_n.find(n); it != base_by_n.end()) row.baseline = mean_std(it->second);
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::string Report::to_csv() const {
  std::ostringstream os;
  os << "N,i_star,A_discrete_mean,A_discrete_std,A_continuous_mean,A_continuous_std,A_mtl_mean,A_mtl_std,seeds\n";
  for (const auto& r : rows) {
    os << r.n << ',';
    for (std::size_t c = 0; c < r.descriptor_percent.size(); ++c) os << (c ? ";" : "") << exact(r.descriptor_percent[c]);
    os << ',' << exact(r.discrete.mean) << ',' << exact(r.discrete.stddev) << ',' << exact(r.continuous.mean) << ','
       << exact(r.continuous.stddev) << ',';
    if (r.baseline) os << exact(r.baseline->mean) << ',' << exact(r.baseline->stddev);
    else os << ',';
    os << ',' << r.continuous.count << '\n';
  }
  return os.str();
}

std::string Report::to_text() const {
  std::vector<std::vector<std::string>> cells;
  cells.push_back({"N", "i* (%)", "A_I*", "A_i*", "A_MTL"});
  for (const auto& r : rows) {
    hypernet::InvarianceDescriptor d;
    for (double v : r.descriptor_percent) d.values.push_back(v / 100.0);
    auto ms = [](const MeanStd& m) { return fixed(m.mean, 1) + " ± " + fixed(m.stddev, 1); };
    cells.push_back({std::to_string(r.n), d.to_percent_string(), ms(r.discrete), ms(r.continuous),
                     r.baseline ? ms(*r.baseline) : "-"});
  }
  std::vector<std::size_t> width(5, 0);
  for (const auto& row : cells)
    for (std::size_t c = 0; c < row.size(); ++c) {
      std::size_t cps = 0;
      for (unsigned char ch : row[c])
        if ((ch & 0xC0) != 0x80) ++cps;
      width[c] = std::max(width[c], cps);
    }
  std::ostringstream os;
  os << "task: " << (task.empty() ? "-" : task)
     << "  (i* is the fitted descriptor in [0,1] space, accuracies in %, mean ± std over seeds)\n";
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "  " : "") << pad(row[c], width[c]);
    os << '\n';
  }
  return os.str();
}

Report parse_report_csv(const std::string& csv, const std::string& task) {
  Report report;
  report.task = task;
  std::istringstream in(csv);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 || line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 9) throw ParseError("report CSV line " + std::to_string(lineno) + ": expected 9 fields", lineno);
    ReportRow r;
    r.n = static_cast<std::size_t>(parse_double(f[0], lineno));
    for (const auto& p : split(f[1], ';'))
      if (!p.empty()) r.descriptor_percent.push_back(parse_double(p, lineno));
    const auto seeds = static_cast<std::size_t>(parse_double(f[8], lineno));
    r.discrete = {parse_double(f[2], lineno), parse_double(f[3], lineno), seeds};
    r.continuous = {parse_double(f[4], lineno), parse_double(f[5], lineno), seeds};
    if (!f[6].empty()) r.baseline = MeanStd{parse_double(f[6], lineno), parse_double(f[7], lineno), seeds};
    report.rows.push_back(std::move(r));
  }
  return report;
}

}  // namespace hyperinv::analysis
