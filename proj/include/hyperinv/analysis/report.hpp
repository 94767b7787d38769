#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hyperinv/training/downstream.hpp"

namespace hyperinv::analysis {

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;  ///< sample standard deviation (0 for a single value)
  std::size_t count = 0;
};

MeanStd mean_std(std::span<const double> values);

/// One row per N, aggregated over seeds. Accuracies are percentages.
struct ReportRow {
  std::size_t n = 0;
  std::vector<double> descriptor_percent;  ///< mean i* over seeds, in percent
  MeanStd discrete;                        ///< A_{I*}
  MeanStd continuous;                      ///< A_{i*}
  std::optional<MeanStd> baseline;         ///< A_MTL
};

struct Report {
  std::string task;
  std::vector<ReportRow> rows;

  /// Header "N,i_star,A_discrete_mean,A_discrete_std,A_continuous_mean,
  /// A_continuous_std,A_mtl_mean,A_mtl_std,seeds"; i_star is written as
  /// semicolon-separated percentages and an absent baseline as empty fields.
  std::string to_csv() const;
  /// Aligned table; an absent baseline renders as "-".
  std::string to_text() const;
};

/// Groups results by N (ascending). Baseline results are matched by N.
Report make_report(std::span<const training::DownstreamResult> results,
                   std::span<const training::BaselineResult> baseline = {});

/// Inverse of Report::to_csv.
Report parse_report_csv(const std::string& csv, const std::string& task = "");

}  // namespace hyperinv::analysis
