#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hyperinv/cli/config.hpp"
#include "hyperinv/data/dataset.hpp"

namespace hyperinv::cli {

/// Environment variable naming the default IDX data directory.
inline constexpr const char* kDataDirEnv = "HYPERINV_DATA_DIR";

/// Flags shared by every command that writes a run directory.
struct RunOptions {
  std::filesystem::path config;      ///< empty: snapshot next to the checkpoint, else defaults
  std::filesystem::path out;
  std::filesystem::path checkpoint;  ///< run directory written by `pretrain`
  bool force = false;
  std::optional<std::string> source;
  std::optional<std::uint64_t> seed;
};

/// A run directory: refuses a non-empty target unless forced, carries an
/// INCOMPLETE marker until complete() and writes every file atomically.
class RunDirectory {
 public:
  RunDirectory(std::filesystem::path path, bool force);
  const std::filesystem::path& path() const { return path_; }
  void write(const std::string& name, const std::string& contents) const;
  void complete() const;

 private:
  std::filesystem::path path_;
};

struct Datasets {
  data::LabeledDataset pretrain;  ///< source domain
  data::LabeledDataset pool;      ///< downstream training pool (shifted domain)
  data::LabeledDataset test;      ///< downstream test set
};

/// IDX files expected under `dir` for the mnist source.
std::vector<std::filesystem::path> expected_idx_paths(const std::filesystem::path& dir);

/// Builds the three splits. For the mnist source a missing file raises a
/// ContractError listing every expected path.
Datasets load_datasets(const DataConfig& config);

/// Config resolution: --config, else config.toml in the checkpoint run
/// directory, else defaults; then --source and --seed overrides.
RunConfig resolve_config(const RunOptions& options);

void cmd_pretrain(const RunOptions& options, std::ostream& log);

struct DownstreamOptions {
  RunOptions run;
  std::vector<std::size_t> n;          ///< empty: from config
  std::vector<std::uint64_t> seeds;    ///< empty: from config
  std::vector<std::string> tasks;      ///< empty: from config
  std::optional<std::string> baseline; ///< "mtl"
};
void cmd_downstream(const DownstreamOptions& options, std::ostream& log);

struct MeasureOptions {
  RunOptions run;
  std::optional<std::size_t> points;
};
void cmd_measure(const MeasureOptions& options, std::ostream& log);

void cmd_sweep(const RunOptions& options, std::ostream& log);

/// Closed-form bound from explicit inputs.
struct BoundFormulaOptions {
  std::size_t n = 1;
  std::size_t cardinality = 1;
  double delta = 0.05;
  double X = 1.0;
  double B = 1.0;
  double risk = 0.0;
};
double cmd_bound_formula(const BoundFormulaOptions& options, std::ostream& out);
/// Monte Carlo check of the bound against a pre-trained bundle.
void cmd_bound_check(const RunOptions& options, std::ostream& log);

/// Prints the aligned tables of the reports in a downstream run directory.
void cmd_report(const std::filesystem::path& run_dir, std::ostream& out);

}  // namespace hyperinv::cli
