#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "hyperinv/data/dataset.hpp"
#include "hyperinv/training/config.hpp"
#include "hyperinv/training/pretrain.hpp"

namespace hyperinv::cli {

/// Parsed TOML subset: `[section]` headers, `key = value` pairs with strings,
/// integers, floats, booleans and flat arrays of those, `#` comments.
/// Nested tables, inline tables and multi-line values are not supported.
struct TomlDocument {
  /// Top-level keys live under the empty section name.
  nlohmann::json root = nlohmann::json::object();
  /// "section.key" -> 1-based line number.
  std::map<std::string, std::size_t> lines;

  std::size_t line_of(const std::string& section, const std::string& key) const;
};

/// Throws ParseError carrying the line number.
TomlDocument parse_toml(const std::string& text, const std::string& origin = "<config>");
TomlDocument load_toml(const std::filesystem::path& path);

struct DataConfig {
  /// synthetic-glyph, or mnist (pre-training on MNIST, downstream on KMNIST).
  data::Source source = data::Source::synthetic_glyph;
  /// Directory holding mnist/ and kmnist/ IDX files; empty falls back to
  /// $HYPERINV_DATA_DIR.
  std::string dir;
  std::size_t pretrain_per_class = 300;
  std::size_t pool_per_class = 200;
  std::size_t test_per_class = 100;
  std::uint64_t seed = 1;
};

struct DownstreamSection {
  std::vector<std::string> tasks{"digit", "rotation"};
  std::vector<std::size_t> n{10, 20, 50, 100, 200};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  int levels = 2;
};

struct MeasureSection {
  std::size_t points = 11;
  std::size_t images = 200;
  std::size_t draws = 4;
};

struct SweepSection {
  std::vector<std::string> tasks{"digit", "color", "rotation"};
  std::size_t n_per_class = 50;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::size_t points = 11;
};

struct BoundSection {
  std::string task = "digit";
  std::size_t n_per_class = 10;
  std::size_t trials = 20;
  double delta = 0.05;
};

struct ContrastiveSection {
  std::size_t images = 2000;
};

/// Everything a command needs; serialised verbatim into each run directory.
struct RunConfig {
  std::uint64_t seed = 0;  ///< master seed; all module seeds derive from it
  DataConfig data;
  /// "multitask" or "contrastive".
  std::string pretrain_kind = "multitask";
  bool train_baseline = true;
  training::MtlAugmentation baseline_augmentation = training::MtlAugmentation::per_task;
  training::TrainConfig pretrain = training::TrainConfig::pretrain_defaults();
  training::TrainConfig contrastive = training::TrainConfig::contrastive_defaults();
  training::TrainConfig downstream = training::TrainConfig::downstream_defaults();
  ContrastiveSection contrastive_data;
  DownstreamSection downstream_protocol;
  MeasureSection measure;
  SweepSection sweep;
  BoundSection bound;

  /// TOML text that parses back to an identical RunConfig.
  std::string to_toml() const;
  nlohmann::json to_json() const;
};

/// Unknown sections or keys and ill-typed values raise ParseError naming the
/// line, section and key.
RunConfig run_config_from_toml(const TomlDocument& doc);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace hyperinv::cli
