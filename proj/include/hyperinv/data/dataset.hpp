#pragma once

#include <cstddef>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hyperinv/data/image.hpp"
#include "hyperinv/numerics/tensor.hpp"

namespace hyperinv::data {

enum class Source { mnist, kmnist, synthetic_glyph };
enum class LabelField { digit, rotation, color };

std::string to_string(Source source);
Source source_from_string(const std::string& name);
std::string to_string(LabelField field);
LabelField label_field_from_string(const std::string& name);
std::size_t num_classes(LabelField field);

/// Angle in degrees for rotation label k (-90 + 30k).
double rotation_angle(int rotation_label);

struct LabeledExample {
  Tensor image;  ///< [3,28,28]
  int digit_label = 0;
  int rotation_label = 0;
  int color_label = 0;
};

struct Provenance {
  std::string parent;  ///< description of the parent dataset
  std::uint64_t parent_seed = 0;
  std::vector<std::size_t> indices;  ///< positions in the parent
};

/// Colored-rotated images with one label per generative factor.
struct LabeledDataset {
  ImageStack images;
  std::vector<int> digit_labels;
  std::vector<int> rotation_labels;
  std::vector<int> color_labels;
  Source source = Source::synthetic_glyph;
  std::uint64_t seed = 0;
  std::string split = "train";
  std::optional<Provenance> provenance;

  std::size_t size() const { return images.size(); }
  LabeledExample example(std::size_t i) const;
  const std::vector<int>& labels(LabelField field) const;
  std::vector<std::size_t> class_counts(LabelField field) const;
  LabeledDataset subset(std::span<const std::size_t> indices) const;
  std::string describe() const;
  /// Source, seed, split sizes, per-class counts and provenance.
  nlohmann::json manifest() const;
};

struct FactorDraw {
  int rotation_label;
  int color_label;
};

/// Rotation and color factors for example `index`: a pure function of (seed, index).
FactorDraw draw_factors(std::uint64_t seed, std::size_t index);

/// Rotates each grayscale base image by a uniformly drawn angle from the
/// 7-angle set, then puts it in one uniformly drawn RGB channel.
LabeledDataset build_colored_rotated(const ImageStack& base, std::span<const int> digit_labels, std::uint64_t seed,
                                     Source source, std::string split = "train");
LabeledDataset build_colored_rotated(const Tensor& base, std::span<const int> digit_labels, std::uint64_t seed,
                                     Source source, std::string split = "train");

/// Exactly n_per_class examples of every class of `field`, drawn uniformly
/// without replacement. Throws ContractError naming the first class with
/// fewer than n_per_class members.
LabeledDataset subsample_per_class(const LabeledDataset& dataset, std::size_t n_per_class, LabelField field,
                                   std::uint64_t seed);

}  // namespace hyperinv::data
