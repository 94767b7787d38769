#include "hyperinv/data/dataset.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "hyperinv/data/transforms.hpp"
#include "hyperinv/errors.hpp"
#include "hyperinv/numerics/rng.hpp"

namespace hyperinv::data {

std::string to_string(Source source) {
  switch (source) {
    case Source::mnist: return "mnist";
    case Source::kmnist: return "kmnist";
    case Source::synthetic_glyph: return "synthetic-glyph";
  }
  return "unknown";
}

Source source_from_string(const std::string& name) {
  if (name == "mnist") return Source::mnist;
  if (name == "kmnist") return Source::kmnist;
  if (name == "glyph" || name == "synthetic-glyph") return Source::synthetic_glyph;
  throw ContractError("unknown data source '" + name + "' (expected mnist, kmnist or glyph)");
}

std::string to_string(LabelField field) {
  switch (field) {
    case LabelField::digit: return "digit";
    case LabelField::rotation: return "rotation";
    case LabelField::color: return "color";
  }
  return "unknown";
}

LabelField label_field_from_string(const std::string& name) {
  if (name == "digit") return LabelField::digit;
  if (name == "rotation") return LabelField::rotation;
  if (name == "color") return LabelField::color;
  throw ContractError("unknown label field '" + name + "' (expected digit, rotation or color)");
}

std::size_t num_classes(LabelField field) {
  switch (field) {
    case LabelField::digit: return 10;
    case LabelField::rotation: return kRotationAngles.size();
    case LabelField::color: return 3;
  }
  return 0;
}

double rotation_angle(int rotation_label) {
  if (rotation_label < 0 || rotation_label >= static_cast<int>(kRotationAngles.size())) {
    throw IndexError("rotation label " + std::to_string(rotation_label) + " not in [0,7)");
  }
  return -90.0 + 30.0 * rotation_label;
}

LabeledExample LabeledDataset::example(std::size_t i) const {
  return {image_to_tensor(images.image(i)), digit_labels.at(i), rotation_labels.at(i), color_labels.at(i)};
}

const std::vector<int>& LabeledDataset::labels(LabelField field) const {
  switch (field) {
    case LabelField::digit: return digit_labels;
    case LabelField::rotation: return rotation_labels;
    case LabelField::color: return color_labels;
  }
  return digit_labels;
}

std::vector<std::size_t> LabeledDataset::class_counts(LabelField field) const {
  std::vector<std::size_t> counts(num_classes(field), 0);
  for (int l : labels(field)) {
    if (l >= 0 && static_cast<std::size_t>(l) < counts.size()) ++counts[static_cast<std::size_t>(l)];
  }
  return counts;
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> indices) const {
  LabeledDataset out;
  out.images = images.select(indices);
  for (auto i : indices) {
    out.digit_labels.push_back(digit_labels.at(i));
    out.rotation_labels.push_back(rotation_labels.at(i));
    out.color_labels.push_back(color_labels.at(i));
  }
  out.source = source;
  out.seed = seed;
  out.split = split;
  out.provenance = Provenance{describe(), seed, std::vector<std::size_t>(indices.begin(), indices.end())};
  return out;
}

std::string LabeledDataset::describe() const {
  std::ostringstream os;
  os << to_string(source) << '/' << split << "/seed=" << seed << "/n=" << size();
  return os.str();
}

nlohmann::json LabeledDataset::manifest() const {
  nlohmann::json j;
  j["source"] = to_string(source);
  j["seed"] = seed;
  j["split"] = split;
  j["size"] = size();
  j["image_shape"] = {images.channels(), images.height(), images.width()};
  for (auto f : {LabelField::digit, LabelField::rotation, LabelField::color}) {
    j["class_counts"][to_string(f)] = class_counts(f);
  }
  if (provenance) {
    j["parent"] = {{"dataset", provenance->parent}, {"seed", provenance->parent_seed},
                   {"selected", provenance->indices.size()}};
  }
  return j;
}

FactorDraw draw_factors(std::uint64_t seed, std::size_t index) {
  Rng rng(derive_seed(seed, "colored-rotated", index));
  FactorDraw d;
  d.rotation_label = static_cast<int>(rng.uniform_index(kRotationAngles.size()));
  d.color_label = static_cast<int>(rng.uniform_index(3));
  return d;
}

LabeledDataset build_colored_rotated(const ImageStack& base, std::span<const int> digit_labels, std::uint64_t seed,
                                     Source source, std::string split) {
  if (base.channels() != 1) throw DimensionError("build_colored_rotated: base images must be grayscale");
  if (digit_labels.size() != base.size()) {
    throw DimensionError("build_colored_rotated: " + std::to_string(digit_labels.size()) + " labels for " +
                         std::to_string(base.size()) + " images");
  }
  LabeledDataset out;
  out.images = ImageStack(3, base.height(), base.width());
  out.source = source;
  out.seed = seed;
  out.split = std::move(split);
  for (std::size_t i = 0; i < base.size(); ++i) {
    const auto f = draw_factors(seed, i);
    out.images.push_back(colorize(rotate_image(base.image(i), rotation_angle(f.rotation_label)), f.color_label));
    out.digit_labels.push_back(digit_labels[i]);
    out.rotation_labels.push_back(f.rotation_label);
    out.color_labels.push_back(f.color_label);
  }
  return out;
}

LabeledDataset build_colored_rotated(const Tensor& base, std::span<const int> digit_labels, std::uint64_t seed,
                                     Source source, std::string split) {
  return build_colored_rotated(ImageStack::from_tensor(base), digit_labels, seed, source, std::move(split));
}

LabeledDataset subsample_per_class(const LabeledDataset& dataset, std::size_t n_per_class, LabelField field,
                                   std::uint64_t seed) {
  const auto classes = num_classes(field);
  std::vector<std::vector<std::size_t>> members(classes);
  const auto& labels = dataset.labels(field);
  for (std::size_t i = 0; i < labels.size(); ++i) members.at(static_cast<std::size_t>(labels[i])).push_back(i);

  std::vector<std::size_t> chosen;
  for (std::size_t c = 0; c < classes; ++c) {
    if (members[c].size() < n_per_class) {
      throw ContractError("subsample_per_class: " + to_string(field) + " class " + std::to_string(c) + " has only " +
                          std::to_string(members[c].size()) + " examples, need " + std::to_string(n_per_class));
    }
    Rng rng(derive_seed(seed, "subsample-" + to_string(field), c));
    auto& pool = members[c];
    // Partial Fisher-Yates.
    for (std::size_t k = 0; k < n_per_class; ++k) {
      const std::size_t j = k + rng.uniform_index(pool.size() - k);
      std::swap(pool[k], pool[j]);
      chosen.push_back(pool[k]);
    }
  }
  std::sort(chosen.begin(), chosen.end());
  return dataset.subset(chosen);
}

}  // namespace hyperinv::data
