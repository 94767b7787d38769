#include "hyperinv/hypernet/architecture.hpp"

#include "hyperinv/errors.hpp"

namespace hyperinv::hypernet {

EncoderArchitecture EncoderArchitecture::synthetic() {
  EncoderArchitecture a;
  a.layers = {ConvLayerSpec{3, 16, 5, 2, 2}};
  return a;
}

EncoderArchitecture EncoderArchitecture::toy_contrastive() {
  EncoderArchitecture a;
  a.layers = {ConvLayerSpec{3, 8, 5, 2, 2}, ConvLayerSpec{8, 16, 3, 2, 1}};
  return a;
}

std::pair<std::size_t, std::size_t> EncoderArchitecture::output_hw(std::size_t index) const {
  std::size_t h = height, w = width;
  for (std::size_t l = 0; l <= index && l < layers.size(); ++l) {
    const auto& s = layers[l];
    if (s.kernel > h + 2 * s.padding || s.kernel > w + 2 * s.padding) {
      throw DimensionError("encoder layer " + std::to_string(l) + " kernel exceeds its padded input");
    }
    h = (h + 2 * s.padding - s.kernel) / s.stride + 1;
    w = (w + 2 * s.padding - s.kernel) / s.stride + 1;
  }
  return {h, w};
}

std::size_t EncoderArchitecture::feature_dim() const {
  if (layers.empty()) return channels * height * width;
  const auto [h, w] = output_hw(layers.size() - 1);
  return layers.back().out_channels * h * w;
}

std::size_t EncoderArchitecture::generated_weight_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight_count();
  return n;
}

void EncoderArchitecture::validate() const {
  if (layers.empty()) throw ContractError("encoder architecture has no layers");
  std::size_t in = channels;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (layers[l].in_channels != in) {
      throw DimensionError("encoder layer " + std::to_string(l) + " expects " + std::to_string(layers[l].in_channels) +
                           " input channels, previous layer provides " + std::to_string(in));
    }
    if (layers[l].stride == 0 || layers[l].kernel == 0) throw ContractError("encoder layer with zero kernel or stride");
    in = layers[l].out_channels;
  }
  (void)output_hw(layers.size() - 1);
}

nlohmann::json EncoderArchitecture::to_json() const {
  nlohmann::json j;
  j["input"] = {channels, height, width};
  j["layers"] = nlohmann::json::array();
  for (const auto& l : layers) {
    j["layers"].push_back({{"in_channels", l.in_channels},
                           {"out_channels", l.out_channels},
                           {"kernel", l.kernel},
                           {"stride", l.stride},
                           {"padding", l.padding}});
  }
  j["feature_dim"] = feature_dim();
  return j;
}

EncoderArchitecture EncoderArchitecture::from_json(const nlohmann::json& j) {
  EncoderArchitecture a;
  const auto input = j.at("input").get<std::vector<std::size_t>>();
  if (input.size() != 3) throw ContractError("architecture input must be [C,H,W]");
  a.channels = input[0], a.height = input[1], a.width = input[2];
  for (const auto& l : j.at("layers")) {
    a.layers.push_back({l.at("in_channels").get<std::size_t>(), l.at("out_channels").get<std::size_t>(),
                        l.at("kernel").get<std::size_t>(), l.at("stride").get<std::size_t>(),
                        l.at("padding").get<std::size_t>()});
  }
  a.validate();
  return a;
}

}  // namespace hyperinv::hypernet
