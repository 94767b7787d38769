#include "hyperinv/training/bundle.hpp"

#include "hyperinv/errors.hpp"

namespace hyperinv::training {

namespace {

Tensor stats_tensor(const std::vector<double>& v) { return Tensor::from_data({v.size()}, v); }

std::vector<double> values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

void add_batchnorm(Checkpoint& cp, const std::vector<hypernet::BatchNormLayer>& bn) {
  for (std::size_t l = 0; l < bn.size(); ++l) {
    const std::string p = "bn." + std::to_string(l) + ".";
    cp.tensors.push_back({p + "gamma", bn[l].gamma});
    cp.tensors.push_back({p + "beta", bn[l].beta});
    cp.tensors.push_back({p + "running_mean", stats_tensor(bn[l].stats.mean)});
    cp.tensors.push_back({p + "running_var", stats_tensor(bn[l].stats.var)});
  }
}

std::vector<hypernet::BatchNormLayer> read_batchnorm(const Checkpoint& cp, std::size_t layers) {
  std::vector<hypernet::BatchNormLayer> bn;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::string p = "bn." + std::to_string(l) + ".";
    bn.push_back({cp.get(p + "gamma").detach(true), cp.get(p + "beta").detach(true),
                  RunningStats{values(cp.get(p + "running_mean")), values(cp.get(p + "running_var"))}});
  }
  return bn;
}

template <typename Fn>
auto with_parse_errors(Fn&& fn) {
  try {
    return fn();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint metadata: ") + e.what(), 0);
  } catch (const ContractError& e) {
    throw ParseError(std::string("checkpoint does not describe a valid bundle: ") + e.what(), 0);
  }
}

}  // namespace

Checkpoint to_checkpoint(const PretrainedBundle& bundle) {
  Checkpoint cp;
  for (const auto& p : bundle.encoder.hyper.parameters()) cp.tensors.push_back({p.name, p.tensor});
  add_batchnorm(cp, bundle.encoder.bn);
  nlohmann::json tasks = nlohmann::json::array();
  for (std::size_t t = 0; t < bundle.task_names.size(); ++t) {
    nlohmann::json entry = {{"name", bundle.task_names[t]}, {"descriptor", bundle.task_descriptors.at(t).values}};
    if (t < bundle.heads.size()) {
      cp.tensors.push_back({"head." + bundle.task_names[t] + ".weight", bundle.heads[t].weight});
      entry["head_size"] = bundle.heads[t].output_dim();
    }
    tasks.push_back(entry);
  }
  cp.metadata = bundle.metadata;
  cp.metadata["bundle"] = "hyper";
  cp.metadata["architecture"] = bundle.encoder.arch.to_json();
  cp.metadata["activation"] = hypernet::to_string(bundle.encoder.hyper.activation);
  cp.metadata["bundle_tasks"] = tasks;
  cp.metadata["has_heads"] = !bundle.heads.empty();
  return cp;
}

PretrainedBundle bundle_from_checkpoint(const Checkpoint& cp) {
  return with_parse_errors([&] {
    if (cp.metadata.value("bundle", "") != "hyper") throw ParseError("checkpoint does not hold a hypernetwork bundle", 0);
    PretrainedBundle b;
    b.encoder.arch = hypernet::EncoderArchitecture::from_json(cp.metadata.at("architecture"));
    auto& h = b.encoder.hyper;
    h.activation = hypernet::hidden_activation_from_string(cp.metadata.at("activation").get<std::string>());
    h.w1 = cp.get("hyper.w1").detach(true);
    h.b1 = cp.get("hyper.b1").detach(true);
    for (std::size_t l = 0; l < b.encoder.arch.layers.size(); ++l) {
      h.w2.push_back(cp.get("hyper.w2." + std::to_string(l)).detach(true));
      h.b2.push_back(cp.get("hyper.b2." + std::to_string(l)).detach(true));
    }
    b.encoder.bn = read_batchnorm(cp, b.encoder.arch.layers.size());
    const bool heads = cp.metadata.value("has_heads", false);
    for (const auto& t : cp.metadata.at("bundle_tasks")) {
      b.task_names.push_back(t.at("name").get<std::string>());
      b.task_descriptors.emplace_back(t.at("descriptor").get<std::vector<double>>());
      if (heads) b.heads.push_back({cp.get("head." + b.task_names.back() + ".weight").detach(true)});
    }
    b.metadata = cp.metadata;
    return b;
  });
}

Checkpoint to_checkpoint(const MtlBundle& bundle) {
  Checkpoint cp;
  for (std::size_t l = 0; l < bundle.encoder.kernels.size(); ++l) {
    cp.tensors.push_back({"conv." + std::to_string(l) + ".weight", bundle.encoder.kernels[l]});
  }
  add_batchnorm(cp, bundle.encoder.bn);
  nlohmann::json tasks = nlohmann::json::array();
  for (std::size_t t = 0; t < bundle.task_names.size(); ++t) {
    cp.tensors.push_back({"head." + bundle.task_names[t] + ".weight", bundle.heads.at(t).weight});
    tasks.push_back({{"name", bundle.task_names[t]}, {"head_size", bundle.heads[t].output_dim()}});
  }
  cp.metadata = bundle.metadata;
  cp.metadata["bundle"] = "mtl";
  cp.metadata["architecture"] = bundle.encoder.arch.to_json();
  cp.metadata["bundle_tasks"] = tasks;
  return cp;
}

MtlBundle mtl_bundle_from_checkpoint(const Checkpoint& cp) {
  return with_parse_errors([&] {
    if (cp.metadata.value("bundle", "") != "mtl") throw ParseError("checkpoint does not hold an MTL bundle", 0);
    MtlBundle b;
    b.encoder.arch = hypernet::EncoderArchitecture::from_json(cp.metadata.at("architecture"));
    for (std::size_t l = 0; l < b.encoder.arch.layers.size(); ++l) {
      b.encoder.kernels.push_back(cp.get("conv." + std::to_string(l) + ".weight").detach(true));
    }
    b.encoder.bn = read_batchnorm(cp, b.encoder.arch.layers.size());
    for (const auto& t : cp.metadata.at("bundle_tasks")) {
      b.task_names.push_back(t.at("name").get<std::string>());
      b.heads.push_back({cp.get("head." + b.task_names.back() + ".weight").detach(true)});
    }
    b.metadata = cp.metadata;
    return b;
  });
}

void save_bundle(const std::filesystem::path& dir, const std::string& stem, const PretrainedBundle& bundle) {
  write_checkpoint(dir, stem, to_checkpoint(bundle));
  write_file_atomic(dir / (stem + "_log.csv"), bundle.log.to_csv());
}

PretrainedBundle load_bundle(const std::filesystem::path& dir, const std::string& stem) {
  return bundle_from_checkpoint(read_checkpoint(dir, stem));
}

void save_bundle(const std::filesystem::path& dir, const std::string& stem, const MtlBundle& bundle) {
  write_checkpoint(dir, stem, to_checkpoint(bundle));
  write_file_atomic(dir / (stem + "_log.csv"), bundle.log.to_csv());
}

MtlBundle load_mtl_bundle(const std::filesystem::path& dir, const std::string& stem) {
  return mtl_bundle_from_checkpoint(read_checkpoint(dir, stem));
}

std::uint64_t bundle_digest(const PretrainedBundle& bundle) { return checkpoint_digest(to_checkpoint(bundle)); }
std::uint64_t bundle_digest(const MtlBundle& bundle) { return checkpoint_digest(to_checkpoint(bundle)); }

}  // namespace hyperinv::training
