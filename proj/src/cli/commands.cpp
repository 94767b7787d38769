#include "hyperinv/cli/commands.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "hyperinv/analysis/bound.hpp"
#include "hyperinv/analysis/invariance.hpp"
#include "hyperinv/analysis/report.hpp"
#include "hyperinv/analysis/svg.hpp"
#include "hyperinv/data/glyphs.hpp"
#include "hyperinv/data/idx.hpp"
#include "hyperinv/data/transforms.hpp"
#include "hyperinv/errors.hpp"
#include "hyperinv/numerics/checkpoint.hpp"
#include "hyperinv/numerics/rng.hpp"
#include "hyperinv/training/bundle.hpp"
#include "hyperinv/training/contrastive.hpp"
#include "hyperinv/training/downstream.hpp"
#include "hyperinv/training/pretrain.hpp"

namespace hyperinv::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kIncomplete = "INCOMPLETE";
constexpr const char* kSnapshot = "config.toml";

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ContractError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// n indices per class drawn without replacement, in ascending order.
std::vector<std::size_t> select_per_class(std::span<const int> labels, std::size_t n_per_class, std::uint64_t seed) {
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);
  std::vector<std::size_t> chosen;
  for (auto& [cls, pool] : members) {
    if (pool.size() < n_per_class) {
      throw ContractError("class " + std::to_string(cls) + " has only " + std::to_string(pool.size()) +
                          " examples, need " + std::to_string(n_per_class));
    }
    Rng rng(derive_seed(seed, "select", static_cast<std::uint64_t>(cls)));
    for (std::size_t k = 0; k < n_per_class; ++k) {
      std::swap(pool[k], pool[k + rng.uniform_index(pool.size() - k)]);
      chosen.push_back(pool[k]);
    }
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

data::LabeledDataset colored_subset(const Tensor& images, const std::vector<int>& labels, std::size_t n_per_class,
                                    std::uint64_t seed, data::Source source, const std::string& split) {
  const auto base = data::ImageStack::from_tensor(images);
  const auto rows = select_per_class(labels, n_per_class, derive_seed(seed, split + "-select"));
  std::vector<int> picked;
  for (auto r : rows) picked.push_back(labels[r]);
  return data::build_colored_rotated(base.select(rows), picked, derive_seed(seed, split + "-factors"), source, split);
}

data::LabeledDataset glyph_split(data::GlyphAlphabet alphabet, std::size_t n_per_class, std::uint64_t seed,
                                 const std::string& split) {
  const auto g = data::synth_glyph_dataset(n_per_class, derive_seed(seed, split + "-glyphs"), alphabet);
  return data::build_colored_rotated(g.images, g.labels, derive_seed(seed, split + "-factors"),
                                     data::Source::synthetic_glyph, split);
}

fs::path data_dir(const DataConfig& config) {
  if (!config.dir.empty()) return config.dir;
  if (const char* env = std::getenv(kDataDirEnv)) return env;
  return "data";
}

std::vector<data::LabelField> parse_fields(const std::vector<std::string>& names) {
  std::vector<data::LabelField> out;
  for (const auto& n : names) out.push_back(data::label_field_from_string(n));
  return out;
}

training::PretrainedBundle load_hyper(const fs::path& checkpoint) {
  if (checkpoint.empty()) throw ContractError("--checkpoint is required");
  return training::load_bundle(checkpoint, "hyper");
}

std::string cell_name(const std::string& task, std::size_t n, std::uint64_t seed) {
  return fmt::format("{}_n{}_seed{}", task, n, seed);
}

std::string descriptor_label(const hypernet::InvarianceDescriptor& d) {
  std::string s;
  for (std::size_t k = 0; k < d.size(); ++k) s += (k ? "-" : "") + fmt::format("{:g}", d[k]);
  return s;
}

}  // namespace

RunDirectory::RunDirectory(fs::path path, bool force) : path_(std::move(path)) {
  if (path_.empty()) throw ContractError("--out is required");
  if (fs::exists(path_)) {
    if (!fs::is_directory(path_)) throw ContractError(path_.string() + " exists and is not a directory");
    if (!fs::is_empty(path_) && !force) {
      throw ContractError("refusing to write into non-empty run directory " + path_.string() + " (use --force)");
    }
  }
  fs::create_directories(path_);
  write_file_atomic(path_ / kIncomplete, "run started\n");
}

void RunDirectory::write(const std::string& name, const std::string& contents) const {
  const auto target = path_ / name;
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  write_file_atomic(target, contents);
}

void RunDirectory::complete() const { fs::remove(path_ / kIncomplete); }

std::vector<fs::path> expected_idx_paths(const fs::path& dir) {
  return {dir / "mnist" / "train-images-idx3-ubyte", dir / "mnist" / "train-labels-idx1-ubyte",
          dir / "kmnist" / "train-images-idx3-ubyte", dir / "kmnist" / "train-labels-idx1-ubyte",
          dir / "kmnist" / "t10k-images-idx3-ubyte", dir / "kmnist" / "t10k-labels-idx1-ubyte"};
}

Datasets load_datasets(const DataConfig& config) {
  Datasets d;
  if (config.source == data::Source::synthetic_glyph) {
    d.pretrain = glyph_split(data::GlyphAlphabet::primary, config.pretrain_per_class, config.seed, "pretrain");
    d.pool = glyph_split(data::GlyphAlphabet::secondary, config.pool_per_class, config.seed, "pool");
    d.test = glyph_split(data::GlyphAlphabet::secondary, config.test_per_class, config.seed, "test");
    return d;
  }
  const auto dir = data_dir(config);
  const auto paths = expected_idx_paths(dir);
  std::vector<fs::path> missing;
  for (const auto& p : paths)
    if (!fs::exists(p)) missing.push_back(p);
  if (!missing.empty()) {
    std::string msg = "missing IDX data files for source 'mnist':";
    for (const auto& p : missing) msg += "\n  " + p.string();
    msg += "\nexpected layout under " + dir.string() + " (set [data] dir or $" + kDataDirEnv +
           "), or use --source glyph to run without external files";
    throw ContractError(msg);
  }
  d.pretrain = colored_subset(data::load_idx_images(paths[0]), data::load_idx_labels(paths[1]),
                              config.pretrain_per_class, config.seed, data::Source::mnist, "pretrain");
  d.pool = colored_subset(data::load_idx_images(paths[2]), data::load_idx_labels(paths[3]), config.pool_per_class,
                          config.seed, data::Source::kmnist, "pool");
  d.test = colored_subset(data::load_idx_images(paths[4]), data::load_idx_labels(paths[5]), config.test_per_class,
                          config.seed, data::Source::kmnist, "test");
  return d;
}

RunConfig resolve_config(const RunOptions& options) {
  RunConfig c;
  if (!options.config.empty()) {
    c = load_run_config(options.config);
  } else if (!options.checkpoint.empty() && fs::exists(options.checkpoint / kSnapshot)) {
    c = load_run_config(options.checkpoint / kSnapshot);
  }
  if (options.source) {
    c.data.source = data::source_from_string(*options.source);
    if (c.data.source == data::Source::kmnist) throw ContractError("--source must be glyph or mnist");
  }
  if (options.seed) c.seed = *options.seed;
  return c;
}

void cmd_pretrain(const RunOptions& options, std::ostream& log) {
  const RunConfig config = resolve_config(options);
  RunDirectory run(options.out, options.force);
  run.write(kSnapshot, config.to_toml());
  const auto t0 = std::chrono::steady_clock::now();
  const Datasets data = load_datasets(config.data);
  run.write("data_manifest.json", nlohmann::json{{"pretrain", data.pretrain.manifest()},
                                                 {"pool", data.pool.manifest()},
                                                 {"test", data.test.manifest()}}
                                      .dump(2));
  nlohmann::json summary;
  if (config.pretrain_kind == "contrastive") {
    auto tc = config.contrastive;
    tc.seed = derive_seed(config.seed, "contrastive");
    const std::size_t n = std::min(config.contrastive_data.images, data.pretrain.size());
    std::vector<std::size_t> rows(n);
    for (std::size_t i = 0; i < n; ++i) rows[i] = i;
    log << "contrastive pre-training on " << n << " images\n";
    const auto bundle = training::pretrain_contrastive(data.pretrain.images.select(rows), tc);
    training::save_bundle(run.path(), "hyper", bundle);
    summary["hyper_digest"] = digest_hex(training::bundle_digest(bundle));
  } else {
    auto tc = config.pretrain;
    tc.seed = derive_seed(config.seed, "pretrain");
    const auto tasks = training::synthetic_tasks(data.pretrain);
    log << "multi-task pre-training on " << data.pretrain.size() << " images, " << tasks.size() << " tasks\n";
    const auto bundle = training::pretrain_multitask(tasks, tc);
    training::save_bundle(run.path(), "hyper", bundle);
    summary["hyper_digest"] = digest_hex(training::bundle_digest(bundle));
    for (const auto& r : bundle.log.records) {
      if (r.epoch + 1 == tc.epochs) log << fmt::format("  {}: loss {:.4f} accuracy {:.4f}\n", r.task, r.loss, r.accuracy);
    }
    if (config.train_baseline) {
      log << "MTL baseline (" << training::to_string(config.baseline_augmentation) << " augmentation)\n";
      const auto mtl = training::train_mtl_baseline(tasks, tc, hypernet::EncoderArchitecture::synthetic(), {},
                                                    config.baseline_augmentation);
      training::save_bundle(run.path(), "mtl", mtl);
      summary["mtl_digest"] = digest_hex(training::bundle_digest(mtl));
    }
  }
  summary["seconds"] = seconds_since(t0);
  run.write("summary.json", summary.dump(2));
  run.complete();
  log << "wrote " << run.path().string() << " (hyper " << summary["hyper_digest"].get<std::string>() << ")\n";
}

void cmd_downstream(const DownstreamOptions& options, std::ostream& log) {
  RunConfig config = resolve_config(options.run);
  if (!options.n.empty()) config.downstream_protocol.n = options.n;
  if (!options.seeds.empty()) config.downstream_protocol.seeds = options.seeds;
  if (!options.tasks.empty()) config.downstream_protocol.tasks = options.tasks;
  if (options.baseline && *options.baseline != "mtl") {
    throw ContractError("unknown baseline '" + *options.baseline + "' (expected mtl)");
  }
  const auto fields = parse_fields(config.downstream_protocol.tasks);
  const auto bundle = load_hyper(options.run.checkpoint);
  std::optional<training::MtlBundle> mtl;
  if (options.baseline) mtl = training::load_mtl_bundle(options.run.checkpoint, "mtl");

  RunDirectory run(options.run.out, options.run.force);
  run.write(kSnapshot, config.to_toml());
  const Datasets data = load_datasets(config.data);
  const auto& proto = config.downstream_protocol;

  for (auto field : fields) {
    const auto task = data::to_string(field);
    const auto head_size = data::num_classes(field);
    std::vector<training::DownstreamResult> results;
    std::vector<training::BaselineResult> baselines;
    for (auto n : proto.n) {
      for (auto seed : proto.seeds) {
        const auto cell = cell_name(task, n, seed);
        const auto train = data::subsample_per_class(
            data.pool, n, field, derive_seed(config.seed, "subsample-" + task + "-n" + std::to_string(n), seed));
        auto tc = config.downstream;
        tc.seed = derive_seed(config.seed, "downstream-" + task + "-n" + std::to_string(n), seed);
        const auto t0 = std::chrono::steady_clock::now();
        auto r = training::run_downstream(bundle.encoder, train, data.test, field, head_size, tc, proto.levels);
        run.write("results/" + cell + ".json", r.to_json().dump(2));
        std::string line = fmt::format("{} N={} seed={}: i*={} -> {}  A_i*={:.1f} A_I*={:.1f}", task, n, seed,
                                       r.continuous.to_percent_string(), r.rounded.to_percent_string(),
                                       100.0 * r.test_continuous.accuracy, 100.0 * r.test_discrete.accuracy);
        results.push_back(std::move(r));
        if (mtl) {
          auto b = training::run_mtl_downstream(mtl->encoder, train, data.test, field, head_size, tc);
          run.write("results/" + cell + "_mtl.json", b.to_json().dump(2));
          line += fmt::format("  A_MTL={:.1f}", 100.0 * b.test.accuracy);
          baselines.push_back(std::move(b));
        }
        log << line << fmt::format("  ({:.1f}s)\n", seconds_since(t0));
      }
    }
    auto report = analysis::make_report(results, baselines);
    report.task = task;
    run.write("report_" + task + ".csv", report.to_csv());
    run.write("report_" + task + ".txt", report.to_text());
    log << report.to_text();
  }
  run.complete();
}

void cmd_measure(const MeasureOptions& options, std::ostream& log) {
  RunConfig config = resolve_config(options.run);
  if (options.points) config.measure.points = *options.points;
  if (config.measure.points < 2) throw ContractError("--sweep needs at least 2 points");
  const auto bundle = load_hyper(options.run.checkpoint);
  RunDirectory run(options.run.out, options.run.force);
  run.write(kSnapshot, config.to_toml());
  const Datasets data = load_datasets(config.data);

  const bool contrastive = bundle.metadata.value("kind", "") == "contrastive";
  const std::vector<data::TransformFamily> families =
      contrastive ? std::vector<data::TransformFamily>{data::TransformFamily::ventral(), data::TransformFamily::dorsal()}
                  : training::synthetic_families();
  const std::size_t n = std::min(config.measure.images, data.pretrain.size());
  std::vector<std::size_t> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = i;
  const auto sweep = hypernet::interpolation_sweep(config.measure.points);
  const auto curve = analysis::measure_invariance(bundle.encoder, data.pretrain.images.select(rows), families, sweep,
                                                  config.measure.draws, derive_seed(config.seed, "measure"));
  run.write("invariance.csv", curve.to_csv());
  std::vector<analysis::PlotSeries> series;
  for (std::size_t f = 0; f < curve.families.size(); ++f) series.push_back({curve.families[f], curve.series(f)});
  const auto t = curve.parameters();
  run.write("invariance.svg",
            analysis::line_plot_svg("Invariance along [t, 1-t]", "t", "cosine similarity", t, series));
  for (std::size_t f = 0; f < curve.families.size(); ++f) {
    log << fmt::format("{}: spearman(t, similarity) = {:.3f}\n", curve.families[f],
                       analysis::spearman(t, curve.series(f)));
  }
  run.complete();
}

void cmd_sweep(const RunOptions& options, std::ostream& log) {
  const RunConfig config = resolve_config(options);
  const auto bundle = load_hyper(options.checkpoint);
  RunDirectory run(options.out, options.force);
  run.write(kSnapshot, config.to_toml());
  const Datasets data = load_datasets(config.data);
  const std::size_t k = bundle.encoder.hyper.descriptor_dim();
  const auto grid = hypernet::descriptor_grid(k, 2);
  const auto line = hypernet::interpolation_sweep(config.sweep.points);

  for (auto field : parse_fields(config.sweep.tasks)) {
    const auto task = data::to_string(field);
    std::ostringstream grid_csv;
    grid_csv.precision(17);
    grid_csv << "seed,descriptor,train_loss,train_accuracy\n";
    std::map<std::string, std::vector<double>> per_descriptor;
    std::vector<std::vector<double>> line_losses;
    for (auto seed : config.sweep.seeds) {
      const auto train = data::subsample_per_class(data.pool, config.sweep.n_per_class, field,
                                                   derive_seed(config.seed, "sweep-subsample-" + task, seed));
      auto tc = config.downstream;
      tc.seed = derive_seed(config.seed, "sweep-" + task, seed);
      const auto head_size = data::num_classes(field);
      for (const auto& p : analysis::loss_descriptor_sweep(bundle.encoder, train, field, head_size, grid, tc)) {
        grid_csv << seed << ',' << descriptor_label(p.descriptor) << ',' << p.train_loss << ',' << p.train_accuracy
                 << '\n';
        per_descriptor[p.descriptor.to_percent_string()].push_back(p.train_loss);
      }
      const auto points = analysis::loss_descriptor_sweep(bundle.encoder, train, field, head_size, line, tc);
      run.write(fmt::format("loss_line_{}_seed{}.csv", task, seed), analysis::sweep_to_csv(points));
      std::vector<double> losses;
      for (const auto& p : points) losses.push_back(p.train_loss);
      line_losses.push_back(std::move(losses));
    }
    run.write("loss_grid_" + task + ".csv", grid_csv.str());
    std::vector<analysis::PlotSeries> series;
    for (std::size_t s = 0; s < line_losses.size(); ++s) {
      series.push_back({"seed " + std::to_string(config.sweep.seeds[s]), line_losses[s]});
    }
    std::vector<double> t;
    for (const auto& d : line) t.push_back(d[0]);
    run.write("loss_line_" + task + ".svg",
              analysis::line_plot_svg(task + " train loss along [t, 1-t]", "t", "train loss", t, series));
    for (const auto& [label, losses] : per_descriptor) {
      const auto ms = analysis::mean_std(losses);
      log << fmt::format("{} {}: train loss {:.5f} +- {:.5f}\n", task, label, ms.mean, ms.stddev);
    }
  }
  run.complete();
}

double cmd_bound_formula(const BoundFormulaOptions& options, std::ostream& out) {
  const double b = analysis::generalization_bound(
      {options.risk, options.X, options.B, options.n, options.cardinality, options.delta});
  out << fmt::format("{:.6f}\n", b);
  return b;
}

void cmd_bound_check(const RunOptions& options, std::ostream& log) {
  const RunConfig config = resolve_config(options);
  const auto bundle = load_hyper(options.checkpoint);
  RunDirectory run(options.out, options.force);
  run.write(kSnapshot, config.to_toml());
  const Datasets data = load_datasets(config.data);
  analysis::BoundCheckSetup setup;
  setup.train_pool = &data.pool;
  setup.test_set = &data.test;
  setup.field = data::label_field_from_string(config.bound.task);
  setup.head_size = data::num_classes(setup.field);
  setup.n_per_class = config.bound.n_per_class;
  setup.trials = config.bound.trials;
  setup.delta = config.bound.delta;
  setup.levels = config.downstream_protocol.levels;
  auto tc = config.downstream;
  tc.seed = derive_seed(config.seed, "bound");
  const auto report = analysis::bound_sanity_check(bundle.encoder, setup, tc);
  run.write("bound_report.csv", report.to_csv());
  log << fmt::format("{} trials, |I| = {}, n = {}, delta = {}: {} violations\n", report.trials.size(),
                     report.cardinality, report.n, report.delta, report.violations);
  run.complete();
}

void cmd_report(const fs::path& run_dir, std::ostream& out) {
  bool any = false;
  for (const auto& entry : fs::directory_iterator(run_dir)) {
    const auto name = entry.path().filename().string();
    if (name.rfind("report_", 0) != 0 || entry.path().extension() != ".csv") continue;
    const auto task = name.substr(7, name.size() - 11);
    out << analysis::parse_report_csv(read_text(entry.path()), task).to_text() << '\n';
    any = true;
  }
  if (!any) throw ContractError("no report_<task>.csv files in " + run_dir.string());
}

}  // namespace hyperinv::cli
