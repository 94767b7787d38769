// End-to-end acceptance run on the glyph source. Prints one PASS/FAIL line
// per criterion followed by indented detail lines.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "gradient_suite.hpp"
#include "hyperinv/analysis/bound.hpp"
#include "hyperinv/analysis/invariance.hpp"
#include "hyperinv/analysis/report.hpp"
#include "hyperinv/cli/commands.hpp"
#include "hyperinv/data/idx.hpp"
#include "hyperinv/training/contrastive.hpp"
#include "hyperinv/training/downstream.hpp"
#include "hyperinv/training/pretrain.hpp"
#include "oracles.hpp"

using namespace hyperinv;
using hypernet::InvarianceDescriptor;

namespace {

constexpr std::uint64_t kMasterSeed = 0;
const std::vector<std::size_t> kSizes{10, 20, 50, 100, 200};
constexpr std::size_t kSeeds = 5;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::vector<std::string> details;
};

void report(int index, const std::string& name, const Outcome& o) {
  std::printf("%s %d %s\n", o.pass ? "PASS" : "FAIL", index, name.c_str());
  for (const auto& d : o.details) std::printf("    %s\n", d.c_str());
  std::fflush(stdout);
}

training::TrainConfig pretrain_config() {
  auto c = training::TrainConfig::pretrain_defaults();
  c.epochs = 100;
  c.lr = 5e-4;
  c.batch_size = 64;
  c.seed = derive_seed(kMasterSeed, "pretrain");
  return c;
}

training::TrainConfig downstream_config() {
  auto c = training::TrainConfig::downstream_defaults();
  c.lr = 1e-2;
  c.schedule = ScheduleKind::cosine;
  c.milestones.clear();
  c.max_steps = 100;
  c.batch_size = 128;
  return c;
}

struct Cell {
  training::DownstreamResult hyper;
  training::BaselineResult mtl;
};

Outcome gradient_suite() {
  const auto t0 = Clock::now();
  double worst_desc = 0.0, worst_param = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto r = hyperinv::testing::check_full_graph(1000 + s);
    worst_desc = std::max(worst_desc, r.descriptor_error);
    worst_param = std::max(worst_param, r.parameter_error);
  }
  const double elapsed = seconds_since(t0);
  Outcome o;
  o.pass = worst_desc < 1e-6 && worst_param < 1e-6 && elapsed < 60.0;
  o.details.push_back(fmt::format("20 configs: worst d/di rel err {:.2e}, worst parameter rel err {:.2e}, {:.1f}s",
                                  worst_desc, worst_param, elapsed));
  return o;
}

Outcome oracle_equivalences(const data::LabeledDataset& source) {
  Outcome o;
  const double conv = hyperinv::testing::conv_oracle_worst_error(50, 11);

  std::vector<std::size_t> rows(50);
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  const auto small = source.subset(rows);
  const training::PretrainTask task{"digit", &small, data::LabelField::digit, {1.0, 1.0}, 10};
  auto tc = pretrain_config();
  tc.max_steps = 8;
  tc.batch_size = 16;
  const auto [pipeline, plain] = hyperinv::testing::single_task_curves(task, tc);
  const bool curves_equal = pipeline == plain && !plain.empty();

  const auto dir = std::filesystem::temp_directory_path() / "hyperinv_acceptance_idx";
  std::filesystem::create_directories(dir);
  std::vector<double> px(6 * 28 * 28);
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = static_cast<double>((i * 131) % 256) / 255.0;
  const auto images = Tensor::from_data({6, 1, 28, 28}, px);
  const std::vector<int> labels{3, 1, 4, 1, 5, 9};
  data::write_idx_images(dir / "images-idx3-ubyte", images);
  data::write_idx_labels(dir / "labels-idx1-ubyte", labels);
  const auto back = data::load_idx_images(dir / "images-idx3-ubyte");
  const bool idx_ok = back.shape() == images.shape() &&
                      std::equal(back.data().begin(), back.data().end(), px.begin()) &&
                      data::load_idx_labels(dir / "labels-idx1-ubyte") == labels;
  std::filesystem::remove_all(dir);

  o.pass = conv < 1e-10 && curves_equal && idx_ok;
  o.details.push_back(fmt::format("conv2d vs nested loops, 50 cases: max abs err {:.2e}", conv));
  o.details.push_back(fmt::format("single-task pretraining vs plain loop: {} steps, {}", plain.size(),
                                  curves_equal ? "bit-identical" : "curves differ"));
  o.details.push_back(fmt::format("IDX fixture round trip: {}", idx_ok ? "bit-exact" : "mismatch"));
  return o;
}

Outcome bound_criterion(const training::PretrainedBundle& bundle, const cli::Datasets& data) {
  Outcome o;
  const double hand = analysis::generalization_bound({0.0, 1.0, 1.0, 100, 4, 0.05});
  Rng rng(derive_seed(kMasterSeed, "bound-inputs"));
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double emp = rng.uniform(0.0, 1.0), X = rng.uniform(0.0, 50.0), B = rng.uniform(0.0, 5.0);
    const std::size_t n = 1 + rng.uniform_index(5000), card = 1 + rng.uniform_index(64);
    const double delta = rng.uniform(1e-4, 1.0);
    const long double ref = emp + 2.0L * X * B / std::sqrt(static_cast<long double>(n)) +
                            3.0L * std::sqrt(std::log(static_cast<long double>(card) / delta) / (2.0L * n));
    worst = std::max(worst, std::abs(analysis::generalization_bound({emp, X, B, n, card, delta}) -
                                     static_cast<double>(ref)));
  }
  analysis::BoundCheckSetup setup;
  setup.train_pool = &data.pool;
  setup.test_set = &data.test;
  setup.field = data::LabelField::digit;
  setup.head_size = 10;
  setup.n_per_class = 10;
  setup.trials = 20;
  setup.delta = 0.05;
  auto tc = downstream_config();
  tc.seed = derive_seed(kMasterSeed, "bound");
  const auto rep = analysis::bound_sanity_check(bundle.encoder, setup, tc);
  double max_test = 0.0, min_bound = INFINITY;
  for (const auto& t : rep.trials) {
    max_test = std::max(max_test, t.test_risk);
    min_bound = std::min(min_bound, t.bound);
  }
  o.pass = std::abs(hand - 0.644063) <= 1e-6 && worst <= 1e-9 && rep.violations == 0 && rep.trials.size() == 20;
  o.details.push_back(fmt::format("hand example: {:.7f} (target 0.644063, |diff| {:.1e})", hand,
                                  std::abs(hand - 0.644063)));
  o.details.push_back(fmt::format("100 random inputs: max |diff| vs independent formula {:.1e}", worst));
  o.details.push_back(fmt::format("Monte Carlo: {} trials, |I| = {}, n = {}: {} violations (max test risk {:.3f}, "
                                  "min bound {:.3f})",
                                  rep.trials.size(), rep.cardinality, rep.n, rep.violations, max_test, min_bound));
  return o;
}

Outcome contrastive_criterion(const data::LabeledDataset& source) {
  const auto t0 = Clock::now();
  std::vector<std::size_t> rows(600);
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = (i * 5) % source.size();
  const auto images = source.images.select(rows);
  auto c = training::TrainConfig::contrastive_defaults();
  c.epochs = 20;
  c.batch_size = 64;
  c.lr = 1e-3;
  c.seed = derive_seed(kMasterSeed, "contrastive");
  const auto bundle = training::pretrain_contrastive(images, c);

  std::vector<std::size_t> probe(200);
  for (std::size_t i = 0; i < probe.size(); ++i) probe[i] = (i * 7 + 3) % source.size();
  const std::vector<data::TransformFamily> families{data::TransformFamily::ventral(), data::TransformFamily::dorsal()};
  const std::vector<InvarianceDescriptor> points{{0.0, 1.0}, {1.0, 0.0}};
  const std::vector<double> t{0.0, 1.0};
  const auto curve = analysis::measure_invariance(bundle.encoder, source.images.select(probe), families, points, 4,
                                                  derive_seed(kMasterSeed, "contrastive-measure"), t);
  const double ventral_01 = curve.points[0].mean[0], ventral_10 = curve.points[1].mean[0];
  const double dorsal_01 = curve.points[0].mean[1], dorsal_10 = curve.points[1].mean[1];
  Outcome o;
  o.pass = dorsal_01 > dorsal_10 && ventral_10 > ventral_01;
  o.details.push_back(fmt::format("dorsal similarity: [0,1] {:.4f} vs [1,0] {:.4f}", dorsal_01, dorsal_10));
  o.details.push_back(fmt::format("ventral similarity: [1,0] {:.4f} vs [0,1] {:.4f}", ventral_10, ventral_01));
  o.details.push_back(fmt::format("final NT-Xent {:.4f}, {:.1f}s", bundle.log.step_losses.back(), seconds_since(t0)));
  return o;
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  const auto start = Clock::now();
  try {
    report(1, "gradient suite", gradient_suite());

    cli::DataConfig dc;
    dc.seed = derive_seed(kMasterSeed, "data");
    const auto data = cli::load_datasets(dc);

    report(9, "oracle equivalences", oracle_equivalences(data.pretrain));

    const auto tasks = training::synthetic_tasks(data.pretrain);
    auto t0 = Clock::now();
    const auto bundle = training::pretrain_multitask(tasks, pretrain_config());
    const double hyper_time = seconds_since(t0);
    t0 = Clock::now();
    const auto mtl = training::train_mtl_baseline(tasks, pretrain_config());
    const double mtl_time = seconds_since(t0);

    // Invariance monotonicity on the pre-trained bundle.
    {
      std::vector<std::size_t> rows(200);
      for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
      const auto sweep = hypernet::interpolation_sweep(11);
      const auto curve = analysis::measure_invariance(bundle.encoder, data.pretrain.images.select(rows),
                                                      training::synthetic_families(), sweep, 4,
                                                      derive_seed(kMasterSeed, "measure"));
      const auto t = curve.parameters();
      const double rho_rot = analysis::spearman(t, curve.series(0));
      const double rho_col = analysis::spearman(t, curve.series(1));
      Outcome o;
      o.pass = rho_rot >= 0.8 && rho_col <= -0.8;
      o.details.push_back(fmt::format("spearman(t, rotation similarity) = {:.3f} (need >= 0.8)", rho_rot));
      o.details.push_back(fmt::format("spearman(t, color similarity) = {:.3f} (need <= -0.8)", rho_col));
      o.details.push_back(fmt::format("rotation {:.3f} -> {:.3f}, color {:.3f} -> {:.3f} over t = 0 -> 1",
                                      curve.series(0).front(), curve.series(0).back(), curve.series(1).front(),
                                      curve.series(1).back()));
      o.details.push_back(fmt::format("pre-training: hypernetwork {:.1f}s, MTL baseline {:.1f}s", hyper_time, mtl_time));
      report(5, "invariance monotonicity", o);
    }

    // Downstream grid.
    t0 = Clock::now();
    std::map<std::string, std::map<std::size_t, std::vector<Cell>>> cells;
    for (auto field : {data::LabelField::digit, data::LabelField::rotation}) {
      const auto task = data::to_string(field);
      for (auto n : kSizes) {
        for (std::uint64_t s = 0; s < kSeeds; ++s) {
          const auto label = task + "-n" + std::to_string(n);
          const auto train =
              data::subsample_per_class(data.pool, n, field, derive_seed(kMasterSeed, "subsample-" + label, s));
          auto tc = downstream_config();
          tc.seed = derive_seed(kMasterSeed, "downstream-" + label, s);
          Cell cell{training::run_downstream(bundle.encoder, train, data.test, field, data::num_classes(field), tc),
                    training::run_mtl_downstream(mtl.encoder, train, data.test, field, data::num_classes(field), tc)};
          cells[task][n].push_back(std::move(cell));
        }
      }
    }
    const double downstream_time = seconds_since(t0);

    {
      Outcome o;
      o.pass = true;
      const std::map<std::string, InvarianceDescriptor> target{{"digit", {1.0, 1.0}}, {"rotation", {0.0, 1.0}}};
      for (const auto& [task, by_n] : cells) {
        for (const auto& [n, cs] : by_n) {
          std::size_t hits = 0;
          std::string got;
          for (const auto& c : cs) {
            hits += c.hyper.rounded == target.at(task) ? 1 : 0;
            got += " " + c.hyper.continuous.to_percent_string();
          }
          o.pass = o.pass && hits >= 4;
          o.details.push_back(fmt::format("{} N={}: {}/{} round to {} | i* (%):{}", task, n, hits, cs.size(),
                                          target.at(task).to_percent_string(), got));
        }
      }
      o.details.push_back(fmt::format("downstream grid {:.1f}s", downstream_time));
      report(2, "descriptor recovery", o);
    }
    {
      Outcome o;
      o.pass = true;
      for (const auto& [task, by_n] : cells) {
        for (const auto& [n, cs] : by_n) {
          std::vector<double> h, m;
          for (const auto& c : cs) {
            h.push_back(100.0 * c.hyper.test_continuous.accuracy);
            m.push_back(100.0 * c.mtl.test.accuracy);
          }
          const auto hs = analysis::mean_std(h), ms = analysis::mean_std(m);
          const bool gated = n <= 50;
          if (gated) o.pass = o.pass && hs.mean > ms.mean;
          o.details.push_back(fmt::format("{} N={}: hyper {:.1f} +- {:.1f} vs MTL {:.1f} +- {:.1f} (gap {:+.1f}){}",
                                          task, n, hs.mean, hs.stddev, ms.mean, ms.stddev, hs.mean - ms.mean,
                                          gated ? "" : " [not gated]"));
        }
      }
      report(3, "ordering vs baseline", o);
    }
    {
      Outcome o;
      o.pass = true;
      for (const auto& [task, by_n] : cells) {
        for (const auto& [n, cs] : by_n) {
          std::size_t ok = 0;
          double h = 0.0, m = 0.0;
          for (const auto& c : cs) {
            ok += c.hyper.train_continuous.accuracy >= c.mtl.train.accuracy ? 1 : 0;
            h += c.hyper.train_continuous.accuracy / static_cast<double>(cs.size());
            m += c.mtl.train.accuracy / static_cast<double>(cs.size());
          }
          o.pass = o.pass && ok >= 4;
          o.details.push_back(fmt::format("{} N={}: hyper >= MTL train accuracy in {}/{} seeds (mean {:.1f} vs {:.1f})",
                                          task, n, ok, cs.size(), 100.0 * h, 100.0 * m));
        }
      }
      report(4, "train-fit property", o);
    }

    // Loss-sweep shape.
    {
      const std::vector<InvarianceDescriptor> corners{{1.0, 1.0}, {1.0, 0.0}};
      Outcome o;
      o.pass = true;
      for (auto field : {data::LabelField::digit, data::LabelField::color}) {
        const auto task = data::to_string(field);
        std::vector<double> at11, at10;
        for (std::uint64_t s = 0; s < 3; ++s) {
          const auto train =
              data::subsample_per_class(data.pool, 50, field, derive_seed(kMasterSeed, "sweep-subsample-" + task, s));
          auto tc = downstream_config();
          tc.seed = derive_seed(kMasterSeed, "sweep-" + task, s);
          const auto pts = analysis::loss_descriptor_sweep(bundle.encoder, train, field, data::num_classes(field),
                                                           corners, tc);
          at11.push_back(pts[0].train_loss);
          at10.push_back(pts[1].train_loss);
        }
        const auto a = analysis::mean_std(at11), b = analysis::mean_std(at10);
        const double margin = std::max(a.stddev, b.stddev);
        const double gap = field == data::LabelField::digit ? b.mean - a.mean : a.mean - b.mean;
        o.pass = o.pass && gap > margin;
        o.details.push_back(fmt::format("{}: loss [1,1] {:.5f} +- {:.5f}, [1,0] {:.5f} +- {:.5f}; gap {:.5f} vs std {:.5f}",
                                        task, a.mean, a.stddev, b.mean, b.stddev, gap, margin));
      }
      report(6, "loss-sweep shape", o);
    }

    report(7, "bound calculator", bound_criterion(bundle, data));

    {
      Outcome o;
      o.pass = true;
      for (const auto& [n, cs] : cells.at("digit")) {
        double diff = 0.0;
        for (const auto& c : cs) {
          diff += std::abs(c.hyper.test_continuous.accuracy - c.hyper.test_discrete.accuracy);
        }
        diff = 100.0 * diff / static_cast<double>(cs.size());
        o.pass = o.pass && diff <= 5.0;
        o.details.push_back(fmt::format("digit N={}: mean |A_i* - A_I*| = {:.2f} points", n, diff));
      }
      report(8, "discretization cost", o);
    }

    report(10, "toy contrastive mode", contrastive_criterion(data.pretrain));
  } catch (const std::exception& e) {
    std::printf("FAIL acceptance run aborted: %s\n", e.what());
    return 1;
  }
  std::printf("total %.1fs\n", seconds_since(start));
  return 0;
}
