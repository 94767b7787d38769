#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "hyperinv/analysis/bound.hpp"
#include "hyperinv/analysis/invariance.hpp"
#include "hyperinv/analysis/report.hpp"
#include "hyperinv/analysis/svg.hpp"
#include "hyperinv/data/glyphs.hpp"
#include "hyperinv/errors.hpp"
#include "hyperinv/numerics/ops.hpp"
#include "hyperinv/training/pretrain.hpp"

using namespace hyperinv;
using namespace hyperinv::analysis;

namespace {

// Independent evaluation of the bound, term by term in long double.
double reference_bound(double emp, double X, double B, double n, double card, double delta) {
  const long double complexity = 2.0L * X * B / std::sqrt(static_cast<long double>(n));
  const long double confidence =
      3.0L * std::sqrt(std::log(static_cast<long double>(card) / delta) / (2.0L * static_cast<long double>(n)));
  return static_cast<double>(emp + complexity + confidence);
}

}  // namespace

TEST(Bound, HandDerivedExample) {
  BoundInputs in{0.0, 1.0, 1.0, 100, 4, 0.05};
  EXPECT_NEAR(generalization_bound(in), 0.644063, 1e-6);
  // 0.2 + 3 * sqrt(ln 80 / 200)
  EXPECT_NEAR(generalization_bound(in), 0.2 + 3.0 * std::sqrt(std::log(80.0) / 200.0), 1e-15);
}

TEST(Bound, MatchesIndependentRecomputationOnRandomInputs) {
  Rng rng(2024);
  for (int i = 0; i < 100; ++i) {
    BoundInputs in;
    in.empirical_risk = rng.uniform(0.0, 1.0);
    in.X = rng.uniform(0.0, 50.0);
    in.B = rng.uniform(0.0, 5.0);
    in.n = 1 + rng.uniform_index(5000);
    in.cardinality = 1 + rng.uniform_index(64);
    in.delta = rng.uniform(1e-4, 1.0);
    const double ref = reference_bound(in.empirical_risk, in.X, in.B, static_cast<double>(in.n),
                                       static_cast<double>(in.cardinality), in.delta);
    EXPECT_NEAR(generalization_bound(in), ref, 1e-9);
  }
}

TEST(Bound, RejectsInvalidInputs) {
  EXPECT_THROW(generalization_bound({0.0, 1.0, 1.0, 0, 4, 0.05}), ContractError);
  EXPECT_THROW(generalization_bound({0.0, 1.0, 1.0, 10, 0, 0.05}), ContractError);
  EXPECT_THROW(generalization_bound({0.0, 1.0, 1.0, 10, 4, 0.0}), ContractError);
  EXPECT_THROW(generalization_bound({0.0, 1.0, 1.0, 10, 4, 1.5}), ContractError);
}

TEST(Bound, ClippedMarginLoss) {
  const std::vector<double> logits{2.0, 0.5, 1.5};
  EXPECT_DOUBLE_EQ(clipped_margin_loss(logits, 0), 0.5);
  EXPECT_DOUBLE_EQ(clipped_margin_loss(logits, 1), 1.0);
  EXPECT_DOUBLE_EQ(clipped_margin_loss(std::vector<double>{4.0, 0.0}, 0), 0.0);
  const auto t = Tensor::from_data({2, 3}, {2.0, 0.5, 1.5, 0.0, 3.0, 0.0});
  EXPECT_DOUBLE_EQ(surrogate_risk(t, std::vector<int>{0, 1}), 0.25);
}

TEST(Bound, NormEstimates) {
  const auto f = Tensor::from_data({2, 2}, {3.0, 4.0, 1.0, 0.0});
  hypernet::TaskHead h{Tensor::from_data({2, 2}, {1.0, 1.0, 1.0, 1.0})};
  const auto nb = estimate_norm_bounds(f, h);
  EXPECT_DOUBLE_EQ(nb.X, 5.0);
  EXPECT_DOUBLE_EQ(nb.B, 2.0);
}

TEST(Spearman, RanksAndTies) {
  const std::vector<double> t{0, 1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(spearman(t, std::vector<double>{1, 4, 9, 16, 25}), 1.0);
  EXPECT_DOUBLE_EQ(spearman(t, std::vector<double>{5, 3, 2, 1, -7}), -1.0);
  EXPECT_DOUBLE_EQ(spearman(t, std::vector<double>{2, 2, 2, 2, 2}), 0.0);
  // Average ranks 1, 2.5, 2.5, 4 against 1..4: rho = 4.5 / sqrt(5 * 4.5).
  EXPECT_NEAR(spearman(std::vector<double>{0, 1, 2, 3}, std::vector<double>{1, 2, 2, 3}),
              4.5 / std::sqrt(5.0 * 4.5), 1e-12);
}

TEST(Report, AggregatesAndRoundTripsCsv) {
  std::vector<training::DownstreamResult> rs;
  std::vector<training::BaselineResult> bs;
  for (std::uint64_t s = 0; s < 3; ++s) {
    training::DownstreamResult r;
    r.task = "digit";
    r.n_per_class = 10;
    r.seed = s;
    r.continuous = {0.8, 0.6 + 0.1 * static_cast<double>(s)};
    r.rounded = {1.0, 1.0};
    r.test_continuous.accuracy = 0.30 + 0.01 * static_cast<double>(s);
    r.test_discrete.accuracy = 0.29;
    rs.push_back(r);
    training::BaselineResult b;
    b.task = "digit";
    b.n_per_class = 10;
    b.seed = s;
    b.test.accuracy = 0.2;
    bs.push_back(b);
  }
  const auto rep = make_report(rs, bs);
  ASSERT_EQ(rep.rows.size(), 1u);
  EXPECT_NEAR(rep.rows[0].continuous.mean, 31.0, 1e-9);
  EXPECT_NEAR(rep.rows[0].continuous.stddev, 1.0, 1e-9);
  EXPECT_NEAR(rep.rows[0].descriptor_percent[1], 70.0, 1e-9);
  ASSERT_TRUE(rep.rows[0].baseline.has_value());
  EXPECT_NEAR(rep.rows[0].baseline->mean, 20.0, 1e-9);
  const auto back = parse_report_csv(rep.to_csv(), "digit");
  EXPECT_EQ(back.to_csv(), rep.to_csv());
  EXPECT_NE(rep.to_text().find("31.0"), std::string::npos);
  const auto no_baseline = make_report(rs);
  EXPECT_FALSE(parse_report_csv(no_baseline.to_csv()).rows[0].baseline.has_value());
}

TEST(Report, MeanStd) {
  const auto m = mean_std(std::vector<double>{1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(m.mean, 2.5);
  EXPECT_NEAR(m.stddev, std::sqrt(5.0 / 3.0), 1e-15);
  EXPECT_EQ(mean_std(std::vector<double>{7.0}).stddev, 0.0);
}

TEST(Svg, ContainsSeriesAndEscapesText) {
  const std::vector<double> x{0.0, 0.5, 1.0};
  const std::vector<PlotSeries> s{{"rotation", {0.1, 0.2, 0.4}}, {"color <swap>", {0.9, 0.8, 0.7}}};
  const auto svg = line_plot_svg("t & sim", "t", "cosine", x, s);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_NE(svg.find("&amp;"), std::string::npos);
  EXPECT_NE(svg.find("&lt;swap&gt;"), std::string::npos);
  EXPECT_EQ(std::count(svg.begin(), svg.end(), '\n') > 3, true);
}

TEST(Invariance, IdentityEncoderFamiliesAndCsv) {
  const auto g = data::synth_glyph_dataset(1, 3);
  const auto ds = data::build_colored_rotated(g.images, g.labels, 4, data::Source::synthetic_glyph);
  Rng rng(5);
  const auto enc = hypernet::make_hyper_encoder(hypernet::EncoderArchitecture::synthetic(), 2, 8, rng);
  const auto fams = training::synthetic_families();
  const auto sweep = hypernet::interpolation_sweep(3);
  const auto curve = measure_invariance(enc, ds.images, fams, sweep, 2, 7);
  ASSERT_EQ(curve.points.size(), 3u);
  EXPECT_EQ(curve.samples, ds.size() * 2);
  for (const auto& p : curve.points) {
    for (double m : p.mean) {
      EXPECT_GE(m, -1.0);
      EXPECT_LE(m, 1.0 + 1e-12);
    }
  }
  EXPECT_EQ(curve.parameters(), (std::vector<double>{0.0, 0.5, 1.0}));
  const auto csv = curve.to_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')).find("t,"), 0u);
  const auto again = measure_invariance(enc, ds.images, fams, sweep, 2, 7);
  EXPECT_EQ(again.series(0), curve.series(0));
}

TEST(Bound, FeatureNormMatchesDirectScan) {
  const auto g = data::synth_glyph_dataset(10, 12);
  const auto ds = data::build_colored_rotated(g.images, g.labels, 13, data::Source::synthetic_glyph);
  ASSERT_EQ(ds.size(), 100u);
  Rng rng(14);
  const auto arch = hypernet::EncoderArchitecture::synthetic();
  const auto enc = hypernet::make_hyper_encoder(arch, 2, 40, rng);
  const hypernet::InvarianceDescriptor d{1.0, 0.0};
  const auto head = hypernet::TaskHead::init(arch.feature_dim(), 10, rng);
  const auto nb = estimate_norm_bounds(enc, d, ds.images, head);
  double X = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto f = hypernet::encode(enc, d, reshape(data::image_to_tensor(ds.images.image(i)), {1, 3, 28, 28}));
    double s = 0.0;
    for (double v : f.data()) s += v * v;
    X = std::max(X, std::sqrt(s));
  }
  EXPECT_NEAR(nb.X, X, 1e-9 * X);
  double B = 0.0;
  for (double v : head.weight.data()) B += v * v;
  EXPECT_NEAR(nb.B, std::sqrt(B), 1e-12);
}
