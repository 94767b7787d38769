#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hyperinv/cli/commands.hpp"
#include "hyperinv/cli/config.hpp"
#include "hyperinv/errors.hpp"

using namespace hyperinv;
using namespace hyperinv::cli;

namespace {

std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  return dir;
}

std::string parse_error_message(const std::string& text) {
  try {
    run_config_from_toml(parse_toml(text));
  } catch (const ParseError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Toml, ParsesSubset) {
  const auto doc = parse_toml(
      "seed = 3 # master\n"
      "[data]\n"
      "source = \"synthetic_glyph\"\n"
      "dir = '/x/y'\n"
      "[downstream]\n"
      "n = [10, 20]\n"
      "lr = 1e-2\n"
      "batch_statistics = false\n"
      "weight_decay = -0.5\n");
  EXPECT_EQ(doc.root["seed"], 3);
  EXPECT_EQ(doc.root["data"]["dir"], "/x/y");
  EXPECT_EQ(doc.root["downstream"]["n"], (nlohmann::json{10, 20}));
  EXPECT_DOUBLE_EQ(doc.root["downstream"]["lr"].get<double>(), 1e-2);
  EXPECT_EQ(doc.root["downstream"]["batch_statistics"], false);
  EXPECT_EQ(doc.line_of("downstream", "lr"), 7u);
}

TEST(Toml, SyntaxErrorsCarryLineNumbers) {
  try {
    parse_toml("a = 1\nb = \"open\n", "cfg.toml");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("cfg.toml:2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_toml("[data\n"), ParseError);
  EXPECT_THROW(parse_toml("x = 1\nx = 2\n"), ParseError);
}

TEST(RunConfigToml, TypeErrorsNameLineSectionAndKey) {
  const auto msg = parse_error_message("seed = 1\n\n[downstream]\nlr = \"x\"\n");
  EXPECT_NE(msg.find("line 4"), std::string::npos) << msg;
  EXPECT_NE(msg.find("[downstream] lr"), std::string::npos) << msg;
  EXPECT_NE(msg.find("expected a number"), std::string::npos) << msg;
  EXPECT_NE(parse_error_message("[pretrain]\nbogus = 1\n").find("bogus"), std::string::npos);
  EXPECT_NE(parse_error_message("[nowhere]\n").find("nowhere"), std::string::npos);
  EXPECT_NE(parse_error_message("[data]\nsource = \"kmnist\"\n").find("source"), std::string::npos);
}

TEST(RunConfigToml, SnapshotRoundTrips) {
  RunConfig c;
  c.seed = 17;
  c.data.pretrain_per_class = 12;
  c.downstream.lr = 0.01;
  c.downstream.max_steps = 100;
  c.pretrain.epochs = 10;
  c.sweep.points = 5;
  c.bound.delta = 0.1;
  c.baseline_augmentation = training::MtlAugmentation::union_all;
  const auto text = c.to_toml();
  const auto back = run_config_from_toml(parse_toml(text));
  EXPECT_EQ(back.to_toml(), text);
  EXPECT_EQ(back.to_json(), c.to_json());
  EXPECT_EQ(back.seed, 17u);
  EXPECT_DOUBLE_EQ(back.downstream.lr, 0.01);
}

TEST(RunDirectory, RefusesNonEmptyWithoutForce) {
  const auto dir = fresh_dir("hyperinv_rundir_test");
  {
    RunDirectory run(dir, false);
    EXPECT_TRUE(std::filesystem::exists(dir / "INCOMPLETE"));
    run.write("a.txt", "hello");
    run.complete();
    EXPECT_FALSE(std::filesystem::exists(dir / "INCOMPLETE"));
  }
  std::ifstream in(dir / "a.txt");
  std::string s;
  in >> s;
  EXPECT_EQ(s, "hello");
  EXPECT_THROW(RunDirectory(dir, false), ContractError);
  EXPECT_NO_THROW(RunDirectory(dir, true));
  std::filesystem::remove_all(dir);
}

TEST(BoundCommand, PrintsSixDecimals) {
  std::ostringstream out;
  const double v = cmd_bound_formula({100, 4, 0.05, 1.0, 1.0, 0.0}, out);
  EXPECT_NEAR(v, 0.644063, 1e-6);
  EXPECT_EQ(out.str(), "0.644062\n");
}

TEST(Datasets, MissingIdxFilesAreListed) {
  const auto dir = fresh_dir("hyperinv_missing_idx");
  std::filesystem::create_directories(dir);
  DataConfig c;
  c.source = data::Source::mnist;
  c.dir = dir.string();
  try {
    load_datasets(c);
    FAIL() << "expected ContractError";
  } catch (const ContractError& e) {
    const std::string msg = e.what();
    for (const auto& p : expected_idx_paths(dir)) EXPECT_NE(msg.find(p.string()), std::string::npos) << msg;
  }
  std::filesystem::remove_all(dir);
}

TEST(Datasets, GlyphSplitsUseDifferentAlphabets) {
  DataConfig c;
  c.pretrain_per_class = 2;
  c.pool_per_class = 3;
  c.test_per_class = 1;
  const auto d = load_datasets(c);
  EXPECT_EQ(d.pretrain.size(), 20u);
  EXPECT_EQ(d.pool.size(), 30u);
  EXPECT_EQ(d.test.size(), 10u);
  EXPECT_FALSE(d.pretrain.images.image(0) == d.pool.images.image(0));
}

TEST(ResolveConfig, OverridesApplyAfterFile) {
  const auto dir = fresh_dir("hyperinv_resolve_test");
  std::filesystem::create_directories(dir);
  RunConfig c;
  c.seed = 4;
  c.data.pool_per_class = 9;
  {
    std::ofstream(dir / "config.toml") << c.to_toml();
  }
  RunOptions o;
  o.checkpoint = dir;
  o.seed = 99;
  const auto r = resolve_config(o);
  EXPECT_EQ(r.seed, 99u);
  EXPECT_EQ(r.data.pool_per_class, 9u);
  std::filesystem::remove_all(dir);
}

TEST(Pipeline, PretrainThenDownstreamWritesResults) {
  const auto dir = fresh_dir("hyperinv_pipeline_test");
  std::filesystem::create_directories(dir);
  RunConfig c;
  c.seed = 3;
  c.data.pretrain_per_class = 2;
  c.data.pool_per_class = 3;
  c.data.test_per_class = 1;
  c.pretrain.epochs = 1;
  c.pretrain.batch_size = 8;
  c.downstream.max_steps = 3;
  {
    std::ofstream(dir / "config.toml") << c.to_toml();
  }
  std::ostringstream log;
  RunOptions p;
  p.config = dir / "config.toml";
  p.out = dir / "pre";
  cmd_pretrain(p, log);
  EXPECT_FALSE(std::filesystem::exists(dir / "pre" / "INCOMPLETE"));

  DownstreamOptions d;
  d.run.checkpoint = dir / "pre";
  d.run.out = dir / "down";
  d.n = {2};
  d.seeds = {0, 1};
  d.tasks = {"digit"};
  d.baseline = "mtl";
  cmd_downstream(d, log);
  std::size_t results = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir / "down" / "results")) results += e.is_regular_file();
  EXPECT_EQ(results, 4u);
  EXPECT_TRUE(std::filesystem::exists(dir / "down" / "report_digit.csv"));
  EXPECT_FALSE(std::filesystem::exists(dir / "down" / "INCOMPLETE"));
  std::filesystem::remove_all(dir);
}
