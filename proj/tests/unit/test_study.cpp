#include <doctest.h>

#include <filesystem>
#include <string>

#include "ffgen/data_io.hpp"
#include "ffgen/errors.hpp"
#include "ffgen/study.hpp"
#include "helpers.hpp"

using namespace ffgen;
namespace fs = std::filesystem;

namespace {

study::RunSettings small_settings() {
  study::RunSettings s;
  s.train.steps = 60;
  s.train.hidden_width = 16;
  s.train.hidden_layers = 2;
  s.train.eval_every = 30;
  s.train.validation_pairs = 128;
  s.samples = 100;
  s.projections = 20;
  s.energy_points = 100;
  s.solver.method = ode::Method::RK4;
  s.solver.step = 0.05;
  s.plot = false;
  return s;
}

data_io::Dataset ring(std::size_t n, const char* purpose) {
  Stream rng(0, purpose);
  return data_io::builtin("ring8", n, rng);
}

std::size_t line_count(const fs::path& p) {
  const auto text = data_io::read_text(p);
  std::size_t n = 0;
  for (char c : text) n += c == '\n' ? 1 : 0;
  return n;
}

study::StudyConfig sweep(std::vector<std::size_t> ons, const fs::path& dir) {
  study::StudyConfig cfg;
  cfg.overlap_counts = std::move(ons);
  cfg.dataset = ring(400, "dataset");
  cfg.reference = ring(200, "reference").points;
  cfg.base_spec.dim = 2;
  cfg.run = small_settings();
  // Fixed steps give every ON the same NFE, which the index rejects.
  cfg.run.solver.method = ode::Method::RK45;
  cfg.run.train.steps = 400;
  cfg.run.train.hidden_width = 32;
  cfg.seeds = {0, 1};
  cfg.outdir = dir;
  return cfg;
}

}  // namespace

TEST_SUITE("study") {
  TEST_CASE("a single overlap count has no index") {
    study::StudyConfig cfg;
    cfg.overlap_counts = {1};
    Stream rng(0, "dataset");
    cfg.dataset = data_io::builtin("single_point", 200, rng);
    cfg.reference = cfg.dataset.points;
    cfg.base_spec.dim = 2;
    cfg.run = small_settings();
    cfg.seeds = {0};
    cfg.outdir = test::scratch_dir("study_one");
    const auto res = study::run_superposition_study(cfg);
    REQUIRE(res.rows.size() == 1);
    CHECK_FALSE(res.index.has_value());
    CHECK_FALSE(res.index_error.empty());
    CHECK(fs::exists(cfg.outdir / "index_absent.txt"));
    CHECK(fs::exists(cfg.outdir / "on=1" / "seed=0" / "samples.csv"));
  }

  TEST_CASE("sweep writes one index row per overlap count and reruns identically") {
    const auto a = test::scratch_dir("study_a");
    const auto b = test::scratch_dir("study_b");
    const auto ra = study::run_superposition_study(sweep({1, 2, 3}, a));
    study::run_superposition_study(sweep({1, 2, 3}, b));
    REQUIRE(ra.index.has_value());
    CHECK(ra.index->keys.size() == 3);
    CHECK(line_count(a / "index.csv") == 4);
    for (const auto* rel : {"index.csv", "on=2/report.csv", "on=3/seed=1/samples.csv", "on=3/seed=1/checkpoint.txt"}) {
      CHECK_MESSAGE(data_io::sha256_file(a / rel) == data_io::sha256_file(b / rel), rel);
    }
    for (const auto& row : ra.rows) {
      CHECK(row.runs.size() == 2);
      CHECK_FALSE(row.failed);
    }
  }

  TEST_CASE("study configuration is checked") {
    auto cfg = sweep({}, test::scratch_dir("study_bad"));
    CHECK_THROWS_AS(cfg.validate(), InvalidInput);
    cfg.overlap_counts = {2};
    cfg.seeds.clear();
    CHECK_THROWS_AS(cfg.validate(), InvalidInput);
  }

  TEST_CASE("family entries") {
    trajectory::TrajectorySpec base;
    base.dim = 2;
    CHECK(study::parse_family_entry("curve:3", base).spec.curve_exponent == 3.0);
    CHECK(study::parse_family_entry("superposed_linear:4", base).spec.overlap_count == 4);
    CHECK(study::parse_family_entry("poisson", base).spec.prior.kind == sampler::PriorKind::PfgmRadial);
    CHECK_THROWS_AS(study::parse_family_entry("spline", base), InvalidInput);
    CHECK_THROWS_AS(study::parse_family_entry("curve:0.5", base), InvalidInput);
  }

  TEST_CASE("the same family twice gives the same numbers") {
    study::CompareConfig cfg;
    trajectory::TrajectorySpec base;
    base.dim = 2;
    cfg.families = {study::parse_family_entry("linear", base), study::parse_family_entry("linear", base)};
    cfg.dataset = ring(300, "dataset");
    cfg.reference = ring(200, "reference").points;
    cfg.run = small_settings();
    cfg.seeds = {3};
    cfg.divergence_times = {0.25, 0.5, 1.0};
    cfg.outdir = test::scratch_dir("compare_same");
    const auto res = study::compare_families(cfg);
    REQUIRE(res.families.size() == 2);
    CHECK(res.families[0].mean.sliced_wasserstein == res.families[1].mean.sliced_wasserstein);
    CHECK(res.families[0].mean.energy_distance == res.families[1].mean.energy_distance);
    CHECK(res.families[0].runs[0].samples_sha256 == res.families[1].runs[0].samples_sha256);
    for (double v : res.divergence.at(0)) CHECK(v == 0.0);
  }

  TEST_CASE("linear against the Gaussian bridge") {
    study::CompareConfig cfg;
    trajectory::TrajectorySpec base;
    base.dim = 2;
    cfg.families = {study::parse_family_entry("linear", base), study::parse_family_entry("gaussian_bridge", base)};
    cfg.dataset = ring(300, "dataset");
    cfg.reference = ring(200, "reference").points;
    cfg.run = small_settings();
    cfg.seeds = {0};
    cfg.divergence_times = {0.5, 1.0};
    cfg.outdir = test::scratch_dir("compare_pair");
    const auto res = study::compare_families(cfg);
    CHECK(line_count(cfg.outdir / "compare.csv") == 3);
    CHECK(line_count(cfg.outdir / "divergence.csv") == 3);
    CHECK(res.divergence.at(0).size() == 2);
  }
}
