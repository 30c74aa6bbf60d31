#include <doctest.h>

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "ffgen/cli.hpp"
#include "ffgen/config.hpp"
#include "ffgen/data_io.hpp"
#include "helpers.hpp"

using namespace ffgen;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "ffgen");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

// Keeps the commands quick.
std::vector<std::string> small(std::vector<std::string> args) {
  for (const char* a : {"--steps", "40", "--hidden_width", "8", "--hidden_layers", "1", "--dataset_size", "200",
                        "--heldout_size", "100", "--eval_every", "20", "--validation_pairs", "64",
                        "--projections", "10", "--energy_points", "50", "--solver", "rk4", "--step", "0.1"}) {
    args.emplace_back(a);
  }
  return args;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("config file and overrides") {
    const auto cfg = cli::parse_config_text("family = linear\nt_min = 0.01  # guard\n", {{"family", "curve"}});
    CHECK(cfg.spec.family == trajectory::Family::Curve);
    CHECK(cfg.spec.t_min == 0.01);

    try {
      cli::parse_config_text("t_min = -1\nbogus = 3\nsteps = many\n");
      FAIL("expected a config error");
    } catch (const cli::ConfigError& e) {
      CHECK(e.problems().size() == 3);
      const std::string what = e.what();
      CHECK(what.find("t_min") != std::string::npos);
      CHECK(what.find("bogus") != std::string::npos);
      CHECK(what.find("steps") != std::string::npos);
    }
  }

  TEST_CASE("empty config echoes the defaults") {
    const auto defaults = cli::parse_config_text("");
    const auto text = cli::resolved_text(defaults);
    for (const auto& key : cli::config_keys()) {
      // Unset optional keys are echoed as comments.
      const bool set = text.find('\n' + key.name + " = ") != std::string::npos || text.rfind(key.name + " = ", 0) == 0;
      CHECK_MESSAGE((set || text.find("# " + key.name + " =\n") != std::string::npos), key.name);
    }
    // The echo parses back to the same configuration.
    CHECK(cli::resolved_text(cli::parse_config_text(text)) == text);
  }

  TEST_CASE("version and usage errors") {
    const auto v = run_cli({"--version"});
    CHECK(v.code == 0);
    CHECK(v.out.find(cli::kVersion) != std::string::npos);
    CHECK(v.out.find("checkpoint format") != std::string::npos);
    CHECK(run_cli({}).code == 1);
    CHECK(run_cli({"fly"}).code == 1);
    CHECK(run_cli({"train", "--no_such_key", "1"}).code == 1);
  }

  TEST_CASE("missing dataset leaves nothing behind") {
    const auto dir = test::scratch_dir("cli_missing");
    fs::remove_all(dir);
    const auto r = run_cli({"train", "--seed", "1", "--dataset", "/nonexistent/points.csv", "--outdir", dir.string()});
    CHECK(r.code == 1);
    CHECK(r.err.rfind("train: error:", 0) == 0);
    CHECK_FALSE(fs::exists(dir));
  }

  TEST_CASE("seed is required") {
    const auto dir = test::scratch_dir("cli_noseed");
    fs::remove_all(dir);
    const auto r = run_cli({"train", "--outdir", dir.string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("seed") != std::string::npos);
  }

  TEST_CASE("train then sample") {
    const auto dir = test::scratch_dir("cli_train");
    REQUIRE(run_cli(small({"train", "--seed", "2", "--outdir", (dir / "t").string()})).code == 0);
    CHECK(fs::exists(dir / "t" / "checkpoint.txt"));
    CHECK(fs::exists(dir / "t" / "resolved.cfg"));
    const auto ckpt = (dir / "t" / "checkpoint.txt").string();
    for (const char* sub : {"s1", "s2"}) {
      const auto r = run_cli(small({"sample", "--seed", "2", "--checkpoint", ckpt, "--n", "150", "--outdir",
                                    (dir / sub).string()}));
      REQUIRE(r.code == 0);
    }
    const auto samples = data_io::read_csv(dir / "s1" / "samples.csv");
    CHECK(samples.points.size() == 150);
    const auto report = data_io::read_text(dir / "s1" / "report.csv");
    CHECK(report.rfind("sliced_wasserstein,energy_distance,nfe,wall_time\n", 0) == 0);
    for (const char* f : {"samples.csv", "samples.svg", "report.csv"}) {
      CHECK_MESSAGE(data_io::sha256_file(dir / "s1" / f) == data_io::sha256_file(dir / "s2" / f), f);
    }
  }

  TEST_CASE("verify writes its records and reports failures through the exit code") {
    const auto dir = test::scratch_dir("cli_verify");
    const std::vector<std::string> quick = {"--verify_dims", "1,2", "--verify_radial_samples", "20000",
                                            "--verify_divergence_points", "100"};
    auto ok = std::vector<std::string>{"verify", "--seed", "7", "--outdir", (dir / "ok").string()};
    ok.insert(ok.end(), quick.begin(), quick.end());
    const auto r = run_cli(ok);
    CHECK(r.code == 0);
    const auto csv = data_io::read_text(dir / "ok" / "verify.csv");
    CHECK(csv.rfind("name,estimate,tolerance,pass,seed\n", 0) == 0);
    CHECK(csv.find(",7\n") != std::string::npos);

    auto strict = std::vector<std::string>{"verify", "--seed", "7", "--outdir", (dir / "strict").string(),
                                           "--verify_radial_tol", "1e-9"};
    strict.insert(strict.end(), quick.begin(), quick.end());
    CHECK(run_cli(strict).code == 2);
  }
}
