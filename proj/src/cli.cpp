#include "ffgen/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ffgen/checkpoint.hpp"
#include "ffgen/config.hpp"
#include "ffgen/data_io.hpp"
#include "ffgen/errors.hpp"
#include "ffgen/field.hpp"
#include "ffgen/format.hpp"
#include "ffgen/metrics.hpp"
#include "ffgen/ode.hpp"
#include "ffgen/study.hpp"
#include "ffgen/verify.hpp"

namespace ffgen::cli {

namespace fs = std::filesystem;

namespace {

struct Command {
  CLI::App* app = nullptr;
  std::string config;
  std::map<std::string, std::string> values;
  std::string n_alias;
};

// Builtin draws use (seed, purpose); files are read as they are.
data_io::Dataset load_points(const std::string& source, std::size_t n, std::size_t dim, std::uint64_t seed,
                             const char* purpose) {
  if (is_builtin_dataset(source)) {
    Stream rng(seed, purpose);
    data_io::BuiltinOptions opts;
    opts.dim = dim;
    return data_io::builtin(source, n, rng, opts);
  }
  return data_io::read_csv(source);
}

std::size_t builtin_dim(const RunConfig& cfg) { return cfg.dataset_dim > 0 ? cfg.dataset_dim : cfg.spec.dim; }

// Training points plus the reference set the metrics compare against.
struct Inputs {
  data_io::Dataset dataset;
  PointSet reference;
};

Inputs load_inputs(RunConfig& cfg, bool with_reference) {
  Inputs in;
  in.dataset = load_points(cfg.dataset, cfg.dataset_size, builtin_dim(cfg), *cfg.seed, "dataset");
  cfg.spec.dim = in.dataset.dim();
  if (with_reference) {
    in.reference = load_points(cfg.reference, cfg.heldout_size, cfg.spec.dim, *cfg.seed, "reference").points;
    if (in.reference.dim() != cfg.spec.dim) {
      throw InvalidInput("reference: dimension " + std::to_string(in.reference.dim()) +
                         " does not match dataset dimension " + std::to_string(cfg.spec.dim));
    }
  }
  cfg.spec.validate();
  return in;
}

void prepare_outdir(const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.outdir, ec);
  if (ec) throw IoError("cannot create output directory " + cfg.outdir + ": " + ec.message());
  data_io::write_text(fs::path(cfg.outdir) / "resolved.cfg", resolved_text(cfg));
}

study::RunSettings run_settings(const RunConfig& cfg) {
  study::RunSettings s;
  s.train = cfg.train;
  s.solver = cfg.solver;
  s.samples = cfg.samples;
  s.projections = cfg.projections;
  s.energy_points = cfg.energy_points;
  s.record_wall_time = cfg.record_wall_time;
  s.plot = cfg.plot;
  s.threads = cfg.threads;
  return s;
}

int cmd_train(RunConfig cfg, std::ostream& out) {
  validate_for(cfg, {"seed", "dataset"});
  Inputs in = load_inputs(cfg, false);
  prepare_outdir(cfg);
  trainer::TrainConfig tc = cfg.train;
  tc.seed = *cfg.seed;
  const fs::path dir = cfg.outdir;
  try {
    const auto result = trainer::train(in.dataset.points, cfg.spec, tc);
    trainer::write_checkpoint(dir / "checkpoint.txt", {cfg.spec, result.net, result.optim});
    trainer::write_training_log(dir, result.log);
    out << "train: " << result.log.step_loss.size() << " steps, best validation loss "
        << format_double(result.log.best_validation_loss, 6) << " at step " << result.log.best_step << '\n'
        << "train: wrote " << (dir / "checkpoint.txt").string() << '\n';
  } catch (const trainer::TrainingDiverged& e) {
    trainer::write_checkpoint(dir / "checkpoint_diverged.txt", {cfg.spec, e.diagnostic(), std::nullopt});
    throw;
  }
  return 0;
}

int cmd_sample(RunConfig cfg, std::ostream& out) {
  validate_for(cfg, {"seed", "checkpoint", "reference"});
  const auto ckpt = trainer::read_checkpoint(cfg.checkpoint);
  cfg.spec = ckpt.spec;
  const PointSet reference =
      load_points(cfg.reference, cfg.heldout_size, builtin_dim(cfg), *cfg.seed, "reference").points;
  if (reference.dim() != ckpt.spec.dim) {
    throw InvalidInput("reference: dimension " + std::to_string(reference.dim()) +
                       " does not match checkpoint dimension " + std::to_string(ckpt.spec.dim));
  }
  prepare_outdir(cfg);

  const field::LearnedField learned(ckpt.net, ckpt.spec);
  ode::SolverConfig sc = cfg.solver;
  sc.t_start = ckpt.spec.horizon;
  sc.t_end = ckpt.spec.t_min;
  const auto start = std::chrono::steady_clock::now();
  const auto gen = ode::generate(learned, ckpt.spec, cfg.samples, sc, *cfg.seed, cfg.threads);
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const fs::path dir = cfg.outdir;
  data_io::write_csv(dir / "samples.csv", gen.samples);
  if (cfg.plot) data_io::emit_svg_scatter(dir / "samples.svg", gen.samples);
  metrics::MetricReport report;
  Stream sw_rng(*cfg.seed, "metrics/sliced_wasserstein");
  Stream ed_rng(*cfg.seed, "metrics/energy");
  if (cfg.samples > 0) {
    report.sliced_wasserstein = metrics::sliced_wasserstein(gen.samples, reference, cfg.projections, sw_rng);
    report.energy_distance = metrics::energy_distance(gen.samples, reference, ed_rng, cfg.energy_points);
    report.nfe = static_cast<std::size_t>(
        std::llround(static_cast<double>(gen.nfe) / static_cast<double>(cfg.samples)));
  }
  if (cfg.record_wall_time) report.wall_time = elapsed;
  data_io::write_text(dir / "report.csv", metrics::report_csv_header() + "\n" + metrics::report_csv_row(report) + "\n");
  out << "sample: " << cfg.samples << " samples, mean NFE " << report.nfe << ", sliced W1 "
      << format_double(report.sliced_wasserstein, 6) << '\n';
  return 0;
}

int cmd_verify(RunConfig cfg, std::ostream& out) {
  validate_for(cfg, {"seed"});
  prepare_outdir(cfg);
  const auto records = verify::run_suite(cfg.verify);
  data_io::write_text(fs::path(cfg.outdir) / "verify.csv", verify::records_csv(records));
  std::size_t failed = 0;
  for (const auto& r : records) {
    out << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << " estimate=" << format_double(r.estimate, 6)
        << " tolerance=" << format_double(r.tolerance, 6) << '\n';
    if (!r.pass) ++failed;
  }
  out << "verify: " << records.size() - failed << "/" << records.size() << " checks passed\n";
  return failed == 0 ? 0 : 2;
}

int cmd_study(RunConfig cfg, std::ostream& out) {
  validate_for(cfg, {"seed", "dataset", "reference"});
  cfg.spec.family = trajectory::Family::SuperposedLinear;
  Inputs in = load_inputs(cfg, true);
  study::StudyConfig sc;
  for (std::size_t on = cfg.on_min; on <= cfg.on_max; ++on) sc.overlap_counts.push_back(on);
  sc.dataset = std::move(in.dataset);
  sc.reference = std::move(in.reference);
  sc.base_spec = cfg.spec;
  sc.run = run_settings(cfg);
  sc.seeds = cfg.seeds;
  sc.outdir = cfg.outdir;
  sc.validate();
  prepare_outdir(cfg);
  const auto result = study::run_superposition_study(sc);
  for (std::size_t r = 0; r < result.rows.size(); ++r) {
    const auto& row = result.rows[r];
    out << "ON=" << row.overlap_count;
    if (row.failed) {
      out << " failed\n";
      continue;
    }
    out << " sliced_w1=" << format_double(row.mean.sliced_wasserstein, 5)
        << " energy=" << format_double(row.mean.energy_distance, 5) << " nfe=" << row.mean.nfe
        << (row.collapsed ? " collapsed" : "") << '\n';
  }
  if (result.index) {
    out << "study: composite index peaks at ON=" << result.index->keys[metrics::argmax_index(*result.index)] << '\n';
  } else {
    out << "study: composite index absent (" << result.index_error << ")\n";
  }
  return 0;
}

int cmd_compare(RunConfig cfg, std::ostream& out) {
  validate_for(cfg, {"seed", "dataset", "reference"});
  Inputs in = load_inputs(cfg, true);
  study::CompareConfig cc;
  for (const auto& f : cfg.families) cc.families.push_back(study::parse_family_entry(f, cfg.spec));
  if (cc.families.size() < 2) throw InvalidInput("compare: need at least 2 families");
  cc.dataset = std::move(in.dataset);
  cc.reference = std::move(in.reference);
  cc.run = run_settings(cfg);
  cc.seeds = cfg.seeds;
  cc.divergence_g = cfg.divergence_g;
  cc.divergence_times = cfg.divergence_times;
  cc.divergence_n = cfg.divergence_n;
  cc.outdir = cfg.outdir;
  prepare_outdir(cfg);
  const auto result = study::compare_families(cc);
  for (const auto& fr : result.families) {
    out << fr.family.label;
    if (fr.failed) {
      out << " failed\n";
      continue;
    }
    out << " sliced_w1=" << format_double(fr.mean.sliced_wasserstein, 5)
        << " energy=" << format_double(fr.mean.energy_distance, 5) << " nfe=" << fr.mean.nfe << '\n';
  }
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Flow-field generative models: training, sampling, verification and studies", "ffgen"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "ffgen " + std::string(kVersion) + " (checkpoint format " +
                                        std::to_string(trainer::kCheckpointMajor) + "." +
                                        std::to_string(trainer::kCheckpointMinor) + ")");

  const std::vector<std::pair<std::string, std::string>> names = {
      {"train", "train a field network on a dataset"},
      {"sample", "generate samples from a checkpoint"},
      {"verify", "run the mathematical verification suite"},
      {"study", "sweep the overlap count of superposed linear trajectories"},
      {"compare", "train several trajectory families under an equal budget"}};
  std::vector<Command> commands(names.size());
  for (std::size_t i = 0; i < names.size(); ++i) {
    auto& c = commands[i];
    c.app = app.add_subcommand(names[i].first, names[i].second);
    c.app->add_option("--config", c.config, "flat key = value config file");
    for (const auto& key : config_keys()) c.app->add_option("--" + key.name, c.values[key.name], key.help);
    if (names[i].first == "sample") c.app->add_option("--n", c.n_alias, "alias for --samples");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  for (std::size_t i = 0; i < commands.size(); ++i) {
    auto& c = commands[i];
    if (!c.app->parsed()) continue;
    const std::string& name = names[i].first;
    try {
      Overrides overrides;
      for (const auto& key : config_keys()) {
        if (c.app->count("--" + key.name) > 0) overrides[key.name] = c.values[key.name];
      }
      if (name == "sample" && c.app->count("--n") > 0) overrides["samples"] = c.n_alias;
      std::optional<fs::path> path;
      if (!c.config.empty()) path = c.config;
      RunConfig cfg = parse_config(path, overrides);
      if (name == "train") return cmd_train(std::move(cfg), out);
      if (name == "sample") return cmd_sample(std::move(cfg), out);
      if (name == "verify") return cmd_verify(std::move(cfg), out);
      if (name == "study") return cmd_study(std::move(cfg), out);
      return cmd_compare(std::move(cfg), out);
    } catch (const std::invalid_argument& e) {
      err << name << ": error: " << e.what() << '\n';
      return 1;
    } catch (const ParseError& e) {
      err << name << ": error: " << e.what() << '\n';
      return 1;
    } catch (const std::exception& e) {
      err << name << ": failure: " << e.what() << '\n';
      return 2;
    }
  }
  return 1;
}

}  // namespace ffgen::cli
