// One [PASS]/[FAIL] line per acceptance criterion. Tolerances and budgets
// are pinned here. `--expect-fail 8,9` lists criteria whose failure is known
// and recorded; they still print [FAIL] but do not change the exit status.
// `--only 1,2` runs a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ffgen/cli.hpp"
#include "ffgen/data_io.hpp"
#include "ffgen/field.hpp"
#include "ffgen/format.hpp"
#include "ffgen/metrics.hpp"
#include "ffgen/ode.hpp"
#include "ffgen/sampler.hpp"
#include "ffgen/study.hpp"
#include "ffgen/trainer.hpp"
#include "ffgen/verify.hpp"

using namespace ffgen;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) { return format_double(v, 4); }

trajectory::TrajectorySpec linear_spec(std::size_t d) {
  trajectory::TrajectorySpec s;
  s.family = trajectory::Family::Linear;
  s.dim = d;
  return s;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("ffgen_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const std::vector<std::size_t> kDims = {1, 2, 3, 8};

Outcome normalization() {
  Outcome o{true, ""};
  std::ostringstream d;
  for (std::size_t dim : kDims) {
    Stream r1(1, "acceptance/normalization/origin", dim);
    Stream r2(1, "acceptance/normalization/shifted", dim);
    Stream rx(1, "acceptance/normalization/point", dim);
    Vec x0(dim);
    for (double& v : x0) v = 2.0 * rx.normal();
    const auto a = verify::normalization_constant(dim, 1000000, r1);
    const auto b = verify::normalization_constant(dim, 1000000, r2, 2.5, x0);
    const double unit = std::abs(a.amplitude * b.integral - 1.0);
    const double bar = std::hypot(a.std_error, b.std_error) + 1e-12 * a.amplitude;
    const double sigmas = std::abs(a.amplitude - b.amplitude) / bar;
    o.pass = o.pass && unit < 5e-3 && sigmas <= 3.0;
    d << "d=" << dim << " |A*I-1|=" << fmt(unit) << " shift=" << fmt(sigmas) << "sd ";
  }
  o.detail = d.str();
  return o;
}

Outcome divergence() {
  Outcome o{true, ""};
  std::ostringstream d;
  for (std::size_t dim : kDims) {
    Stream r(2, "acceptance/divergence", dim), rn(2, "acceptance/divergence/negative", dim);
    const double a = verify::analytic_amplitude(dim);
    const double good = verify::check_divergence_free(dim, a, 1000, r, 1e-5).max_residual;
    const double bad = verify::check_divergence_free(dim, a, 1000, rn, 1e-5, static_cast<double>(dim)).max_residual;
    o.pass = o.pass && good < 1e-3 && bad > 0.1;
    d << "d=" << dim << " " << fmt(good) << "/control " << fmt(bad) << " ";
  }
  o.detail = d.str();
  return o;
}

Outcome continuity() {
  std::vector<double> t_grid;
  for (int i = 0; i <= 16; ++i) t_grid.push_back(0.2 + 0.05 * i);
  PointSet xs(1);
  for (int i = 0; i <= 120; ++i) xs.push_back(Vec{-3.0 + 0.05 * i});
  const double x0[1] = {0.5};
  const auto spec = linear_spec(1);
  const double good = verify::continuity_residual(spec, x0, t_grid, xs, 1e-4).normalized;
  const double bad = verify::continuity_residual(spec, x0, t_grid, xs, 1e-4, 2.0).normalized;
  return {good < 1e-4 && bad > 1e-2, "residual " + fmt(good) + ", doubled velocity " + fmt(bad)};
}

Outcome radial() {
  Outcome o{true, ""};
  std::ostringstream d;
  for (std::size_t dim : kDims) {
    Stream r(4, "acceptance/radial", dim);
    const double ks = verify::check_radial_law(dim, 100000, r);
    o.pass = o.pass && ks < 1e-2;
    d << "d=" << dim << " KS=" << fmt(ks) << " ";
  }
  o.detail = d.str();
  return o;
}

// dx/dt = m (x - x0) / t from x(1) = x1, closed form x0 + (x1 - x0) t^m.
double power_error(double m, double h, double t_end, std::size_t* nfe = nullptr, std::size_t* steps = nullptr) {
  const double x0 = 0.3, x1 = 1.5;
  const field::FunctionField f(1, [=](double t, std::span<const double> x, std::span<double> out) {
    out[0] = m * (x[0] - x0) / t;
  });
  ode::SolverConfig cfg;
  cfg.method = ode::Method::RK4;
  cfg.step = h;
  cfg.t_start = 1.0;
  cfg.t_end = t_end;
  const auto rec = ode::integrate(f, Vec{x1}, cfg, false);
  if (nfe) *nfe = rec.nfe;
  if (steps) *steps = rec.accepted;
  return std::abs(rec.final_state()[0] - (x0 + (x1 - x0) * std::pow(t_end, m)));
}

Outcome ode_correctness() {
  std::size_t nfe = 0, steps = 0;
  const double linear = power_error(1.0, 1e-2, 1e-2, &nfe, &steps);
  // The straight line is integrated exactly by every RK4 stage, so the rate
  // is measured on the quadratic member of the same family.
  std::vector<double> factors;
  double prev = power_error(2.0, 1e-2, 0.1);
  bool order_ok = true;
  for (double h : {5e-3, 2.5e-3, 1.25e-3}) {
    const double err = power_error(2.0, h, 0.1);
    factors.push_back(prev / err);
    order_ok = order_ok && std::abs(prev / err - 16.0) <= 2.0;
    prev = err;
  }
  std::ostringstream d;
  d << "linear error " << fmt(linear) << ", halving factors";
  for (double f : factors) d << ' ' << fmt(f);
  d << ", NFE " << nfe << " for " << steps << " steps";
  return {linear <= 1e-8 && order_ok && nfe == 4 * steps, d.str()};
}

Outcome invertibility() {
  Stream rng(6, "acceptance/ring");
  const auto data = data_io::builtin("ring8", 2000, rng);
  const field::OracleField oracle(data.points, linear_spec(2));
  ode::SolverConfig cfg;
  cfg.method = ode::Method::RK45;
  cfg.rtol = cfg.atol = 1e-6;
  cfg.t_start = 1.0;
  cfg.t_end = 1e-3;
  PointSet starts(2);
  for (int i = 0; i < 100; ++i) starts.push_back(Vec{rng.normal(), rng.normal()});
  const double err = ode::roundtrip_error(oracle, starts, cfg);
  return {err < 1e-3, "mean roundtrip error " + fmt(err) + " over 100 prior draws"};
}

double gradient_check(std::uint64_t seed) {
  Stream rng(seed, "acceptance/gradcheck");
  trainer::FieldNet net = trainer::FieldNet::glorot({4, 5, 5, 2}, rng);
  for (auto& layer : net.layers()) {
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = 0.1 * rng.normal();
  }
  const auto spec = linear_spec(2);
  std::vector<sampler::TrainingPair> batch;
  for (int i = 0; i < 8; ++i) batch.push_back(sampler::sample_training_pair(Vec{rng.normal(), rng.normal()}, spec, rng));
  const auto analytic = trainer::loss_and_grad(net, batch);
  const double h = 1e-5;
  double worst = 0.0;
  const auto probe = [&](double& p, double g) {
    const double keep = p;
    p = keep + h;
    const double up = trainer::loss(net, batch);
    p = keep - h;
    const double down = trainer::loss(net, batch);
    p = keep;
    const double fd = (up - down) / (2 * h);
    worst = std::max(worst, std::abs(fd - g) / std::max({1e-6, std::abs(fd), std::abs(g)}));
  };
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    auto& layer = net.layers()[l];
    const auto& g = analytic.grads.layers[l];
    for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) probe(layer.weight(i, j), g.weight(i, j));
      probe(layer.bias(i), g.bias(i));
    }
  }
  return worst;
}

Outcome training() {
  double grad = 0.0;
  for (std::uint64_t s = 0; s < 10; ++s) grad = std::max(grad, gradient_check(s));

  const auto spec = linear_spec(2);
  Stream drng(0, "dataset");
  const PointSet data = data_io::builtin("single_point", 10000, drng).points;
  trainer::TrainConfig cfg;
  cfg.steps = 2000;
  const auto res = trainer::train(data, spec, cfg);
  const field::LearnedField learned(res.net, spec);
  const field::OracleField oracle(data, spec);
  // One standard deviation of the conditional law around the point at each time.
  double sq = 0.0;
  std::size_t count = 0;
  for (double t : {0.25, 0.5, 0.75, 1.0}) {
    for (int i = 0; i < 20; ++i) {
      for (int j = 0; j < 20; ++j) {
        const Vec x{t * (-1.0 + 2.0 * i / 19.0), t * (-1.0 + 2.0 * j / 19.0)};
        const auto a = learned(t, x);
        const auto b = oracle(t, x);
        sq += (a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]);
        count += 2;
      }
    }
  }
  const double rms = std::sqrt(sq / static_cast<double>(count));

  const trainer::LearningRateSchedule lr;
  bool schedule = lr.at_epoch(0) == 1e-4 && lr.at_epoch(2) == 1e-4;
  for (std::size_t e = 0; e < 30; ++e) {
    schedule = schedule && std::abs(lr.at_epoch(e) - 1e-4 * std::pow(0.8, static_cast<double>(e / 3))) <= 1e-18;
  }
  const auto& logged = res.log.epoch_learning_rate;
  for (std::size_t e = 0; e < logged.size(); ++e) schedule = schedule && logged[e] == lr.at_epoch(e);

  return {grad < 1e-4 && rms < 0.05 && schedule,
          "gradient error " + fmt(grad) + ", field RMS " + fmt(rms) + ", schedule " + (schedule ? "exact" : "wrong")};
}

Outcome generation() {
  std::ostringstream d;
  bool pass = true;
  for (std::uint64_t seed : {0, 1, 2}) {
    Stream r1(seed, "dataset"), r2(seed, "heldout"), r3(seed, "resample");
    const auto train = data_io::builtin("ring8", 10000, r1);
    const auto held = data_io::builtin("ring8", 10000, r2);
    const auto fresh = data_io::builtin("ring8", 10000, r3);
    const auto spec = linear_spec(2);
    trainer::TrainConfig cfg;
    cfg.seed = seed;
    cfg.steps = 200000;
    cfg.steps_per_epoch = 10000;
    const auto res = trainer::train(train.points, spec, cfg);
    const field::LearnedField learned(res.net, spec);
    ode::SolverConfig sc;
    sc.t_start = spec.horizon;
    sc.t_end = spec.t_min;
    sc.rtol = sc.atol = 1e-4;
    const auto gen = ode::generate(learned, spec, 10000, sc, seed);
    Stream p1(seed, "metrics/sliced_wasserstein"), p2(seed, "metrics/sliced_wasserstein");
    const double base = metrics::sliced_wasserstein(fresh.points, held.points, 200, p1);
    const double model = metrics::sliced_wasserstein(gen.samples, held.points, 200, p2);
    pass = pass && model < 1.5 * base;
    d << "seed " << seed << ": " << fmt(model) << " vs baseline " << fmt(base) << " (x" << fmt(model / base) << ") ";
  }
  return {pass, d.str()};
}

Outcome superposition() {
  study::StudyConfig cfg;
  for (std::size_t on = 1; on <= 8; ++on) cfg.overlap_counts.push_back(on);
  Stream r1(0, "dataset"), r2(0, "reference");
  cfg.dataset = data_io::builtin("ring8", 4000, r1);
  cfg.reference = data_io::builtin("ring8", 2000, r2).points;
  cfg.base_spec.dim = 2;
  cfg.run.samples = 2000;
  cfg.run.plot = false;
  cfg.seeds = {0, 1, 2};
  cfg.outdir = scratch("superposition");
  const auto res = study::run_superposition_study(cfg);

  bool nfe_ok = true, any_failed = false;
  std::size_t best = 0;
  std::ostringstream d;
  d << "NFE";
  for (std::size_t i = 0; i < res.rows.size(); ++i) {
    const auto& row = res.rows[i];
    any_failed = any_failed || row.failed;
    d << ' ' << row.mean.nfe;
    if (i > 0 && row.mean.nfe < res.rows[i - 1].mean.nfe) nfe_ok = false;
    if (row.mean.sliced_wasserstein < res.rows[best].mean.sliced_wasserstein) best = i;
  }
  const bool quality_ok = best + 1 < res.rows.size();
  const auto table = metrics::composite_index(metrics::published_overlap_table());
  const long long peak = table.keys[metrics::argmax_index(table)];
  const bool peak_ok = peak >= 3 && peak <= 5;
  d << "; best sliced W1 at ON=" << res.rows[best].overlap_count << "; published index peaks at ON=" << peak;
  return {!any_failed && nfe_ok && quality_ok && peak_ok, d.str()};
}

int cli_call(std::vector<std::string> args) {
  args.insert(args.begin(), "ffgen");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  return cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
}

// Every command twice into separate trees; all CSV and SVG files must match.
Outcome determinism() {
  const auto root = scratch("determinism");
  const std::vector<std::string> quick = {"--steps", "300", "--hidden_width", "32", "--dataset_size", "1000",
                                          "--heldout_size", "500", "--samples", "300", "--seed", "5"};
  const auto with = [&](std::vector<std::string> args) {
    args.insert(args.end(), quick.begin(), quick.end());
    return args;
  };
  std::size_t compared = 0, mismatched = 0;
  int bad_exit = 0;
  for (const char* run : {"a", "b"}) {
    const fs::path dir = root / run;
    const auto ckpt = (dir / "train" / "checkpoint.txt").string();
    const std::vector<std::vector<std::string>> commands = {
        with({"train", "--outdir", (dir / "train").string()}),
        with({"sample", "--checkpoint", ckpt, "--outdir", (dir / "sample").string()}),
        {"verify", "--seed", "5", "--verify_dims", "1,2", "--verify_radial_samples", "20000", "--outdir",
         (dir / "verify").string()},
        with({"study", "--on_min", "1", "--on_max", "3", "--seeds", "0,1", "--outdir", (dir / "study").string()}),
        with({"compare", "--families", "linear,curve:2", "--seeds", "0", "--outdir", (dir / "compare").string()})};
    for (const auto& c : commands) bad_exit += cli_call(c) != 0 ? 1 : 0;
  }
  for (const auto& entry : fs::recursive_directory_iterator(root / "a")) {
    const auto ext = entry.path().extension();
    if (!entry.is_regular_file() || (ext != ".csv" && ext != ".svg")) continue;
    const auto twin = root / "b" / fs::relative(entry.path(), root / "a");
    ++compared;
    if (!fs::exists(twin) || data_io::sha256_file(entry.path()) != data_io::sha256_file(twin)) ++mismatched;
  }
  return {bad_exit == 0 && compared > 0 && mismatched == 0,
          std::to_string(compared) + " CSV/SVG files compared, " + std::to_string(mismatched) + " differ, " +
              std::to_string(bad_exit) + " non-zero exits"};
}

std::set<int> parse_set(const std::string& text) {
  std::set<int> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.insert(std::stoi(item));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::string only_text, expect_text;
  app.add_option("--only", only_text, "comma-separated criteria to run");
  app.add_option("--expect-fail", expect_text, "comma-separated criteria known to fail");
  CLI11_PARSE(app, argc, argv);
  const auto only = parse_set(only_text);
  const auto expected = parse_set(expect_text);

  struct Criterion {
    int id;
    std::string name;
    double max_seconds;  // 0: no runtime bound
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "normalization constant", 60.0, normalization},
      {2, "divergence-free kernel", 10.0, divergence},
      {3, "continuity equation", 30.0, continuity},
      {4, "radial sampling law", 10.0, radial},
      {5, "ODE correctness", 0.0, ode_correctness},
      {6, "invertibility", 0.0, invertibility},
      {7, "training fidelity", 0.0, training},
      {8, "end-to-end generation", 0.0, generation},
      {9, "superposition study", 0.0, superposition},
      {10, "determinism", 0.0, determinism},
  };

  int unexpected = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.max_seconds > 0 && secs >= c.max_seconds) {
      o.pass = false;
      o.detail += " runtime over " + fmt(c.max_seconds) + " s";
    }
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << c.id << ". " << c.name << ": " << o.detail << " ("
              << format_double(secs, 3) << " s)";
    if (!o.pass && expected.count(c.id)) std::cout << " [known failure]";
    std::cout << std::endl;
    if (!o.pass && !expected.count(c.id)) ++unexpected;
  }
  return unexpected == 0 ? 0 : 1;
}
