#include "ffgen/config.hpp"

#include <functional>
#include <limits>

#include "ffgen/data_io.hpp"
#include "ffgen/errors.hpp"
#include "ffgen/format.hpp"

namespace ffgen::cli {

namespace {

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

// A setter returns an error message or an empty string.
using Setter = std::function<std::string(RunConfig&, std::string_view)>;
using Getter = std::function<std::string(const RunConfig&)>;

struct Key {
  KeyInfo info;
  Setter set;
  Getter get;
};

template <typename T>
std::string set_unsigned(T& field, std::string_view v, unsigned long long lo = 0,
                         unsigned long long hi = std::numeric_limits<T>::max()) {
  const auto parsed = parse_int(v);
  if (!parsed) return "expected a non-negative integer, got '" + std::string(v) + "'";
  if (*parsed < 0 || static_cast<unsigned long long>(*parsed) < lo || static_cast<unsigned long long>(*parsed) > hi) {
    return "must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "], got " + std::string(v);
  }
  field = static_cast<T>(*parsed);
  return {};
}

enum class Bound { Any, Positive, NonNegative, Unit };

std::string set_real(double& field, std::string_view v, Bound bound) {
  const auto parsed = parse_double(v);
  if (!parsed || !std::isfinite(*parsed)) return "expected a finite number, got '" + std::string(v) + "'";
  const double x = *parsed;
  switch (bound) {
    case Bound::Positive:
      if (!(x > 0)) return "must be > 0, got " + std::string(v);
      break;
    case Bound::NonNegative:
      if (!(x >= 0)) return "must be >= 0, got " + std::string(v);
      break;
    case Bound::Unit:
      if (!(x > 0 && x <= 1)) return "must be in (0, 1], got " + std::string(v);
      break;
    case Bound::Any:
      break;
  }
  field = x;
  return {};
}

std::string set_bool(bool& field, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") {
    field = true;
  } else if (v == "false" || v == "0" || v == "no") {
    field = false;
  } else {
    return "expected true/false, got '" + std::string(v) + "'";
  }
  return {};
}

std::vector<std::string_view> split_list(std::string_view v) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = v.find(',', start);
    const auto item = trim(v.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename Fn>
std::string guard(Fn&& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

std::string show(double v) { return format_double(v); }
std::string show(bool v) { return v ? "true" : "false"; }
template <typename T>
std::string show_list(const std::vector<T>& items) {
  std::vector<std::string> parts;
  for (const auto& i : items) {
    if constexpr (std::is_same_v<T, double>) {
      parts.push_back(format_double(i));
    } else if constexpr (std::is_same_v<T, std::string>) {
      parts.push_back(i);
    } else {
      parts.push_back(std::to_string(i));
    }
  }
  return join(parts, ",");
}

#define FF_UINT(key, field, lo, help)                                                              \
  Key {                                                                                            \
    {key, help}, [](RunConfig& c, std::string_view v) { return set_unsigned(c.field, v, lo); },    \
        [](const RunConfig& c) { return std::to_string(c.field); }                                 \
  }
#define FF_REAL(key, field, bound, help)                                                                 \
  Key {                                                                                                  \
    {key, help}, [](RunConfig& c, std::string_view v) { return set_real(c.field, v, Bound::bound); },    \
        [](const RunConfig& c) { return show(c.field); }                                                 \
  }
#define FF_BOOL(key, field, help)                                                                  \
  Key {                                                                                            \
    {key, help}, [](RunConfig& c, std::string_view v) { return set_bool(c.field, v); },            \
        [](const RunConfig& c) { return show(c.field); }                                           \
  }
#define FF_TEXT(key, field, help)                                                                  \
  Key {                                                                                            \
    {key, help}, [](RunConfig& c, std::string_view v) { c.field = std::string(v); return std::string(); }, \
        [](const RunConfig& c) { return c.field; }                                                 \
  }

const std::vector<Key>& table() {
  static const std::vector<Key> keys = {
      Key{{"seed", "master seed; required by every stochastic subcommand"},
          [](RunConfig& c, std::string_view v) {
            std::uint64_t s = 0;
            auto err = set_unsigned(s, v);
            if (err.empty()) c.seed = s;
            return err;
          },
          [](const RunConfig& c) { return c.seed ? std::to_string(*c.seed) : std::string(); }},
      FF_TEXT("outdir", outdir, "output directory"),
      Key{{"threads", "worker threads (>= 1)"},
          [](RunConfig& c, std::string_view v) { return set_unsigned(c.threads, v, 1, 1024); },
          [](const RunConfig& c) { return std::to_string(c.threads); }},

      Key{{"family", "trajectory family: poisson, linear, gaussian_bridge, curve, superposed_linear"},
          [](RunConfig& c, std::string_view v) { return guard([&] { c.spec.family = trajectory::parse_family(v); }); },
          [](const RunConfig& c) { return std::string(trajectory::to_string(c.spec.family)); }},
      FF_UINT("dim", spec.dim, 1, "data dimension d"),
      FF_REAL("horizon", spec.horizon, Positive, "terminal time T"),
      FF_REAL("t_min", spec.t_min, Positive, "smallest time reached by training and generation"),
      FF_REAL("curve_exponent", spec.curve_exponent, Positive, "exponent m of the curve family"),
      FF_UINT("overlap_count", spec.overlap_count, 1, "ON, number of superposed linear stages"),
      FF_REAL("sigma_min", spec.sigma_min, NonNegative, "Gaussian bridge sigma at t = 0"),
      FF_REAL("sigma_max", spec.sigma_max, Positive, "Gaussian bridge sigma at t = T"),
      FF_REAL("poisson_amplitude", spec.poisson_amplitude, Positive, "amplitude A of the isotropic kernel"),
      Key{{"prior", "terminal density: pfgm_radial, standard_gaussian, uniform_ball"},
          [](RunConfig& c, std::string_view v) {
            return guard([&] { c.spec.prior.kind = sampler::parse_prior_kind(v); });
          },
          [](const RunConfig& c) { return std::string(sampler::to_string(c.spec.prior.kind)); }},
      FF_REAL("prior_sigma", spec.prior.sigma, Positive, "scale sigma of the Gaussian draws"),
      FF_REAL("prior_tau", spec.prior.tau, NonNegative, "growth rate tau of the radial sampler"),
      FF_REAL("prior_max_exponent", spec.prior.max_exponent, NonNegative, "upper bound M of m ~ U[0, M]"),
      FF_REAL("prior_bound", spec.prior.bound, Positive, "bound of the literal uniform radial variant"),
      FF_REAL("prior_radius", spec.prior.radius, Positive, "radius of the uniform_ball prior"),

      Key{{"solver", "ODE method: euler, rk4, rk45"},
          [](RunConfig& c, std::string_view v) { return guard([&] { c.solver.method = ode::parse_method(v); }); },
          [](const RunConfig& c) { return std::string(ode::to_string(c.solver.method)); }},
      FF_REAL("step", solver.step, Positive, "step size of the fixed-step methods"),
      FF_REAL("rtol", solver.rtol, Positive, "relative tolerance of rk45"),
      FF_REAL("atol", solver.atol, Positive, "absolute tolerance of rk45"),
      FF_UINT("max_steps", solver.max_steps, 1, "step budget per trajectory"),

      FF_UINT("steps", train.steps, 1, "optimizer steps"),
      FF_UINT("batch_size", train.batch_size, 1, "mini-batch size"),
      FF_REAL("learning_rate", train.schedule.initial, Positive, "initial Adam learning rate"),
      FF_REAL("lr_decay", train.schedule.factor, Unit, "learning-rate factor per decay"),
      FF_UINT("lr_decay_epochs", train.schedule.every_epochs, 1, "epochs between decays"),
      FF_UINT("steps_per_epoch", train.steps_per_epoch, 0, "steps per epoch; 0 = one pass over the training split"),
      FF_UINT("hidden_width", train.hidden_width, 1, "hidden layer width"),
      FF_UINT("hidden_layers", train.hidden_layers, 0, "number of hidden layers"),
      Key{{"validation_fraction", "fraction of the dataset held out for checkpoint selection, in [0, 1)"},
          [](RunConfig& c, std::string_view v) {
            auto err = set_real(c.train.validation_fraction, v, Bound::NonNegative);
            if (err.empty() && c.train.validation_fraction >= 1) err = "must be < 1, got " + std::string(v);
            return err;
          },
          [](const RunConfig& c) { return show(c.train.validation_fraction); }},
      FF_UINT("eval_every", train.eval_every, 1, "steps between validation evaluations"),
      FF_UINT("validation_pairs", train.validation_pairs, 1, "fixed validation pairs"),
      FF_REAL("jitter", train.jitter, NonNegative, "std-dev of Gaussian noise added to training points"),

      FF_TEXT("dataset", dataset, "builtin dataset name or CSV path"),
      FF_UINT("dataset_size", dataset_size, 1, "points drawn from a builtin dataset"),
      FF_UINT("dataset_dim", dataset_dim, 0, "dimension for single_point / two_points (0 = default)"),
      FF_UINT("heldout_size", heldout_size, 1, "held-out reference points drawn for metrics"),

      FF_TEXT("checkpoint", checkpoint, "checkpoint file read by sample"),
      FF_UINT("samples", samples, 1, "number of generated samples"),
      FF_TEXT("reference", reference, "dataset the sample report is measured against"),
      FF_UINT("projections", projections, 1, "sliced-Wasserstein projections"),
      FF_UINT("energy_points", energy_points, 1, "subsample cap for the energy distance"),
      FF_BOOL("plot", plot, "emit SVG plots"),
      FF_BOOL("record_wall_time", record_wall_time, "write measured wall time instead of 0 (breaks byte determinism)"),

      FF_UINT("on_min", on_min, 1, "smallest overlap count of the study"),
      FF_UINT("on_max", on_max, 1, "largest overlap count of the study"),
      Key{{"seeds", "comma-separated seeds of the study and compare runs"},
          [](RunConfig& c, std::string_view v) {
            std::vector<std::uint64_t> out;
            for (auto item : split_list(v)) {
              std::uint64_t s = 0;
              auto err = set_unsigned(s, item);
              if (!err.empty()) return err;
              out.push_back(s);
            }
            if (out.empty()) return std::string("must list at least one seed");
            c.seeds = std::move(out);
            return std::string();
          },
          [](const RunConfig& c) { return show_list(c.seeds); }},

      Key{{"families", "comma-separated families for compare (name or name:parameter, e.g. curve:3, superposed_linear:4)"},
          [](RunConfig& c, std::string_view v) {
            std::vector<std::string> out;
            for (auto item : split_list(v)) out.emplace_back(item);
            if (out.size() < 2) return std::string("must list at least two families");
            c.families = std::move(out);
            return std::string();
          },
          [](const RunConfig& c) { return show_list(c.families); }},
      FF_REAL("divergence_g", divergence_g, Any, "constant g of the trajectory-divergence indicator"),
      Key{{"divergence_times", "comma-separated grid times of the divergence indicator"},
          [](RunConfig& c, std::string_view v) {
            std::vector<double> out;
            for (auto item : split_list(v)) {
              double x = 0;
              auto err = set_real(x, item, Bound::Positive);
              if (!err.empty()) return err;
              out.push_back(x);
            }
            if (out.empty()) return std::string("must list at least one time");
            c.divergence_times = std::move(out);
            return std::string();
          },
          [](const RunConfig& c) { return show_list(c.divergence_times); }},
      FF_UINT("divergence_n", divergence_n, 1000, "ensemble size of the divergence indicator"),

      Key{{"verify_dims", "comma-separated dimensions checked by verify"},
          [](RunConfig& c, std::string_view v) {
            std::vector<std::size_t> out;
            for (auto item : split_list(v)) {
              std::size_t d = 0;
              auto err = set_unsigned(d, item, 1, 16);
              if (!err.empty()) return err;
              out.push_back(d);
            }
            if (out.empty()) return std::string("must list at least one dimension");
            c.verify.dims = std::move(out);
            return std::string();
          },
          [](const RunConfig& c) { return show_list(c.verify.dims); }},
      FF_UINT("verify_normalization_budget", verify.normalization_budget, 1, "Monte Carlo samples for d > 2"),
      FF_REAL("verify_normalization_tol", verify.normalization_tol, Positive, "relative tolerance on A"),
      FF_UINT("verify_divergence_points", verify.divergence_points, 1, "random extended-space points"),
      FF_REAL("verify_divergence_h", verify.divergence_h, Positive, "finite-difference step"),
      FF_REAL("verify_divergence_tol", verify.divergence_tol, Positive, "max normalised divergence residual"),
      FF_REAL("verify_divergence_negative_min", verify.divergence_negative_min, Positive,
              "residual the wrong-exponent control must exceed"),
      FF_REAL("verify_continuity_h", verify.continuity_h, Positive, "finite-difference step"),
      FF_REAL("verify_continuity_tol", verify.continuity_tol, Positive, "max normalised continuity residual"),
      FF_REAL("verify_continuity_negative_min", verify.continuity_negative_min, Positive,
              "residual the doubled-velocity control must exceed"),
      FF_UINT("verify_radial_samples", verify.radial_samples, 10000, "draws per radial-law check"),
      FF_REAL("verify_radial_tol", verify.radial_tol, Positive, "max KS distance"),
      FF_REAL("verify_radial_negative_min", verify.radial_negative_min, Positive,
              "KS distance the mismatched-law control must exceed"),
  };
  return keys;
}

#undef FF_UINT
#undef FF_REAL
#undef FF_BOOL
#undef FF_TEXT

const Key* find_key(std::string_view name) {
  for (const auto& k : table()) {
    if (k.info.name == name) return &k;
  }
  return nullptr;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::invalid_argument("config: " + join(problems, "; ")), problems_(std::move(problems)) {}

const std::vector<KeyInfo>& config_keys() {
  static const std::vector<KeyInfo> infos = [] {
    std::vector<KeyInfo> out;
    for (const auto& k : table()) out.push_back(k.info);
    return out;
  }();
  return infos;
}

RunConfig parse_config_text(std::string_view text, const Overrides& overrides) {
  RunConfig cfg;
  std::vector<std::string> problems;
  const auto apply = [&](std::string_view key, std::string_view value, const std::string& where) {
    const Key* k = find_key(key);
    if (!k) {
      problems.push_back(where + "unknown key '" + std::string(key) + "'");
      return;
    }
    const std::string err = k->set(cfg, value);
    if (!err.empty()) problems.push_back(where + std::string(key) + ": " + err);
  };

  std::size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (eq == std::string_view::npos) {
      problems.push_back(where + "expected 'key = value', got '" + std::string(line) + "'");
      continue;
    }
    apply(trim(line.substr(0, eq)), trim(line.substr(eq + 1)), where);
  }
  for (const auto& [key, value] : overrides) apply(key, trim(value), "--");

  if (problems.empty()) {
    const auto check = [&](std::string_view owner, auto&& fn) {
      try {
        fn();
      } catch (const std::exception& e) {
        problems.push_back(std::string(owner) + ": " + e.what());
      }
    };
    check("trajectory", [&] { cfg.spec.validate(); });
    check("solver", [&] { cfg.solver.validate(); });
    check("trainer", [&] { cfg.train.validate(); });
    check("verify", [&] { cfg.verify.validate(); });
    if (cfg.on_min > cfg.on_max) problems.push_back("study: on_min must be <= on_max");
    for (double t : cfg.divergence_times) {
      if (t < cfg.spec.t_min || t > cfg.spec.horizon) {
        problems.push_back("metrics: divergence_times entries must lie in [t_min, horizon]");
        break;
      }
    }
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
  cfg.train.seed = cfg.seed.value_or(0);
  cfg.verify.seed = cfg.seed.value_or(0);
  cfg.verify.threads = cfg.threads;
  return cfg;
}

RunConfig parse_config(const std::optional<std::filesystem::path>& path, const Overrides& overrides) {
  std::string text;
  if (path) {
    if (!std::filesystem::exists(*path)) throw ConfigError({"config file " + path->string() + " does not exist"});
    text = data_io::read_text(*path);
  }
  return parse_config_text(text, overrides);
}

bool is_builtin_dataset(std::string_view name) {
  for (const auto& n : data_io::builtin_names()) {
    if (n == name) return true;
  }
  return false;
}

void validate_for(const RunConfig& cfg, const std::vector<std::string>& needs) {
  std::vector<std::string> problems;
  for (const auto& key : needs) {
    if (key == "seed" && !cfg.seed) problems.push_back("missing required key 'seed' (use --seed)");
    if (key == "checkpoint") {
      if (cfg.checkpoint.empty()) {
        problems.push_back("missing required key 'checkpoint'");
      } else if (!std::filesystem::exists(cfg.checkpoint)) {
        problems.push_back("checkpoint: file " + cfg.checkpoint + " does not exist");
      }
    }
    if (key == "dataset" && !is_builtin_dataset(cfg.dataset) && !std::filesystem::exists(cfg.dataset)) {
      problems.push_back("dataset: '" + cfg.dataset + "' is neither a builtin dataset nor an existing file");
    }
    if (key == "reference" && !is_builtin_dataset(cfg.reference) && !std::filesystem::exists(cfg.reference)) {
      problems.push_back("reference: '" + cfg.reference + "' is neither a builtin dataset nor an existing file");
    }
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

std::string resolved_text(const RunConfig& cfg) {
  std::string out;
  for (const auto& k : table()) {
    const std::string v = k.get(cfg);
    if (v.empty()) {
      out += "# " + k.info.name + " =\n";
    } else {
      out += k.info.name + " = " + v + '\n';
    }
  }
  return out;
}

}  // namespace ffgen::cli
