#include "ffgen/ode.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "ffgen/parallel.hpp"
#include "ffgen/rng.hpp"
#include "ffgen/sampler.hpp"

namespace ffgen::ode {

std::string_view to_string(Method method) {
  switch (method) {
    case Method::Euler: return "euler";
    case Method::RK4: return "rk4";
    case Method::RK45: return "rk45";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  if (name == "euler") return Method::Euler;
  if (name == "rk4") return Method::RK4;
  if (name == "rk45") return Method::RK45;
  throw InvalidInput("unknown solver '" + std::string(name) + "' (valid: euler, rk4, rk45)");
}

void SolverConfig::validate() const {
  if (method == Method::RK45) {
    if (!(rtol > 0 && atol > 0)) throw InvalidInput("solver: rtol and atol must be > 0");
  } else if (!(step > 0)) {
    throw InvalidInput("solver: step must be > 0");
  }
  if (max_steps < 1) throw InvalidInput("solver: max_steps must be >= 1");
  if (t_start == t_end) throw InvalidInput("solver: t_start must differ from t_end");
  if (!std::isfinite(t_start) || !std::isfinite(t_end)) throw InvalidInput("solver: non-finite time bounds");
}

SolverConfig SolverConfig::reversed() const {
  SolverConfig r = *this;
  std::swap(r.t_start, r.t_end);
  return r;
}

Vec TrajectoryRecord::final_state() const {
  const auto last = states[states.size() - 1];
  return {last.begin(), last.end()};
}

namespace {

class Integrator {
 public:
  Integrator(const field::VelocityField& field, const SolverConfig& cfg, bool record_path)
      : field_(field), cfg_(cfg), record_path_(record_path), d_(field.dim()) {
    for (auto& k : k_) k.resize(d_);
    tmp_.resize(d_);
    record_.states = PointSet(d_);
  }

  TrajectoryRecord run(std::span<const double> x_start) {
    if (x_start.size() != d_) throw InvalidInput("integrate: start state dimension mismatch");
    x_.assign(x_start.begin(), x_start.end());
    t_ = cfg_.t_start;
    push();
    if (cfg_.method == Method::RK45) {
      adaptive();
    } else {
      fixed();
    }
    if (!record_path_) push();
    return std::move(record_);
  }

 private:
  void eval(double t, const std::vector<double>& x, std::vector<double>& out) {
    field_.evaluate(t, x, out);
    ++record_.nfe;
    for (double v : out) {
      if (!std::isfinite(v)) throw NumericFault("integrate: non-finite field value at t = " + std::to_string(t));
    }
  }

  void push() {
    record_.times.push_back(t_);
    record_.states.push_back(x_);
  }

  void commit(double t) {
    for (double v : x_) {
      if (!std::isfinite(v)) throw NumericFault("integrate: non-finite state at t = " + std::to_string(t));
    }
    t_ = t;
    if (record_path_) push();
  }

  void fixed() {
    const double span = cfg_.t_end - cfg_.t_start;
    const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(std::abs(span) / cfg_.step - 1e-9)));
    if (steps > cfg_.max_steps) {
      throw StepLimitExceeded("integrate: " + std::to_string(steps) + " fixed steps exceed max_steps", record_);
    }
    const double h = span / static_cast<double>(steps);
    for (std::size_t s = 0; s < steps; ++s) {
      const double t0 = cfg_.t_start + h * static_cast<double>(s);
      const double t1 = s + 1 == steps ? cfg_.t_end : cfg_.t_start + h * static_cast<double>(s + 1);
      if (cfg_.method == Method::Euler) {
        eval(t0, x_, k_[0]);
        for (std::size_t i = 0; i < d_; ++i) x_[i] += (t1 - t0) * k_[0][i];
      } else {
        rk4_step(t0, t1);
      }
      ++record_.accepted;
      commit(t1);
    }
  }

  void rk4_step(double t, double t1) {
    const double h = t1 - t;
    eval(t, x_, k_[0]);
    for (std::size_t i = 0; i < d_; ++i) tmp_[i] = x_[i] + 0.5 * h * k_[0][i];
    eval(t + 0.5 * h, tmp_, k_[1]);
    for (std::size_t i = 0; i < d_; ++i) tmp_[i] = x_[i] + 0.5 * h * k_[1][i];
    eval(t + 0.5 * h, tmp_, k_[2]);
    for (std::size_t i = 0; i < d_; ++i) tmp_[i] = x_[i] + h * k_[2][i];
    eval(t1, tmp_, k_[3]);
    for (std::size_t i = 0; i < d_; ++i) {
      x_[i] += h / 6.0 * (k_[0][i] + 2.0 * k_[1][i] + 2.0 * k_[2][i] + k_[3][i]);
    }
  }

  void adaptive() {
    // Dormand-Prince 5(4).
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                            b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                            e6 = 22.0 / 525, e7 = -1.0 / 40;

    const double span = cfg_.t_end - cfg_.t_start;
    const double dir = span > 0 ? 1.0 : -1.0;
    double h = dir * 1e-2 * std::abs(span);
    std::vector<double> xn(d_);
    eval(t_, x_, k_[0]);
    std::size_t attempts = 0;
    while (dir * (cfg_.t_end - t_) > 0) {
      if (attempts >= cfg_.max_steps) {
        throw StepLimitExceeded("integrate: adaptive step count exceeded max_steps = " +
                                    std::to_string(cfg_.max_steps),
                                record_);
      }
      ++attempts;
      const double remaining = cfg_.t_end - t_;
      bool last = false;
      if (dir * (remaining - h) <= 0) {
        h = remaining;
        last = true;
      }
      const double t = t_;
      for (std::size_t i = 0; i < d_; ++i) tmp_[i] = x_[i] + h * a21 * k_[0][i];
      eval(t + c2 * h, tmp_, k_[1]);
      for (std::size_t i = 0; i < d_; ++i) tmp_[i] = x_[i] + h * (a31 * k_[0][i] + a32 * k_[1][i]);
      eval(t + c3 * h, tmp_, k_[2]);
      for (std::size_t i = 0; i < d_; ++i) {
        tmp_[i] = x_[i] + h * (a41 * k_[0][i] + a42 * k_[1][i] + a43 * k_[2][i]);
      }
      eval(t + c4 * h, tmp_, k_[3]);
      for (std::size_t i = 0; i < d_; ++i) {
        tmp_[i] = x_[i] + h * (a51 * k_[0][i] + a52 * k_[1][i] + a53 * k_[2][i] + a54 * k_[3][i]);
      }
      eval(t + c5 * h, tmp_, k_[4]);
      for (std::size_t i = 0; i < d_; ++i) {
        tmp_[i] = x_[i] + h * (a61 * k_[0][i] + a62 * k_[1][i] + a63 * k_[2][i] + a64 * k_[3][i] + a65 * k_[4][i]);
      }
      const double t_next = last ? cfg_.t_end : t + h;
      eval(t_next, tmp_, k_[5]);
      for (std::size_t i = 0; i < d_; ++i) {
        xn[i] = x_[i] + h * (b1 * k_[0][i] + b3 * k_[2][i] + b4 * k_[3][i] + b5 * k_[4][i] + b6 * k_[5][i]);
      }
      eval(t_next, xn, k_[6]);

      double err2 = 0.0;
      for (std::size_t i = 0; i < d_; ++i) {
        const double e = h * (e1 * k_[0][i] + e3 * k_[2][i] + e4 * k_[3][i] + e5 * k_[4][i] + e6 * k_[5][i] +
                              e7 * k_[6][i]);
        const double scale = cfg_.atol + cfg_.rtol * std::max(std::abs(x_[i]), std::abs(xn[i]));
        err2 += (e / scale) * (e / scale);
      }
      const double err = std::sqrt(err2 / static_cast<double>(d_));
      const double factor = std::clamp(err == 0.0 ? 5.0 : 0.9 * std::pow(err, -0.2), 0.2, 5.0);
      if (!std::isfinite(err)) throw NumericFault("integrate: non-finite error estimate");
      if (err <= 1.0) {
        x_.swap(xn);
        k_[0].swap(k_[6]);
        ++record_.accepted;
        commit(t_next);
      } else {
        ++record_.rejected;
      }
      h *= factor;
    }
  }

  const field::VelocityField& field_;
  const SolverConfig& cfg_;
  bool record_path_;
  std::size_t d_;
  std::array<std::vector<double>, 7> k_;
  std::vector<double> tmp_;
  std::vector<double> x_;
  double t_ = 0.0;
  TrajectoryRecord record_;
};

}  // namespace

TrajectoryRecord integrate(const field::VelocityField& field, std::span<const double> x_start,
                           const SolverConfig& cfg, bool record_path) {
  cfg.validate();
  return Integrator(field, cfg, record_path).run(x_start);
}

double roundtrip_error(const field::VelocityField& field, const PointSet& batch, const SolverConfig& forward,
                       unsigned threads) {
  if (batch.empty()) return 0.0;
  const SolverConfig backward = forward.reversed();
  std::vector<double> errors(batch.size());
  parallel_for(batch.size(), threads, [&](std::size_t i) {
    const auto there = integrate(field, batch[i], forward, false).final_state();
    const auto back = integrate(field, there, backward, false).final_state();
    double e2 = 0.0;
    for (std::size_t k = 0; k < back.size(); ++k) e2 += (back[k] - batch[i][k]) * (back[k] - batch[i][k]);
    errors[i] = std::sqrt(e2);
  });
  double total = 0.0;
  for (double e : errors) total += e;
  return total / static_cast<double>(errors.size());
}

GenerationResult generate(const field::VelocityField& field, const trajectory::TrajectorySpec& spec, std::size_t n,
                          const SolverConfig& cfg, std::uint64_t seed, unsigned threads) {
  if (field.dim() != spec.dim) throw InvalidInput("generate: field and spec dimensions differ");
  GenerationResult result;
  result.samples = PointSet(spec.dim, n);
  result.per_sample_nfe.assign(n, 0);
  parallel_for(n, threads, [&](std::size_t i) {
    Stream rng(seed, "generate", i);
    Vec start(spec.dim);
    sampler::sample_terminal(spec, rng, start);
    const auto record = integrate(field, start, cfg, false);
    const auto last = record.states[record.states.size() - 1];
    std::copy(last.begin(), last.end(), result.samples[i].begin());
    result.per_sample_nfe[i] = record.nfe;
  });
  for (std::size_t v : result.per_sample_nfe) result.nfe += v;
  return result;
}

}  // namespace ffgen::ode
