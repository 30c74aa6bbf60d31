#include "ffgen/sampler.hpp"

#include <cmath>

#include "ffgen/errors.hpp"

namespace ffgen::sampler {

using trajectory::Family;

Vec sample_unit_sphere(std::size_t d, Stream& rng) {
  if (d == 0) throw InvalidInput("sample_unit_sphere: d must be >= 1");
  if (d == 1) return {rng.normal() < 0 ? -1.0 : 1.0};
  Vec u(d);
  double norm2 = 0.0;
  while (norm2 == 0.0) {
    norm2 = 0.0;
    for (double& v : u) {
      v = rng.normal();
      norm2 += v * v;
    }
  }
  const double inv = 1.0 / std::sqrt(norm2);
  for (double& v : u) v *= inv;
  return u;
}

namespace {

RadialDraw radial_draw(std::span<const double> x0, double radius, double t, Stream& rng) {
  const Vec u = sample_unit_sphere(x0.size(), rng);
  RadialDraw out;
  out.xt.resize(x0.size());
  for (std::size_t k = 0; k < x0.size(); ++k) out.xt[k] = x0[k] + radius * u[k];
  out.t = t;
  return out;
}

}  // namespace

RadialDraw sample_pfgm(std::span<const double> x0, const PriorSpec& prior, Stream& rng) {
  double ex2 = 0.0;
  for (std::size_t k = 0; k < x0.size(); ++k) {
    const double e = prior.sigma * rng.normal();
    ex2 += e * e;
  }
  const double et = prior.sigma * rng.normal();
  const double m = prior.max_exponent > 0 ? rng.uniform(0.0, prior.max_exponent) : 0.0;
  const double growth = std::pow(1.0 + prior.tau, m);
  return radial_draw(x0, std::sqrt(ex2) * growth, std::abs(et) * growth, rng);
}

RadialDraw sample_uniform_radial(std::span<const double> x0, const PriorSpec& prior, double exponent, Stream& rng) {
  double ex2 = 0.0;
  for (std::size_t k = 0; k < x0.size(); ++k) {
    const double e = rng.uniform(0.0, prior.bound);
    ex2 += e * e;
  }
  const double et = rng.uniform(0.0, prior.bound);
  const double growth = std::pow(1.0 + prior.tau, exponent);
  return radial_draw(x0, std::sqrt(ex2) * growth, et * growth, rng);
}

TrainingPair sample_linear_or_curve(std::span<const double> x0, const trajectory::TrajectorySpec& spec, Stream& rng,
                                    std::optional<double> fixed_t) {
  if (spec.family == Family::PoissonIsotropic) {
    throw InvalidInput("sample_linear_or_curve: Poisson family uses sample_pfgm");
  }
  if (x0.size() != spec.dim) throw InvalidInput("sample_linear_or_curve: x0 dimension mismatch");
  TrainingPair pair;
  pair.x0.assign(x0.begin(), x0.end());
  pair.t = fixed_t ? *fixed_t : rng.uniform(spec.t_min, spec.horizon);
  pair.anchors.x0 = pair.x0;
  const std::size_t count = trajectory::endpoint_count(spec);
  pair.anchors.endpoints.assign(count, Vec(spec.dim));
  for (auto& e : pair.anchors.endpoints) sample(spec.prior, rng, e);
  pair.xt = trajectory::position(spec, pair.anchors, pair.t);
  pair.target = trajectory::velocity(spec, pair.anchors, pair.t);
  return pair;
}

TrainingPair sample_training_pair(std::span<const double> x0, const trajectory::TrajectorySpec& spec, Stream& rng) {
  if (spec.family != Family::PoissonIsotropic) return sample_linear_or_curve(x0, spec, rng);
  constexpr int kMaxTries = 10000;
  for (int attempt = 0; attempt < kMaxTries; ++attempt) {
    RadialDraw draw = sample_pfgm(x0, spec.prior, rng);
    if (draw.t < spec.t_min || draw.t > spec.horizon) continue;
    TrainingPair pair;
    pair.x0.assign(x0.begin(), x0.end());
    pair.t = draw.t;
    pair.xt = std::move(draw.xt);
    // The straight field line through x_t, reaching its endpoint at t = T.
    Vec end(spec.dim);
    for (std::size_t k = 0; k < spec.dim; ++k) end[k] = x0[k] + (pair.xt[k] - x0[k]) * spec.horizon / pair.t;
    pair.anchors = {pair.x0, {std::move(end)}};
    pair.target = trajectory::conditional_velocity(spec, pair.x0, pair.xt, pair.t);
    return pair;
  }
  throw NonConvergence("sample_training_pair: radial sampler never produced t in [t_min, T]; check sigma/tau/M");
}

double radial_density(double r, std::size_t d) {
  const auto dd = static_cast<double>(d);
  return std::pow(r, dd - 1.0) * std::pow(1.0 + r * r, -0.5 * (dd + 1.0));
}

void sample_terminal(const trajectory::TrajectorySpec& spec, Stream& rng, std::span<double> out) {
  sample(spec.prior, rng, out);
  if (spec.family == Family::PoissonIsotropic && spec.prior.kind == PriorKind::PfgmRadial) {
    for (double& v : out) v *= spec.horizon;
  }
}

}  // namespace ffgen::sampler
