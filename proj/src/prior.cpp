#include "ffgen/prior.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "ffgen/errors.hpp"

namespace ffgen::sampler {

std::string_view to_string(PriorKind kind) {
  switch (kind) {
    case PriorKind::PfgmRadial: return "pfgm_radial";
    case PriorKind::StandardGaussian: return "standard_gaussian";
    case PriorKind::UniformBall: return "uniform_ball";
  }
  return "unknown";
}

PriorKind parse_prior_kind(std::string_view name) {
  if (name == "pfgm_radial") return PriorKind::PfgmRadial;
  if (name == "standard_gaussian") return PriorKind::StandardGaussian;
  if (name == "uniform_ball") return PriorKind::UniformBall;
  throw InvalidInput("unknown prior '" + std::string(name) +
                     "' (valid: pfgm_radial, standard_gaussian, uniform_ball)");
}

void PriorSpec::validate() const {
  if (!(sigma > 0)) throw InvalidInput("prior: sigma must be > 0");
  if (!(tau >= 0)) throw InvalidInput("prior: tau must be >= 0");
  if (!(max_exponent >= 0)) throw InvalidInput("prior: max_exponent must be >= 0");
  if (!(bound > 0)) throw InvalidInput("prior: bound must be > 0");
  if (!(radius > 0)) throw InvalidInput("prior: radius must be > 0");
}

double cauchy_normalizer(std::size_t d) {
  const double half = 0.5 * static_cast<double>(d + 1);
  return std::exp(std::lgamma(half) - half * std::log(std::numbers::pi));
}

double log_density(const PriorSpec& prior, std::span<const double> x) {
  const auto d = static_cast<double>(x.size());
  double r2 = 0.0;
  for (double v : x) r2 += v * v;
  switch (prior.kind) {
    case PriorKind::StandardGaussian: {
      const double s2 = prior.sigma * prior.sigma;
      return -0.5 * r2 / s2 - 0.5 * d * std::log(2.0 * std::numbers::pi * s2);
    }
    case PriorKind::UniformBall: {
      if (r2 > prior.radius * prior.radius) return -std::numeric_limits<double>::infinity();
      // log(1 / volume of the d-ball)
      const double log_volume = 0.5 * d * std::log(std::numbers::pi) - std::lgamma(0.5 * d + 1.0) +
                                d * std::log(prior.radius);
      return -log_volume;
    }
    case PriorKind::PfgmRadial:
      // eps_x / |eps_t| is scale free in sigma.
      return std::log(cauchy_normalizer(x.size())) - 0.5 * (d + 1.0) * std::log1p(r2);
  }
  return -std::numeric_limits<double>::infinity();
}

void sample(const PriorSpec& prior, Stream& rng, std::span<double> out) {
  switch (prior.kind) {
    case PriorKind::StandardGaussian:
      for (double& v : out) v = prior.sigma * rng.normal();
      return;
    case PriorKind::UniformBall: {
      double r2 = 0.0;
      for (double& v : out) {
        v = rng.normal();
        r2 += v * v;
      }
      const double norm = std::sqrt(r2);
      const double radius = prior.radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(out.size()));
      for (double& v : out) v *= radius / norm;
      return;
    }
    case PriorKind::PfgmRadial: {
      for (double& v : out) v = rng.normal();
      double et = std::abs(rng.normal());
      while (et == 0.0) et = std::abs(rng.normal());
      for (double& v : out) v /= et;
      return;
    }
  }
}

}  // namespace ffgen::sampler
