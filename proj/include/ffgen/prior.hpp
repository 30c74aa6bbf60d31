#pragma once

#include <span>
#include <string_view>

#include "ffgen/rng.hpp"

namespace ffgen::sampler {

enum class PriorKind { PfgmRadial, StandardGaussian, UniformBall };

std::string_view to_string(PriorKind kind);
PriorKind parse_prior_kind(std::string_view name);

// Terminal prior d_T and the perturbation parameters of the radial sampler.
//   sigma        scale of the Gaussian draws (eps_x, eps_t)
//   tau          exponential growth rate of the (1 + tau)^m factor
//   max_exponent upper bound M of m ~ U[0, M]
//   bound        upper bound T of the uniform draws of the literal radial variant
//   radius       UniformBall radius
struct PriorSpec {
  PriorKind kind = PriorKind::StandardGaussian;
  double sigma = 1.0;
  double tau = 0.0;
  double max_exponent = 0.0;
  double bound = 1.0;
  double radius = 1.0;

  void validate() const;
};

// log d_T(x). Returns -inf outside the support.
double log_density(const PriorSpec& prior, std::span<const double> x);

// One draw from d_T into `out`.
void sample(const PriorSpec& prior, Stream& rng, std::span<double> out);

// Normalisation of the multivariate Cauchy law x = eps_x / |eps_t|, i.e.
// Gamma((d+1)/2) / pi^((d+1)/2).
double cauchy_normalizer(std::size_t d);

}  // namespace ffgen::sampler
