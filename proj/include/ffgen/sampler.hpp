#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include "ffgen/point_set.hpp"
#include "ffgen/prior.hpp"
#include "ffgen/rng.hpp"
#include "ffgen/trajectory.hpp"

namespace ffgen::sampler {

// Uniform direction on the unit sphere in R^d (normalised Gaussian).
Vec sample_unit_sphere(std::size_t d, Stream& rng);

struct RadialDraw {
  Vec xt;
  double t = 0.0;
};

// x_t = x0 + |eps_x| (1+tau)^m u,  t = |eps_t| (1+tau)^m,
// (eps_x, eps_t) ~ N(0, sigma^2 I_{d+1}), m ~ U[0, M], u uniform on the sphere.
RadialDraw sample_pfgm(std::span<const double> x0, const PriorSpec& prior, Stream& rng);

// Literal uniform-radius variant: (eps_x, eps_t) components ~ U[0, bound] and the
// growth factor (1+tau)^n with a caller supplied exponent n (n = 0 for lines).
RadialDraw sample_uniform_radial(std::span<const double> x0, const PriorSpec& prior, double exponent, Stream& rng);

struct TrainingPair {
  Vec x0;
  trajectory::AnchorSet anchors;
  double t = 0.0;
  Vec xt;
  Vec target;  // conditional velocity at (x_t, t)
};

// Draws t ~ U[t_min, T] (or uses fixed_t), endpoints from d_T, and evaluates the
// conditional path. Not valid for the Poisson family.
TrainingPair sample_linear_or_curve(std::span<const double> x0, const trajectory::TrajectorySpec& spec, Stream& rng,
                                    std::optional<double> fixed_t = std::nullopt);

// Family dispatch: Poisson pairs come from sample_pfgm (rejecting t outside
// [t_min, T]), every other family from sample_linear_or_curve.
TrainingPair sample_training_pair(std::span<const double> x0, const trajectory::TrajectorySpec& spec, Stream& rng);

// Unnormalised law of r = |eps_x| / |eps_t|: r^(d-1) / (1 + r^2)^((d+1)/2).
double radial_density(double r, std::size_t d);

// Generation start state at t = T. Poisson: T * eps_x / |eps_t|; others: d_T.
void sample_terminal(const trajectory::TrajectorySpec& spec, Stream& rng, std::span<double> out);

}  // namespace ffgen::sampler
