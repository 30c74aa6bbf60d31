#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "ffgen/point_set.hpp"
#include "ffgen/prior.hpp"

namespace ffgen::trajectory {

enum class Family { PoissonIsotropic, Linear, GaussianBridge, Curve, SuperposedLinear };

std::string_view to_string(Family family);
Family parse_family(std::string_view name);

// Gaussian-bridge schedules. The mean is mu_t(x0) = mean_scale(t) * x0; every
// function carries its time derivative so velocities stay closed form.
struct GaussianSchedule {
  std::function<double(double)> mean_scale;
  std::function<double(double)> mean_scale_rate;
  std::function<double(double)> sigma;
  std::function<double(double)> sigma_rate;

  // mean_scale = 1 - t/T, sigma = sigma_min + (sigma_max - sigma_min) t/T.
  static GaussianSchedule linear(double sigma_min, double sigma_max, double horizon);
};

struct TrajectorySpec {
  Family family = Family::Linear;
  std::size_t dim = 2;
  double horizon = 1.0;
  double t_min = 1e-3;
  double curve_exponent = 2.0;      // Curve
  std::size_t overlap_count = 1;    // SuperposedLinear
  double sigma_min = 0.01;          // GaussianBridge default schedule
  double sigma_max = 1.0;
  std::optional<GaussianSchedule> schedule;  // overrides the default bridge schedule
  double poisson_amplitude = 1.0;   // A in the isotropic kernel
  sampler::PriorSpec prior;         // terminal density d_T

  void validate() const;
  GaussianSchedule bridge_schedule() const;
};

// Data point plus the terminal anchors of one conditional path.
struct AnchorSet {
  Vec x0;
  std::vector<Vec> endpoints;
};

std::size_t endpoint_count(const TrajectorySpec& spec);
void check_anchors(const TrajectorySpec& spec, const AnchorSet& anchors);

Vec position(const TrajectorySpec& spec, const AnchorSet& anchors, double t);
Vec velocity(const TrajectorySpec& spec, const AnchorSet& anchors, double t);

// Per-time coefficients of the conditional law and conditional velocity.
// For every family the conditional density is either
//   d_T(y) * exp(log_jacobian) with y = a * x_t + b * x0     (density families), or
//   A t / (t^2 + |x_t - x0|^2)^((d+1)/2)                     (Poisson),
// and the velocity of the conditional flow through x_t is u * x_t + w * x0.
struct KernelFrame {
  bool poisson = false;
  double t = 0.0;
  double a = 1.0, b = 0.0;
  double log_jacobian = 0.0;
  double u = 0.0, w = 0.0;
  double log_amplitude = 0.0;
  double exponent = 0.0;  // (d+1)/2
};

KernelFrame make_frame(const TrajectorySpec& spec, double t);

double log_conditional_kernel(const TrajectorySpec& spec, const KernelFrame& frame,
                              std::span<const double> x0, std::span<const double> xt);
double log_conditional_kernel(const TrajectorySpec& spec, std::span<const double> x0,
                              std::span<const double> xt, double t);
double conditional_kernel(const TrajectorySpec& spec, std::span<const double> x0,
                          std::span<const double> xt, double t);

// E[dx/dt | x_t, x0]. Deterministic families return the velocity of the unique
// path through x_t; the superposed family averages over its free endpoints.
void conditional_velocity(const KernelFrame& frame, std::span<const double> x0,
                          std::span<const double> xt, std::span<double> out);
Vec conditional_velocity(const TrajectorySpec& spec, std::span<const double> x0,
                         std::span<const double> xt, double t);

// A (t, x_t - x0) / (t^2 + |x_t - x0|^2)^((d+1)/2), length d+1.
Vec poisson_kernel_full(std::size_t d, double amplitude, double t, std::span<const double> xt,
                        std::span<const double> x0);

// Variance factor of the superposed-linear marginal: x_t | x0 ~ N((1-s) x0, v(s) sigma^2).
double superposed_variance(std::size_t overlap_count, double s);
double superposed_variance_rate(std::size_t overlap_count, double s);

}  // namespace ffgen::trajectory
