#include "ffgen/trajectory.hpp"

#include <cmath>
#include <string>

#include "ffgen/errors.hpp"

namespace ffgen::trajectory {

std::string_view to_string(Family family) {
  switch (family) {
    case Family::PoissonIsotropic: return "poisson";
    case Family::Linear: return "linear";
    case Family::GaussianBridge: return "gaussian_bridge";
    case Family::Curve: return "curve";
    case Family::SuperposedLinear: return "superposed_linear";
  }
  return "unknown";
}

Family parse_family(std::string_view name) {
  if (name == "poisson") return Family::PoissonIsotropic;
  if (name == "linear") return Family::Linear;
  if (name == "gaussian_bridge") return Family::GaussianBridge;
  if (name == "curve") return Family::Curve;
  if (name == "superposed_linear") return Family::SuperposedLinear;
  throw InvalidInput("unknown family '" + std::string(name) +
                     "' (valid: poisson, linear, gaussian_bridge, curve, superposed_linear)");
}

GaussianSchedule GaussianSchedule::linear(double sigma_min, double sigma_max, double horizon) {
  const double slope = (sigma_max - sigma_min) / horizon;
  return {
      [horizon](double t) { return 1.0 - t / horizon; },
      [horizon](double) { return -1.0 / horizon; },
      [sigma_min, slope](double t) { return sigma_min + slope * t; },
      [slope](double) { return slope; },
  };
}

GaussianSchedule TrajectorySpec::bridge_schedule() const {
  if (schedule) return *schedule;
  return GaussianSchedule::linear(sigma_min, sigma_max, horizon);
}

void TrajectorySpec::validate() const {
  if (dim == 0) throw InvalidInput("trajectory: dimension must be >= 1");
  if (!(horizon > 0)) throw InvalidInput("trajectory: horizon must be > 0");
  if (!(t_min > 0)) throw InvalidInput("trajectory: t_min must be > 0");
  if (!(t_min < horizon)) throw InvalidInput("trajectory: t_min must be < horizon");
  if (!(curve_exponent >= 1)) throw InvalidInput("trajectory: curve_exponent must be >= 1");
  if (overlap_count < 1) throw InvalidInput("trajectory: overlap_count must be >= 1");
  prior.validate();
  if (family == Family::GaussianBridge) {
    if (!schedule && !(sigma_min >= 0 && sigma_max > sigma_min)) {
      throw InvalidInput("trajectory: need 0 <= sigma_min < sigma_max");
    }
    const auto sched = bridge_schedule();
    constexpr int kProbe = 256;
    double prev = sched.sigma(t_min);
    if (!(prev > 0)) throw InvalidInput("trajectory: sigma(t_min) must be > 0");
    for (int i = 1; i <= kProbe; ++i) {
      const double t = t_min + (horizon - t_min) * i / kProbe;
      const double cur = sched.sigma(t);
      if (!(cur > prev)) throw InvalidInput("trajectory: sigma(t) must be strictly increasing on [t_min, T]");
      prev = cur;
    }
  }
  if (family == Family::SuperposedLinear && prior.kind != sampler::PriorKind::StandardGaussian) {
    throw InvalidInput("trajectory: superposed_linear requires a standard_gaussian terminal prior");
  }
}

std::size_t endpoint_count(const TrajectorySpec& spec) {
  return spec.family == Family::SuperposedLinear ? spec.overlap_count : 1;
}

void check_anchors(const TrajectorySpec& spec, const AnchorSet& anchors) {
  if (anchors.x0.size() != spec.dim) {
    throw InvalidInput("trajectory: x0 has dimension " + std::to_string(anchors.x0.size()) + ", expected " +
                       std::to_string(spec.dim));
  }
  if (anchors.endpoints.size() != endpoint_count(spec)) {
    throw InvalidInput("trajectory: expected " + std::to_string(endpoint_count(spec)) + " endpoint(s), got " +
                       std::to_string(anchors.endpoints.size()));
  }
  for (const auto& e : anchors.endpoints) {
    if (e.size() != spec.dim) throw InvalidInput("trajectory: endpoint dimension mismatch");
  }
}

namespace {

void check_position_time(const TrajectorySpec& spec, double t) {
  if (!(t >= 0 && t <= spec.horizon)) {
    throw InvalidInput("trajectory: t = " + std::to_string(t) + " outside [0, T]");
  }
}

void check_velocity_time(const TrajectorySpec& spec, double t) {
  if (t < spec.t_min) {
    throw SingularityError("trajectory: t = " + std::to_string(t) + " below t_min = " + std::to_string(spec.t_min));
  }
  if (t > spec.horizon) throw InvalidInput("trajectory: t above horizon");
}

}  // namespace

Vec position(const TrajectorySpec& spec, const AnchorSet& anchors, double t) {
  check_anchors(spec, anchors);
  check_position_time(spec, t);
  const double s = t / spec.horizon;
  const auto& x0 = anchors.x0;
  Vec out(spec.dim);
  switch (spec.family) {
    case Family::PoissonIsotropic:
    case Family::Linear:
    case Family::Curve: {
      const double g = spec.family == Family::Curve ? std::pow(s, spec.curve_exponent) : s;
      const auto& e = anchors.endpoints.front();
      for (std::size_t k = 0; k < spec.dim; ++k) out[k] = x0[k] + (e[k] - x0[k]) * g;
      break;
    }
    case Family::GaussianBridge: {
      const auto sched = spec.bridge_schedule();
      const double alpha = sched.mean_scale(t), sigma = sched.sigma(t);
      const auto& e = anchors.endpoints.front();
      for (std::size_t k = 0; k < spec.dim; ++k) out[k] = alpha * x0[k] + sigma * e[k];
      break;
    }
    case Family::SuperposedLinear: {
      // x0 + sum_i (e_i - e_{i-1}) s^i with e_0 = x0.
      out = x0;
      double power = 1.0;
      for (std::size_t i = 0; i < anchors.endpoints.size(); ++i) {
        power *= s;
        const auto& cur = anchors.endpoints[i];
        const auto& prev = i == 0 ? x0 : anchors.endpoints[i - 1];
        for (std::size_t k = 0; k < spec.dim; ++k) out[k] += (cur[k] - prev[k]) * power;
      }
      break;
    }
  }
  return out;
}

Vec velocity(const TrajectorySpec& spec, const AnchorSet& anchors, double t) {
  check_anchors(spec, anchors);
  check_velocity_time(spec, t);
  const double T = spec.horizon;
  const double s = t / T;
  const auto& x0 = anchors.x0;
  Vec out(spec.dim, 0.0);
  switch (spec.family) {
    case Family::PoissonIsotropic:
    case Family::Linear:
    case Family::Curve: {
      const double m = spec.family == Family::Curve ? spec.curve_exponent : 1.0;
      const double rate = m * std::pow(s, m - 1.0) / T;
      const auto& e = anchors.endpoints.front();
      for (std::size_t k = 0; k < spec.dim; ++k) out[k] = (e[k] - x0[k]) * rate;
      break;
    }
    case Family::GaussianBridge: {
      const auto sched = spec.bridge_schedule();
      const double alpha_rate = sched.mean_scale_rate(t), sigma_rate = sched.sigma_rate(t);
      const auto& e = anchors.endpoints.front();
      for (std::size_t k = 0; k < spec.dim; ++k) out[k] = alpha_rate * x0[k] + sigma_rate * e[k];
      break;
    }
    case Family::SuperposedLinear: {
      double power = 1.0 / T;  // s^(i-1) / T
      for (std::size_t i = 0; i < anchors.endpoints.size(); ++i) {
        const auto& cur = anchors.endpoints[i];
        const auto& prev = i == 0 ? x0 : anchors.endpoints[i - 1];
        const double coeff = static_cast<double>(i + 1) * power;
        for (std::size_t k = 0; k < spec.dim; ++k) out[k] += (cur[k] - prev[k]) * coeff;
        power *= s;
      }
      break;
    }
  }
  return out;
}

double superposed_variance(std::size_t overlap_count, double s) {
  double inner = 0.0, p = 1.0;
  for (std::size_t i = 1; i < overlap_count; ++i) {
    p *= s * s;
    inner += p;
  }
  const double last = std::pow(s, 2.0 * static_cast<double>(overlap_count));
  return (1.0 - s) * (1.0 - s) * inner + last;
}

double superposed_variance_rate(std::size_t overlap_count, double s) {
  double inner = 0.0, inner_rate = 0.0;
  for (std::size_t i = 1; i < overlap_count; ++i) {
    const double k = 2.0 * static_cast<double>(i);
    inner += std::pow(s, k);
    inner_rate += k * std::pow(s, k - 1.0);
  }
  const double n2 = 2.0 * static_cast<double>(overlap_count);
  return -2.0 * (1.0 - s) * inner + (1.0 - s) * (1.0 - s) * inner_rate + n2 * std::pow(s, n2 - 1.0);
}

KernelFrame make_frame(const TrajectorySpec& spec, double t) {
  check_velocity_time(spec, t);
  const double T = spec.horizon;
  const double s = t / T;
  const auto d = static_cast<double>(spec.dim);
  KernelFrame f;
  f.t = t;
  switch (spec.family) {
    case Family::PoissonIsotropic:
      f.poisson = true;
      f.log_amplitude = std::log(spec.poisson_amplitude);
      f.exponent = 0.5 * (d + 1.0);
      f.u = 1.0 / t;
      f.w = -1.0 / t;
      break;
    case Family::Linear:
    case Family::Curve: {
      const double m = spec.family == Family::Curve ? spec.curve_exponent : 1.0;
      const double g = std::pow(s, m);
      f.a = 1.0 / g;
      f.b = 1.0 - 1.0 / g;
      f.log_jacobian = -d * m * std::log(s);
      f.u = m / t;
      f.w = -m / t;
      break;
    }
    case Family::GaussianBridge:
    case Family::SuperposedLinear: {
      double alpha, alpha_rate, sigma, sigma_rate;
      if (spec.family == Family::GaussianBridge) {
        const auto sched = spec.bridge_schedule();
        alpha = sched.mean_scale(t);
        alpha_rate = sched.mean_scale_rate(t);
        sigma = sched.sigma(t);
        sigma_rate = sched.sigma_rate(t);
      } else {
        alpha = 1.0 - s;
        alpha_rate = -1.0 / T;
        sigma = std::sqrt(superposed_variance(spec.overlap_count, s));
        sigma_rate = superposed_variance_rate(spec.overlap_count, s) / (2.0 * sigma * T);
      }
      f.a = 1.0 / sigma;
      f.b = -alpha / sigma;
      f.log_jacobian = -d * std::log(sigma);
      f.u = sigma_rate / sigma;
      f.w = alpha_rate - sigma_rate * alpha / sigma;
      break;
    }
  }
  return f;
}

double log_conditional_kernel(const TrajectorySpec& spec, const KernelFrame& frame, std::span<const double> x0,
                              std::span<const double> xt) {
  const std::size_t d = xt.size();
  if (frame.poisson) {
    double r2 = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double diff = xt[k] - x0[k];
      r2 += diff * diff;
    }
    return frame.log_amplitude + std::log(frame.t) - frame.exponent * std::log(frame.t * frame.t + r2);
  }
  // Small fixed-size buffer keeps the oracle loop allocation free.
  constexpr std::size_t kInline = 16;
  double inline_buf[kInline];
  std::vector<double> heap;
  double* y = inline_buf;
  if (d > kInline) {
    heap.resize(d);
    y = heap.data();
  }
  for (std::size_t k = 0; k < d; ++k) y[k] = frame.a * xt[k] + frame.b * x0[k];
  return sampler::log_density(spec.prior, {y, d}) + frame.log_jacobian;
}

double log_conditional_kernel(const TrajectorySpec& spec, std::span<const double> x0, std::span<const double> xt,
                              double t) {
  if (x0.size() != spec.dim || xt.size() != spec.dim) throw InvalidInput("conditional_kernel: dimension mismatch");
  return log_conditional_kernel(spec, make_frame(spec, t), x0, xt);
}

double conditional_kernel(const TrajectorySpec& spec, std::span<const double> x0, std::span<const double> xt,
                          double t) {
  return std::exp(log_conditional_kernel(spec, x0, xt, t));
}

void conditional_velocity(const KernelFrame& frame, std::span<const double> x0, std::span<const double> xt,
                          std::span<double> out) {
  for (std::size_t k = 0; k < xt.size(); ++k) out[k] = frame.u * xt[k] + frame.w * x0[k];
}

Vec conditional_velocity(const TrajectorySpec& spec, std::span<const double> x0, std::span<const double> xt,
                         double t) {
  if (x0.size() != spec.dim || xt.size() != spec.dim) throw InvalidInput("conditional_velocity: dimension mismatch");
  Vec out(spec.dim);
  conditional_velocity(make_frame(spec, t), x0, xt, out);
  return out;
}

Vec poisson_kernel_full(std::size_t d, double amplitude, double t, std::span<const double> xt,
                        std::span<const double> x0) {
  if (xt.size() != d || x0.size() != d) throw InvalidInput("poisson_kernel_full: dimension mismatch");
  double r2 = t * t;
  for (std::size_t k = 0; k < d; ++k) r2 += (xt[k] - x0[k]) * (xt[k] - x0[k]);
  if (r2 == 0.0) throw SingularityError("poisson_kernel_full: evaluated at the source point");
  const double scale = amplitude * std::pow(r2, -0.5 * static_cast<double>(d + 1));
  Vec out(d + 1);
  out[0] = scale * t;
  for (std::size_t k = 0; k < d; ++k) out[k + 1] = scale * (xt[k] - x0[k]);
  return out;
}

}  // namespace ffgen::trajectory
