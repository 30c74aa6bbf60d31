#include "ffgen/verify.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <numbers>

#include "ffgen/errors.hpp"
#include "ffgen/format.hpp"
#include "ffgen/parallel.hpp"
#include "ffgen/sampler.hpp"

namespace ffgen::verify {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Quad = boost::math::quadrature::gauss_kronrod<double, 61>;

// |x - x0|^2 in the shifted coordinates plus t^2, raised to -(d+1)/2, times t.
double time_component(double t, double r2, std::size_t d) {
  return t * std::pow(t * t + r2, -0.5 * static_cast<double>(d + 1));
}

double sphere_area(std::size_t d) {  // surface of the unit sphere in R^d
  const double h = 0.5 * static_cast<double>(d);
  return 2.0 * std::pow(std::numbers::pi, h) / std::tgamma(h);
}

}  // namespace

double analytic_amplitude(std::size_t d) {
  const double h = 0.5 * static_cast<double>(d + 1);
  return std::tgamma(h) / std::pow(std::numbers::pi, h);
}

NormalizationResult normalization_constant(std::size_t d, std::size_t budget, Stream& rng, double t,
                                           std::span<const double> x0, double rel_tol) {
  if (d < 1 || d > 16) throw InvalidInput("normalization_constant: d must be in [1, 16]");
  if (!(t > 0)) throw InvalidInput("normalization_constant: t must be > 0");
  if (!x0.empty() && x0.size() != d) throw InvalidInput("normalization_constant: x0 has the wrong dimension");
  if (budget == 0) throw InvalidInput("normalization_constant: budget must be >= 1");
  const Vec centre = x0.empty() ? Vec(d, 0.0) : Vec(x0.begin(), x0.end());
  NormalizationResult res;

  if (d <= 2) {
    res.quadrature = true;
    // Depth bound derived from the budget (61-point panels).
    const auto depth = static_cast<unsigned>(std::clamp(std::log2(std::max(1.0, budget / 61.0)), 3.0, 15.0));
    double err = 0.0;
    std::size_t calls = 0;
    if (d == 1) {
      res.integral = Quad::integrate(
          [&](double x) {
            ++calls;
            return time_component(t, (x - centre[0]) * (x - centre[0]), 1);
          },
          -kInf, kInf, depth, 1e-12, &err);
    } else {
      double inner_err_max = 0.0;
      res.integral = Quad::integrate(
          [&](double x) {
            const double dx2 = (x - centre[0]) * (x - centre[0]);
            double inner_err = 0.0;
            const double v = Quad::integrate(
                [&](double y) {
                  ++calls;
                  return time_component(t, dx2 + (y - centre[1]) * (y - centre[1]), 2);
                },
                -kInf, kInf, depth, 1e-12, &inner_err);
            inner_err_max = std::max(inner_err_max, inner_err);
            return v;
          },
          -kInf, kInf, depth, 1e-12, &err);
      err += inner_err_max;
    }
    res.evaluations = calls;
    res.amplitude = 1.0 / res.integral;
    res.std_error = std::max(err, 1e-12 * res.integral) / (res.integral * res.integral);
  } else {
    // x = x0 + r u, r ~ half-Cauchy(t), u uniform on the sphere; the weight
    // f(x) / q(x) is bounded, so the estimator has finite variance.
    const double area = sphere_area(d);
    double sum = 0.0, sum2 = 0.0;
    Vec x(d);
    for (std::size_t i = 0; i < budget; ++i) {
      const double r = t * std::tan(0.5 * std::numbers::pi * rng.uniform());
      const Vec u = sampler::sample_unit_sphere(d, rng);
      double r2 = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        x[k] = centre[k] + r * u[k];
        r2 += (x[k] - centre[k]) * (x[k] - centre[k]);
      }
      const double radial_q = 2.0 * t / (std::numbers::pi * (t * t + r * r));
      const double q = radial_q / (area * std::pow(r, static_cast<double>(d - 1)));
      const double w = q > 0 && std::isfinite(q) ? time_component(t, r2, d) / q : 0.0;
      sum += w;
      sum2 += w * w;
    }
    const double n = static_cast<double>(budget);
    const double mean = sum / n;
    const double var = std::max(0.0, sum2 / n - mean * mean);
    const double se = std::sqrt(var / n);
    res.evaluations = budget;
    res.integral = mean;
    res.amplitude = 1.0 / mean;
    res.std_error = se / (mean * mean);
  }
  if (!(res.std_error / res.amplitude <= rel_tol / 3.0)) {
    throw NonConvergence("normalization_constant: budget " + std::to_string(budget) +
                         " exhausted with relative error bar " + format_double(res.std_error / res.amplitude, 4));
  }
  return res;
}

DivergenceCheck check_divergence_free(std::size_t d, double amplitude, std::size_t n_points, Stream& rng, double h,
                                      std::optional<double> exponent) {
  if (d < 1) throw InvalidInput("check_divergence_free: d must be >= 1");
  if (!(h > 0)) throw InvalidInput("check_divergence_free: h must be > 0");
  const double p = exponent.value_or(static_cast<double>(d + 1));
  const bool native = !exponent || *exponent == static_cast<double>(d + 1);
  // Field component k at extended point z = (t, x).
  const auto field = [&](const Vec& z, const Vec& x0, Vec& out) {
    if (native) {
      out = trajectory::poisson_kernel_full(d, amplitude, z[0], std::span(z).subspan(1), x0);
      return;
    }
    double r2 = z[0] * z[0];
    for (std::size_t k = 0; k < d; ++k) r2 += (z[k + 1] - x0[k]) * (z[k + 1] - x0[k]);
    const double scale = amplitude * std::pow(r2, -0.5 * p);
    out.resize(d + 1);
    out[0] = scale * z[0];
    for (std::size_t k = 0; k < d; ++k) out[k + 1] = scale * (z[k + 1] - x0[k]);
  };

  DivergenceCheck res;
  res.points = n_points;
  Vec x0(d), z(d + 1), plus, minus, centre;
  for (std::size_t i = 0; i < n_points; ++i) {
    for (double& v : x0) v = rng.normal();
    const double radius = std::exp(std::log(0.1) + rng.uniform() * (std::log(10.0) - std::log(0.1)));
    Vec dir;
    do {
      dir = sampler::sample_unit_sphere(d + 1, rng);
    } while (std::abs(dir[0]) * radius <= 2.0 * h);
    z[0] = std::abs(dir[0]) * radius;
    for (std::size_t k = 0; k < d; ++k) z[k + 1] = x0[k] + radius * dir[k + 1];

    double div = 0.0;
    for (std::size_t k = 0; k <= d; ++k) {
      Vec zp = z, zm = z;
      zp[k] += h;
      zm[k] -= h;
      field(zp, x0, plus);
      field(zm, x0, minus);
      div += (plus[k] - minus[k]) / (2.0 * h);
    }
    field(z, x0, centre);
    double norm = 0.0;
    for (double v : centre) norm += v * v;
    const double r = std::abs(div) * radius / std::sqrt(norm);
    res.max_residual = std::max(res.max_residual, r);
    res.mean_residual += r / static_cast<double>(n_points);
  }
  return res;
}

ContinuityResult continuity_residual(const Density& density, const Velocity& velocity, std::size_t dim,
                                     std::span<const double> t_grid, const PointSet& x_points, double h,
                                     double t_max) {
  if (!(h > 0)) throw InvalidInput("continuity_residual: h must be > 0");
  if (x_points.dim() != dim) throw InvalidInput("continuity_residual: grid dimension mismatch");
  ContinuityResult res;
  Vec x(dim), f(dim);
  const auto flux = [&](double t, const Vec& at, std::size_t k) {
    velocity(t, at, f);
    return density(t, at) * f[k];
  };
  for (double t : t_grid) {
    for (std::size_t i = 0; i < x_points.size(); ++i) {
      std::copy(x_points[i].begin(), x_points[i].end(), x.begin());
      const double p = density(t, x);
      double dpdt;
      if (t + h <= t_max) {
        dpdt = (density(t + h, x) - density(t - h, x)) / (2.0 * h);
      } else {
        dpdt = (3.0 * p - 4.0 * density(t - h, x) + density(t - 2.0 * h, x)) / (2.0 * h);
      }
      double div = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        Vec xp = x, xm = x;
        xp[k] += h;
        xm[k] -= h;
        div += (flux(t, xp, k) - flux(t, xm, k)) / (2.0 * h);
      }
      res.max_residual = std::max(res.max_residual, std::abs(dpdt + div));
      res.max_density = std::max(res.max_density, p);
    }
  }
  res.normalized = res.max_density > 0 ? res.max_residual / res.max_density : 0.0;
  return res;
}

ContinuityResult continuity_residual(const trajectory::TrajectorySpec& spec, std::span<const double> x0,
                                     std::span<const double> t_grid, const PointSet& x_points, double h,
                                     double velocity_scale) {
  using trajectory::Family;
  if (spec.family != Family::Linear && spec.family != Family::GaussianBridge) {
    throw InvalidInput("continuity_residual: needs a Linear or GaussianBridge spec");
  }
  if (spec.prior.kind != sampler::PriorKind::StandardGaussian) {
    throw InvalidInput("continuity_residual: needs a Gaussian terminal density");
  }
  if (x0.size() != spec.dim) throw InvalidInput("continuity_residual: x0 has the wrong dimension");
  if (!(h > 0)) throw InvalidInput("continuity_residual: h must be > 0");
  for (double t : t_grid) {
    if (t - 2.0 * h < spec.t_min || t > spec.horizon) {
      throw InvalidInput("continuity_residual: grid time " + format_double(t, 6) + " touches t < t_min");
    }
  }
  const Vec source(x0.begin(), x0.end());
  const Density density = [&](double t, std::span<const double> x) {
    return trajectory::conditional_kernel(spec, source, x, t);
  };
  const Velocity velocity = [&](double t, std::span<const double> x, std::span<double> out) {
    trajectory::conditional_velocity(trajectory::make_frame(spec, t), source, x, out);
    for (double& v : out) v *= velocity_scale;
  };
  return continuity_residual(density, velocity, spec.dim, t_grid, x_points, h, spec.horizon);
}

double radial_cdf(double r, std::size_t d) {
  if (d < 1) throw InvalidInput("radial_cdf: d must be >= 1");
  if (r <= 0) return 0.0;
  if (!std::isfinite(r)) return 1.0;
  // r = tan(theta) turns the law into sin^(d-1)(theta) on [0, pi/2].
  const auto integrand = [d](double th) { return std::pow(std::sin(th), static_cast<double>(d - 1)); };
  const double total = Quad::integrate(integrand, 0.0, 0.5 * std::numbers::pi, 10, 1e-13);
  const double part = Quad::integrate(integrand, 0.0, std::atan(r), 10, 1e-13);
  return std::clamp(part / total, 0.0, 1.0);
}

double check_radial_law(std::size_t d, std::size_t n, Stream& rng, double sigma, std::optional<std::size_t> law_dim) {
  if (d < 1) throw InvalidInput("check_radial_law: d must be >= 1");
  if (n < 10000) throw InvalidInput("check_radial_law: n must be >= 10^4");
  if (!(sigma > 0)) throw InvalidInput("check_radial_law: sigma must be > 0");
  std::vector<double> ratios(n);
  for (std::size_t i = 0; i < n; ++i) {
    double sx = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double e = sigma * rng.normal();
      sx += e * e;
    }
    const double et = sigma * rng.normal();
    ratios[i] = std::sqrt(sx) / std::abs(et);
  }
  std::sort(ratios.begin(), ratios.end());
  const std::size_t ld = law_dim.value_or(d);
  const double nn = static_cast<double>(n);
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = radial_cdf(ratios[i], ld);
    worst = std::max({worst, static_cast<double>(i + 1) / nn - f, f - static_cast<double>(i) / nn});
  }
  return worst;
}

void VerifyConfig::validate() const {
  if (dims.empty()) throw InvalidInput("verify: dims must be non-empty");
  for (auto d : dims) {
    if (d < 1 || d > 16) throw InvalidInput("verify: dims entries must be in [1, 16]");
  }
  if (normalization_budget == 0) throw InvalidInput("verify: normalization_budget must be >= 1");
  if (divergence_points == 0) throw InvalidInput("verify: divergence_points must be >= 1");
  if (radial_samples < 10000) throw InvalidInput("verify: radial_samples must be >= 10000");
  for (double v : {normalization_tol, divergence_h, divergence_tol, divergence_negative_min, continuity_h,
                   continuity_tol, continuity_negative_min, radial_tol, radial_negative_min}) {
    if (!(v > 0)) throw InvalidInput("verify: tolerances and step sizes must be > 0");
  }
}

std::vector<CheckRecord> run_suite(const VerifyConfig& cfg) {
  cfg.validate();
  using Job = std::function<std::vector<CheckRecord>()>;
  std::vector<Job> jobs;
  const auto seed = cfg.seed;
  const auto below = [seed](std::string name, double est, double tol) {
    return CheckRecord{std::move(name), est, tol, est < tol, seed};
  };
  const auto above = [seed](std::string name, double est, double floor) {
    return CheckRecord{std::move(name), est, floor, est > floor, seed};
  };

  for (const std::size_t d : cfg.dims) {
    const std::string ds = "_d" + std::to_string(d);
    jobs.emplace_back([=] {
      std::vector<CheckRecord> out;
      Stream r1(seed, "verify/normalization/origin", d);
      Stream r2(seed, "verify/normalization/shifted", d);
      Stream rx(seed, "verify/normalization/point", d);
      Vec shifted(d);
      for (double& v : shifted) v = 2.0 * rx.normal();
      try {
        const auto a = normalization_constant(d, cfg.normalization_budget, r1, 1.0, {}, cfg.normalization_tol);
        const auto b = normalization_constant(d, cfg.normalization_budget, r2, 2.5, shifted, cfg.normalization_tol);
        out.push_back(below("normalization_vs_analytic" + ds, std::abs(a.amplitude / analytic_amplitude(d) - 1.0),
                            cfg.normalization_tol));
        out.push_back(below("normalization_unit_integral" + ds, std::abs(a.amplitude * b.integral - 1.0),
                            cfg.normalization_tol));
        const double bar = std::hypot(a.std_error, b.std_error) + 1e-12 * a.amplitude;
        out.push_back(below("normalization_invariance_sigmas" + ds, std::abs(a.amplitude - b.amplitude) / bar, 3.0));
      } catch (const NonConvergence&) {
        out.push_back(CheckRecord{"normalization_vs_analytic" + ds, std::numeric_limits<double>::quiet_NaN(),
                                  cfg.normalization_tol, false, seed});
      }
      return out;
    });
    jobs.emplace_back([=] {
      Stream r(seed, "verify/divergence", d);
      Stream rn(seed, "verify/divergence/negative", d);
      const double a = analytic_amplitude(d);
      const auto good = check_divergence_free(d, a, cfg.divergence_points, r, cfg.divergence_h);
      const auto bad = check_divergence_free(d, a, cfg.divergence_points, rn, cfg.divergence_h,
                                             static_cast<double>(d));
      return std::vector{below("divergence_free" + ds, good.max_residual, cfg.divergence_tol),
                         above("divergence_negative_wrong_exponent" + ds, bad.max_residual,
                               cfg.divergence_negative_min)};
    });
    jobs.emplace_back([=] {
      Stream r(seed, "verify/radial", d);
      Stream rn(seed, "verify/radial/negative", d);
      std::vector<CheckRecord> out{below("radial_law_ks" + ds, check_radial_law(d, cfg.radial_samples, r), cfg.radial_tol)};
      out.push_back(above("radial_law_negative_ks" + ds, check_radial_law(d, cfg.radial_samples, rn, 1.0, d + 1),
                          cfg.radial_negative_min));
      return out;
    });
  }
  jobs.emplace_back([=] {
    std::vector<CheckRecord> out;
    std::vector<double> t_grid;
    for (int i = 0; i <= 16; ++i) t_grid.push_back(0.2 + 0.05 * i);
    PointSet xs(1);
    for (int i = 0; i <= 120; ++i) {
      const double x = -3.0 + 0.05 * i;
      xs.push_back(std::span(&x, 1));
    }
    const double x0[1] = {0.5};
    trajectory::TrajectorySpec lin;
    lin.family = trajectory::Family::Linear;
    lin.dim = 1;
    trajectory::TrajectorySpec bridge = lin;
    bridge.family = trajectory::Family::GaussianBridge;
    const auto l = continuity_residual(lin, x0, t_grid, xs, cfg.continuity_h);
    const auto g = continuity_residual(bridge, x0, t_grid, xs, cfg.continuity_h);
    const auto neg = continuity_residual(lin, x0, t_grid, xs, cfg.continuity_h, 2.0);
    out.push_back(below("continuity_linear_d1", l.normalized, cfg.continuity_tol));
    out.push_back(below("continuity_gaussian_bridge_d1", g.normalized, cfg.continuity_tol));
    out.push_back(above("continuity_negative_doubled_velocity_d1", neg.normalized, cfg.continuity_negative_min));
    return out;
  });

  std::vector<std::vector<CheckRecord>> results(jobs.size());
  parallel_for(jobs.size(), cfg.threads, [&](std::size_t i) { results[i] = jobs[i](); });
  std::vector<CheckRecord> all;
  for (auto& r : results) all.insert(all.end(), r.begin(), r.end());
  return all;
}

std::string records_csv(const std::vector<CheckRecord>& records) {
  std::string out = "name,estimate,tolerance,pass,seed\n";
  for (const auto& r : records) {
    out += r.name + ',' + format_double(r.estimate) + ',' + format_double(r.tolerance) + ',' +
           (r.pass ? "1" : "0") + ',' + std::to_string(r.seed) + '\n';
  }
  return out;
}

}  // namespace ffgen::verify
