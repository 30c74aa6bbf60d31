#include "ffgen/field.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "ffgen/errors.hpp"

namespace ffgen::field {

Vec VelocityField::operator()(double t, std::span<const double> x) const {
  Vec out(dim());
  evaluate(t, x, out);
  return out;
}

OracleField::OracleField(PointSet dataset, trajectory::TrajectorySpec spec)
    : dataset_(std::move(dataset)), spec_(std::move(spec)) {
  if (dataset_.empty()) throw InvalidInput("oracle field: dataset is empty");
  if (dataset_.dim() != spec_.dim) {
    throw InvalidInput("oracle field: dataset dimension " + std::to_string(dataset_.dim()) +
                       " does not match spec dimension " + std::to_string(spec_.dim));
  }
  spec_.validate();
}

void OracleField::evaluate(double t, std::span<const double> x, std::span<double> out) const {
  evaluate_flagged(t, x, out);
}

bool OracleField::evaluate_flagged(double t, std::span<const double> x, std::span<double> out) const {
  if (x.size() != spec_.dim || out.size() != spec_.dim) throw InvalidInput("oracle field: dimension mismatch");
  const auto frame = trajectory::make_frame(spec_, t);
  const std::size_t n = dataset_.size();
  thread_local std::vector<double> logk;
  logk.resize(n);
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    logk[i] = trajectory::log_conditional_kernel(spec_, frame, dataset_[i], x);
    if (logk[i] > peak) peak = logk[i];
  }
  const bool fallback = !std::isfinite(peak);
  if (fallback) fallbacks_.fetch_add(1, std::memory_order_relaxed);

  // F = u x + w * (weighted mean of sources), since each v_i = u x + w x_i.
  const std::size_t d = spec_.dim;
  thread_local std::vector<double> mean;
  mean.assign(d, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double wi = fallback ? 1.0 : std::exp(logk[i] - peak);
    if (wi == 0.0) continue;
    total += wi;
    const auto xi = dataset_[i];
    for (std::size_t k = 0; k < d; ++k) mean[k] += wi * xi[k];
  }
  for (std::size_t k = 0; k < d; ++k) out[k] = frame.u * x[k] + frame.w * mean[k] / total;
  return fallback;
}

double OracleField::flux(double t, std::span<const double> x, std::span<double> velocity_flux) const {
  if (x.size() != spec_.dim || velocity_flux.size() != spec_.dim) {
    throw InvalidInput("oracle flux: dimension mismatch");
  }
  const auto frame = trajectory::make_frame(spec_, t);
  const std::size_t n = dataset_.size();
  std::vector<double> v(spec_.dim);
  double density = 0.0;
  for (double& f : velocity_flux) f = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double k = std::exp(trajectory::log_conditional_kernel(spec_, frame, dataset_[i], x));
    trajectory::conditional_velocity(frame, dataset_[i], x, v);
    density += k;
    for (std::size_t j = 0; j < spec_.dim; ++j) velocity_flux[j] += k * v[j];
  }
  const double inv = 1.0 / static_cast<double>(n);
  for (double& f : velocity_flux) f *= inv;
  return density * inv;
}

LearnedField::LearnedField(trainer::FieldNet net, trajectory::TrajectorySpec spec)
    : net_(std::move(net)), spec_(std::move(spec)) {
  if (net_.data_dim() != spec_.dim || net_.input_dim() != trainer::feature_count(spec_.dim)) {
    throw InvalidInput("learned field: network widths do not match spec dimension " + std::to_string(spec_.dim));
  }
  if (!net_.finite()) throw NumericFault("learned field: non-finite network parameters");
}

void LearnedField::evaluate(double t, std::span<const double> x, std::span<double> out) const {
  if (x.size() != spec_.dim || out.size() != spec_.dim) {
    throw InvalidInput("learned field: input dimension " + std::to_string(x.size()) + ", expected " +
                       std::to_string(spec_.dim));
  }
  if (t < spec_.t_min) throw SingularityError("learned field: t below t_min");
  net_.forward(t, x, out);
  for (double& v : out) v /= t;
}

Vec oracle_field(const PointSet& dataset, const trajectory::TrajectorySpec& spec, std::span<const double> x,
                 double t) {
  return OracleField(dataset, spec)(t, x);
}

Vec learned_field(const trainer::FieldNet& net, const trajectory::TrajectorySpec& spec, std::span<const double> x,
                  double t) {
  return LearnedField(net, spec)(t, x);
}

double divergence_residual(const ExtendedFlux& flux, std::size_t dim, double t, std::span<const double> x,
                           double h) {
  if (!(h > 0)) throw InvalidInput("divergence_residual: step h must be > 0");
  if (x.size() != dim) throw InvalidInput("divergence_residual: dimension mismatch");
  std::vector<double> scratch(dim), point(x.begin(), x.end());
  double div = (flux(t + h, x, scratch) - flux(t - h, x, scratch)) / (2.0 * h);
  for (std::size_t k = 0; k < dim; ++k) {
    point[k] = x[k] + h;
    flux(t, point, scratch);
    const double plus = scratch[k];
    point[k] = x[k] - h;
    flux(t, point, scratch);
    const double minus = scratch[k];
    point[k] = x[k];
    div += (plus - minus) / (2.0 * h);
  }
  return std::abs(div);
}

double divergence_residual(const OracleField& field, double t, std::span<const double> x, double h) {
  if (!(h > 0)) throw InvalidInput("divergence_residual: step h must be > 0");
  const auto& data = field.dataset();
  for (std::size_t i = 0; i < data.size(); ++i) {
    double r2 = t * t;
    for (std::size_t k = 0; k < x.size(); ++k) r2 += (x[k] - data[i][k]) * (x[k] - data[i][k]);
    if (std::sqrt(r2) <= 10.0 * h) {
      throw InvalidInput("divergence_residual: point within 10h of source " + std::to_string(i));
    }
  }
  return divergence_residual(
      [&field](double tt, std::span<const double> xx, std::span<double> f) { return field.flux(tt, xx, f); },
      field.dim(), t, x, h);
}

}  // namespace ffgen::field
