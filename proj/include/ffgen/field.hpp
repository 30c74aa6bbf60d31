#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <span>

#include "ffgen/network.hpp"
#include "ffgen/point_set.hpp"
#include "ffgen/trajectory.hpp"

namespace ffgen::field {

// Evaluable aggregate velocity F_t(x).
class VelocityField {
 public:
  virtual ~VelocityField() = default;
  virtual std::size_t dim() const = 0;
  virtual void evaluate(double t, std::span<const double> x, std::span<double> out) const = 0;

  Vec operator()(double t, std::span<const double> x) const;
};

// Posterior-weighted mean of conditional velocities over a finite dataset:
//   F_t(x) = sum_i w_i v_i(x, t),  w_i proportional to d_t(x | x_i).
// Weights are formed in log space with max subtraction. If every kernel is
// exactly zero (e.g. x outside a compact prior's support for all sources) the
// weights fall back to uniform and the fallback counter is incremented.
class OracleField : public VelocityField {
 public:
  OracleField(PointSet dataset, trajectory::TrajectorySpec spec);

  std::size_t dim() const override { return spec_.dim; }
  void evaluate(double t, std::span<const double> x, std::span<double> out) const override;

  // Same as evaluate, reporting whether the far-field fallback fired.
  bool evaluate_flagged(double t, std::span<const double> x, std::span<double> out) const;

  // Extended flux (v1, v1 F): v1 = mean_i d_t(x | x_i) is the aggregate density.
  double flux(double t, std::span<const double> x, std::span<double> velocity_flux) const;

  const PointSet& dataset() const { return dataset_; }
  const trajectory::TrajectorySpec& spec() const { return spec_; }
  std::size_t fallback_count() const { return fallbacks_.load(std::memory_order_relaxed); }

 private:
  PointSet dataset_;
  trajectory::TrajectorySpec spec_;
  mutable std::atomic<std::size_t> fallbacks_{0};
};

// Trained network. The net regresses t * F, so the field is net(x, t) / t.
class LearnedField : public VelocityField {
 public:
  LearnedField(trainer::FieldNet net, trajectory::TrajectorySpec spec);

  std::size_t dim() const override { return spec_.dim; }
  void evaluate(double t, std::span<const double> x, std::span<double> out) const override;

  const trainer::FieldNet& net() const { return net_; }
  const trajectory::TrajectorySpec& spec() const { return spec_; }

 private:
  trainer::FieldNet net_;
  trajectory::TrajectorySpec spec_;
};

// Adapter for closed-form fields used in tests and benchmarks.
class FunctionField : public VelocityField {
 public:
  using Fn = std::function<void(double, std::span<const double>, std::span<double>)>;
  FunctionField(std::size_t dim, Fn fn) : dim_(dim), fn_(std::move(fn)) {}

  std::size_t dim() const override { return dim_; }
  void evaluate(double t, std::span<const double> x, std::span<double> out) const override { fn_(t, x, out); }

 private:
  std::size_t dim_;
  Fn fn_;
};

Vec oracle_field(const PointSet& dataset, const trajectory::TrajectorySpec& spec, std::span<const double> x,
                 double t);
Vec learned_field(const trainer::FieldNet& net, const trajectory::TrajectorySpec& spec, std::span<const double> x,
                  double t);

// Returns v1 and writes the spatial flux v1 F into `flux`.
using ExtendedFlux = std::function<double(double t, std::span<const double> x, std::span<double> flux)>;

// Central-difference estimate of |d v1/dt + div_x (v1 F)| at (t, x).
double divergence_residual(const ExtendedFlux& flux, std::size_t dim, double t, std::span<const double> x,
                           double h);

// Oracle overload; requires the extended-space distance from (t, x) to every
// source (0, x_i) to exceed 10 h.
double divergence_residual(const OracleField& field, double t, std::span<const double> x, double h);

}  // namespace ffgen::field
