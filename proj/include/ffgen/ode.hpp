#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "ffgen/errors.hpp"
#include "ffgen/field.hpp"
#include "ffgen/point_set.hpp"
#include "ffgen/trajectory.hpp"

namespace ffgen::ode {

enum class Method { Euler, RK4, RK45 };

std::string_view to_string(Method method);
Method parse_method(std::string_view name);

struct SolverConfig {
  Method method = Method::RK45;
  double step = 1e-2;  // fixed-step methods
  double rtol = 1e-5;  // RK45
  double atol = 1e-5;
  double t_start = 1.0;
  double t_end = 1e-3;
  std::size_t max_steps = 100000;

  void validate() const;
  SolverConfig reversed() const;
};

struct TrajectoryRecord {
  std::vector<double> times;
  PointSet states;
  std::size_t nfe = 0;
  std::size_t accepted = 0;
  std::size_t rejected = 0;

  Vec final_state() const;
};

class StepLimitExceeded : public NonConvergence {
 public:
  StepLimitExceeded(const std::string& what, TrajectoryRecord partial)
      : NonConvergence(what), partial_(std::move(partial)) {}
  const TrajectoryRecord& partial() const { return partial_; }

 private:
  TrajectoryRecord partial_;
};

// Integrates dx/dt = F_t(x) from cfg.t_start to cfg.t_end (either direction).
// NFE: Euler = steps, RK4 = 4 * steps, RK45 (Dormand-Prince, first-same-as-last)
// = 1 + 6 * (accepted + rejected). With record_path = false only the initial
// and final states are stored.
TrajectoryRecord integrate(const field::VelocityField& field, std::span<const double> x_start,
                           const SolverConfig& cfg, bool record_path = true);

// Mean |x - backward(forward(x))| over the batch; `forward` runs t_start -> t_end.
double roundtrip_error(const field::VelocityField& field, const PointSet& batch, const SolverConfig& forward,
                       unsigned threads = 1);

struct GenerationResult {
  PointSet samples;
  std::size_t nfe = 0;  // summed over samples, in sample order
  std::vector<std::size_t> per_sample_nfe;
};

// Draws n terminal states (stream (seed, "generate", i) for sample i) and
// integrates each from cfg.t_start = T down to cfg.t_end = t_min.
GenerationResult generate(const field::VelocityField& field, const trajectory::TrajectorySpec& spec, std::size_t n,
                          const SolverConfig& cfg, std::uint64_t seed, unsigned threads = 1);

}  // namespace ffgen::ode
