#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ffgen/point_set.hpp"
#include "ffgen/rng.hpp"

namespace ffgen::trainer {

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;
};

// Number of input features per data dimension d: (x_t, t, log t).
constexpr std::size_t feature_count(std::size_t d) { return d + 2; }
void write_features(std::span<const double> x, double t, double* dst);

// Feed-forward tanh network s_theta(x_t, t). Hidden layers use tanh, the output
// layer is affine. The raw output is the reparameterised target t * F.
class FieldNet {
 public:
  FieldNet() = default;
  // All-zero parameters.
  explicit FieldNet(std::vector<std::size_t> widths);
  // Glorot-uniform weights, zero biases.
  static FieldNet glorot(std::vector<std::size_t> widths, Stream& rng);
  static std::vector<std::size_t> default_widths(std::size_t d, std::size_t hidden = 128, std::size_t depth = 3);

  const std::vector<std::size_t>& widths() const { return widths_; }
  std::size_t data_dim() const { return widths_.empty() ? 0 : widths_.back(); }
  std::size_t input_dim() const { return widths_.empty() ? 0 : widths_.front(); }

  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  void forward(double t, std::span<const double> x, std::span<double> out) const;
  Vec forward(double t, std::span<const double> x) const;

  // Columns of `features` are samples; returns (data_dim x batch).
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& features) const;

  bool finite() const;
  std::size_t parameter_count() const;

  friend bool operator==(const FieldNet& a, const FieldNet& b);

 private:
  void check_output(std::span<const double> out) const;

  std::vector<std::size_t> widths_;
  std::vector<DenseLayer> layers_;
};

}  // namespace ffgen::trainer
