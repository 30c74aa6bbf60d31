#include "ffgen/network.hpp"

#include <cmath>
#include <string>

#include "ffgen/errors.hpp"

namespace ffgen::trainer {

void write_features(std::span<const double> x, double t, double* dst) {
  for (std::size_t k = 0; k < x.size(); ++k) dst[k] = x[k];
  dst[x.size()] = t;
  dst[x.size() + 1] = std::log(t);
}

FieldNet::FieldNet(std::vector<std::size_t> widths) : widths_(std::move(widths)) {
  if (widths_.size() < 2) throw InvalidInput("FieldNet: need at least input and output widths");
  for (std::size_t w : widths_) {
    if (w == 0) throw InvalidInput("FieldNet: zero layer width");
  }
  if (widths_.front() != feature_count(widths_.back())) {
    throw InvalidInput("FieldNet: input width " + std::to_string(widths_.front()) + " must equal output width + 2");
  }
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(widths_[l]);
    const auto out = static_cast<Eigen::Index>(widths_[l + 1]);
    layers_.push_back({Eigen::MatrixXd::Zero(out, in), Eigen::VectorXd::Zero(out)});
  }
}

FieldNet FieldNet::glorot(std::vector<std::size_t> widths, Stream& rng) {
  FieldNet net(std::move(widths));
  for (auto& layer : net.layers_) {
    const double limit = std::sqrt(6.0 / static_cast<double>(layer.weight.rows() + layer.weight.cols()));
    for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) {
      for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) layer.weight(i, j) = rng.uniform(-limit, limit);
    }
  }
  return net;
}

std::vector<std::size_t> FieldNet::default_widths(std::size_t d, std::size_t hidden, std::size_t depth) {
  std::vector<std::size_t> w{feature_count(d)};
  for (std::size_t i = 0; i < depth; ++i) w.push_back(hidden);
  w.push_back(d);
  return w;
}

void FieldNet::forward(double t, std::span<const double> x, std::span<double> out) const {
  if (x.size() != data_dim() || out.size() != data_dim()) {
    throw InvalidInput("FieldNet: input dimension " + std::to_string(x.size()) + ", expected " +
                       std::to_string(data_dim()));
  }
  thread_local Eigen::VectorXd a, z;
  a.resize(static_cast<Eigen::Index>(input_dim()));
  write_features(x, t, a.data());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    z.noalias() = layers_[l].weight * a;
    z += layers_[l].bias;
    if (l + 1 < layers_.size()) {
      a = z.array().tanh();
    } else {
      a.swap(z);
    }
  }
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = a[static_cast<Eigen::Index>(k)];
  check_output(out);
}

Vec FieldNet::forward(double t, std::span<const double> x) const {
  Vec out(data_dim());
  forward(t, x, out);
  return out;
}

Eigen::MatrixXd FieldNet::forward_batch(const Eigen::MatrixXd& features) const {
  Eigen::MatrixXd a = features;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd z = layers_[l].weight * a;
    z.colwise() += layers_[l].bias;
    a = l + 1 < layers_.size() ? Eigen::MatrixXd(z.array().tanh()) : std::move(z);
  }
  if (!a.allFinite()) check_output({});
  return a;
}

void FieldNet::check_output(std::span<const double> out) const {
  bool ok = !out.empty();
  for (double v : out) ok = ok && std::isfinite(v);
  if (ok) return;
  if (!finite()) throw NumericFault("FieldNet: non-finite parameters");
  throw NumericFault("FieldNet: non-finite output");
}

bool FieldNet::finite() const {
  for (const auto& layer : layers_) {
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) return false;
  }
  return true;
}

std::size_t FieldNet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
  return n;
}

bool operator==(const FieldNet& a, const FieldNet& b) {
  if (a.widths_ != b.widths_) return false;
  for (std::size_t l = 0; l < a.layers_.size(); ++l) {
    if (a.layers_[l].weight != b.layers_[l].weight || a.layers_[l].bias != b.layers_[l].bias) return false;
  }
  return true;
}

}  // namespace ffgen::trainer
