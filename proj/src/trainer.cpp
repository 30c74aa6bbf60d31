#include "ffgen/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

#include "ffgen/format.hpp"
#include "ffgen/rng.hpp"

namespace ffgen::trainer {

namespace {

struct Batch {
  Eigen::MatrixXd features;  // feature_count(d) x B
  Eigen::MatrixXd targets;   // d x B, reparameterised as t * velocity
};

Batch assemble(const FieldNet& net, std::span<const sampler::TrainingPair> pairs) {
  if (pairs.empty()) throw InvalidInput("loss_and_grad: empty batch");
  const std::size_t d = net.data_dim();
  Batch b;
  const auto cols = static_cast<Eigen::Index>(pairs.size());
  b.features.resize(static_cast<Eigen::Index>(feature_count(d)), cols);
  b.targets.resize(static_cast<Eigen::Index>(d), cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    const auto& p = pairs[static_cast<std::size_t>(j)];
    if (p.xt.size() != d || p.target.size() != d) throw InvalidInput("loss_and_grad: pair dimension mismatch");
    write_features(p.xt, p.t, b.features.col(j).data());
    for (std::size_t k = 0; k < d; ++k) {
      if (!std::isfinite(p.target[k])) throw InvalidInput("loss_and_grad: non-finite target");
      b.targets(static_cast<Eigen::Index>(k), j) = p.t * p.target[k];
    }
  }
  return b;
}

}  // namespace

LossAndGrad loss_and_grad(const FieldNet& net, std::span<const sampler::TrainingPair> batch) {
  const Batch b = assemble(net, batch);
  const auto& layers = net.layers();
  const std::size_t depth = layers.size();
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  // Forward pass, keeping every activation for the reverse sweep.
  std::vector<Eigen::MatrixXd> act(depth + 1);
  act[0] = b.features;
  for (std::size_t l = 0; l < depth; ++l) {
    Eigen::MatrixXd z = layers[l].weight * act[l];
    z.colwise() += layers[l].bias;
    act[l + 1] = l + 1 < depth ? Eigen::MatrixXd(z.array().tanh()) : std::move(z);
  }
  const Eigen::MatrixXd residual = act[depth] - b.targets;

  LossAndGrad out;
  out.loss = residual.squaredNorm() * inv_b;
  out.grads.layers.resize(depth);

  Eigen::MatrixXd delta = 2.0 * inv_b * residual;  // dL/dz of the output layer
  for (std::size_t l = depth; l-- > 0;) {
    out.grads.layers[l].weight = delta * act[l].transpose();
    out.grads.layers[l].bias = delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd upstream = layers[l].weight.transpose() * delta;
      delta = upstream.array() * (1.0 - act[l].array().square());
    }
  }
  return out;
}

double loss(const FieldNet& net, std::span<const sampler::TrainingPair> batch) {
  const Batch b = assemble(net, batch);
  return (net.forward_batch(b.features) - b.targets).squaredNorm() / static_cast<double>(batch.size());
}

double LearningRateSchedule::at_epoch(std::size_t epoch) const {
  const auto decays = every_epochs == 0 ? 0 : epoch / every_epochs;
  return initial * std::pow(factor, static_cast<double>(decays));
}

OptimState OptimState::for_net(const FieldNet& net, double learning_rate) {
  OptimState s;
  s.learning_rate = learning_rate;
  for (const auto& layer : net.layers()) {
    DenseLayer zero{Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()),
                    Eigen::VectorXd::Zero(layer.bias.size())};
    s.first_moment.push_back(zero);
    s.second_moment.push_back(zero);
  }
  return s;
}

void adam_update(FieldNet& net, OptimState& state, const Gradients& grads) {
  auto& layers = net.layers();
  if (state.first_moment.size() != layers.size() || grads.layers.size() != layers.size()) {
    throw InvalidInput("adam_update: optimizer state does not match network");
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  const double lr = state.learning_rate;
  auto apply = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g.cwiseProduct(g);
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + state.epsilon);
  };
  for (std::size_t l = 0; l < layers.size(); ++l) {
    apply(layers[l].weight, state.first_moment[l].weight, state.second_moment[l].weight, grads.layers[l].weight);
    apply(layers[l].bias, state.first_moment[l].bias, state.second_moment[l].bias, grads.layers[l].bias);
  }
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw InvalidInput("trainer: batch_size must be >= 1");
  if (!(schedule.initial > 0)) throw InvalidInput("trainer: learning_rate must be > 0");
  if (!(schedule.factor > 0 && schedule.factor <= 1)) throw InvalidInput("trainer: lr_decay must be in (0, 1]");
  if (hidden_width == 0) throw InvalidInput("trainer: hidden_width must be >= 1");
  if (!(validation_fraction >= 0 && validation_fraction < 1)) {
    throw InvalidInput("trainer: validation_fraction must be in [0, 1)");
  }
  if (eval_every == 0) throw InvalidInput("trainer: eval_every must be >= 1");
  if (validation_pairs == 0) throw InvalidInput("trainer: validation_pairs must be >= 1");
  if (!(jitter >= 0)) throw InvalidInput("trainer: jitter must be >= 0");
}

namespace {

sampler::TrainingPair draw_pair(const PointSet& points, std::size_t index, const trajectory::TrajectorySpec& spec,
                                double jitter, Stream& rng) {
  Vec x0(points[index].begin(), points[index].end());
  if (jitter > 0) {
    for (double& v : x0) v += jitter * rng.normal();
  }
  return sampler::sample_training_pair(x0, spec, rng);
}

}  // namespace

TrainResult train(const PointSet& dataset, const trajectory::TrajectorySpec& spec, const TrainConfig& cfg) {
  if (dataset.empty()) throw InvalidInput("train: dataset is empty");
  if (dataset.dim() != spec.dim) throw InvalidInput("train: dataset dimension does not match spec");
  spec.validate();
  cfg.validate();

  // Deterministic train/validation split.
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  Stream split_rng(cfg.seed, "split");
  std::shuffle(order.begin(), order.end(), split_rng);
  auto n_val = static_cast<std::size_t>(std::floor(cfg.validation_fraction * static_cast<double>(dataset.size())));
  if (n_val >= dataset.size()) n_val = 0;
  const PointSet val_points =
      n_val > 0 ? dataset.subset(std::span(order).first(n_val)) : dataset;  // tiny sets validate on themselves
  const PointSet train_points = dataset.subset(std::span(order).subspan(n_val));

  Stream val_rng(cfg.seed, "validation");
  std::vector<sampler::TrainingPair> validation;
  validation.reserve(cfg.validation_pairs);
  for (std::size_t i = 0; i < cfg.validation_pairs; ++i) {
    validation.push_back(draw_pair(val_points, i % val_points.size(), spec, 0.0, val_rng));
  }

  Stream init_rng(cfg.seed, "init");
  TrainResult result;
  FieldNet net = FieldNet::glorot(FieldNet::default_widths(spec.dim, cfg.hidden_width, cfg.hidden_layers), init_rng);
  OptimState optim = OptimState::for_net(net, cfg.schedule.initial);
  const std::size_t steps_per_epoch =
      cfg.steps_per_epoch > 0 ? cfg.steps_per_epoch : (train_points.size() + cfg.batch_size - 1) / cfg.batch_size;

  result.net = net;
  result.log.best_validation_loss = loss(net, validation);
  result.log.best_step = 0;
  result.log.validation.emplace_back(0, result.log.best_validation_loss);
  result.log.step_loss.reserve(cfg.steps);

  std::vector<sampler::TrainingPair> batch(cfg.batch_size);
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    const std::size_t epoch = step / steps_per_epoch;
    if (step % steps_per_epoch == 0) {
      optim.learning_rate = cfg.schedule.at_epoch(epoch);
      result.log.epoch_learning_rate.push_back(optim.learning_rate);
    }
    Stream rng(cfg.seed, "batch", step);
    for (auto& pair : batch) pair = draw_pair(train_points, rng.index_below(train_points.size()), spec, cfg.jitter, rng);

    const LossAndGrad lg = loss_and_grad(net, batch);
    if (!std::isfinite(lg.loss)) {
      throw TrainingDiverged("train: loss became non-finite at step " + std::to_string(step), net, step);
    }
    result.log.step_loss.push_back(lg.loss);
    adam_update(net, optim, lg.grads);

    const std::size_t done = step + 1;
    if (done % cfg.eval_every == 0 || done == cfg.steps) {
      const double val = loss(net, validation);
      if (!std::isfinite(val)) {
        throw TrainingDiverged("train: validation loss non-finite at step " + std::to_string(done), net, done);
      }
      result.log.validation.emplace_back(done, val);
      if (val < result.log.best_validation_loss) {
        result.log.best_validation_loss = val;
        result.log.best_step = done;
        result.net = net;
      }
    }
  }
  result.optim = std::move(optim);
  return result;
}

void write_training_log(const std::filesystem::path& dir, const TrainingLog& log) {
  std::ofstream loss_out(dir / "train_log.csv", std::ios::binary);
  if (!loss_out) throw IoError("cannot write " + (dir / "train_log.csv").string());
  loss_out << "step,loss\n";
  for (std::size_t i = 0; i < log.step_loss.size(); ++i) {
    loss_out << i + 1 << ',' << format_double(log.step_loss[i]) << '\n';
  }
  std::ofstream lr_out(dir / "learning_rate.csv", std::ios::binary);
  if (!lr_out) throw IoError("cannot write " + (dir / "learning_rate.csv").string());
  lr_out << "epoch,learning_rate\n";
  for (std::size_t e = 0; e < log.epoch_learning_rate.size(); ++e) {
    lr_out << e << ',' << format_double(log.epoch_learning_rate[e]) << '\n';
  }
  std::ofstream val_out(dir / "validation.csv", std::ios::binary);
  if (!val_out) throw IoError("cannot write " + (dir / "validation.csv").string());
  val_out << "step,validation_loss,selected\n";
  for (const auto& [step, value] : log.validation) {
    val_out << step << ',' << format_double(value) << ',' << (step == log.best_step ? 1 : 0) << '\n';
  }
}

}  // namespace ffgen::trainer
