#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "ffgen/errors.hpp"
#include "ffgen/network.hpp"
#include "ffgen/point_set.hpp"
#include "ffgen/sampler.hpp"
#include "ffgen/trajectory.hpp"

namespace ffgen::trainer {

struct Gradients {
  std::vector<DenseLayer> layers;
};

struct LossAndGrad {
  double loss = 0.0;
  Gradients grads;
};

// Mean over the batch of |s_theta(x_t, t) - t * target|^2 and its exact
// gradient by back-propagation through the layers.
LossAndGrad loss_and_grad(const FieldNet& net, std::span<const sampler::TrainingPair> batch);
double loss(const FieldNet& net, std::span<const sampler::TrainingPair> batch);

// Step decay: initial * factor^floor(epoch / every_epochs).
struct LearningRateSchedule {
  double initial = 1e-4;
  double factor = 0.8;
  std::size_t every_epochs = 3;

  double at_epoch(std::size_t epoch) const;
};

// Adam moments and hyperparameters.
struct OptimState {
  std::size_t step = 0;
  std::vector<DenseLayer> first_moment;
  std::vector<DenseLayer> second_moment;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static OptimState for_net(const FieldNet& net, double learning_rate);
};

void adam_update(FieldNet& net, OptimState& state, const Gradients& grads);

struct TrainConfig {
  std::uint64_t seed = 0;
  std::size_t steps = 2000;
  std::size_t batch_size = 32;
  LearningRateSchedule schedule;
  std::size_t steps_per_epoch = 0;  // 0: ceil(training points / batch_size)
  std::size_t hidden_width = 128;
  std::size_t hidden_layers = 3;
  double validation_fraction = 0.1;
  std::size_t eval_every = 1000;
  std::size_t validation_pairs = 2048;
  double jitter = 0.0;  // std-dev of Gaussian noise added to data points

  void validate() const;
};

struct TrainingLog {
  std::vector<double> step_loss;
  std::vector<double> epoch_learning_rate;
  std::vector<std::pair<std::size_t, double>> validation;  // (step, loss)
  std::size_t best_step = 0;
  double best_validation_loss = 0.0;
};

struct TrainResult {
  FieldNet net;  // checkpoint with the lowest validation loss
  OptimState optim;
  TrainingLog log;
};

class TrainingDiverged : public NumericFault {
 public:
  TrainingDiverged(const std::string& what, FieldNet diagnostic, std::size_t step)
      : NumericFault(what), diagnostic_(std::move(diagnostic)), step_(step) {}
  const FieldNet& diagnostic() const { return diagnostic_; }
  std::size_t step() const { return step_; }

 private:
  FieldNet diagnostic_;
  std::size_t step_;
};

TrainResult train(const PointSet& dataset, const trajectory::TrajectorySpec& spec, const TrainConfig& cfg);

// step,loss rows followed by nothing else; learning rates go to a second file.
void write_training_log(const std::filesystem::path& dir, const TrainingLog& log);

}  // namespace ffgen::trainer
