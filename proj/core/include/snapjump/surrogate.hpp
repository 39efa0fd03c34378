#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "snapjump/dataset.hpp"

namespace snapjump {

// Per-input affine standardization z = (p - mean) / std.
struct Standardizer {
  Eigen::Vector4d mean = Eigen::Vector4d::Zero();
  Eigen::Vector4d std = Eigen::Vector4d::Ones();

  Eigen::Vector4d apply(const Eigen::Vector4d& p) const {
    return (p - mean).cwiseQuotient(std);
  }
};

// Dense feed-forward regressor 4 -> hidden... -> 2 with rectified-linear
// hidden activations and an identity output layer. Inputs are standardized;
// outputs are raw normalized apex coordinates (x̄_c, ȳ_c).
struct SurrogateModel {
  Standardizer input_norm;
  std::vector<Eigen::MatrixXd> weights;  // weights[l]: rows = layer l+1 size
  std::vector<Eigen::VectorXd> biases;

  // Hidden widths {372, 372, 372} by default.
  static SurrogateModel make(const std::vector<int>& hidden, unsigned seed);

  int num_layers() const { return static_cast<int>(weights.size()); }

  Eigen::Vector2d forward(const Eigen::Vector4d& p) const;
  // Columns are samples: P is 4 x N, result 2 x N.
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& P) const;
  // d(output)/d(raw input), 2 x 4, with the 1/std chain factor; the
  // subgradient at rectifier kinks is 0.
  Eigen::Matrix<double, 2, 4> input_gradient(const Eigen::Vector4d& p) const;

  void save(const std::string& path) const;
  static SurrogateModel load(const std::string& path);
};

struct TrainConfig {
  std::vector<int> hidden = {372, 372, 372};
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int epochs = 200;
  // (first epoch, batch size) pairs; batches grow over training.
  std::vector<std::pair<int, int>> batch_schedule = {{0, 64}, {50, 256},
                                                     {120, 1024}};
  // Optional (first epoch, step size) pairs; empty keeps learning_rate
  // constant for the whole run.
  std::vector<std::pair<int, double>> lr_schedule;
  double train_fraction = 0.8;
  unsigned seed = 7;
  // Called after each epoch with (epoch, train MAE over the epoch).
  std::function<void(int, double)> on_epoch;
};

struct TrainReport {
  double train_mae = 0.0;       // final epoch, running average
  double validation_mae = 0.0;  // held-out split
  int epochs = 0;
  std::vector<double> epoch_mae;
};

// Trains on rows with flag == 0. Deterministic given config.seed.
// Throws ConvergenceError if the loss turns non-finite.
TrainReport train(SurrogateModel& model, const std::vector<DatasetRow>& rows,
                  const TrainConfig& config);

// Mean absolute error of the model over the given rows (per output entry).
double dataset_mae(const SurrogateModel& model,
                   const std::vector<DatasetRow>& rows);

}  // namespace snapjump
