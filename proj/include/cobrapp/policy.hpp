#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

#include "cobrapp/rng.hpp"
#include "cobrapp/state.hpp"

namespace cobrapp {

struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;
  bool relu = false;
};

struct MlpParams {
  std::vector<DenseLayer> layers;

  Eigen::VectorXd forward(const Eigen::VectorXd& input) const;
};

// Twin feature extractors plus a Q head (88 -> 16, 2 -> 16, 32 -> 11).
struct QNetwork {
  MlpParams model_extractor;   // 88 -> 32(relu) -> 16
  MlpParams global_extractor;  // 2 -> 8(relu) -> 16
  MlpParams q_head;            // 32 -> 32 -> 64 -> 128 (relu) -> 11

  static QNetwork initialize(Rng& rng);  // Xavier normal weights, zero biases
  Eigen::VectorXd forward(const StateVector& state) const;
};

// Gradient has the same layer structure as the network.
struct QNetworkGrad {
  MlpParams model_extractor;
  MlpParams global_extractor;
  MlpParams q_head;

  static QNetworkGrad zeros_like(const QNetwork& net);
  void scale(double factor);
};

// d/dtheta of 0.5-free squared error sum_b (Q(s_b, a_b) - y_b)^2 / B,
// accumulated into grad; returns the loss.
double backprop_batch(const QNetwork& net, const std::vector<const Transition*>& batch,
                      const Eigen::VectorXd& targets, QNetworkGrad& grad);

int select_action(const QNetwork& net, const StateVector& state, double epsilon, Rng& rng);

class ReplayBuffer {
 public:
  explicit ReplayBuffer(int capacity = 10000) : capacity_(capacity) {}

  void push(Transition transition);
  std::vector<const Transition*> sample(int k, Rng& rng) const;
  int size() const { return static_cast<int>(storage_.size()); }
  int capacity() const { return capacity_; }

 private:
  int capacity_;
  int cursor_ = 0;
  std::vector<Transition> storage_;
};

struct EpsilonSchedule {
  double value = 1.0;
  double decay_factor = 0.995;
  double floor = 0.01;

  void decay() { value = std::max(floor, value * decay_factor); }
};

// Adam state; moment shapes mirror the parameters.
class Optimizer {
 public:
  explicit Optimizer(const QNetwork& net, double learning_rate = 1e-3);
  void step(QNetwork& net, const QNetworkGrad& grad);

 private:
  double lr_;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  int steps_ = 0;
  QNetworkGrad m_;
  QNetworkGrad v_;
};

Eigen::VectorXd td_targets(const std::vector<const Transition*>& batch,
                           const QNetwork& target_net, double gamma);

double train_step(QNetwork& net, const QNetwork& target_net, const ReplayBuffer& buffer,
                  Optimizer& opt, double gamma, int batch_size, Rng& rng);

void sync_target(const QNetwork& net, QNetwork& target_net);

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CheckpointCorrupt : CheckpointError {
  using CheckpointError::CheckpointError;
};
struct CheckpointVersionMismatch : CheckpointError {
  using CheckpointError::CheckpointError;
};
struct CheckpointSchemaMismatch : CheckpointError {
  using CheckpointError::CheckpointError;
};

struct CheckpointMeta {
  int epochs = 0;
  std::uint64_t seed = 0;
  double epsilon = 1.0;
};

void save_checkpoint(const QNetwork& net, const CheckpointMeta& meta, const std::string& path);
QNetwork load_checkpoint(const std::string& path, CheckpointMeta* meta = nullptr);

}  // namespace cobrapp
