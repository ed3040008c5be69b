#include "cobrapp/policy.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

namespace cobrapp {

namespace {

using nlohmann::json;

DenseLayer make_layer(int in, int out, bool relu, Rng& rng) {
  DenseLayer layer;
  layer.weights = Eigen::MatrixXd(out, in);
  const double std_dev = std::sqrt(2.0 / (in + out));
  for (int i = 0; i < out; ++i)
    for (int j = 0; j < in; ++j) layer.weights(i, j) = std_dev * rng.normal();
  layer.bias = Eigen::VectorXd::Zero(out);
  layer.relu = relu;
  return layer;
}

struct MlpCache {
  std::vector<Eigen::VectorXd> inputs;  // input to each layer
  std::vector<Eigen::VectorXd> pre;     // pre-activation of each layer
};

Eigen::VectorXd mlp_forward_cached(const MlpParams& mlp, Eigen::VectorXd value,
                                   MlpCache& cache) {
  cache.inputs.clear();
  cache.pre.clear();
  for (const auto& layer : mlp.layers) {
    cache.inputs.push_back(value);
    Eigen::VectorXd pre = layer.weights * value + layer.bias;
    cache.pre.push_back(pre);
    value = layer.relu ? pre.cwiseMax(0.0).eval() : pre;
  }
  return value;
}

Eigen::VectorXd mlp_backward(const MlpParams& mlp, const MlpCache& cache,
                             Eigen::VectorXd out_grad, MlpParams& grad) {
  for (int l = static_cast<int>(mlp.layers.size()) - 1; l >= 0; --l) {
    const DenseLayer& layer = mlp.layers[l];
    if (layer.relu) {
      for (int i = 0; i < out_grad.size(); ++i)
        if (cache.pre[l][i] <= 0.0) out_grad[i] = 0.0;
    }
    grad.layers[l].weights += out_grad * cache.inputs[l].transpose();
    grad.layers[l].bias += out_grad;
    out_grad = layer.weights.transpose() * out_grad;
  }
  return out_grad;
}

MlpParams zeros_like(const MlpParams& mlp) {
  MlpParams zero;
  zero.layers.reserve(mlp.layers.size());
  for (const auto& layer : mlp.layers) {
    DenseLayer z;
    z.weights = Eigen::MatrixXd::Zero(layer.weights.rows(), layer.weights.cols());
    z.bias = Eigen::VectorXd::Zero(layer.bias.size());
    z.relu = layer.relu;
    zero.layers.push_back(std::move(z));
  }
  return zero;
}

json mlp_to_json(const MlpParams& mlp) {
  json layers = json::array();
  for (const auto& layer : mlp.layers) {
    json weights = json::array();
    for (int i = 0; i < layer.weights.rows(); ++i) {
      json row = json::array();
      for (int j = 0; j < layer.weights.cols(); ++j) row.push_back(layer.weights(i, j));
      weights.push_back(std::move(row));
    }
    json bias = json::array();
    for (int i = 0; i < layer.bias.size(); ++i) bias.push_back(layer.bias[i]);
    layers.push_back({{"relu", layer.relu}, {"w", std::move(weights)}, {"b", std::move(bias)}});
  }
  return layers;
}

MlpParams mlp_from_json(const json& layers) {
  MlpParams mlp;
  for (const auto& entry : layers) {
    DenseLayer layer;
    layer.relu = entry.at("relu").get<bool>();
    const auto& weights = entry.at("w");
    const auto& bias = entry.at("b");
    const int rows = static_cast<int>(weights.size());
    if (rows == 0) throw CheckpointCorrupt("checkpoint layer has no rows");
    const int cols = static_cast<int>(weights[0].size());
    layer.weights = Eigen::MatrixXd(rows, cols);
    for (int i = 0; i < rows; ++i) {
      if (static_cast<int>(weights[i].size()) != cols)
        throw CheckpointCorrupt("checkpoint weight rows have inconsistent sizes");
      for (int j = 0; j < cols; ++j) layer.weights(i, j) = weights[i][j].get<double>();
    }
    if (static_cast<int>(bias.size()) != rows)
      throw CheckpointCorrupt("checkpoint bias size mismatch");
    layer.bias = Eigen::VectorXd(rows);
    for (int i = 0; i < rows; ++i) layer.bias[i] = bias[i].get<double>();
    mlp.layers.push_back(std::move(layer));
  }
  return mlp;
}

void check_chain(const MlpParams& mlp, int expected_in, int expected_out,
                 const std::string& name) {
  int current = expected_in;
  for (const auto& layer : mlp.layers) {
    if (layer.weights.cols() != current)
      throw CheckpointCorrupt("checkpoint " + name + " shape chain broken");
    current = static_cast<int>(layer.weights.rows());
  }
  if (current != expected_out)
    throw CheckpointCorrupt("checkpoint " + name + " output size mismatch");
}

}  // namespace

Eigen::VectorXd MlpParams::forward(const Eigen::VectorXd& input) const {
  MlpCache cache;
  return mlp_forward_cached(*this, input, cache);
}

QNetwork QNetwork::initialize(Rng& rng) {
  QNetwork net;
  net.model_extractor.layers.push_back(
      make_layer(kPoolSize * kFeaturesPerModel, 32, true, rng));
  net.model_extractor.layers.push_back(make_layer(32, 16, false, rng));
  net.global_extractor.layers.push_back(make_layer(kGlobalFeatures, 8, true, rng));
  net.global_extractor.layers.push_back(make_layer(8, 16, false, rng));
  net.q_head.layers.push_back(make_layer(32, 32, true, rng));
  net.q_head.layers.push_back(make_layer(32, 64, true, rng));
  net.q_head.layers.push_back(make_layer(64, 128, true, rng));
  net.q_head.layers.push_back(make_layer(128, kPoolSize, false, rng));
  return net;
}

Eigen::VectorXd QNetwork::forward(const StateVector& state) const {
  if (!state.per_model.allFinite() || !state.global.allFinite())
    throw std::invalid_argument("forward: non-finite state");
  const Eigen::VectorXd hidden_model = model_extractor.forward(state.per_model);
  const Eigen::VectorXd hidden_global = global_extractor.forward(state.global);
  Eigen::VectorXd decision(hidden_model.size() + hidden_global.size());
  decision << hidden_model, hidden_global;
  return q_head.forward(decision);
}

QNetworkGrad QNetworkGrad::zeros_like(const QNetwork& net) {
  QNetworkGrad grad;
  grad.model_extractor = cobrapp::zeros_like(net.model_extractor);
  grad.global_extractor = cobrapp::zeros_like(net.global_extractor);
  grad.q_head = cobrapp::zeros_like(net.q_head);
  return grad;
}

void QNetworkGrad::scale(double factor) {
  for (MlpParams* mlp : {&model_extractor, &global_extractor, &q_head}) {
    for (auto& layer : mlp->layers) {
      layer.weights *= factor;
      layer.bias *= factor;
    }
  }
}

double backprop_batch(const QNetwork& net, const std::vector<const Transition*>& batch,
                      const Eigen::VectorXd& targets, QNetworkGrad& grad) {
  const int batch_size = static_cast<int>(batch.size());
  double loss = 0.0;
  for (int b = 0; b < batch_size; ++b) {
    const Transition& transition = *batch[b];
    MlpCache model_cache, global_cache, head_cache;
    const Eigen::VectorXd hidden_model =
        mlp_forward_cached(net.model_extractor, transition.state.per_model, model_cache);
    const Eigen::VectorXd hidden_global =
        mlp_forward_cached(net.global_extractor, transition.state.global, global_cache);
    Eigen::VectorXd decision(hidden_model.size() + hidden_global.size());
    decision << hidden_model, hidden_global;
    const Eigen::VectorXd q = mlp_forward_cached(net.q_head, decision, head_cache);

    const double delta = q[transition.action] - targets[b];
    loss += delta * delta / batch_size;

    Eigen::VectorXd q_grad = Eigen::VectorXd::Zero(q.size());
    q_grad[transition.action] = 2.0 * delta / batch_size;
    const Eigen::VectorXd decision_grad =
        mlp_backward(net.q_head, head_cache, q_grad, grad.q_head);
    mlp_backward(net.model_extractor, model_cache, decision_grad.head(hidden_model.size()),
                 grad.model_extractor);
    mlp_backward(net.global_extractor, global_cache, decision_grad.tail(hidden_global.size()),
                 grad.global_extractor);
  }
  return loss;
}

int select_action(const QNetwork& net, const StateVector& state, double epsilon, Rng& rng) {
  if (epsilon < 0.0 || epsilon > 1.0)
    throw std::invalid_argument("select_action: epsilon must be in [0, 1]");
  if (epsilon > 0.0 && rng.uniform() < epsilon) return rng.uniform_int(kPoolSize);
  const Eigen::VectorXd q = net.forward(state);
  int best = 0;
  for (int i = 1; i < q.size(); ++i)
    if (q[i] > q[best]) best = i;  // ties keep the lowest index
  return best;
}

void ReplayBuffer::push(Transition transition) {
  if (static_cast<int>(storage_.size()) < capacity_) {
    storage_.push_back(std::move(transition));
  } else {
    storage_[cursor_] = std::move(transition);
    cursor_ = (cursor_ + 1) % capacity_;
  }
}

std::vector<const Transition*> ReplayBuffer::sample(int k, Rng& rng) const {
  const int n = size();
  if (k > n) throw std::invalid_argument("sample: buffer smaller than batch");
  std::vector<int> indices(n);
  for (int i = 0; i < n; ++i) indices[i] = i;
  std::vector<const Transition*> batch;
  batch.reserve(k);
  for (int i = 0; i < k; ++i) {
    const int j = i + rng.uniform_int(n - i);
    std::swap(indices[i], indices[j]);
    batch.push_back(&storage_[indices[i]]);
  }
  return batch;
}

Optimizer::Optimizer(const QNetwork& net, double learning_rate)
    : lr_(learning_rate),
      m_(QNetworkGrad::zeros_like(net)),
      v_(QNetworkGrad::zeros_like(net)) {}

void Optimizer::step(QNetwork& net, const QNetworkGrad& grad) {
  ++steps_;
  const double bias1 = 1.0 - std::pow(beta1_, steps_);
  const double bias2 = 1.0 - std::pow(beta2_, steps_);

  MlpParams* params[] = {&net.model_extractor, &net.global_extractor, &net.q_head};
  const MlpParams* grads[] = {&grad.model_extractor, &grad.global_extractor, &grad.q_head};
  MlpParams* moments1[] = {&m_.model_extractor, &m_.global_extractor, &m_.q_head};
  MlpParams* moments2[] = {&v_.model_extractor, &v_.global_extractor, &v_.q_head};

  for (int p = 0; p < 3; ++p) {
    for (std::size_t l = 0; l < params[p]->layers.size(); ++l) {
      auto update = [&](Eigen::Ref<Eigen::MatrixXd> value, const Eigen::MatrixXd& g,
                        Eigen::Ref<Eigen::MatrixXd> m, Eigen::Ref<Eigen::MatrixXd> v) {
        m = beta1_ * m + (1.0 - beta1_) * g;
        v = beta2_ * v.array().matrix() + (1.0 - beta2_) * g.cwiseProduct(g);
        const Eigen::MatrixXd m_hat = m / bias1;
        const Eigen::MatrixXd v_hat = v / bias2;
        value.array() -= lr_ * m_hat.array() / (v_hat.array().sqrt() + eps_);
      };
      update(params[p]->layers[l].weights, grads[p]->layers[l].weights,
             moments1[p]->layers[l].weights, moments2[p]->layers[l].weights);
      Eigen::MatrixXd bias_grad = grads[p]->layers[l].bias;
      Eigen::Map<Eigen::MatrixXd> bias_value(params[p]->layers[l].bias.data(),
                                             params[p]->layers[l].bias.size(), 1);
      Eigen::Map<Eigen::MatrixXd> bias_m(moments1[p]->layers[l].bias.data(),
                                         moments1[p]->layers[l].bias.size(), 1);
      Eigen::Map<Eigen::MatrixXd> bias_v(moments2[p]->layers[l].bias.data(),
                                         moments2[p]->layers[l].bias.size(), 1);
      update(bias_value, bias_grad, bias_m, bias_v);
    }
  }
}

Eigen::VectorXd td_targets(const std::vector<const Transition*>& batch,
                           const QNetwork& target_net, double gamma) {
  if (gamma < 0.0 || gamma >= 1.0)
    throw std::invalid_argument("td_targets: gamma must be in [0, 1)");
  Eigen::VectorXd targets(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Transition& transition = *batch[b];
    double target = transition.reward;
    if (!transition.terminal && gamma > 0.0) {
      target += gamma * target_net.forward(transition.next_state).maxCoeff();
    }
    targets[static_cast<int>(b)] = target;
  }
  return targets;
}

double train_step(QNetwork& net, const QNetwork& target_net, const ReplayBuffer& buffer,
                  Optimizer& opt, double gamma, int batch_size, Rng& rng) {
  if (buffer.size() < batch_size) return std::numeric_limits<double>::quiet_NaN();
  const auto batch = buffer.sample(batch_size, rng);
  const Eigen::VectorXd targets = td_targets(batch, target_net, gamma);
  QNetworkGrad grad = QNetworkGrad::zeros_like(net);
  const double loss = backprop_batch(net, batch, targets, grad);
  opt.step(net, grad);
  return loss;
}

void sync_target(const QNetwork& net, QNetwork& target_net) {
  auto check = [](const MlpParams& a, const MlpParams& b) {
    if (a.layers.size() != b.layers.size())
      throw std::invalid_argument("sync_target: architecture mismatch");
    for (std::size_t l = 0; l < a.layers.size(); ++l) {
      if (a.layers[l].weights.rows() != b.layers[l].weights.rows() ||
          a.layers[l].weights.cols() != b.layers[l].weights.cols())
        throw std::invalid_argument("sync_target: layer shape mismatch");
    }
  };
  check(net.model_extractor, target_net.model_extractor);
  check(net.global_extractor, target_net.global_extractor);
  check(net.q_head, target_net.q_head);
  target_net = net;
}

void save_checkpoint(const QNetwork& net, const CheckpointMeta& meta,
                     const std::string& path) {
  json doc;
  doc["version"] = 1;
  doc["feature_schema"] = kFeatureSchema;
  doc["arch"] = {{"state_dim", kStateDim},
                 {"model_features", kPoolSize * kFeaturesPerModel},
                 {"global_features", kGlobalFeatures},
                 {"actions", kPoolSize}};
  doc["params"] = {{"model_extractor", mlp_to_json(net.model_extractor)},
                   {"global_extractor", mlp_to_json(net.global_extractor)},
                   {"q_head", mlp_to_json(net.q_head)}};
  doc["meta"] = {{"epochs", meta.epochs}, {"seed", meta.seed}, {"epsilon", meta.epsilon}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  out << doc.dump(1) << '\n';
}

QNetwork load_checkpoint(const std::string& path, CheckpointMeta* meta) {
  std::ifstream in(path);
  if (!in) throw CheckpointCorrupt("cannot open checkpoint: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& error) {
    throw CheckpointCorrupt(std::string("checkpoint parse failed: ") + error.what());
  }
  try {
    if (doc.at("version").get<int>() != 1)
      throw CheckpointVersionMismatch("unsupported checkpoint version");
    if (doc.at("feature_schema").get<std::string>() != kFeatureSchema)
      throw CheckpointSchemaMismatch("feature schema mismatch");
    QNetwork net;
    net.model_extractor = mlp_from_json(doc.at("params").at("model_extractor"));
    net.global_extractor = mlp_from_json(doc.at("params").at("global_extractor"));
    net.q_head = mlp_from_json(doc.at("params").at("q_head"));
    check_chain(net.model_extractor, kPoolSize * kFeaturesPerModel, 16, "model_extractor");
    check_chain(net.global_extractor, kGlobalFeatures, 16, "global_extractor");
    check_chain(net.q_head, 32, kPoolSize, "q_head");
    if (meta != nullptr && doc.contains("meta")) {
      meta->epochs = doc["meta"].value("epochs", 0);
      meta->seed = doc["meta"].value("seed", std::uint64_t{0});
      meta->epsilon = doc["meta"].value("epsilon", 1.0);
    }
    return net;
  } catch (const CheckpointError&) {
    throw;
  } catch (const json::exception& error) {
    throw CheckpointCorrupt(std::string("checkpoint structure invalid: ") + error.what());
  }
}

}  // namespace cobrapp
