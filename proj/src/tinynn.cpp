#include "trajcurate/tinynn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>
#include <string>

#include <json.hpp>

#include "trajcurate/error.hpp"

namespace trajcurate::nn {

namespace {

// Per-sample activations reused across a minibatch.
struct Workspace {
  std::vector<std::vector<double>> act;  // act[0] = input, act[l+1] = output of layer l
  std::vector<std::vector<double>> delta;

  explicit Workspace(const MlpClassifier& m) {
    act.resize(m.layers.size() + 1);
    delta.resize(m.layers.size() + 1);
    act[0].resize(m.input_size());
    delta[0].resize(m.input_size());
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
      act[l + 1].resize(m.layers[l].out);
      delta[l + 1].resize(m.layers[l].out);
    }
  }
};

void dense(const Layer& layer, const double* x, double* y) {
  std::copy(layer.bias.begin(), layer.bias.end(), y);
  for (std::size_t i = 0; i < layer.in; ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    const double* wrow = layer.weights.data() + i * layer.out;
    for (std::size_t j = 0; j < layer.out; ++j) y[j] += xi * wrow[j];
  }
}

void softmax_inplace(std::vector<double>& z) {
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (auto& v : z) {
    v = std::exp(v - m);
    s += v;
  }
  for (auto& v : z) v /= s;
}

// Fills ws.act; the last activation holds raw logits.
void forward_pass(const MlpClassifier& m, std::span<const double> x, Workspace& ws) {
  std::copy(x.begin(), x.end(), ws.act[0].begin());
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    dense(m.layers[l], ws.act[l].data(), ws.act[l + 1].data());
    if (l + 1 < m.layers.size())
      for (auto& v : ws.act[l + 1]) v = v > 0.0 ? v : 0.0;
  }
}

void check_input(const MlpClassifier& m, std::span<const double> x) {
  if (x.size() != m.input_size())
    throw Error(Errc::DimensionMismatch, "input length " + std::to_string(x.size()) +
                                             ", model expects " + std::to_string(m.input_size()));
}

std::vector<Layer> zeros_like(const MlpClassifier& m) {
  std::vector<Layer> g;
  g.reserve(m.layers.size());
  for (const auto& l : m.layers)
    g.push_back({l.in, l.out, std::vector<double>(l.weights.size(), 0.0),
                 std::vector<double>(l.bias.size(), 0.0)});
  return g;
}

void check_finite(const MlpClassifier& m) {
  for (const auto& l : m.layers) {
    for (double v : l.weights)
      if (!std::isfinite(v)) throw Error(Errc::NonFiniteValue, "model weights diverged");
    for (double v : l.bias)
      if (!std::isfinite(v)) throw Error(Errc::NonFiniteValue, "model biases diverged");
  }
}

}  // namespace

void LabeledSet::push(std::span<const double> features, int label) {
  if (dim == 0) dim = features.size();
  if (features.size() != dim) throw Error(Errc::DimensionMismatch, "feature length");
  x.insert(x.end(), features.begin(), features.end());
  labels.push_back(label);
}

std::size_t MlpClassifier::num_parameters() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.bias.size();
  return n;
}

MlpClassifier init(const std::vector<std::size_t>& layer_sizes, std::uint64_t seed) {
  if (layer_sizes.size() < 2)
    throw Error(Errc::InvalidArchitecture, "need at least an input and an output size");
  for (auto s : layer_sizes)
    if (s == 0) throw Error(Errc::InvalidArchitecture, "layer sizes must be positive");

  MlpClassifier m;
  m.layer_sizes = layer_sizes;
  m.seed = seed;
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    Layer layer{layer_sizes[l], layer_sizes[l + 1], {}, {}};
    const double limit = std::sqrt(6.0 / static_cast<double>(layer.in));
    std::uniform_real_distribution<double> dist(-limit, limit);
    layer.weights.resize(layer.in * layer.out);
    for (auto& w : layer.weights) w = dist(rng);
    layer.bias.assign(layer.out, 0.0);
    m.layers.push_back(std::move(layer));
  }
  return m;
}

std::vector<double> logits(const MlpClassifier& model, std::span<const double> x) {
  check_input(model, x);
  Workspace ws(model);
  forward_pass(model, x, ws);
  return ws.act.back();
}

std::vector<double> forward(const MlpClassifier& model, std::span<const double> x) {
  auto z = logits(model, x);
  softmax_inplace(z);
  return z;
}

LossAndGrad loss_and_grad(const MlpClassifier& model, const LabeledSet& data,
                          std::span<const std::size_t> rows, double l2) {
  if (data.dim != model.input_size())
    throw Error(Errc::DimensionMismatch, "training features do not match model input");
  const auto classes = static_cast<int>(model.num_classes());
  LossAndGrad out{0.0, zeros_like(model)};
  if (rows.empty()) return out;

  Workspace ws(model);
  const std::size_t L = model.layers.size();
  double total = 0.0;
  for (std::size_t r : rows) {
    const int label = data.labels[r];
    if (label < 0 || label >= classes)
      throw Error(Errc::LabelOutOfRange, "label " + std::to_string(label));
    forward_pass(model, data.row(r), ws);

    auto& z = ws.act[L];
    const double m = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (double v : z) s += std::exp(v - m);
    const double log_norm = m + std::log(s);
    total += log_norm - z[static_cast<std::size_t>(label)];

    auto& d = ws.delta[L];
    for (std::size_t j = 0; j < z.size(); ++j) d[j] = std::exp(z[j] - log_norm);
    d[static_cast<std::size_t>(label)] -= 1.0;

    for (std::size_t l = L; l-- > 0;) {
      const Layer& layer = model.layers[l];
      Layer& g = out.grads[l];
      const auto& a = ws.act[l];
      const auto& dl = ws.delta[l + 1];
      for (std::size_t i = 0; i < layer.in; ++i) {
        const double ai = a[i];
        if (ai == 0.0) continue;
        double* grow = g.weights.data() + i * layer.out;
        for (std::size_t j = 0; j < layer.out; ++j) grow[j] += ai * dl[j];
      }
      for (std::size_t j = 0; j < layer.out; ++j) g.bias[j] += dl[j];
      if (l == 0) break;
      auto& prev = ws.delta[l];
      for (std::size_t i = 0; i < layer.in; ++i) {
        if (a[i] <= 0.0) {  // relu gate
          prev[i] = 0.0;
          continue;
        }
        const double* wrow = layer.weights.data() + i * layer.out;
        double acc = 0.0;
        for (std::size_t j = 0; j < layer.out; ++j) acc += wrow[j] * dl[j];
        prev[i] = acc;
      }
    }
  }

  const double inv_n = 1.0 / static_cast<double>(rows.size());
  out.loss = total * inv_n;
  double penalty = 0.0;
  for (std::size_t l = 0; l < L; ++l) {
    const Layer& layer = model.layers[l];
    Layer& g = out.grads[l];
    for (std::size_t k = 0; k < g.weights.size(); ++k) {
      g.weights[k] = g.weights[k] * inv_n + l2 * layer.weights[k];
      penalty += layer.weights[k] * layer.weights[k];
    }
    for (auto& v : g.bias) v *= inv_n;
  }
  out.loss += 0.5 * l2 * penalty;
  return out;
}

LossAndGrad loss_and_grad(const MlpClassifier& model, const LabeledSet& data, double l2) {
  std::vector<std::size_t> rows(data.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return loss_and_grad(model, data, rows, l2);
}

TrainResult train(const MlpClassifier& model, const LabeledSet& data, const TrainConfig& cfg) {
  if (data.size() == 0) throw Error(Errc::EmptyTrainingSet, "no training examples");
  if (!(cfg.learning_rate >= 0.0) || cfg.epochs == 0 || cfg.batch_size == 0 || !(cfg.l2 >= 0.0))
    throw Error(Errc::InvalidConfig, "invalid training configuration");

  TrainResult result;
  result.model = model;
  result.initial_loss = loss_and_grad(model, data, cfg.l2).loss;

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  MlpClassifier& m = result.model;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const std::span<const std::size_t> rows(order.data() + start, stop - start);
      auto lg = loss_and_grad(m, data, rows, cfg.l2);
      for (std::size_t l = 0; l < m.layers.size(); ++l) {
        auto& layer = m.layers[l];
        const auto& g = lg.grads[l];
        for (std::size_t k = 0; k < layer.weights.size(); ++k)
          layer.weights[k] -= cfg.learning_rate * g.weights[k];
        for (std::size_t k = 0; k < layer.bias.size(); ++k)
          layer.bias[k] -= cfg.learning_rate * g.bias[k];
      }
      epoch_loss += lg.loss;
      ++batches;
    }
    check_finite(m);
    result.epoch_loss.push_back(epoch_loss / static_cast<double>(batches));
  }
  result.final_loss = loss_and_grad(m, data, cfg.l2).loss;
  return result;
}

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

void quantize_to_f32(MlpClassifier& model) {
  for (auto& l : model.layers) {
    for (auto& w : l.weights) w = static_cast<double>(static_cast<float>(w));
    for (auto& b : l.bias) b = static_cast<double>(static_cast<float>(b));
  }
}

std::vector<double> flatten(const MlpClassifier& model) {
  std::vector<double> p;
  p.reserve(model.num_parameters());
  for (const auto& l : model.layers) {
    p.insert(p.end(), l.weights.begin(), l.weights.end());
    p.insert(p.end(), l.bias.begin(), l.bias.end());
  }
  return p;
}

void unflatten(MlpClassifier& model, std::span<const double> params) {
  if (params.size() != model.num_parameters())
    throw Error(Errc::DimensionMismatch, "parameter count");
  std::size_t k = 0;
  for (auto& l : model.layers) {
    for (auto& w : l.weights) w = params[k++];
    for (auto& b : l.bias) b = params[k++];
  }
}

// Checkpoint: one line of JSON, '\n', then every parameter as f32 LE.
void save_checkpoint(const MlpClassifier& model, const std::filesystem::path& path) {
  nlohmann::json header = {{"format_version", 1},
                           {"layer_sizes", model.layer_sizes},
                           {"activation", "relu"},
                           {"seed", model.seed},
                           {"num_parameters", model.num_parameters()}};
  std::string bytes = header.dump() + "\n";
  for (double v : flatten(model)) {
    const auto u = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    for (int b = 0; b < 4; ++b) bytes.push_back(static_cast<char>((u >> (8 * b)) & 0xFFu));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::IoFailure, "short write to " + path.string());
}

MlpClassifier load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  const auto nl = bytes.find('\n');
  if (nl == std::string::npos) throw Error(Errc::CorruptBlob, path.string() + ": missing header");

  MlpClassifier model;
  try {
    const auto header = nlohmann::json::parse(bytes.substr(0, nl));
    if (header.at("activation").get<std::string>() != "relu")
      throw Error(Errc::CorruptBlob, path.string() + ": unsupported activation");
    model = init(header.at("layer_sizes").get<std::vector<std::size_t>>(),
                 header.at("seed").get<std::uint64_t>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::CorruptBlob, path.string() + ": " + e.what());
  }
  const std::size_t n = model.num_parameters();
  if (bytes.size() - nl - 1 != 4 * n)
    throw Error(Errc::TruncatedBlob, path.string() + ": parameter blob size");
  std::vector<double> params(n);
  const char* p = bytes.data() + nl + 1;
  for (std::size_t k = 0; k < n; ++k, p += 4) {
    std::uint32_t u = 0;
    for (int b = 0; b < 4; ++b)
      u |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[b])) << (8 * b);
    params[k] = static_cast<double>(std::bit_cast<float>(u));
  }
  unflatten(model, params);
  check_finite(model);
  return model;
}

}  // namespace trajcurate::nn
