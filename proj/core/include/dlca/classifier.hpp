#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dlca/dataset.hpp"

namespace dlca::nn {

// LSTM(hidden) -> Dense(dense1, ReLU) -> Dense(dense2, sigmoid) -> Softmax(4).
// The input dimension is 1 (one current sample per timestep) and the class
// count is fixed at 4 (the BB84 states); hidden sizes are parameters so tests
// can run exhaustive gradient checks on a tiny instance.
struct Architecture {
  int hidden = 40;
  int dense1 = 40;
  int dense2 = 20;

  static constexpr int kClasses = 4;
  // Gate weights act on the concatenated [h, x, 1] (bias column included).
  int gate_cols() const { return hidden + 2; }
  std::size_t parameter_count() const;
};

struct TensorSpec {
  std::string name;
  std::size_t offset;
  int rows;
  int cols;
  bool has_bias_column;  // last column is a bias, excluded from fan-in init
};

class LstmClassifier {
 public:
  explicit LstmClassifier(Architecture arch = {});

  // Weights uniform in +-1/sqrt(fan_in), biases zero, forget-gate bias +1.
  static LstmClassifier initialized(Architecture arch, std::uint64_t init_seed);

  const Architecture& arch() const { return arch_; }
  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }
  const std::vector<TensorSpec>& tensors() const { return tensors_; }

  std::span<double> tensor(const TensorSpec& t) {
    return {params_.data() + t.offset, static_cast<std::size_t>(t.rows) * t.cols};
  }
  std::span<const double> tensor(const TensorSpec& t) const {
    return {params_.data() + t.offset, static_cast<std::size_t>(t.rows) * t.cols};
  }

  bool finite() const;

 private:
  Architecture arch_;
  std::vector<double> params_;
  std::vector<TensorSpec> tensors_;
};

// Softmax output for one (preprocessed) current.
std::array<double, 4> forward(const LstmClassifier& model, std::span<const double> seq);

// Hidden-state activations h^(t), stored unit-major: trace[u*T + t].
struct HiddenTrace {
  int units = 0;
  int steps = 0;
  std::vector<double> h;
};

std::array<double, 4> forward_traced(const LstmClassifier& model, std::span<const double> seq,
                                     HiddenTrace* trace);

HiddenTrace hidden_activation_trace(const LstmClassifier& model, std::span<const double> seq);

// Sparse categorical cross entropy with an epsilon floor of 1e-12.
double loss(const std::array<double, 4>& probs, int label);

struct Gradients {
  std::vector<double> g;
  double mean_loss = 0.0;
};

// Exact gradients of the mean batch loss via backpropagation through time.
// Per-sample gradients are reduced in sample order, so the result does not
// depend on the worker count.
Gradients backward(const LstmClassifier& model, const data::PhotocurrentDataset& ds,
                   std::span<const std::size_t> batch, int workers = 1);

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;

  static AdamState for_parameters(std::size_t n) {
    AdamState s;
    s.m.assign(n, 0.0);
    s.v.assign(n, 0.0);
    return s;
  }
};

// Canonical Adam update with bias correction.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

struct TrainConfig {
  int epochs = 1;  // the reference regimen is exactly one epoch
  int batch_size = 32;
  std::uint64_t shuffle_seed = 1;
  std::uint64_t init_seed = 2;
  int workers = 1;
};

struct TrainResult {
  LstmClassifier model;
  std::vector<double> batch_loss;
};

TrainResult train(const data::PhotocurrentDataset& train_set, const Architecture& arch,
                  const TrainConfig& config);

struct EvalResult {
  double accuracy = 0.0;
  // confusion[true][predicted]
  std::array<std::array<std::uint64_t, 4>, 4> confusion{};

  std::uint64_t class_total(int label) const;
  double class_accuracy(int label) const;
};

EvalResult evaluate(const LstmClassifier& model, const data::PhotocurrentDataset& test_set,
                    int workers = 1);

struct ConfidenceRow {
  std::uint64_t truth_count = 0;
  std::uint64_t predicted_count = 0;
  double summed_confidence = 0.0;  // sum of p(ground truth) over that class
};

std::array<ConfidenceRow, 4> confidence_report(const LstmClassifier& model,
                                               const data::PhotocurrentDataset& test_set,
                                               int workers = 1);

// Checkpoint container: magic "DLCAMODL", version u16, length-prefixed UTF-8
// metadata, parameter blob (little-endian f64), CRC-32 trailer.
void save_model(const LstmClassifier& model, const std::filesystem::path& path,
                const std::vector<std::pair<std::string, std::string>>& extra_meta = {});

struct ModelLoadResult {
  LstmClassifier model;
  std::string metadata_json;
  std::vector<std::string> warnings;
};

ModelLoadResult load_model(const std::filesystem::path& path);

}  // namespace dlca::nn
