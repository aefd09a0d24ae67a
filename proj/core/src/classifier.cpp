#include "dlca/classifier.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "dlca/errors.hpp"
#include "dlca/parallel.hpp"
#include "dlca/rng.hpp"
#include "dlca/version.hpp"

namespace dlca::nn {

namespace {

constexpr double kLossFloor = 1e-12;

inline double sigmoid(double x) {
  // Saturation-safe in both directions.
  if (x >= 0.0) {
    const double z = std::exp(-x);
    return 1.0 / (1.0 + z);
  }
  const double z = std::exp(x);
  return z / (1.0 + z);
}

std::vector<TensorSpec> make_tensors(const Architecture& a) {
  std::vector<TensorSpec> t;
  std::size_t off = 0;
  const auto add = [&](const char* name, int rows, int cols, bool bias_col) {
    t.push_back({name, off, rows, cols, bias_col});
    off += static_cast<std::size_t>(rows) * cols;
  };
  add("W_f", a.hidden, a.gate_cols(), true);
  add("W_i", a.hidden, a.gate_cols(), true);
  add("W_o", a.hidden, a.gate_cols(), true);
  add("W_c", a.hidden, a.gate_cols(), true);
  add("W1", a.dense1, a.hidden, false);
  add("b1", a.dense1, 1, false);
  add("W2", a.dense2, a.dense1, false);
  add("b2", a.dense2, 1, false);
  add("W3", Architecture::kClasses, a.dense2, false);
  add("b3", Architecture::kClasses, 1, false);
  return t;
}

// Scratch for one sample's forward/backward pass; sized once and reused.
struct Workspace {
  // per-timestep caches, length T*hidden each
  std::vector<double> f, i, o, g, c, tanh_c, h;
  // dense caches
  std::vector<double> z1, a1, a2;
  std::array<double, 4> probs{};
  // backward scratch
  std::vector<double> dh, dc, dpre;  // dpre holds 4*hidden gate deltas
  std::vector<double> d1, d2;

  void resize(const Architecture& a, std::size_t T) {
    const std::size_t n = T * static_cast<std::size_t>(a.hidden);
    f.resize(n);
    i.resize(n);
    o.resize(n);
    g.resize(n);
    c.resize(n);
    tanh_c.resize(n);
    h.resize(n);
    z1.resize(a.dense1);
    a1.resize(a.dense1);
    a2.resize(a.dense2);
    dh.resize(a.hidden);
    dc.resize(a.hidden);
    dpre.resize(4 * static_cast<std::size_t>(a.hidden));
    d1.resize(a.dense1);
    d2.resize(a.dense2);
  }
};

// Shared recursion: fills the workspace caches and the output probabilities.
void run_forward(const LstmClassifier& model, std::span<const double> seq, Workspace& w) {
  const Architecture& a = model.arch();
  const int H = a.hidden;
  const int cols = a.gate_cols();
  const std::size_t T = seq.size();
  w.resize(a, T);

  const double* params = model.parameters().data();
  const double* gates = params;  // W_f, W_i, W_o, W_c contiguous, 4*H rows
  const std::size_t gate_block = static_cast<std::size_t>(H) * cols;

  std::vector<double> h_prev(H, 0.0), c_prev(H, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    const double x = seq[t];
    double* ft = w.f.data() + t * H;
    double* it = w.i.data() + t * H;
    double* ot = w.o.data() + t * H;
    double* gt = w.g.data() + t * H;
    double* ct = w.c.data() + t * H;
    double* tct = w.tanh_c.data() + t * H;
    double* ht = w.h.data() + t * H;
    for (int j = 0; j < H; ++j) {
      std::array<double, 4> pre{};
      for (int gate = 0; gate < 4; ++gate) {
        const double* row = gates + gate * gate_block + static_cast<std::size_t>(j) * cols;
        double s = row[H] * x + row[H + 1];
        for (int k = 0; k < H; ++k) s += row[k] * h_prev[k];
        pre[gate] = s;
      }
      ft[j] = sigmoid(pre[0]);
      it[j] = sigmoid(pre[1]);
      ot[j] = sigmoid(pre[2]);
      gt[j] = std::tanh(pre[3]);
      ct[j] = ft[j] * c_prev[j] + it[j] * gt[j];
      tct[j] = std::tanh(ct[j]);
      ht[j] = ot[j] * tct[j];
    }
    std::copy(ht, ht + H, h_prev.begin());
    std::copy(ct, ct + H, c_prev.begin());
  }

  // Dense stack on the final hidden state (all-zero when T == 0).
  const double* hT = T > 0 ? w.h.data() + (T - 1) * H : h_prev.data();
  const TensorSpec& W1 = model.tensors()[4];
  const TensorSpec& b1 = model.tensors()[5];
  const TensorSpec& W2 = model.tensors()[6];
  const TensorSpec& b2 = model.tensors()[7];
  const TensorSpec& W3 = model.tensors()[8];
  const TensorSpec& b3 = model.tensors()[9];

  for (int r = 0; r < a.dense1; ++r) {
    const double* row = params + W1.offset + static_cast<std::size_t>(r) * H;
    double s = params[b1.offset + r];
    for (int k = 0; k < H; ++k) s += row[k] * hT[k];
    w.z1[r] = s;
    w.a1[r] = s > 0.0 ? s : 0.0;
  }
  for (int r = 0; r < a.dense2; ++r) {
    const double* row = params + W2.offset + static_cast<std::size_t>(r) * a.dense1;
    double s = params[b2.offset + r];
    for (int k = 0; k < a.dense1; ++k) s += row[k] * w.a1[k];
    w.a2[r] = sigmoid(s);
  }
  std::array<double, 4> logits{};
  for (int r = 0; r < Architecture::kClasses; ++r) {
    const double* row = params + W3.offset + static_cast<std::size_t>(r) * a.dense2;
    double s = params[b3.offset + r];
    for (int k = 0; k < a.dense2; ++k) s += row[k] * w.a2[k];
    logits[r] = s;
  }
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (int r = 0; r < 4; ++r) {
    w.probs[r] = std::exp(logits[r] - m);
    z += w.probs[r];
  }
  for (int r = 0; r < 4; ++r) w.probs[r] /= z;
}

// Accumulates d(loss)/d(params) for one sample into grad (scaled by weight).
void run_backward(const LstmClassifier& model, std::span<const double> seq, int label,
                  Workspace& w, double weight, std::span<double> grad) {
  const Architecture& a = model.arch();
  const int H = a.hidden;
  const int cols = a.gate_cols();
  const std::size_t T = seq.size();
  const double* params = model.parameters().data();
  const TensorSpec& W1 = model.tensors()[4];
  const TensorSpec& b1 = model.tensors()[5];
  const TensorSpec& W2 = model.tensors()[6];
  const TensorSpec& b2 = model.tensors()[7];
  const TensorSpec& W3 = model.tensors()[8];
  const TensorSpec& b3 = model.tensors()[9];

  // Softmax + cross entropy: dlogits = probs - onehot.
  std::array<double, 4> dlogits = w.probs;
  dlogits[label] -= 1.0;
  for (auto& d : dlogits) d *= weight;

  for (int r = 0; r < 4; ++r) {
    double* grow = grad.data() + W3.offset + static_cast<std::size_t>(r) * a.dense2;
    for (int k = 0; k < a.dense2; ++k) grow[k] += dlogits[r] * w.a2[k];
    grad[b3.offset + r] += dlogits[r];
  }
  for (int k = 0; k < a.dense2; ++k) {
    double s = 0.0;
    for (int r = 0; r < 4; ++r) s += params[W3.offset + static_cast<std::size_t>(r) * a.dense2 + k] * dlogits[r];
    w.d2[k] = s * w.a2[k] * (1.0 - w.a2[k]);
  }
  const double* hT = w.h.data() + (T - 1) * H;
  for (int r = 0; r < a.dense2; ++r) {
    double* grow = grad.data() + W2.offset + static_cast<std::size_t>(r) * a.dense1;
    for (int k = 0; k < a.dense1; ++k) grow[k] += w.d2[r] * w.a1[k];
    grad[b2.offset + r] += w.d2[r];
  }
  for (int k = 0; k < a.dense1; ++k) {
    double s = 0.0;
    for (int r = 0; r < a.dense2; ++r) s += params[W2.offset + static_cast<std::size_t>(r) * a.dense1 + k] * w.d2[r];
    w.d1[k] = w.z1[k] > 0.0 ? s : 0.0;
  }
  std::fill(w.dh.begin(), w.dh.end(), 0.0);
  std::fill(w.dc.begin(), w.dc.end(), 0.0);
  for (int r = 0; r < a.dense1; ++r) {
    double* grow = grad.data() + W1.offset + static_cast<std::size_t>(r) * H;
    for (int k = 0; k < H; ++k) grow[k] += w.d1[r] * hT[k];
    grad[b1.offset + r] += w.d1[r];
  }
  for (int k = 0; k < H; ++k) {
    double s = 0.0;
    for (int r = 0; r < a.dense1; ++r) s += params[W1.offset + static_cast<std::size_t>(r) * H + k] * w.d1[r];
    w.dh[k] = s;
  }

  const double* gates = params;
  const std::size_t gate_block = static_cast<std::size_t>(H) * cols;
  std::vector<double> dh_prev(H), zeros(H, 0.0);
  for (std::size_t ti = T; ti-- > 0;) {
    const double x = seq[ti];
    const double* ft = w.f.data() + ti * H;
    const double* it = w.i.data() + ti * H;
    const double* ot = w.o.data() + ti * H;
    const double* gt = w.g.data() + ti * H;
    const double* tct = w.tanh_c.data() + ti * H;
    const double* c_prev = ti > 0 ? w.c.data() + (ti - 1) * H : zeros.data();
    const double* h_prev = ti > 0 ? w.h.data() + (ti - 1) * H : zeros.data();

    for (int j = 0; j < H; ++j) {
      const double dcj = w.dc[j] + w.dh[j] * ot[j] * (1.0 - tct[j] * tct[j]);
      const double dof = w.dh[j] * tct[j];
      w.dpre[0 * H + j] = dcj * c_prev[j] * ft[j] * (1.0 - ft[j]);
      w.dpre[1 * H + j] = dcj * gt[j] * it[j] * (1.0 - it[j]);
      w.dpre[2 * H + j] = dof * ot[j] * (1.0 - ot[j]);
      w.dpre[3 * H + j] = dcj * it[j] * (1.0 - gt[j] * gt[j]);
      w.dc[j] = dcj * ft[j];
    }
    std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
    for (int gate = 0; gate < 4; ++gate) {
      const double* wg = gates + gate * gate_block;
      double* gg = grad.data() + gate * gate_block;
      const double* dp = w.dpre.data() + gate * H;
      for (int j = 0; j < H; ++j) {
        const double d = dp[j];
        if (d == 0.0) continue;
        double* grow = gg + static_cast<std::size_t>(j) * cols;
        const double* wrow = wg + static_cast<std::size_t>(j) * cols;
        for (int k = 0; k < H; ++k) {
          grow[k] += d * h_prev[k];
          dh_prev[k] += d * wrow[k];
        }
        grow[H] += d * x;
        grow[H + 1] += d;
      }
    }
    std::copy(dh_prev.begin(), dh_prev.end(), w.dh.begin());
  }
}

void check_label(int label) {
  if (label < 0 || label >= Architecture::kClasses)
    throw ConfigError("class label out of range 0..3");
}

constexpr char kModelMagic[8] = {'D', 'L', 'C', 'A', 'M', 'O', 'D', 'L'};
constexpr std::uint16_t kModelFormatVersion = 1;

}  // namespace

std::size_t Architecture::parameter_count() const {
  const auto t = make_tensors(*this);
  const auto& last = t.back();
  return last.offset + static_cast<std::size_t>(last.rows) * last.cols;
}

LstmClassifier::LstmClassifier(Architecture arch) : arch_(arch), tensors_(make_tensors(arch)) {
  if (arch.hidden < 1 || arch.dense1 < 1 || arch.dense2 < 1)
    throw ConfigError("architecture sizes must be positive");
  params_.assign(arch.parameter_count(), 0.0);
}

LstmClassifier LstmClassifier::initialized(Architecture arch, std::uint64_t init_seed) {
  LstmClassifier model(arch);
  Rng rng(init_seed);
  for (const TensorSpec& t : model.tensors_) {
    auto data = model.tensor(t);
    if (t.cols == 1 && t.rows > 0 && t.name[0] == 'b') continue;  // biases stay zero
    const int fan_in = t.has_bias_column ? t.cols - 1 : t.cols;
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (int r = 0; r < t.rows; ++r) {
      for (int c = 0; c < t.cols; ++c) {
        const bool is_bias = t.has_bias_column && c == t.cols - 1;
        double v = 0.0;
        if (!is_bias) v = (2.0 * rng.uniform() - 1.0) * bound;
        data[static_cast<std::size_t>(r) * t.cols + c] = v;
      }
    }
  }
  // Forget-gate bias +1 eases gradient flow through long sequences.
  const TensorSpec& wf = model.tensors_[0];
  auto wf_data = model.tensor(wf);
  for (int r = 0; r < wf.rows; ++r)
    wf_data[static_cast<std::size_t>(r) * wf.cols + wf.cols - 1] = 1.0;
  return model;
}

bool LstmClassifier::finite() const {
  return std::all_of(params_.begin(), params_.end(),
                     [](double v) { return std::isfinite(v); });
}

std::array<double, 4> forward(const LstmClassifier& model, std::span<const double> seq) {
  if (!model.finite()) throw NumericalError("model parameters contain NaN/Inf");
  Workspace w;
  run_forward(model, seq, w);
  return w.probs;
}

std::array<double, 4> forward_traced(const LstmClassifier& model, std::span<const double> seq,
                                     HiddenTrace* trace) {
  if (!model.finite()) throw NumericalError("model parameters contain NaN/Inf");
  Workspace w;
  run_forward(model, seq, w);
  if (trace != nullptr) {
    const int H = model.arch().hidden;
    const auto T = static_cast<int>(seq.size());
    trace->units = H;
    trace->steps = T;
    trace->h.assign(static_cast<std::size_t>(H) * T, 0.0);
    for (int t = 0; t < T; ++t)
      for (int u = 0; u < H; ++u)
        trace->h[static_cast<std::size_t>(u) * T + t] = w.h[static_cast<std::size_t>(t) * H + u];
  }
  return w.probs;
}

HiddenTrace hidden_activation_trace(const LstmClassifier& model, std::span<const double> seq) {
  HiddenTrace trace;
  forward_traced(model, seq, &trace);
  return trace;
}

double loss(const std::array<double, 4>& probs, int label) {
  check_label(label);
  return -std::log(std::max(probs[label], kLossFloor));
}

Gradients backward(const LstmClassifier& model, const data::PhotocurrentDataset& ds,
                   std::span<const std::size_t> batch, int workers) {
  if (batch.empty()) throw ConfigError("empty batch");
  const std::size_t n_params = model.parameters().size();
  const double weight = 1.0 / static_cast<double>(batch.size());

  std::vector<std::vector<double>> sample_grads(batch.size());
  std::vector<double> sample_loss(batch.size(), 0.0);
  parallel_for(batch.size(), workers, [&](std::size_t bi) {
    const std::size_t i = batch[bi];
    const int label = ds.labels[i];
    check_label(label);
    Workspace w;
    run_forward(model, ds.current(i), w);
    sample_loss[bi] = loss(w.probs, label);
    sample_grads[bi].assign(n_params, 0.0);
    run_backward(model, ds.current(i), label, w, weight, sample_grads[bi]);
  });

  Gradients out;
  out.g.assign(n_params, 0.0);
  for (std::size_t bi = 0; bi < batch.size(); ++bi) {
    const auto& g = sample_grads[bi];
    for (std::size_t k = 0; k < n_params; ++k) out.g[k] += g[k];
    out.mean_loss += sample_loss[bi];
  }
  out.mean_loss *= weight;
  return out;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size() ||
      params.size() != state.v.size())
    throw ConfigError("adam_step: shape mismatch");
  state.step += 1;
  const double b1t = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double b2t = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double g = grads[k];
    state.m[k] = state.beta1 * state.m[k] + (1.0 - state.beta1) * g;
    state.v[k] = state.beta2 * state.v[k] + (1.0 - state.beta2) * g * g;
    const double m_hat = state.m[k] / b1t;
    const double v_hat = state.v[k] / b2t;
    params[k] -= state.lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

TrainResult train(const data::PhotocurrentDataset& train_set, const Architecture& arch,
                  const TrainConfig& config) {
  if (train_set.size() == 0) throw ConfigError("empty training set");
  if (config.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (config.epochs < 1) throw ConfigError("epochs must be >= 1");

  TrainResult result{LstmClassifier::initialized(arch, config.init_seed), {}};
  AdamState adam = AdamState::for_parameters(result.model.parameters().size());

  const std::size_t n = train_set.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng(config.shuffle_seed);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = n - 1; i > 0; --i) {
      const std::size_t j = shuffle_rng.below(i + 1);
      std::swap(order[i], order[j]);
    }
    for (std::size_t begin = 0; begin < n; begin += config.batch_size) {
      const std::size_t end = std::min(n, begin + config.batch_size);
      const std::span<const std::size_t> batch(order.data() + begin, end - begin);
      Gradients grads = backward(result.model, train_set, batch, config.workers);
      if (!std::isfinite(grads.mean_loss)) {
        std::ostringstream os;
        os << "training diverged (non-finite loss) at epoch " << epoch << ", batch "
           << result.batch_loss.size();
        throw NumericalError(os.str());
      }
      adam_step(result.model.parameters(), grads.g, adam);
      if (!result.model.finite()) {
        std::ostringstream os;
        os << "training diverged (non-finite parameters) at epoch " << epoch << ", batch "
           << result.batch_loss.size();
        throw NumericalError(os.str());
      }
      result.batch_loss.push_back(grads.mean_loss);
    }
  }
  return result;
}

std::uint64_t EvalResult::class_total(int label) const {
  std::uint64_t s = 0;
  for (int p = 0; p < 4; ++p) s += confusion[label][p];
  return s;
}

double EvalResult::class_accuracy(int label) const {
  const std::uint64_t total = class_total(label);
  return total == 0 ? 0.0
                    : static_cast<double>(confusion[label][label]) / static_cast<double>(total);
}

EvalResult evaluate(const LstmClassifier& model, const data::PhotocurrentDataset& test_set,
                    int workers) {
  std::vector<std::uint8_t> predicted(test_set.size(), 0);
  parallel_for(test_set.size(), workers, [&](std::size_t i) {
    Workspace w;
    run_forward(model, test_set.current(i), w);
    predicted[i] = static_cast<std::uint8_t>(
        std::max_element(w.probs.begin(), w.probs.end()) - w.probs.begin());
  });
  EvalResult out;
  std::uint64_t correct = 0;
  for (std::size_t i = 0; i < test_set.size(); ++i) {
    const int truth = test_set.labels[i];
    out.confusion[truth][predicted[i]] += 1;
    if (truth == predicted[i]) ++correct;
  }
  out.accuracy = test_set.size() == 0
                     ? 0.0
                     : static_cast<double>(correct) / static_cast<double>(test_set.size());
  return out;
}

std::array<ConfidenceRow, 4> confidence_report(const LstmClassifier& model,
                                               const data::PhotocurrentDataset& test_set,
                                               int workers) {
  std::vector<double> p_truth(test_set.size(), 0.0);
  std::vector<std::uint8_t> predicted(test_set.size(), 0);
  parallel_for(test_set.size(), workers, [&](std::size_t i) {
    Workspace w;
    run_forward(model, test_set.current(i), w);
    p_truth[i] = w.probs[test_set.labels[i]];
    predicted[i] = static_cast<std::uint8_t>(
        std::max_element(w.probs.begin(), w.probs.end()) - w.probs.begin());
  });
  std::array<ConfidenceRow, 4> rows{};
  for (std::size_t i = 0; i < test_set.size(); ++i) {
    rows[test_set.labels[i]].truth_count += 1;
    rows[test_set.labels[i]].summed_confidence += p_truth[i];
    rows[predicted[i]].predicted_count += 1;
  }
  return rows;
}

void save_model(const LstmClassifier& model, const std::filesystem::path& path,
                const std::vector<std::pair<std::string, std::string>>& extra_meta) {
  nlohmann::json meta{
      {"architecture",
       {{"hidden", model.arch().hidden},
        {"dense1", model.arch().dense1},
        {"dense2", model.arch().dense2},
        {"classes", Architecture::kClasses}}},
      {"generator_version", kVersion},
      {"parameter_count", model.parameters().size()}};
  for (const auto& [k, v] : extra_meta) meta[k] = v;

  std::vector<std::uint8_t> buf;
  const std::string meta_str = meta.dump();
  buf.reserve(64 + meta_str.size() + model.parameters().size() * 8);
  buf.insert(buf.end(), kModelMagic, kModelMagic + sizeof(kModelMagic));
  buf.push_back(static_cast<std::uint8_t>(kModelFormatVersion & 0xff));
  buf.push_back(static_cast<std::uint8_t>(kModelFormatVersion >> 8));
  for (int i = 0; i < 4; ++i)
    buf.push_back(static_cast<std::uint8_t>((meta_str.size() >> (8 * i)) & 0xff));
  buf.insert(buf.end(), meta_str.begin(), meta_str.end());
  for (const double v : model.parameters()) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<std::uint8_t>((bits >> (8 * i)) & 0xff));
  }
  const auto crc = static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(buf.size())));
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<std::uint8_t>((crc >> (8 * i)) & 0xff));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("short write to " + path.string());
}

ModelLoadResult load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("cannot open " + path.string());
  const auto size = static_cast<std::size_t>(in.tellg());
  if (size < sizeof(kModelMagic) + 2 + 4 + 4) throw IoError("model file truncated");
  std::vector<std::uint8_t> buf(size);
  in.seekg(0);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(size));
  if (!in) throw IoError("read failure on " + path.string());

  const auto stored_crc = static_cast<std::uint32_t>(buf[size - 4]) |
                          static_cast<std::uint32_t>(buf[size - 3]) << 8 |
                          static_cast<std::uint32_t>(buf[size - 2]) << 16 |
                          static_cast<std::uint32_t>(buf[size - 1]) << 24;
  const auto computed_crc = static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(size - 4)));
  if (stored_crc != computed_crc) throw IoError("model checksum mismatch");

  std::size_t pos = 0;
  if (std::memcmp(buf.data(), kModelMagic, sizeof(kModelMagic)) != 0)
    throw IoError("not a model checkpoint (bad magic)");
  pos += sizeof(kModelMagic);
  const std::uint16_t version =
      static_cast<std::uint16_t>(buf[pos]) | static_cast<std::uint16_t>(buf[pos + 1]) << 8;
  pos += 2;
  if (version != kModelFormatVersion) {
    std::ostringstream os;
    os << "unsupported model format version " << version;
    throw IoError(os.str());
  }
  std::uint32_t meta_len = 0;
  for (int i = 0; i < 4; ++i) meta_len |= static_cast<std::uint32_t>(buf[pos + i]) << (8 * i);
  pos += 4;
  if (pos + meta_len > size - 4) throw IoError("model file truncated");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(buf.begin() + pos, buf.begin() + pos + meta_len);
  } catch (const nlohmann::json::exception& ex) {
    throw IoError(std::string("corrupt model metadata: ") + ex.what());
  }
  pos += meta_len;

  ModelLoadResult result{LstmClassifier{}, meta.dump(), {}};
  try {
    const auto& a = meta.at("architecture");
    Architecture arch{a.at("hidden"), a.at("dense1"), a.at("dense2")};
    result.model = LstmClassifier(arch);
    const std::string gen = meta.at("generator_version");
    if (gen != kVersion)
      result.warnings.push_back("model was written by '" + gen + "', this build is '" +
                                std::string(kVersion) + "'");
  } catch (const nlohmann::json::exception& ex) {
    throw IoError(std::string("corrupt model metadata: ") + ex.what());
  }
  auto params = result.model.parameters();
  if (pos + params.size() * 8 != size - 4)
    throw IoError("model parameter blob size mismatch");
  for (auto& p : params) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[pos++]) << (8 * i);
    std::memcpy(&p, &bits, 8);
  }
  return result;
}

}  // namespace dlca::nn
