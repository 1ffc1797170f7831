#pragma once

// Feed-forward network with ReLU hidden layers, one or more softmax heads and
// Adam. Heads may be coupled: a coupled head adds B * softmax(u_s) to its
// logits, where u_s are the uncoupled logits of a source head, so coupling
// cycles need no fixed point.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "signphon/error.hpp"
#include "signphon/learn/dataset.hpp"

namespace signphon::learn {

struct MlpParams {
  std::vector<std::size_t> hidden = {100};
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t epochs = 200;
  std::size_t batch_size = 32;
  double validation_fraction = 0.1;  // held out for the learning curve only
  std::size_t validate_every = 25;
  bool standardize = true;
  std::uint64_t seed = 0;

  void validate() const {
    if (hidden.size() > 3) throw DataError("mlp: at most 3 hidden layers");
    for (auto h : hidden)
      if (h == 0) throw DataError("mlp: hidden layer of size 0");
    if (batch_size == 0) throw DataError("mlp: batch size must be positive");
    if (!(learning_rate > 0.0)) throw DataError("mlp: learning rate must be positive");
    if (validation_fraction < 0.0 || validation_fraction >= 1.0) throw DataError("mlp: validation fraction must lie in [0, 1)");
  }
};

struct HeadSpec {
  std::size_t classes = 0;
  std::vector<std::size_t> sources;  // indices of heads whose uncoupled softmax feeds this head
};

struct LearningCurve {
  std::vector<double> train_loss;                                 // mean batch loss per epoch
  std::vector<std::pair<std::size_t, double>> validation_accuracy;  // (epoch, mean accuracy over heads)
};

class MlpNetwork {
 public:
  MlpNetwork() = default;

  MlpNetwork(std::size_t input_dim, std::vector<std::size_t> hidden, std::vector<HeadSpec> heads)
      : input_dim_(input_dim), hidden_(std::move(hidden)), heads_(std::move(heads)) {
    for (std::size_t h = 0; h < heads_.size(); ++h) {
      if (heads_[h].classes < 1) throw DataError("mlp: head without classes");
      for (auto s : heads_[h].sources)
        if (s >= heads_.size() || s == h) throw DataError("mlp: invalid coupling source");
    }
    layout();
    standardizer_.mean.assign(input_dim_, 0.0);
    standardizer_.scale.assign(input_dim_, 1.0);
  }

  std::size_t input_dim() const { return input_dim_; }
  std::size_t num_heads() const { return heads_.size(); }
  const std::vector<HeadSpec>& heads() const { return heads_; }
  const std::vector<std::size_t>& hidden() const { return hidden_; }
  std::size_t parameter_count() const { return params_.size(); }
  std::vector<double>& parameters() { return params_; }
  const std::vector<double>& parameters() const { return params_; }
  const Standardizer& standardizer() const { return standardizer_; }
  void set_standardizer(Standardizer s) { standardizer_ = std::move(s); }
  const LearningCurve& curve() const { return curve_; }

  // Uniform in +-sqrt(6 / fan_in) for trunk and head weights; biases and
  // coupling weights start at zero.
  void initialize(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::fill(params_.begin(), params_.end(), 0.0);
    auto fill = [&](std::size_t offset, std::size_t count, std::size_t fan_in) {
      const double lim = std::sqrt(6.0 / static_cast<double>(std::max<std::size_t>(fan_in, 1)));
      std::uniform_real_distribution<double> u(-lim, lim);
      for (std::size_t i = 0; i < count; ++i) params_[offset + i] = u(rng);
    };
    std::size_t in = input_dim_;
    for (std::size_t l = 0; l < hidden_.size(); ++l) {
      fill(layers_[l].w, hidden_[l] * in, in);
      in = hidden_[l];
    }
    for (std::size_t h = 0; h < heads_.size(); ++h) fill(head_off_[h].a, heads_[h].classes * trunk_out(), trunk_out());
  }

  // Mean over the batch of the summed per-head cross-entropy. Labels < 0 are
  // ignored. When `grad` is non-null it receives the gradient (same layout as
  // parameters()). Inputs are used as given (no standardisation).
  double loss_and_gradient(const Matrix& x, std::span<const std::size_t> rows,
                           const std::vector<std::vector<int>>& labels, std::vector<double>* grad) const {
    if (grad) grad->assign(params_.size(), 0.0);
    double loss = 0.0;
    Workspace ws(*this);
    const double scale = 1.0 / static_cast<double>(rows.size());
    for (auto r : rows) {
      forward(x.row(r), ws);
      for (std::size_t h = 0; h < heads_.size(); ++h) {
        const int y = labels[h][r];
        if (y < 0) continue;
        loss -= std::log(std::max(ws.q[h][static_cast<std::size_t>(y)], std::numeric_limits<double>::min()));
      }
      if (grad) backward(ws, labels, r, scale, *grad);
    }
    return loss * scale;
  }

  // Class probabilities of every head for a raw (unstandardised) input.
  std::vector<std::vector<double>> predict_proba(std::span<const double> raw) const {
    if (raw.size() != input_dim_) throw DataError("mlp: input has wrong feature count");
    std::vector<double> x(raw.size());
    standardizer_.apply(raw, x);
    Workspace ws(*this);
    forward(x, ws);
    return ws.q;
  }

  // Trains on rows of x (raw features). labels[h][i] is the class of sample i
  // for head h, or -1 when unknown.
  void fit(const Matrix& raw, const std::vector<std::vector<int>>& labels, const MlpParams& p) {
    p.validate();
    if (raw.cols() != input_dim_) throw DataError("mlp: feature count mismatch");
    if (labels.size() != heads_.size()) throw DataError("mlp: one label vector per head required");
    for (std::size_t h = 0; h < heads_.size(); ++h) {
      if (labels[h].size() != raw.rows()) throw DataError("mlp: label count mismatch");
      for (int v : labels[h])
        if (v >= static_cast<int>(heads_[h].classes)) throw DataError("mlp: label out of range");
    }
    if (raw.rows() == 0) throw DataError("mlp: empty training set");

    standardizer_ = p.standardize ? Standardizer::fit(raw) : Standardizer{std::vector<double>(raw.cols(), 0.0),
                                                                          std::vector<double>(raw.cols(), 1.0)};
    Matrix x(raw.rows(), raw.cols());
    for (std::size_t i = 0; i < raw.rows(); ++i) standardizer_.apply(raw.row(i), x.row(i));

    initialize(p.seed);
    curve_ = {};

    auto order = shuffled_indices(raw.rows(), p.seed ^ 0x9e3779b97f4a7c15ULL);
    auto n_val = static_cast<std::size_t>(std::floor(p.validation_fraction * static_cast<double>(raw.rows())));
    if (n_val >= raw.rows()) n_val = 0;
    std::vector<std::size_t> val(order.end() - static_cast<std::ptrdiff_t>(n_val), order.end());
    std::vector<std::size_t> train(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_val));

    std::vector<double> m(params_.size(), 0.0), v(params_.size(), 0.0), grad;
    std::mt19937_64 rng(p.seed + 1);
    std::size_t step = 0;
    for (std::size_t epoch = 1; epoch <= p.epochs; ++epoch) {
      std::shuffle(train.begin(), train.end(), rng);
      double epoch_loss = 0.0;
      std::size_t batches = 0;
      for (std::size_t start = 0; start < train.size(); start += p.batch_size) {
        const std::size_t len = std::min(p.batch_size, train.size() - start);
        std::span<const std::size_t> batch(train.data() + start, len);
        const double loss = loss_and_gradient(x, batch, labels, &grad);
        if (!std::isfinite(loss)) {
          std::ostringstream msg;
          msg << "mlp: non-finite loss " << loss << " at epoch " << epoch << ", batch " << batches
              << " (learning rate " << p.learning_rate << ", " << params_.size() << " parameters)";
          throw TrainingError(msg.str());
        }
        ++step;
        const double bc1 = 1.0 - std::pow(p.beta1, static_cast<double>(step));
        const double bc2 = 1.0 - std::pow(p.beta2, static_cast<double>(step));
        for (std::size_t i = 0; i < params_.size(); ++i) {
          m[i] = p.beta1 * m[i] + (1.0 - p.beta1) * grad[i];
          v[i] = p.beta2 * v[i] + (1.0 - p.beta2) * grad[i] * grad[i];
          params_[i] -= p.learning_rate * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + p.epsilon);
        }
        epoch_loss += loss;
        ++batches;
      }
      curve_.train_loss.push_back(batches ? epoch_loss / static_cast<double>(batches) : 0.0);
      if (!val.empty() && p.validate_every > 0 && (epoch % p.validate_every == 0 || epoch == p.epochs))
        curve_.validation_accuracy.emplace_back(epoch, accuracy_on(x, val, labels));
    }
  }

  nlohmann::json to_json() const {
    nlohmann::json heads = nlohmann::json::array();
    for (const auto& h : heads_) heads.push_back({{"classes", h.classes}, {"sources", h.sources}});
    return {{"input_dim", input_dim_},
            {"hidden", hidden_},
            {"heads", heads},
            {"mean", standardizer_.mean},
            {"scale", standardizer_.scale},
            {"params", params_}};
  }

  static MlpNetwork from_json(const nlohmann::json& j) {
    std::vector<HeadSpec> heads;
    for (const auto& h : j.at("heads"))
      heads.push_back({h.at("classes").get<std::size_t>(), h.at("sources").get<std::vector<std::size_t>>()});
    MlpNetwork n(j.at("input_dim").get<std::size_t>(), j.at("hidden").get<std::vector<std::size_t>>(), std::move(heads));
    n.standardizer_.mean = j.at("mean").get<std::vector<double>>();
    n.standardizer_.scale = j.at("scale").get<std::vector<double>>();
    auto params = j.at("params").get<std::vector<double>>();
    if (params.size() != n.params_.size()) throw FormatError("mlp model: parameter count mismatch");
    n.params_ = std::move(params);
    return n;
  }

 private:
  struct LayerOffsets {
    std::size_t w = 0, b = 0;
  };
  struct HeadOffsets {
    std::size_t a = 0, b = 0;
    std::vector<std::size_t> coupling;  // one block per source
  };

  struct Workspace {
    std::vector<std::vector<double>> act;  // act[0] = input, act[l+1] = relu output of layer l
    std::vector<std::vector<double>> u;    // uncoupled logits per head
    std::vector<std::vector<double>> p;    // softmax(u) per head
    std::vector<std::vector<double>> q;    // output probabilities per head
    explicit Workspace(const MlpNetwork& n) : act(n.hidden_.size() + 1), u(n.heads_.size()), p(n.heads_.size()), q(n.heads_.size()) {}
  };

  std::size_t trunk_out() const { return hidden_.empty() ? input_dim_ : hidden_.back(); }

  void layout() {
    std::size_t off = 0;
    std::size_t in = input_dim_;
    layers_.clear();
    for (auto h : hidden_) {
      layers_.push_back({off, off + h * in});
      off += h * in + h;
      in = h;
    }
    head_off_.clear();
    for (const auto& h : heads_) {
      HeadOffsets ho;
      ho.a = off;
      off += h.classes * in;
      ho.b = off;
      off += h.classes;
      for (auto s : h.sources) {
        ho.coupling.push_back(off);
        off += h.classes * heads_[s].classes;
      }
      head_off_.push_back(std::move(ho));
    }
    params_.assign(off, 0.0);
  }

  static void softmax(std::span<const double> z, std::vector<double>& out) {
    out.resize(z.size());
    const double mx = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) s += out[i] = std::exp(z[i] - mx);
    for (auto& v : out) v /= s;
  }

  void forward(std::span<const double> x, Workspace& ws) const {
    ws.act[0].assign(x.begin(), x.end());
    std::size_t in = input_dim_;
    for (std::size_t l = 0; l < hidden_.size(); ++l) {
      auto& out = ws.act[l + 1];
      out.assign(hidden_[l], 0.0);
      const double* w = &params_[layers_[l].w];
      const double* b = &params_[layers_[l].b];
      const auto& a = ws.act[l];
      for (std::size_t o = 0; o < hidden_[l]; ++o) {
        double s = b[o];
        const double* wr = w + o * in;
        for (std::size_t i = 0; i < in; ++i) s += wr[i] * a[i];
        out[o] = (s > 0.0 || std::isnan(s)) ? s : 0.0;  // NaN propagates to the loss
      }
      in = hidden_[l];
    }
    const auto& h = ws.act.back();
    for (std::size_t k = 0; k < heads_.size(); ++k) {
      const std::size_t c = heads_[k].classes;
      auto& u = ws.u[k];
      u.assign(c, 0.0);
      const double* a = &params_[head_off_[k].a];
      const double* b = &params_[head_off_[k].b];
      for (std::size_t o = 0; o < c; ++o) {
        double s = b[o];
        for (std::size_t i = 0; i < in; ++i) s += a[o * in + i] * h[i];
        u[o] = s;
      }
      softmax(u, ws.p[k]);
    }
    for (std::size_t k = 0; k < heads_.size(); ++k) {
      if (heads_[k].sources.empty()) {
        ws.q[k] = ws.p[k];
        continue;
      }
      std::vector<double> z = ws.u[k];
      for (std::size_t si = 0; si < heads_[k].sources.size(); ++si) {
        const auto s = heads_[k].sources[si];
        const double* bm = &params_[head_off_[k].coupling[si]];
        const auto& ps = ws.p[s];
        for (std::size_t o = 0; o < z.size(); ++o)
          for (std::size_t j = 0; j < ps.size(); ++j) z[o] += bm[o * ps.size() + j] * ps[j];
      }
      softmax(z, ws.q[k]);
    }
  }

  void backward(const Workspace& ws, const std::vector<std::vector<int>>& labels, std::size_t r, double scale,
                std::vector<double>& grad) const {
    const std::size_t nh = heads_.size();
    const std::size_t in = trunk_out();
    std::vector<std::vector<double>> dz(nh), du(nh);
    for (std::size_t k = 0; k < nh; ++k) {
      dz[k].assign(heads_[k].classes, 0.0);
      du[k].assign(heads_[k].classes, 0.0);
      const int y = labels[k][r];
      if (y < 0) continue;
      for (std::size_t o = 0; o < dz[k].size(); ++o) dz[k][o] = ws.q[k][o] * scale;
      dz[k][static_cast<std::size_t>(y)] -= scale;
    }
    // Logits z_k = u_k + sum_s B_ks p_s.
    std::vector<std::vector<double>> dp(nh);
    for (std::size_t k = 0; k < nh; ++k) dp[k].assign(heads_[k].classes, 0.0);
    for (std::size_t k = 0; k < nh; ++k) {
      for (std::size_t o = 0; o < dz[k].size(); ++o) du[k][o] += dz[k][o];
      for (std::size_t si = 0; si < heads_[k].sources.size(); ++si) {
        const auto s = heads_[k].sources[si];
        const auto& ps = ws.p[s];
        const std::size_t off = head_off_[k].coupling[si];
        for (std::size_t o = 0; o < dz[k].size(); ++o)
          for (std::size_t j = 0; j < ps.size(); ++j) {
            grad[off + o * ps.size() + j] += dz[k][o] * ps[j];
            dp[s][j] += params_[off + o * ps.size() + j] * dz[k][o];
          }
      }
    }
    // Through the source softmax: du = p * (dp - <p, dp>).
    for (std::size_t s = 0; s < nh; ++s) {
      const auto& ps = ws.p[s];
      double dot = 0.0;
      for (std::size_t j = 0; j < ps.size(); ++j) dot += ps[j] * dp[s][j];
      for (std::size_t j = 0; j < ps.size(); ++j) du[s][j] += ps[j] * (dp[s][j] - dot);
    }
    const auto& h = ws.act.back();
    std::vector<double> dh(in, 0.0);
    for (std::size_t k = 0; k < nh; ++k) {
      const std::size_t a = head_off_[k].a, b = head_off_[k].b;
      for (std::size_t o = 0; o < du[k].size(); ++o) {
        const double g = du[k][o];
        if (g == 0.0) continue;
        grad[b + o] += g;
        for (std::size_t i = 0; i < in; ++i) {
          grad[a + o * in + i] += g * h[i];
          dh[i] += params_[a + o * in + i] * g;
        }
      }
    }
    for (std::size_t l = hidden_.size(); l-- > 0;) {
      const std::size_t lin = l == 0 ? input_dim_ : hidden_[l - 1];
      const auto& a_prev = ws.act[l];
      const auto& a_out = ws.act[l + 1];
      std::vector<double> dprev(lin, 0.0);
      for (std::size_t o = 0; o < hidden_[l]; ++o) {
        if (a_out[o] <= 0.0) continue;  // ReLU gate
        const double g = dh[o];
        if (g == 0.0) continue;
        grad[layers_[l].b + o] += g;
        const std::size_t w = layers_[l].w + o * lin;
        for (std::size_t i = 0; i < lin; ++i) {
          grad[w + i] += g * a_prev[i];
          dprev[i] += params_[w + i] * g;
        }
      }
      dh = std::move(dprev);
    }
  }

  double accuracy_on(const Matrix& x, std::span<const std::size_t> rows, const std::vector<std::vector<int>>& labels) const {
    Workspace ws(*this);
    std::vector<std::size_t> ok(heads_.size(), 0), seen(heads_.size(), 0);
    for (auto r : rows) {
      forward(x.row(r), ws);
      for (std::size_t k = 0; k < heads_.size(); ++k) {
        if (labels[k][r] < 0) continue;
        ++seen[k];
        ok[k] += static_cast<int>(argmax(ws.q[k])) == labels[k][r];
      }
    }
    double sum = 0.0;
    std::size_t counted = 0;
    for (std::size_t k = 0; k < heads_.size(); ++k)
      if (seen[k]) {
        sum += static_cast<double>(ok[k]) / static_cast<double>(seen[k]);
        ++counted;
      }
    return counted ? sum / static_cast<double>(counted) : 0.0;
  }

  std::size_t input_dim_ = 0;
  std::vector<std::size_t> hidden_;
  std::vector<HeadSpec> heads_;
  std::vector<LayerOffsets> layers_;
  std::vector<HeadOffsets> head_off_;
  std::vector<double> params_;
  Standardizer standardizer_;
  LearningCurve curve_;
};

// Single-task classifier on top of MlpNetwork.
class MlpModel {
 public:
  MlpModel() = default;

  static MlpModel train(const Matrix& x, std::span<const int> y, std::size_t num_classes, const MlpParams& params = {}) {
    if (num_classes < 2) throw DataError("mlp: at least 2 classes required");
    if (y.size() != x.rows()) throw DataError("mlp: label count mismatch");
    MlpModel m;
    m.net_ = MlpNetwork(x.cols(), params.hidden, {{num_classes, {}}});
    m.net_.fit(x, {std::vector<int>(y.begin(), y.end())}, params);
    return m;
  }

  std::size_t num_classes() const { return net_.heads().front().classes; }
  std::size_t num_features() const { return net_.input_dim(); }
  const MlpNetwork& network() const { return net_; }

  std::vector<double> predict_proba(std::span<const double> q) const { return net_.predict_proba(q).front(); }
  int predict(std::span<const double> q) const { return static_cast<int>(argmax(predict_proba(q))); }

  nlohmann::json to_json() const { return net_.to_json(); }
  static MlpModel from_json(const nlohmann::json& j) {
    MlpModel m;
    m.net_ = MlpNetwork::from_json(j);
    if (m.net_.num_heads() != 1) throw FormatError("mlp model: expected a single head");
    return m;
  }

 private:
  MlpNetwork net_;
};

}  // namespace signphon::learn
