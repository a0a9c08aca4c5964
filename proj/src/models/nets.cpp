#include "churn/models/nets.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace churn {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Stable binary cross-entropy from a logit.
double bce_from_logit(double z, double y) {
  return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
}

Eigen::MatrixXd xavier(int rows, int cols, Rng& rng) {
  const double s = std::sqrt(6.0 / (rows + cols));
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = rng.uniform(-s, s);
  }
  return m;
}

int unmasked_count(const SequenceWindow& w) {
  int m = 0;
  for (int t = 0; t < w.mask.size(); ++t) m += w.mask[t] != 0.0 ? 1 : 0;
  return m;
}

void require_observed(const SequenceWindow& w) {
  if (unmasked_count(w) == 0) throw std::invalid_argument("all-masked window");
}

}  // namespace

void Network::zero_grads() {
  for (auto& p : params()) p.grad->setZero();
}

long long Network::parameter_count() {
  long long n = 0;
  for (auto& p : params()) n += p.value->size();
  return n;
}

// ---------------------------------------------------------------------------
// Mlp

Mlp::Mlp(int in_dim, const std::vector<int>& hidden, bool classifier, Rng& rng)
    : in_dim_(in_dim), hidden_(hidden), classifier_(classifier) {
  int prev = in_dim;
  for (int h : hidden) {
    weights_.push_back(xavier(prev, h, rng));
    biases_.push_back(Eigen::MatrixXd::Zero(1, h));
    prev = h;
  }
  weights_.push_back(xavier(prev, 1, rng));
  biases_.push_back(Eigen::MatrixXd::Zero(1, 1));
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    gw_.push_back(Eigen::MatrixXd::Zero(weights_[l].rows(), weights_[l].cols()));
    gb_.push_back(Eigen::MatrixXd::Zero(1, biases_[l].cols()));
  }
}

std::vector<ParamRef> Mlp::params() {
  std::vector<ParamRef> out;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.push_back({"w", &weights_[l], &gw_[l]});
    out.push_back({"b", &biases_[l], &gb_[l]});
  }
  return out;
}

Eigen::VectorXd Mlp::logits(const Eigen::MatrixXd& x, std::vector<Eigen::MatrixXd>* acts) const {
  Eigen::MatrixXd a = x;
  if (acts) acts->push_back(a);
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Eigen::MatrixXd z = (a * weights_[l]).rowwise() + biases_[l].row(0);
    if (l + 1 < weights_.size()) z = z.cwiseMax(0.0);
    a = std::move(z);
    if (acts) acts->push_back(a);
  }
  return a.col(0);
}

double Mlp::loss_and_grad(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  std::vector<Eigen::MatrixXd> acts;
  const Eigen::VectorXd z = logits(x, &acts);
  const auto n = static_cast<double>(x.rows());

  double loss = 0;
  Eigen::MatrixXd dz(x.rows(), 1);
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    if (classifier_) {
      loss += bce_from_logit(z[i], y[i]);
      dz(i, 0) = (sigmoid(z[i]) - y[i]) / n;
    } else {
      const double err = z[i] - y[i];
      loss += 0.5 * err * err;
      dz(i, 0) = err / n;
    }
  }
  loss /= n;

  for (int l = static_cast<int>(weights_.size()) - 1; l >= 0; --l) {
    const Eigen::MatrixXd& input = acts[static_cast<std::size_t>(l)];
    gw_[static_cast<std::size_t>(l)] += input.transpose() * dz;
    gb_[static_cast<std::size_t>(l)] += dz.colwise().sum();
    if (l > 0) {
      Eigen::MatrixXd da = dz * weights_[static_cast<std::size_t>(l)].transpose();
      // ReLU derivative from the post-activation value.
      dz = da.cwiseProduct(
          (input.array() > 0.0).cast<double>().matrix());
    }
  }
  return loss;
}

double Mlp::loss_only(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) const {
  const Eigen::VectorXd z = logits(x, nullptr);
  double loss = 0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    if (classifier_) {
      loss += bce_from_logit(z[i], y[i]);
    } else {
      const double err = z[i] - y[i];
      loss += 0.5 * err * err;
    }
  }
  return loss / static_cast<double>(x.rows());
}

Eigen::VectorXd Mlp::output(const Eigen::MatrixXd& x) const {
  Eigen::VectorXd z = logits(x, nullptr);
  if (classifier_) {
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = sigmoid(z[i]);
  }
  return z;
}

// ---------------------------------------------------------------------------
// Cnn1d

Cnn1d::Cnn1d(int in_dim, int channels, int kernel, bool classifier, Rng& rng)
    : in_dim_(in_dim), channels_(channels), kernel_(kernel), classifier_(classifier) {
  if (kernel < 1 || kernel % 2 == 0) throw std::invalid_argument("cnn: kernel must be odd and >= 1");
  conv_w_ = xavier(kernel * in_dim, channels, rng);
  conv_b_ = Eigen::MatrixXd::Zero(1, channels);
  head_w_ = xavier(channels, 1, rng);
  head_b_ = Eigen::MatrixXd::Zero(1, 1);
  g_conv_w_ = Eigen::MatrixXd::Zero(conv_w_.rows(), conv_w_.cols());
  g_conv_b_ = Eigen::MatrixXd::Zero(1, channels);
  g_head_w_ = Eigen::MatrixXd::Zero(channels, 1);
  g_head_b_ = Eigen::MatrixXd::Zero(1, 1);
}

std::vector<ParamRef> Cnn1d::params() {
  return {{"conv_w", &conv_w_, &g_conv_w_},
          {"conv_b", &conv_b_, &g_conv_b_},
          {"head_w", &head_w_, &g_head_w_},
          {"head_b", &head_b_, &g_head_b_}};
}

namespace {
Eigen::RowVectorXd conv_patch(const SequenceWindow& w, int t, int kernel, int in_dim) {
  Eigen::RowVectorXd patch = Eigen::RowVectorXd::Zero(kernel * in_dim);
  const int offset = kernel / 2;
  for (int j = 0; j < kernel; ++j) {
    const int src = t + j - offset;
    if (src >= 0 && src < w.values.rows()) {
      patch.segment(j * in_dim, in_dim) = w.values.row(src);
    }
  }
  return patch;
}
}  // namespace

double Cnn1d::example_logit(const SequenceWindow& w, Eigen::MatrixXd* z_cache,
                            Eigen::RowVectorXd* pooled_cache) const {
  require_observed(w);
  const int steps = static_cast<int>(w.values.rows());
  Eigen::MatrixXd z(steps, channels_);
  for (int t = 0; t < steps; ++t) {
    z.row(t) = conv_patch(w, t, kernel_, in_dim_) * conv_w_ + conv_b_.row(0);
  }
  const double m = static_cast<double>(unmasked_count(w));
  Eigen::RowVectorXd pooled = Eigen::RowVectorXd::Zero(channels_);
  for (int t = 0; t < steps; ++t) {
    if (w.mask[t] != 0.0) pooled += z.row(t).cwiseMax(0.0);
  }
  pooled /= m;
  if (z_cache) *z_cache = z;
  if (pooled_cache) *pooled_cache = pooled;
  return (pooled * head_w_)(0, 0) + head_b_(0, 0);
}

double Cnn1d::loss_and_grad(const std::vector<SequenceWindow>& windows, const std::vector<int>& idx,
                            const Eigen::VectorXd& y) {
  const auto n = static_cast<double>(idx.size());
  double loss = 0;
  for (int i : idx) {
    const SequenceWindow& w = windows[static_cast<std::size_t>(i)];
    Eigen::MatrixXd z;
    Eigen::RowVectorXd pooled;
    const double logit = example_logit(w, &z, &pooled);
    double dz;
    if (classifier_) {
      loss += bce_from_logit(logit, y[i]);
      dz = (sigmoid(logit) - y[i]) / n;
    } else {
      const double err = logit - y[i];
      loss += 0.5 * err * err;
      dz = err / n;
    }
    g_head_w_ += pooled.transpose() * dz;
    g_head_b_(0, 0) += dz;
    const Eigen::RowVectorXd dpooled = dz * head_w_.transpose();
    const double m = static_cast<double>(unmasked_count(w));
    for (int t = 0; t < z.rows(); ++t) {
      if (w.mask[t] == 0.0) continue;
      Eigen::RowVectorXd dzt = dpooled / m;
      for (int c = 0; c < channels_; ++c) {
        if (z(t, c) <= 0.0) dzt[c] = 0.0;
      }
      g_conv_w_ += conv_patch(w, t, kernel_, in_dim_).transpose() * dzt;
      g_conv_b_ += dzt;
    }
  }
  return loss / n;
}

double Cnn1d::loss_only(const std::vector<SequenceWindow>& windows, const std::vector<int>& idx,
                        const Eigen::VectorXd& y) const {
  double loss = 0;
  for (int i : idx) {
    const double logit = example_logit(windows[static_cast<std::size_t>(i)], nullptr, nullptr);
    loss += classifier_ ? bce_from_logit(logit, y[i])
                        : 0.5 * (logit - y[i]) * (logit - y[i]);
  }
  return loss / static_cast<double>(idx.size());
}

Eigen::VectorXd Cnn1d::output(const std::vector<SequenceWindow>& windows) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(windows.size()));
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const double logit = example_logit(windows[i], nullptr, nullptr);
    out[static_cast<Eigen::Index>(i)] = classifier_ ? sigmoid(logit) : logit;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rnn

Rnn::Rnn(int in_dim, int hidden, bool classifier, Rng& rng)
    : in_dim_(in_dim), hidden_(hidden), classifier_(classifier) {
  wx_ = xavier(in_dim, hidden, rng);
  wh_ = xavier(hidden, hidden, rng);
  b_ = Eigen::MatrixXd::Zero(1, hidden);
  head_w_ = xavier(hidden, 1, rng);
  head_b_ = Eigen::MatrixXd::Zero(1, 1);
  gwx_ = Eigen::MatrixXd::Zero(in_dim, hidden);
  gwh_ = Eigen::MatrixXd::Zero(hidden, hidden);
  gb_ = Eigen::MatrixXd::Zero(1, hidden);
  g_head_w_ = Eigen::MatrixXd::Zero(hidden, 1);
  g_head_b_ = Eigen::MatrixXd::Zero(1, 1);
}

std::vector<ParamRef> Rnn::params() {
  return {{"wx", &wx_, &gwx_},
          {"wh", &wh_, &gwh_},
          {"b", &b_, &gb_},
          {"head_w", &head_w_, &g_head_w_},
          {"head_b", &head_b_, &g_head_b_}};
}

double Rnn::example_logit(const SequenceWindow& w, std::vector<Eigen::RowVectorXd>* h_cache) const {
  require_observed(w);
  const int steps = static_cast<int>(w.values.rows());
  Eigen::RowVectorXd h = Eigen::RowVectorXd::Zero(hidden_);
  if (h_cache) h_cache->reserve(static_cast<std::size_t>(steps));
  for (int t = 0; t < steps; ++t) {
    if (w.mask[t] != 0.0) {
      h = (w.values.row(t) * wx_ + h * wh_ + b_.row(0)).array().tanh();
    }
    if (h_cache) h_cache->push_back(h);
  }
  return (h * head_w_)(0, 0) + head_b_(0, 0);
}

double Rnn::loss_and_grad(const std::vector<SequenceWindow>& windows, const std::vector<int>& idx,
                          const Eigen::VectorXd& y) {
  const auto n = static_cast<double>(idx.size());
  double loss = 0;
  for (int i : idx) {
    const SequenceWindow& w = windows[static_cast<std::size_t>(i)];
    std::vector<Eigen::RowVectorXd> h;
    const double logit = example_logit(w, &h);
    double dz;
    if (classifier_) {
      loss += bce_from_logit(logit, y[i]);
      dz = (sigmoid(logit) - y[i]) / n;
    } else {
      const double err = logit - y[i];
      loss += 0.5 * err * err;
      dz = err / n;
    }
    const int steps = static_cast<int>(w.values.rows());
    g_head_w_ += h.back().transpose() * dz;
    g_head_b_(0, 0) += dz;
    Eigen::RowVectorXd dh = dz * head_w_.transpose();
    for (int t = steps - 1; t >= 0; --t) {
      if (w.mask[t] == 0.0) continue;  // state froze; gradient passes through
      const Eigen::RowVectorXd& ht = h[static_cast<std::size_t>(t)];
      const Eigen::RowVectorXd hprev =
          t > 0 ? h[static_cast<std::size_t>(t - 1)] : Eigen::RowVectorXd::Zero(hidden_);
      const Eigen::RowVectorXd dpre =
          dh.cwiseProduct((1.0 - ht.array().square()).matrix());
      gwx_ += w.values.row(t).transpose() * dpre;
      gwh_ += hprev.transpose() * dpre;
      gb_ += dpre;
      dh = dpre * wh_.transpose();
    }
  }
  return loss / n;
}

double Rnn::loss_only(const std::vector<SequenceWindow>& windows, const std::vector<int>& idx,
                      const Eigen::VectorXd& y) const {
  double loss = 0;
  for (int i : idx) {
    const double logit = example_logit(windows[static_cast<std::size_t>(i)], nullptr);
    loss += classifier_ ? bce_from_logit(logit, y[i])
                        : 0.5 * (logit - y[i]) * (logit - y[i]);
  }
  return loss / static_cast<double>(idx.size());
}

Eigen::VectorXd Rnn::output(const std::vector<SequenceWindow>& windows) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(windows.size()));
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const double logit = example_logit(windows[i], nullptr);
    out[static_cast<Eigen::Index>(i)] = classifier_ ? sigmoid(logit) : logit;
  }
  return out;
}

// ---------------------------------------------------------------------------
// LstmCore

void LstmCore::init(int in_dim, int hidden, Rng& rng) {
  wx = xavier(in_dim, 4 * hidden, rng);
  wh = xavier(hidden, 4 * hidden, rng);
  b = Eigen::MatrixXd::Zero(1, 4 * hidden);
  // Forget-gate bias starts open so early training does not wipe the cell.
  b.block(0, hidden, 1, hidden).setConstant(1.0);
  gwx = Eigen::MatrixXd::Zero(in_dim, 4 * hidden);
  gwh = Eigen::MatrixXd::Zero(hidden, 4 * hidden);
  gb = Eigen::MatrixXd::Zero(1, 4 * hidden);
}

LstmCore::Cache LstmCore::forward(const SequenceWindow& w) const {
  const int hid = hidden();
  const int steps = static_cast<int>(w.values.rows());
  Cache cache;
  cache.window = &w;
  Eigen::RowVectorXd h = Eigen::RowVectorXd::Zero(hid);
  Eigen::RowVectorXd c = Eigen::RowVectorXd::Zero(hid);
  for (int t = 0; t < steps; ++t) {
    if (w.mask[t] != 0.0) {
      const Eigen::RowVectorXd pre = w.values.row(t) * wx + h * wh + b.row(0);
      Eigen::RowVectorXd gi(hid), gf(hid), gg(hid), go(hid);
      for (int j = 0; j < hid; ++j) {
        gi[j] = sigmoid(pre[j]);
        gf[j] = sigmoid(pre[hid + j]);
        gg[j] = std::tanh(pre[2 * hid + j]);
        go[j] = sigmoid(pre[3 * hid + j]);
      }
      c = gf.cwiseProduct(c) + gi.cwiseProduct(gg);
      const Eigen::RowVectorXd tc = c.array().tanh();
      h = go.cwiseProduct(tc);
      cache.gi.push_back(std::move(gi));
      cache.gf.push_back(std::move(gf));
      cache.gg.push_back(std::move(gg));
      cache.go.push_back(std::move(go));
      cache.tc.push_back(tc);
    } else {
      cache.gi.emplace_back();
      cache.gf.emplace_back();
      cache.gg.emplace_back();
      cache.go.emplace_back();
      cache.tc.emplace_back();
    }
    cache.h.push_back(h);
    cache.c.push_back(c);
  }
  return cache;
}

void LstmCore::backward(const Cache& cache, const std::vector<Eigen::RowVectorXd>& dh_inject) {
  const SequenceWindow& w = *cache.window;
  const int hid = hidden();
  const int steps = static_cast<int>(w.values.rows());
  Eigen::RowVectorXd dh = Eigen::RowVectorXd::Zero(hid);
  Eigen::RowVectorXd dc = Eigen::RowVectorXd::Zero(hid);
  for (int t = steps - 1; t >= 0; --t) {
    if (dh_inject[static_cast<std::size_t>(t)].size() > 0) {
      dh += dh_inject[static_cast<std::size_t>(t)];
    }
    if (w.mask[t] == 0.0) continue;  // frozen step: dh, dc carry through
    const std::size_t ti = static_cast<std::size_t>(t);
    const Eigen::RowVectorXd& gi = cache.gi[ti];
    const Eigen::RowVectorXd& gf = cache.gf[ti];
    const Eigen::RowVectorXd& gg = cache.gg[ti];
    const Eigen::RowVectorXd& go = cache.go[ti];
    const Eigen::RowVectorXd& tc = cache.tc[ti];
    const Eigen::RowVectorXd cprev =
        t > 0 ? cache.c[ti - 1] : Eigen::RowVectorXd::Zero(hid);
    const Eigen::RowVectorXd hprev =
        t > 0 ? cache.h[ti - 1] : Eigen::RowVectorXd::Zero(hid);

    const Eigen::RowVectorXd dgo = dh.cwiseProduct(tc);
    dc += dh.cwiseProduct(go).cwiseProduct((1.0 - tc.array().square()).matrix());
    const Eigen::RowVectorXd dgi = dc.cwiseProduct(gg);
    const Eigen::RowVectorXd dgg = dc.cwiseProduct(gi);
    const Eigen::RowVectorXd dgf = dc.cwiseProduct(cprev);
    const Eigen::RowVectorXd dc_prev = dc.cwiseProduct(gf);

    Eigen::RowVectorXd dpre(4 * hid);
    for (int j = 0; j < hid; ++j) {
      dpre[j] = dgi[j] * gi[j] * (1.0 - gi[j]);
      dpre[hid + j] = dgf[j] * gf[j] * (1.0 - gf[j]);
      dpre[2 * hid + j] = dgg[j] * (1.0 - gg[j] * gg[j]);
      dpre[3 * hid + j] = dgo[j] * go[j] * (1.0 - go[j]);
    }
    gwx += w.values.row(t).transpose() * dpre;
    gwh += hprev.transpose() * dpre;
    gb += dpre;
    dh = dpre * wh.transpose();
    dc = dc_prev;
  }
}

// ---------------------------------------------------------------------------
// Lstm

Lstm::Lstm(int in_dim, int hidden, bool classifier, Rng& rng)
    : in_dim_(in_dim), classifier_(classifier) {
  core_.init(in_dim, hidden, rng);
  head_w_ = xavier(hidden, 1, rng);
  head_b_ = Eigen::MatrixXd::Zero(1, 1);
  g_head_w_ = Eigen::MatrixXd::Zero(hidden, 1);
  g_head_b_ = Eigen::MatrixXd::Zero(1, 1);
}

std::vector<ParamRef> Lstm::params() {
  return {{"wx", &core_.wx, &core_.gwx},
          {"wh", &core_.wh, &core_.gwh},
          {"b", &core_.b, &core_.gb},
          {"head_w", &head_w_, &g_head_w_},
          {"head_b", &head_b_, &g_head_b_}};
}

double Lstm::loss_and_grad(const std::vector<SequenceWindow>& windows, const std::vector<int>& idx,
                           const Eigen::VectorXd& y) {
  const auto n = static_cast<double>(idx.size());
  double loss = 0;
  for (int i : idx) {
    const SequenceWindow& w = windows[static_cast<std::size_t>(i)];
    require_observed(w);
    const LstmCore::Cache cache = core_.forward(w);
    const double logit = (cache.h.back() * head_w_)(0, 0) + head_b_(0, 0);
    double dz;
    if (classifier_) {
      loss += bce_from_logit(logit, y[i]);
      dz = (sigmoid(logit) - y[i]) / n;
    } else {
      const double err = logit - y[i];
      loss += 0.5 * err * err;
      dz = err / n;
    }
    g_head_w_ += cache.h.back().transpose() * dz;
    g_head_b_(0, 0) += dz;
    std::vector<Eigen::RowVectorXd> inject(static_cast<std::size_t>(w.values.rows()));
    inject.back() = dz * head_w_.transpose();
    core_.backward(cache, inject);
  }
  return loss / n;
}

double Lstm::loss_only(const std::vector<SequenceWindow>& windows, const std::vector<int>& idx,
                       const Eigen::VectorXd& y) const {
  double loss = 0;
  for (int i : idx) {
    const SequenceWindow& w = windows[static_cast<std::size_t>(i)];
    require_observed(w);
    const LstmCore::Cache cache = core_.forward(w);
    const double logit = (cache.h.back() * head_w_)(0, 0) + head_b_(0, 0);
    loss += classifier_ ? bce_from_logit(logit, y[i])
                        : 0.5 * (logit - y[i]) * (logit - y[i]);
  }
  return loss / static_cast<double>(idx.size());
}

Eigen::VectorXd Lstm::output(const std::vector<SequenceWindow>& windows) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(windows.size()));
  for (std::size_t i = 0; i < windows.size(); ++i) {
    require_observed(windows[i]);
    const LstmCore::Cache cache = core_.forward(windows[i]);
    const double logit = (cache.h.back() * head_w_)(0, 0) + head_b_(0, 0);
    out[static_cast<Eigen::Index>(i)] = classifier_ ? sigmoid(logit) : logit;
  }
  return out;
}

// ---------------------------------------------------------------------------
// AttentionNet

AttentionNet::AttentionNet(int in_dim, int hidden, bool classifier, Rng& rng)
    : in_dim_(in_dim), classifier_(classifier) {
  core_.init(in_dim, hidden, rng);
  wq_ = xavier(hidden, hidden, rng);
  wk_ = xavier(hidden, hidden, rng);
  wv_ = xavier(hidden, hidden, rng);
  head_w_ = xavier(hidden, 1, rng);
  head_b_ = Eigen::MatrixXd::Zero(1, 1);
  gwq_ = Eigen::MatrixXd::Zero(hidden, hidden);
  gwk_ = Eigen::MatrixXd::Zero(hidden, hidden);
  gwv_ = Eigen::MatrixXd::Zero(hidden, hidden);
  g_head_w_ = Eigen::MatrixXd::Zero(hidden, 1);
  g_head_b_ = Eigen::MatrixXd::Zero(1, 1);
}

std::vector<ParamRef> AttentionNet::params() {
  return {{"wx", &core_.wx, &core_.gwx},
          {"wh", &core_.wh, &core_.gwh},
          {"b", &core_.b, &core_.gb},
          {"wq", &wq_, &gwq_},
          {"wk", &wk_, &gwk_},
          {"wv", &wv_, &gwv_},
          {"head_w", &head_w_, &g_head_w_},
          {"head_b", &head_b_, &g_head_b_}};
}

double AttentionNet::example_logit(const SequenceWindow& w, AttnCache* cache) const {
  require_observed(w);
  const int hid = core_.hidden();
  const int steps = static_cast<int>(w.values.rows());
  AttnCache local;
  AttnCache& cc = cache ? *cache : local;
  cc.enc = core_.forward(w);
  cc.q = cc.enc.h.back() * wq_;
  cc.k.assign(static_cast<std::size_t>(steps), Eigen::RowVectorXd());
  cc.v.assign(static_cast<std::size_t>(steps), Eigen::RowVectorXd());
  cc.alpha = Eigen::VectorXd::Zero(steps);

  const double scale = 1.0 / std::sqrt(static_cast<double>(hid));
  Eigen::VectorXd scores = Eigen::VectorXd::Zero(steps);
  double max_score = -std::numeric_limits<double>::infinity();
  for (int t = 0; t < steps; ++t) {
    if (w.mask[t] == 0.0) continue;
    const std::size_t ti = static_cast<std::size_t>(t);
    cc.k[ti] = cc.enc.h[ti] * wk_;
    cc.v[ti] = cc.enc.h[ti] * wv_;
    scores[t] = cc.q.dot(cc.k[ti]) * scale;
    max_score = std::max(max_score, scores[t]);
  }
  double denom = 0;
  for (int t = 0; t < steps; ++t) {
    if (w.mask[t] == 0.0) continue;
    cc.alpha[t] = std::exp(scores[t] - max_score);
    denom += cc.alpha[t];
  }
  cc.alpha /= denom;

  cc.ctx = Eigen::RowVectorXd::Zero(hid);
  for (int t = 0; t < steps; ++t) {
    if (w.mask[t] != 0.0) cc.ctx += cc.alpha[t] * cc.v[static_cast<std::size_t>(t)];
  }
  return (cc.ctx * head_w_)(0, 0) + head_b_(0, 0);
}

Eigen::VectorXd AttentionNet::attention_weights(const SequenceWindow& w) const {
  AttnCache cache;
  example_logit(w, &cache);
  return cache.alpha;
}

double AttentionNet::loss_and_grad(const std::vector<SequenceWindow>& windows,
                                   const std::vector<int>& idx, const Eigen::VectorXd& y) {
  const auto n = static_cast<double>(idx.size());
  const double scale = 1.0 / std::sqrt(static_cast<double>(core_.hidden()));
  double loss = 0;
  for (int i : idx) {
    const SequenceWindow& w = windows[static_cast<std::size_t>(i)];
    AttnCache cache;
    const double logit = example_logit(w, &cache);
    double dz;
    if (classifier_) {
      loss += bce_from_logit(logit, y[i]);
      dz = (sigmoid(logit) - y[i]) / n;
    } else {
      const double err = logit - y[i];
      loss += 0.5 * err * err;
      dz = err / n;
    }
    const int steps = static_cast<int>(w.values.rows());
    g_head_w_ += cache.ctx.transpose() * dz;
    g_head_b_(0, 0) += dz;
    const Eigen::RowVectorXd dctx = dz * head_w_.transpose();

    // Through the attention combination.
    Eigen::VectorXd dalpha = Eigen::VectorXd::Zero(steps);
    for (int t = 0; t < steps; ++t) {
      if (w.mask[t] != 0.0) dalpha[t] = dctx.dot(cache.v[static_cast<std::size_t>(t)]);
    }
    double alpha_dot = 0;
    for (int t = 0; t < steps; ++t) alpha_dot += cache.alpha[t] * dalpha[t];

    std::vector<Eigen::RowVectorXd> inject(static_cast<std::size_t>(steps));
    Eigen::RowVectorXd dq = Eigen::RowVectorXd::Zero(core_.hidden());
    for (int t = 0; t < steps; ++t) {
      if (w.mask[t] == 0.0) continue;
      const std::size_t ti = static_cast<std::size_t>(t);
      const double ds = cache.alpha[t] * (dalpha[t] - alpha_dot) * scale;
      dq += ds * cache.k[ti];
      const Eigen::RowVectorXd dk = ds * cache.q;
      const Eigen::RowVectorXd dv = cache.alpha[t] * dctx;
      gwk_ += cache.enc.h[ti].transpose() * dk;
      gwv_ += cache.enc.h[ti].transpose() * dv;
      Eigen::RowVectorXd dht = dk * wk_.transpose() + dv * wv_.transpose();
      inject[ti] = inject[ti].size() > 0 ? Eigen::RowVectorXd(inject[ti] + dht) : dht;
    }
    gwq_ += cache.enc.h.back().transpose() * dq;
    const Eigen::RowVectorXd dh_last = dq * wq_.transpose();
    const std::size_t last = static_cast<std::size_t>(steps - 1);
    inject[last] = inject[last].size() > 0 ? Eigen::RowVectorXd(inject[last] + dh_last) : dh_last;

    core_.backward(cache.enc, inject);
  }
  return loss / n;
}

double AttentionNet::loss_only(const std::vector<SequenceWindow>& windows,
                               const std::vector<int>& idx, const Eigen::VectorXd& y) const {
  double loss = 0;
  for (int i : idx) {
    const double logit = example_logit(windows[static_cast<std::size_t>(i)], nullptr);
    loss += classifier_ ? bce_from_logit(logit, y[i])
                        : 0.5 * (logit - y[i]) * (logit - y[i]);
  }
  return loss / static_cast<double>(idx.size());
}

Eigen::VectorXd AttentionNet::output(const std::vector<SequenceWindow>& windows) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(windows.size()));
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const double logit = example_logit(windows[i], nullptr);
    out[static_cast<Eigen::Index>(i)] = classifier_ ? sigmoid(logit) : logit;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training loops

namespace {

// Divergence: non-finite loss, or the epoch loss exceeding the loss ten
// epochs earlier by more than 5%.
void check_divergence(const std::vector<double>& losses, int epoch) {
  if (!std::isfinite(losses.back())) throw TrainingDiverged(epoch);
  if (epoch >= 10) {
    const double ref = losses[static_cast<std::size_t>(epoch - 10)];
    if (losses.back() > ref * 1.05 + 1e-12) throw TrainingDiverged(epoch);
  }
}

void sgd_step(Network& net, double lr) {
  for (auto& p : net.params()) *p.value -= lr * *p.grad;
}

}  // namespace

TrainInfo train_tabular(Mlp& net, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                        const SgdOptions& opt) {
  const int n = static_cast<int>(x.rows());
  Rng rng(opt.seed);
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  TrainInfo info;
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0;
    for (int start = 0; start < n; start += opt.batch_size) {
      const int count = std::min(opt.batch_size, n - start);
      Eigen::MatrixXd bx(count, x.cols());
      Eigen::VectorXd by(count);
      for (int k = 0; k < count; ++k) {
        bx.row(k) = x.row(order[static_cast<std::size_t>(start + k)]);
        by[k] = y[order[static_cast<std::size_t>(start + k)]];
      }
      net.zero_grads();
      epoch_loss += net.loss_and_grad(bx, by) * count;
      sgd_step(net, opt.learning_rate);
    }
    info.epoch_losses.push_back(epoch_loss / n);
    info.epochs_run = epoch + 1;
    check_divergence(info.epoch_losses, epoch);
  }
  info.final_loss = info.epoch_losses.empty() ? 0.0 : info.epoch_losses.back();
  return info;
}

TrainInfo train_sequence(SequenceNet& net, const std::vector<SequenceWindow>& windows,
                         const Eigen::VectorXd& y, const SgdOptions& opt) {
  const int n = static_cast<int>(windows.size());
  Rng rng(opt.seed);
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  TrainInfo info;
  std::vector<int> batch;
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0;
    for (int start = 0; start < n; start += opt.batch_size) {
      const int count = std::min(opt.batch_size, n - start);
      batch.assign(order.begin() + start, order.begin() + start + count);
      net.zero_grads();
      epoch_loss += net.loss_and_grad(windows, batch, y) * count;
      sgd_step(net, opt.learning_rate);
    }
    info.epoch_losses.push_back(epoch_loss / n);
    info.epochs_run = epoch + 1;
    check_divergence(info.epoch_losses, epoch);
  }
  info.final_loss = info.epoch_losses.empty() ? 0.0 : info.epoch_losses.back();
  return info;
}

double gradient_check(Network& net, const std::function<double()>& loss_only,
                      const std::function<double()>& loss_and_grad, double h, int max_coords,
                      std::uint64_t seed) {
  net.zero_grads();
  loss_and_grad();
  std::vector<Eigen::MatrixXd> grads;
  for (auto& p : net.params()) grads.push_back(*p.grad);

  // Enumerate (param, coordinate) pairs; subsample when requested.
  std::vector<std::pair<std::size_t, Eigen::Index>> coords;
  const auto refs = net.params();
  for (std::size_t pi = 0; pi < refs.size(); ++pi) {
    for (Eigen::Index k = 0; k < refs[pi].value->size(); ++k) coords.emplace_back(pi, k);
  }
  if (max_coords > 0 && static_cast<int>(coords.size()) > max_coords) {
    Rng rng(seed);
    rng.shuffle(coords);
    coords.resize(static_cast<std::size_t>(max_coords));
  }

  double max_rel = 0;
  for (const auto& [pi, k] : coords) {
    double* slot = refs[pi].value->data() + k;
    const double saved = *slot;
    *slot = saved + h;
    const double up = loss_only();
    *slot = saved - h;
    const double down = loss_only();
    *slot = saved;
    const double fd = (up - down) / (2.0 * h);
    const double bp = grads[pi].data()[k];
    const double rel = std::abs(bp - fd) / std::max(std::abs(bp) + std::abs(fd), 1e-8);
    max_rel = std::max(max_rel, rel);
  }
  return max_rel;
}

}  // namespace churn
