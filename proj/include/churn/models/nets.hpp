#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "churn/features.hpp"
#include "churn/rng.hpp"

namespace churn {

class TrainingDiverged : public std::runtime_error {
 public:
  explicit TrainingDiverged(int epoch)
      : std::runtime_error("training diverged at epoch " + std::to_string(epoch)),
        epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

struct ParamRef {
  const char* name;
  Eigen::MatrixXd* value;
  Eigen::MatrixXd* grad;
};

class Network {
 public:
  virtual ~Network() = default;
  virtual std::vector<ParamRef> params() = 0;
  void zero_grads();
  long long parameter_count();
};

struct SgdOptions {
  int epochs = 30;
  int batch_size = 32;
  double learning_rate = 0.05;
  std::uint64_t seed = 1;
};

struct TrainInfo {
  double final_loss = 0;
  int epochs_run = 0;
  std::vector<double> epoch_losses;
};

// All losses: half mean squared error (regression) or mean binary
// cross-entropy from logits (classification).

class Mlp : public Network {
 public:
  Mlp(int in_dim, const std::vector<int>& hidden, bool classifier, Rng& rng);

  std::vector<ParamRef> params() override;
  double loss_and_grad(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);
  double loss_only(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) const;
  // Regression: raw head output. Classification: sigmoid probability.
  Eigen::VectorXd output(const Eigen::MatrixXd& x) const;

  int in_dim() const { return in_dim_; }
  const std::vector<int>& hidden() const { return hidden_; }
  bool classifier() const { return classifier_; }

 private:
  Eigen::VectorXd logits(const Eigen::MatrixXd& x, std::vector<Eigen::MatrixXd>* acts) const;

  int in_dim_;
  std::vector<int> hidden_;
  bool classifier_;
  std::vector<Eigen::MatrixXd> weights_, biases_;  // biases are 1 x out
  std::vector<Eigen::MatrixXd> gw_, gb_;
};

// Sequence models consume SequenceWindow batches; masked (padded) steps
// contribute nothing: recurrent state freezes, attention weights are exactly
// zero, pooling skips them.
class SequenceNet : public Network {
 public:
  virtual double loss_and_grad(const std::vector<SequenceWindow>& windows,
                               const std::vector<int>& idx, const Eigen::VectorXd& y) = 0;
  virtual double loss_only(const std::vector<SequenceWindow>& windows,
                           const std::vector<int>& idx, const Eigen::VectorXd& y) const = 0;
  virtual Eigen::VectorXd output(const std::vector<SequenceWindow>& windows) const = 0;
  virtual bool classifier() const = 0;
};

class Cnn1d : public SequenceNet {
 public:
  Cnn1d(int in_dim, int channels, int kernel, bool classifier, Rng& rng);
  std::vector<ParamRef> params() override;
  double loss_and_grad(const std::vector<SequenceWindow>&, const std::vector<int>&,
                       const Eigen::VectorXd&) override;
  double loss_only(const std::vector<SequenceWindow>&, const std::vector<int>&,
                   const Eigen::VectorXd&) const override;
  Eigen::VectorXd output(const std::vector<SequenceWindow>&) const override;
  bool classifier() const override { return classifier_; }

  int in_dim() const { return in_dim_; }
  int channels() const { return channels_; }
  int kernel() const { return kernel_; }

 private:
  double example_logit(const SequenceWindow& w, Eigen::MatrixXd* z_cache,
                       Eigen::RowVectorXd* pooled_cache) const;

  int in_dim_, channels_, kernel_;
  bool classifier_;
  Eigen::MatrixXd conv_w_, conv_b_;  // (kernel*in) x channels, 1 x channels
  Eigen::MatrixXd head_w_, head_b_;  // channels x 1, 1 x 1
  Eigen::MatrixXd g_conv_w_, g_conv_b_, g_head_w_, g_head_b_;
};

// Shared gated-cell core used by Lstm and AttentionNet.
struct LstmCore {
  Eigen::MatrixXd wx, wh, b;  // d x 4H, H x 4H, 1 x 4H; gate order i, f, g, o
  Eigen::MatrixXd gwx, gwh, gb;

  void init(int in_dim, int hidden, Rng& rng);
  int hidden() const { return static_cast<int>(wh.rows()); }

  struct Cache {
    const SequenceWindow* window = nullptr;
    std::vector<Eigen::RowVectorXd> h, c, gi, gf, gg, go, tc;
  };
  Cache forward(const SequenceWindow& w) const;
  // dh_inject[t] is the loss gradient arriving directly at h_t.
  void backward(const Cache& cache, const std::vector<Eigen::RowVectorXd>& dh_inject);
};

class Rnn : public SequenceNet {
 public:
  Rnn(int in_dim, int hidden, bool classifier, Rng& rng);
  std::vector<ParamRef> params() override;
  double loss_and_grad(const std::vector<SequenceWindow>&, const std::vector<int>&,
                       const Eigen::VectorXd&) override;
  double loss_only(const std::vector<SequenceWindow>&, const std::vector<int>&,
                   const Eigen::VectorXd&) const override;
  Eigen::VectorXd output(const std::vector<SequenceWindow>&) const override;
  bool classifier() const override { return classifier_; }
  int in_dim() const { return in_dim_; }
  int hidden_dim() const { return hidden_; }

 private:
  double example_logit(const SequenceWindow& w, std::vector<Eigen::RowVectorXd>* h_cache) const;

  int in_dim_, hidden_;
  bool classifier_;
  Eigen::MatrixXd wx_, wh_, b_, head_w_, head_b_;
  Eigen::MatrixXd gwx_, gwh_, gb_, g_head_w_, g_head_b_;
};

class Lstm : public SequenceNet {
 public:
  Lstm(int in_dim, int hidden, bool classifier, Rng& rng);
  std::vector<ParamRef> params() override;
  double loss_and_grad(const std::vector<SequenceWindow>&, const std::vector<int>&,
                       const Eigen::VectorXd&) override;
  double loss_only(const std::vector<SequenceWindow>&, const std::vector<int>&,
                   const Eigen::VectorXd&) const override;
  Eigen::VectorXd output(const std::vector<SequenceWindow>&) const override;
  bool classifier() const override { return classifier_; }
  int in_dim() const { return in_dim_; }
  int hidden_dim() const { return core_.hidden(); }

 private:
  int in_dim_;
  bool classifier_;
  LstmCore core_;
  Eigen::MatrixXd head_w_, head_b_;
  Eigen::MatrixXd g_head_w_, g_head_b_;
};

// Lstm encoder with scaled dot-product attention pooling: the query is the
// final state, keys/values project the encoder states, masked steps get
// attention weight exactly 0.
class AttentionNet : public SequenceNet {
 public:
  AttentionNet(int in_dim, int hidden, bool classifier, Rng& rng);
  std::vector<ParamRef> params() override;
  double loss_and_grad(const std::vector<SequenceWindow>&, const std::vector<int>&,
                       const Eigen::VectorXd&) override;
  double loss_only(const std::vector<SequenceWindow>&, const std::vector<int>&,
                   const Eigen::VectorXd&) const override;
  Eigen::VectorXd output(const std::vector<SequenceWindow>&) const override;
  bool classifier() const override { return classifier_; }
  int in_dim() const { return in_dim_; }
  int hidden_dim() const { return core_.hidden(); }

  // Attention weights for one window (testing hook); zeros on masked steps.
  Eigen::VectorXd attention_weights(const SequenceWindow& w) const;

 private:
  struct AttnCache {
    LstmCore::Cache enc;
    Eigen::RowVectorXd q, ctx;
    std::vector<Eigen::RowVectorXd> k, v;
    Eigen::VectorXd alpha;
  };
  double example_logit(const SequenceWindow& w, AttnCache* cache) const;

  int in_dim_;
  bool classifier_;
  LstmCore core_;
  Eigen::MatrixXd wq_, wk_, wv_, head_w_, head_b_;
  Eigen::MatrixXd gwq_, gwk_, gwv_, g_head_w_, g_head_b_;
};

TrainInfo train_tabular(Mlp& net, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                        const SgdOptions& opt);
TrainInfo train_sequence(SequenceNet& net, const std::vector<SequenceWindow>& windows,
                         const Eigen::VectorXd& y, const SgdOptions& opt);

// Backprop vs central finite differences over every parameter coordinate (or a
// seeded subsample of at least max_coords when positive). Returns the largest
// relative error.
double gradient_check(Network& net, const std::function<double()>& loss_only,
                      const std::function<double()>& loss_and_grad, double h = 1e-5,
                      int max_coords = 0, std::uint64_t seed = 0);

}  // namespace churn
