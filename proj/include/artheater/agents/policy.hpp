#pragma once

#include <artheater/agents/env.hpp>

#include <Eigen/Dense>

#include <vector>

namespace artheater::agents {

ARTHEATER_DEFINE_ERROR(CheckpointError);

/// Shared-trunk actor-critic MLP with tanh hidden layers and three heads:
/// Gaussian mean over the continuous action (with a state-independent
/// log-std), logits over gestures, and a scalar value.
///
/// All parameters live in one flat vector `theta`; each layer is a
/// column-major block of it. Batches are column-per-sample.
template <typename Scalar>
class PolicyNetwork {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  struct Layer {
    int rows = 0;
    int cols = 0;
    Eigen::Index w = 0;  // offset of the weight block
    Eigen::Index b = 0;  // offset of the bias
  };

  struct Forward {
    std::vector<Matrix> activations;  // input, then each hidden layer
    Matrix mean;                      // continuous x batch
    Matrix logits;                    // discrete x batch
    Matrix value;                     // 1 x batch
  };

  PolicyNetwork() = default;
  PolicyNetwork(int input_dim, std::vector<int> hidden = {128, 128, 128}, int continuous = 2,
                int discrete = kGestureCount);

  /// Scaled Gaussian initialization; small policy-mean head, log-std at
  /// `initial_log_std`.
  void initialize(Rng& rng, Scalar initial_log_std = Scalar(-0.5));

  Forward forward(const Matrix& x) const;

  /// Gradient of a loss with respect to theta, given the loss gradients on
  /// each head output and on log-std.
  Vector backward(const Forward& f, const Matrix& d_mean, const Matrix& d_logits, const Matrix& d_value,
                  const Vector& d_log_std) const;

  Eigen::Map<const Matrix> weight(const Layer& l) const { return {theta.data() + l.w, l.rows, l.cols}; }
  Eigen::Map<const Vector> bias(const Layer& l) const { return {theta.data() + l.b, l.rows}; }
  Eigen::Map<const Vector> log_std() const { return {theta.data() + log_std_offset, continuous}; }

  template <typename Other>
  PolicyNetwork<Other> cast() const {
    PolicyNetwork<Other> p(input_dim, hidden, continuous, discrete);
    p.theta = theta.template cast<Other>();
    return p;
  }

  bool finite() const { return theta.allFinite(); }

  int input_dim = 0;
  std::vector<int> hidden;
  int continuous = 2;
  int discrete = kGestureCount;
  std::vector<Layer> trunk;
  Layer mean_head, logits_head, value_head;
  Eigen::Index log_std_offset = 0;
  Vector theta;
};

using Policy = PolicyNetwork<float>;

template <typename Scalar>
class Adam {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  explicit Adam(Eigen::Index n = 0, Scalar lr = Scalar(3e-4)) : m_(Vector::Zero(n)), v_(Vector::Zero(n)), lr_(lr) {}

  void step(Vector& theta, const Vector& grad);
  void set_learning_rate(Scalar lr) { lr_ = lr; }

 private:
  Vector m_, v_;
  Scalar lr_;
  Scalar beta1_ = Scalar(0.9), beta2_ = Scalar(0.999), eps_ = Scalar(1e-8);
  long t_ = 0;
};

/// Rescales `grad` in place so its norm is at most `max_norm`.
template <typename Scalar>
void clip_gradient(Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& grad, Scalar max_norm);

/// Maps a raw continuous sample to an environment action.
AgentAction to_action(double raw_speed, double raw_turn, int gesture);

/// Deterministic action: the Gaussian mean and the most likely gesture.
AgentAction greedy_action(const Policy& policy, const Observation& obs);

/// Stochastic action; `raw` receives the unclamped continuous sample.
AgentAction sample_action(const Policy& policy, const Observation& obs, Rng& rng, Eigen::Vector2d* raw = nullptr,
                          int* gesture = nullptr, double* log_prob = nullptr, double* value = nullptr);

/// Flat binary checkpoint: "ARTHPOL\0", u32 version, u32 layer count, then
/// per layer u32 rows, u32 cols; then each layer's weights row-major followed
/// by its bias, and finally log-std, all little-endian float32. Layer order:
/// trunk..., mean, logits, value.
std::string checkpoint_bytes(const Policy& policy);
Policy policy_from_checkpoint(const std::string& bytes);

}  // namespace artheater::agents
