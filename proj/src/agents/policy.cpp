#include <artheater/agents/policy.hpp>

#include <bit>
#include <cstring>

namespace artheater::agents {

template <typename Scalar>
PolicyNetwork<Scalar>::PolicyNetwork(int input_dim_, std::vector<int> hidden_, int continuous_, int discrete_)
    : input_dim(input_dim_), hidden(std::move(hidden_)), continuous(continuous_), discrete(discrete_) {
  Eigen::Index offset = 0;
  const auto add = [&](int rows, int cols) {
    Layer l{rows, cols, offset, offset + Eigen::Index(rows) * cols};
    offset = l.b + rows;
    return l;
  };
  int prev = input_dim;
  for (int h : hidden) {
    trunk.push_back(add(h, prev));
    prev = h;
  }
  mean_head = add(continuous, prev);
  logits_head = add(discrete, prev);
  value_head = add(1, prev);
  log_std_offset = offset;
  theta = Vector::Zero(offset + continuous);
}

template <typename Scalar>
void PolicyNetwork<Scalar>::initialize(Rng& rng, Scalar initial_log_std) {
  const auto fill = [&](const Layer& l, double scale) {
    const double s = scale / std::sqrt(static_cast<double>(l.cols));
    for (Eigen::Index i = 0; i < Eigen::Index(l.rows) * l.cols; ++i) theta[l.w + i] = Scalar(s * gaussian(rng));
    for (int i = 0; i < l.rows; ++i) theta[l.b + i] = Scalar(0);
  };
  for (const auto& l : trunk) fill(l, 1.0);
  fill(mean_head, 0.01);
  fill(logits_head, 0.01);
  fill(value_head, 1.0);
  for (int i = 0; i < continuous; ++i) theta[log_std_offset + i] = initial_log_std;
}

template <typename Scalar>
typename PolicyNetwork<Scalar>::Forward PolicyNetwork<Scalar>::forward(const Matrix& x) const {
  Forward f;
  f.activations.reserve(trunk.size() + 1);
  f.activations.push_back(x);
  for (const auto& l : trunk) {
    Matrix z = weight(l) * f.activations.back();
    z.colwise() += bias(l);
    f.activations.push_back(z.array().tanh().matrix());
  }
  const Matrix& h = f.activations.back();
  f.mean = weight(mean_head) * h;
  f.mean.colwise() += bias(mean_head);
  f.logits = weight(logits_head) * h;
  f.logits.colwise() += bias(logits_head);
  f.value = weight(value_head) * h;
  f.value.colwise() += bias(value_head);
  return f;
}

template <typename Scalar>
typename PolicyNetwork<Scalar>::Vector PolicyNetwork<Scalar>::backward(const Forward& f, const Matrix& d_mean,
                                                                       const Matrix& d_logits, const Matrix& d_value,
                                                                       const Vector& d_log_std) const {
  Vector g = Vector::Zero(theta.size());
  const auto put = [&](const Layer& l, const Matrix& dz, const Matrix& input) {
    Eigen::Map<Matrix>(g.data() + l.w, l.rows, l.cols) += dz * input.transpose();
    Eigen::Map<Vector>(g.data() + l.b, l.rows) += dz.rowwise().sum();
  };
  const Matrix& h = f.activations.back();
  put(mean_head, d_mean, h);
  put(logits_head, d_logits, h);
  put(value_head, d_value, h);
  Matrix dh = weight(mean_head).transpose() * d_mean + weight(logits_head).transpose() * d_logits +
              weight(value_head).transpose() * d_value;
  for (std::size_t i = trunk.size(); i-- > 0;) {
    const Matrix& out = f.activations[i + 1];
    const Matrix dz = (dh.array() * (Scalar(1) - out.array().square())).matrix();
    put(trunk[i], dz, f.activations[i]);
    if (i > 0) dh = weight(trunk[i]).transpose() * dz;
  }
  Eigen::Map<Vector>(g.data() + log_std_offset, continuous) += d_log_std;
  return g;
}

template <typename Scalar>
void Adam<Scalar>::step(Vector& theta, const Vector& grad) {
  ++t_;
  m_ = beta1_ * m_ + (Scalar(1) - beta1_) * grad;
  v_ = beta2_ * v_ + (Scalar(1) - beta2_) * grad.cwiseProduct(grad);
  const Scalar c1 = Scalar(1) - Scalar(std::pow(double(beta1_), double(t_)));
  const Scalar c2 = Scalar(1) - Scalar(std::pow(double(beta2_), double(t_)));
  theta.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
}

template <typename Scalar>
void clip_gradient(Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& grad, Scalar max_norm) {
  const Scalar n = grad.norm();
  if (n > max_norm && n > Scalar(0)) grad *= max_norm / n;
}

template class PolicyNetwork<float>;
template class PolicyNetwork<double>;
template class Adam<float>;
template class Adam<double>;
template void clip_gradient<float>(Eigen::VectorXf&, float);
template void clip_gradient<double>(Eigen::VectorXd&, double);

AgentAction to_action(double raw_speed, double raw_turn, int gesture) {
  return AgentAction{0.5 * (raw_speed + 1.0), raw_turn, gesture}.clamped();
}

AgentAction greedy_action(const Policy& policy, const Observation& obs) {
  const auto f = policy.forward(obs.cast<float>());
  Eigen::Index g = 0;
  f.logits.col(0).maxCoeff(&g);
  return to_action(f.mean(0, 0), f.mean(1, 0), static_cast<int>(g));
}

AgentAction sample_action(const Policy& policy, const Observation& obs, Rng& rng, Eigen::Vector2d* raw, int* gesture,
                          double* log_prob, double* value) {
  const auto f = policy.forward(obs.cast<float>());
  const auto ls = policy.log_std();
  Eigen::Vector2d a;
  double lp = 0.0;
  for (int j = 0; j < 2; ++j) {
    const double mu = f.mean(j, 0), sd = std::exp(double(ls[j]));
    const double eps = gaussian(rng);
    a[j] = mu + sd * eps;
    lp += -0.5 * eps * eps - double(ls[j]) - 0.5 * std::log(2 * kPi);
  }
  const Eigen::VectorXd logits = f.logits.col(0).cast<double>();
  const double mx = logits.maxCoeff();
  const Eigen::VectorXd p = (logits.array() - mx).exp();
  const double z = p.sum();
  double u = uniform01(rng) * z;
  int g = 0;
  while (g + 1 < p.size() && u >= p[g]) u -= p[g++];
  lp += logits[g] - mx - std::log(z);
  if (raw) *raw = a;
  if (gesture) *gesture = g;
  if (log_prob) *log_prob = lp;
  if (value) *value = f.value(0, 0);
  return to_action(a[0], a[1], g);
}

namespace {

constexpr char kMagic[8] = {'A', 'R', 'T', 'H', 'P', 'O', 'L', '\0'};
constexpr std::uint32_t kCheckpointVersion = 1;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T take(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw CheckpointError("truncated checkpoint");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace

std::string checkpoint_bytes(const Policy& p) {
  std::string out(kMagic, sizeof(kMagic));
  put(out, kCheckpointVersion);
  std::vector<Policy::Layer> layers = p.trunk;
  layers.insert(layers.end(), {p.mean_head, p.logits_head, p.value_head});
  put(out, static_cast<std::uint32_t>(layers.size()));
  for (const auto& l : layers) {
    put(out, static_cast<std::uint32_t>(l.rows));
    put(out, static_cast<std::uint32_t>(l.cols));
  }
  for (const auto& l : layers) {
    const auto w = p.weight(l);
    for (int r = 0; r < l.rows; ++r) {
      for (int c = 0; c < l.cols; ++c) put(out, w(r, c));
    }
    const auto b = p.bias(l);
    for (int r = 0; r < l.rows; ++r) put(out, b[r]);
  }
  for (int i = 0; i < p.continuous; ++i) put(out, p.log_std()[i]);
  return out;
}

Policy policy_from_checkpoint(const std::string& bytes) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError("not a policy checkpoint");
  }
  std::size_t pos = sizeof(kMagic);
  const auto version = take<std::uint32_t>(bytes, pos);
  if (version != kCheckpointVersion) throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  const auto n = take<std::uint32_t>(bytes, pos);
  if (n < 4 || n > 64) throw CheckpointError("bad layer count");
  std::vector<std::pair<int, int>> dims;
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto r = take<std::uint32_t>(bytes, pos);
    const auto c = take<std::uint32_t>(bytes, pos);
    dims.emplace_back(static_cast<int>(r), static_cast<int>(c));
  }
  std::vector<int> hidden;
  for (std::uint32_t i = 0; i + 3 < n; ++i) hidden.push_back(dims[i].first);
  Policy p(dims[0].second, hidden, dims[n - 3].first, dims[n - 2].first);
  std::vector<Policy::Layer> layers = p.trunk;
  layers.insert(layers.end(), {p.mean_head, p.logits_head, p.value_head});
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].rows != dims[i].first || layers[i].cols != dims[i].second) {
      throw CheckpointError("inconsistent layer dimensions");
    }
  }
  for (const auto& l : layers) {
    Eigen::Map<Policy::Matrix> w(p.theta.data() + l.w, l.rows, l.cols);
    for (int r = 0; r < l.rows; ++r) {
      for (int c = 0; c < l.cols; ++c) w(r, c) = take<float>(bytes, pos);
    }
    for (int r = 0; r < l.rows; ++r) p.theta[l.b + r] = take<float>(bytes, pos);
  }
  for (int i = 0; i < p.continuous; ++i) p.theta[p.log_std_offset + i] = take<float>(bytes, pos);
  if (pos != bytes.size()) throw CheckpointError("trailing bytes in checkpoint");
  return p;
}

}  // namespace artheater::agents
