#pragma once

#include <cassert>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "sortpress/rng.hpp"

namespace sortpress {

/// Fully connected network with tanh hidden layers and a linear output layer.
///
/// Parameters live in one flat vector (per layer: column-major weight block,
/// then bias); `weight(l)` and `bias(l)` are views into it. Inputs are batched
/// column-wise: a (input_size x batch) matrix maps to (output_size x batch).
template <typename Scalar>
class Mlp {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  /// Layer inputs recorded by forward() for backward().
  struct Tape {
    std::vector<Matrix> inputs;
  };

  Mlp() = default;

  explicit Mlp(std::vector<int> layer_sizes) : sizes_(std::move(layer_sizes)) {
    if (sizes_.size() < 2) throw std::invalid_argument("Mlp needs at least input and output sizes");
    Eigen::Index offset = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      offsets_.push_back(offset);
      offset += static_cast<Eigen::Index>(sizes_[l + 1]) * (sizes_[l] + 1);
    }
    params_ = Vector::Zero(offset);
  }

  const std::vector<int>& layer_sizes() const { return sizes_; }
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  int num_layers() const { return static_cast<int>(sizes_.size()) - 1; }
  Eigen::Index parameter_count() const { return params_.size(); }

  Vector& parameters() { return params_; }
  const Vector& parameters() const { return params_; }

  Eigen::Map<Matrix> weight(int l) { return {params_.data() + offsets_[l], rows(l), cols(l)}; }
  Eigen::Map<const Matrix> weight(int l) const { return {params_.data() + offsets_[l], rows(l), cols(l)}; }
  Eigen::Map<Vector> bias(int l) { return {params_.data() + offsets_[l] + rows(l) * cols(l), rows(l)}; }
  Eigen::Map<const Vector> bias(int l) const {
    return {params_.data() + offsets_[l] + rows(l) * cols(l), rows(l)};
  }

  Matrix forward(const Matrix& x) const {
    Tape unused;
    return forward(x, unused);
  }

  Matrix forward(const Matrix& x, Tape& tape) const {
    if (x.rows() != input_size()) {
      throw std::invalid_argument("Mlp::forward: input has " + std::to_string(x.rows()) + " rows, expected " +
                                  std::to_string(input_size()));
    }
    tape.inputs.clear();
    Matrix a = x;
    for (int l = 0; l < num_layers(); ++l) {
      Matrix z = weight(l) * a;
      z.colwise() += bias(l);
      tape.inputs.push_back(std::move(a));
      if (l + 1 < num_layers()) {
        a = z.array().tanh().matrix();
      } else {
        a = std::move(z);
      }
    }
    return a;
  }

  /// Gradient of sum(output_grad .* output) with respect to the flat parameters.
  Vector backward(const Tape& tape, const Matrix& output_grad) const {
    Vector grad = Vector::Zero(parameter_count());
    Matrix delta = output_grad;
    for (int l = num_layers() - 1; l >= 0; --l) {
      const Matrix& a = tape.inputs[static_cast<std::size_t>(l)];
      Eigen::Map<Matrix>(grad.data() + offsets_[l], rows(l), cols(l)).noalias() = delta * a.transpose();
      Eigen::Map<Vector>(grad.data() + offsets_[l] + rows(l) * cols(l), rows(l)) = delta.rowwise().sum();
      if (l > 0) {
        Matrix back = weight(l).transpose() * delta;
        delta = back.array() * (Scalar(1) - a.array().square());
      }
    }
    return grad;
  }

  template <typename NewScalar>
  Mlp<NewScalar> cast() const {
    Mlp<NewScalar> out(sizes_);
    out.parameters() = params_.template cast<NewScalar>();
    return out;
  }

 private:
  Eigen::Index rows(int l) const { return sizes_[static_cast<std::size_t>(l) + 1]; }
  Eigen::Index cols(int l) const { return sizes_[static_cast<std::size_t>(l)]; }

  std::vector<int> sizes_;
  std::vector<Eigen::Index> offsets_;
  Vector params_;
};

/// Orthogonal weights scaled by `gains[l]`, zero biases.
template <typename Scalar>
void orthogonal_init(Mlp<Scalar>& net, Rng& rng, const std::vector<double>& gains) {
  assert(static_cast<int>(gains.size()) == net.num_layers());
  for (int l = 0; l < net.num_layers(); ++l) {
    auto w = net.weight(l);
    const Eigen::Index big = std::max(w.rows(), w.cols());
    const Eigen::Index small = std::min(w.rows(), w.cols());
    Eigen::MatrixXd draw(big, small);
    for (Eigen::Index j = 0; j < small; ++j) {
      for (Eigen::Index i = 0; i < big; ++i) draw(i, j) = rng.normal();
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(draw);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(big, small);
    const Eigen::VectorXd signs = qr.matrixQR().diagonal().head(small).array().sign();
    q = q * signs.asDiagonal();
    const Eigen::MatrixXd shaped = w.rows() >= w.cols() ? q : Eigen::MatrixXd(q.transpose());
    w = (gains[static_cast<std::size_t>(l)] * shaped).template cast<Scalar>();
    net.bias(l).setZero();
  }
}

/// Separate policy (logits) and value networks over the same observation.
template <typename Scalar>
struct ActorCritic {
  Mlp<Scalar> policy;
  Mlp<Scalar> value;

  static ActorCritic make(int obs_len, int n_actions, const std::vector<int>& hidden, Rng& rng) {
    std::vector<int> pi{obs_len};
    pi.insert(pi.end(), hidden.begin(), hidden.end());
    std::vector<int> vf = pi;
    pi.push_back(n_actions);
    vf.push_back(1);
    ActorCritic net{Mlp<Scalar>(pi), Mlp<Scalar>(vf)};
    std::vector<double> hidden_gains(hidden.size(), std::sqrt(2.0));
    auto pi_gains = hidden_gains;
    pi_gains.push_back(0.01);
    auto vf_gains = hidden_gains;
    vf_gains.push_back(1.0);
    orthogonal_init(net.policy, rng, pi_gains);
    orthogonal_init(net.value, rng, vf_gains);
    return net;
  }

  int obs_len() const { return policy.input_size(); }
  int n_actions() const { return policy.output_size(); }
  Eigen::Index parameter_count() const { return policy.parameter_count() + value.parameter_count(); }

  template <typename NewScalar>
  ActorCritic<NewScalar> cast() const {
    return {policy.template cast<NewScalar>(), value.template cast<NewScalar>()};
  }
};

}  // namespace sortpress
