#include "coltwin/network.hpp"

#include <cmath>
#include <stdexcept>

#include "coltwin/errors.hpp"
#include "coltwin/rng.hpp"

namespace coltwin::nn {

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

template <typename F>
void for_each_tensor(NetworkParams& p, F&& f) {
  f(p.w1); f(p.b1); f(p.w2); f(p.b2); f(p.w3); f(p.b3); f(p.s13);
  f(p.w4); f(p.b4); f(p.s24); f(p.w5); f(p.b5);
}

template <typename F>
void for_each_tensor(const NetworkParams& p, F&& f) {
  f(p.w1); f(p.b1); f(p.w2); f(p.b2); f(p.w3); f(p.b3); f(p.s13);
  f(p.w4); f(p.b4); f(p.s24); f(p.w5); f(p.b5);
}

// Applies sigmoid-normalization heads to a raw output row.
void apply_heads(double o0, double o1, double o2, double o3, double* out4) {
  double uh = sigmoid(o0);
  double ut = sigmoid(o1);
  double s = uh + ut;
  if (s <= 0.0) {  // both sigmoids underflowed
    out4[0] = 0.5;
    out4[1] = 0.5;
  } else {
    out4[0] = uh / s;
    out4[1] = ut / s;
  }
  out4[2] = o2;
  out4[3] = o3;
}

}  // namespace

double swish(double x) { return x * sigmoid(x); }

double swish_derivative(double x) {
  double s = sigmoid(x);
  return s * (1.0 + x * (1.0 - s));
}

NetworkParams NetworkParams::zeros() {
  NetworkParams p;
  p.w1 = Eigen::MatrixXd::Zero(arch::h1, arch::input);
  p.w2 = Eigen::MatrixXd::Zero(arch::h2, arch::h1);
  p.w3 = Eigen::MatrixXd::Zero(arch::h3, arch::h2);
  p.w4 = Eigen::MatrixXd::Zero(arch::h4, arch::h3);
  p.w5 = Eigen::MatrixXd::Zero(arch::output, arch::h4);
  p.s13 = Eigen::MatrixXd::Zero(arch::h3, arch::h1);
  p.s24 = Eigen::MatrixXd::Zero(arch::h4, arch::h2);
  p.b1 = Eigen::VectorXd::Zero(arch::h1);
  p.b2 = Eigen::VectorXd::Zero(arch::h2);
  p.b3 = Eigen::VectorXd::Zero(arch::h3);
  p.b4 = Eigen::VectorXd::Zero(arch::h4);
  p.b5 = Eigen::VectorXd::Zero(arch::output);
  return p;
}

std::size_t NetworkParams::count() const {
  std::size_t n = 0;
  for_each_tensor(*this,
                  [&n](const auto& m) { n += static_cast<std::size_t>(m.size()); });
  return n;
}

bool NetworkParams::all_finite() const {
  bool ok = true;
  for_each_tensor(*this, [&ok](const auto& m) { ok = ok && m.allFinite(); });
  return ok;
}

double NetworkParams::get_flat(std::size_t i) const {
  double out = 0.0;
  bool found = false;
  for_each_tensor(*this, [&](const auto& m) {
    std::size_t n = static_cast<std::size_t>(m.size());
    if (!found && i < n) {
      out = m.data()[i];
      found = true;
    } else if (!found) {
      i -= n;
    }
  });
  if (!found) throw std::out_of_range("NetworkParams::get_flat");
  return out;
}

void NetworkParams::set_flat(std::size_t i, double v) {
  bool found = false;
  for_each_tensor(*this, [&](auto& m) {
    std::size_t n = static_cast<std::size_t>(m.size());
    if (!found && i < n) {
      m.data()[i] = v;
      found = true;
    } else if (!found) {
      i -= n;
    }
  });
  if (!found) throw std::out_of_range("NetworkParams::set_flat");
}

void NetworkParams::add_scaled(const NetworkParams& other, double scale) {
  w1 += scale * other.w1; b1 += scale * other.b1;
  w2 += scale * other.w2; b2 += scale * other.b2;
  w3 += scale * other.w3; b3 += scale * other.b3;
  s13 += scale * other.s13;
  w4 += scale * other.w4; b4 += scale * other.b4;
  s24 += scale * other.s24;
  w5 += scale * other.w5; b5 += scale * other.b5;
}

void forward_batch(const NetworkParams& p, const Eigen::MatrixXd& features,
                   ForwardCache& c) {
  if (features.cols() != arch::input)
    throw std::invalid_argument("forward_batch: expected 17 features");
  if (!p.all_finite())
    throw Error(ErrorCategory::other, "forward: non-finite parameters");
  const Eigen::Index n = features.rows();
  c.x = features;
  c.a1.noalias() = features * p.w1.transpose();
  c.a1.rowwise() += p.b1.transpose();
  c.h1 = c.a1.unaryExpr([](double v) { return swish(v); });
  c.a2.noalias() = c.h1 * p.w2.transpose();
  c.a2.rowwise() += p.b2.transpose();
  c.h2 = c.a2.unaryExpr([](double v) { return swish(v); });
  c.a3.noalias() = c.h2 * p.w3.transpose();
  c.a3.noalias() += c.h1 * p.s13.transpose();
  c.a3.rowwise() += p.b3.transpose();
  c.h3 = c.a3.unaryExpr([](double v) { return swish(v); });
  c.a4.noalias() = c.h3 * p.w4.transpose();
  c.a4.noalias() += c.h2 * p.s24.transpose();
  c.a4.rowwise() += p.b4.transpose();
  c.h4 = c.a4.unaryExpr([](double v) { return swish(v); });
  c.raw.noalias() = c.h4 * p.w5.transpose();
  c.raw.rowwise() += p.b5.transpose();
  c.out.resize(n, arch::output);
  for (Eigen::Index i = 0; i < n; ++i) {
    double out4[4];
    apply_heads(c.raw(i, 0), c.raw(i, 1), c.raw(i, 2), c.raw(i, 3), out4);
    for (int k = 0; k < 4; ++k) c.out(i, k) = out4[k];
  }
}

ModelOutput forward(const NetworkParams& p, const Eigen::RowVectorXd& features) {
  ForwardCache c;
  forward_batch(p, features, c);
  return {c.out(0, 0), c.out(0, 1), c.out(0, 2), c.out(0, 3)};
}

void backward_batch(const NetworkParams& p, const ForwardCache& c,
                    const Eigen::MatrixXd& d_out, Gradients& g) {
  const Eigen::Index n = c.x.rows();
  Eigen::MatrixXd d_raw(n, arch::output);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double uh = sigmoid(c.raw(i, 0));
    const double ut = sigmoid(c.raw(i, 1));
    const double s = uh + ut;
    // d x_hx / d o0 = uh' ut / s^2 and the normalized pair only responds to
    // the difference of the incoming gradients.
    const double diff = d_out(i, 0) - d_out(i, 1);
    if (s > 0.0) {
      d_raw(i, 0) = uh * (1.0 - uh) * ut / (s * s) * diff;
      d_raw(i, 1) = -ut * (1.0 - ut) * uh / (s * s) * diff;
    } else {
      d_raw(i, 0) = 0.0;
      d_raw(i, 1) = 0.0;
    }
    d_raw(i, 2) = d_out(i, 2);
    d_raw(i, 3) = d_out(i, 3);
  }

  g.w5.noalias() += d_raw.transpose() * c.h4;
  g.b5.noalias() += d_raw.colwise().sum().transpose();
  Eigen::MatrixXd d_h4 = d_raw * p.w5;

  Eigen::MatrixXd d_a4 =
      d_h4.cwiseProduct(c.a4.unaryExpr([](double v) { return swish_derivative(v); }));
  g.w4.noalias() += d_a4.transpose() * c.h3;
  g.b4.noalias() += d_a4.colwise().sum().transpose();
  g.s24.noalias() += d_a4.transpose() * c.h2;
  Eigen::MatrixXd d_h3 = d_a4 * p.w4;
  Eigen::MatrixXd d_h2 = d_a4 * p.s24;

  Eigen::MatrixXd d_a3 =
      d_h3.cwiseProduct(c.a3.unaryExpr([](double v) { return swish_derivative(v); }));
  g.w3.noalias() += d_a3.transpose() * c.h2;
  g.b3.noalias() += d_a3.colwise().sum().transpose();
  g.s13.noalias() += d_a3.transpose() * c.h1;
  d_h2.noalias() += d_a3 * p.w3;
  Eigen::MatrixXd d_h1 = d_a3 * p.s13;

  Eigen::MatrixXd d_a2 =
      d_h2.cwiseProduct(c.a2.unaryExpr([](double v) { return swish_derivative(v); }));
  g.w2.noalias() += d_a2.transpose() * c.h1;
  g.b2.noalias() += d_a2.colwise().sum().transpose();
  d_h1.noalias() += d_a2 * p.w2;

  Eigen::MatrixXd d_a1 =
      d_h1.cwiseProduct(c.a1.unaryExpr([](double v) { return swish_derivative(v); }));
  g.w1.noalias() += d_a1.transpose() * c.x;
  g.b1.noalias() += d_a1.colwise().sum().transpose();
}

AdamState AdamState::init() {
  AdamState s;
  s.m = NetworkParams::zeros();
  s.v = NetworkParams::zeros();
  s.step = 0;
  return s;
}

void adam_step(NetworkParams& params, const Gradients& grads, AdamState& state,
               double lr) {
  state.step += 1;
  const double b1 = state.beta1, b2 = state.beta2, eps = state.eps;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  auto update = [&](Eigen::MatrixXd& w, Eigen::MatrixXd& m, Eigen::MatrixXd& v,
                    const Eigen::MatrixXd& g) {
    if (g.rows() != w.rows() || g.cols() != w.cols())
      throw std::invalid_argument("adam_step: gradient shape mismatch");
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    w.array() -=
        lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
  };
  auto updatev = [&](Eigen::VectorXd& w, Eigen::VectorXd& m, Eigen::VectorXd& v,
                     const Eigen::VectorXd& g) {
    if (g.size() != w.size())
      throw std::invalid_argument("adam_step: gradient shape mismatch");
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    w.array() -=
        lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
  };
  update(params.w1, state.m.w1, state.v.w1, grads.w1);
  updatev(params.b1, state.m.b1, state.v.b1, grads.b1);
  update(params.w2, state.m.w2, state.v.w2, grads.w2);
  updatev(params.b2, state.m.b2, state.v.b2, grads.b2);
  update(params.w3, state.m.w3, state.v.w3, grads.w3);
  updatev(params.b3, state.m.b3, state.v.b3, grads.b3);
  update(params.s13, state.m.s13, state.v.s13, grads.s13);
  update(params.w4, state.m.w4, state.v.w4, grads.w4);
  updatev(params.b4, state.m.b4, state.v.b4, grads.b4);
  update(params.s24, state.m.s24, state.v.s24, grads.s24);
  update(params.w5, state.m.w5, state.v.w5, grads.w5);
  updatev(params.b5, state.m.b5, state.v.b5, grads.b5);
}

NetworkParams init_params(std::uint64_t seed) {
  Rng rng = Rng::substream(seed, "init");
  NetworkParams p = NetworkParams::zeros();
  auto fill = [&rng](Eigen::MatrixXd& w) {
    const double a = std::sqrt(3.0 / static_cast<double>(w.cols()));
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = rng.uniform(-a, a);
  };
  fill(p.w1);
  fill(p.w2);
  fill(p.w3);
  fill(p.s13);
  fill(p.w4);
  fill(p.s24);
  fill(p.w5);
  return p;
}

}  // namespace coltwin::nn
