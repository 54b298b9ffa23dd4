#ifndef COLTWIN_NETWORK_HPP
#define COLTWIN_NETWORK_HPP

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace coltwin::nn {

// Fixed topology 17 -> 256 -> 256 -> 128 -> 64 -> 4 with Swish hidden
// activations and two learned skip projections: hidden-1 output into the
// layer-3 pre-activation and hidden-2 output into the layer-4 pre-activation
// (widths differ, so plain additions are not dimension-consistent).
namespace arch {
constexpr int input = 17;
constexpr int h1 = 256;
constexpr int h2 = 256;
constexpr int h3 = 128;
constexpr int h4 = 64;
constexpr int output = 4;
}  // namespace arch

// Weight matrices are (out x in); biases are column vectors.
struct NetworkParams {
  Eigen::MatrixXd w1, w2, w3, w4, w5;
  Eigen::MatrixXd s13, s24;  // skip projections 256->128 and 256->64
  Eigen::VectorXd b1, b2, b3, b4, b5;

  static NetworkParams zeros();
  std::size_t count() const;
  bool all_finite() const;

  // Flat coordinate view in a fixed order (w1,b1,w2,b2,w3,b3,s13,w4,b4,s24,
  // w5,b5); used by finite-difference probes and the checkpoint codec.
  double get_flat(std::size_t i) const;
  void set_flat(std::size_t i, double v);
  void add_scaled(const NetworkParams& other, double scale);
};

// Output heads: sigmoid + closure normalization for the two mole fractions,
// linear heads (in min-max-normalized units) for tray temperature and
// pressure.
struct ModelOutput {
  double x_hx = 0.0;
  double x_tx = 0.0;
  double t_tray = 0.0;
  double p_tray = 0.0;
};

// Per-batch activations cached for the backward pass. Rows are samples.
struct ForwardCache {
  Eigen::MatrixXd x;            // N x 17
  Eigen::MatrixXd a1, a2, a3, a4;
  Eigen::MatrixXd h1, h2, h3, h4;
  Eigen::MatrixXd raw;          // N x 4 pre-head
  Eigen::MatrixXd out;          // N x 4 after heads (x_hx, x_tx, t, p)
};

ModelOutput forward(const NetworkParams& p, const Eigen::RowVectorXd& features);
void forward_batch(const NetworkParams& p, const Eigen::MatrixXd& features,
                   ForwardCache& cache);

using Gradients = NetworkParams;

// Accumulates d(loss)/d(params) given d(loss)/d(out) for the cached batch.
void backward_batch(const NetworkParams& p, const ForwardCache& cache,
                    const Eigen::MatrixXd& d_out, Gradients& grads);

struct AdamState {
  Gradients m, v;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState init();
};

// Standard bias-corrected Adam update.
void adam_step(NetworkParams& params, const Gradients& grads, AdamState& state,
               double lr);

// Fan-in-scaled uniform weights (variance 1/fan_in), zero biases.
NetworkParams init_params(std::uint64_t seed);

double swish(double x);
double swish_derivative(double x);

}  // namespace coltwin::nn

#endif  // COLTWIN_NETWORK_HPP
