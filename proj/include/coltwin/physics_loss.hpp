#ifndef COLTWIN_PHYSICS_LOSS_HPP
#define COLTWIN_PHYSICS_LOSS_HPP

#include <cstdint>
#include <string>

#include <Eigen/Core>

#include "coltwin/config.hpp"
#include "coltwin/dataset.hpp"
#include "coltwin/network.hpp"
#include "coltwin/thermo.hpp"

namespace coltwin::phys {

// Adaptive weights: lambda_d(k) = sigmoid(0.02 (k - 300)), lambda_p = 1 -
// lambda_d, lambda_b fixed at 0.1.
struct LossWeights {
  double lambda_d = 0.0;
  double lambda_p = 0.0;
  double lambda_b = 0.1;
};
LossWeights schedule(int epoch);

struct LossBreakdown {
  double l_data = 0.0;
  double l_vle = 0.0;
  double l_mass = 0.0;
  double l_energy = 0.0;
  double l_mccabe = 0.0;
  double l_bc = 0.0;
  double l_reg = 0.0;
  LossWeights weights;

  double l_phys() const { return l_vle + l_mass + l_energy + l_mccabe; }
  double total() const {
    return weights.lambda_d * l_data + weights.lambda_p * l_phys() +
           weights.lambda_b * l_bc + l_reg;
  }
};

// 2000 (by default) points uniform in the normalized 17-dimensional input
// hypercube, drawn once per run from the "collocation" substream.
struct CollocationSet {
  Eigen::MatrixXd points;  // n x 17 in [0, 1]
  static CollocationSet sample(int n, std::uint64_t seed);
};

// Everything the residual kernels need besides predictions: the binary
// system, the column geometry (pressure profile, holdup capacities, nominal
// duty/feed scales) and the train-fitted normalization stats used to map the
// T/P heads and collocation coordinates back to physical units.
struct PhysicsContext {
  const thermo::BinarySystem* sys = nullptr;
  const ColumnConfig* column = nullptr;
  data::NormStats stats;
  // Hard windows keeping Antoine evaluations inside their domain while the
  // unsupervised T/P heads are still settling.
  double t_clamp_lo = 250.0, t_clamp_hi = 550.0;   // K
  double p_clamp_lo = 5.0, p_clamp_hi = 500.0;     // kPa

  double feed_scale() const { return column->feed_flow_kmol_h; }
  double duty_scale() const { return column->reboiler_duty_kw; }
};

// Squared deviation of y_n from the rectifying operating line
// y = R/(R+1) x + x_d/(R+1). Light-component basis.
double mccabe_residual(double x_n, double y_n, double reflux, double x_d);

// Mean squared error over the batch and over the two mole-fraction targets.
double data_loss(const Eigen::MatrixXd& outputs, const Eigen::MatrixXd& targets);

// --- residual kernels with analytic partials w.r.t. the four outputs ---

struct PointTerms {
  double vle = 0.0;
  double mccabe = 0.0;
  double d_vle[4] = {0, 0, 0, 0};     // d/d(x_hx, x_tx, t_hat, p_hat)
  double d_mccabe[4] = {0, 0, 0, 0};
};
// VLE and McCabe consistency at one (collocation or record) point.
// VLE: the predicted mole fractions are the vapor sent to the total
// condenser, in equilibrium with the measured top-tray liquid (heavy fraction
// s8_hx) at the predicted tray state: R_VLE = sum_i (pred_i - gamma_i(x1)
// psat_i(T_hat) x1_i / P_hat)^2. Exactly zero on clean steady data.
// McCabe: the equilibrium vapor of the predicted composition at (T_hat,
// P_hat) must lie on the rectifying line through the measured top liquid.
PointTerms vle_mccabe_point(const PhysicsContext& ctx, double reflux,
                            double s8_hx, const nn::ModelOutput& out);

struct BcTerms {
  double bc = 0.0;
  double d_bc[4] = {0, 0, 0, 0};
};
// (x_hx + x_tx - 1)^2 + hinge on the dew-point bound of the predicted vapor,
// kelvin units. The dew temperature is differentiated implicitly through its
// defining closure.
BcTerms bc_point(const PhysicsContext& ctx, const nn::ModelOutput& out);

struct PairTerms {
  double mass = 0.0;    // (kmol/h)^2
  double energy = 0.0;  // (kW)^2
  double d_mass_xhx[2] = {0, 0};    // d/d x_hx_pred at (a, b)
  double d_energy_xtx[2] = {0, 0};  // d/d x_tx_pred at (a, b)
};
// Finite-difference balance residuals over one consecutive record pair
// (raw sensor rows dt_hours apart). Mass: condenser-drum envelope (the drum
// composition is the predicted distillate). Energy: reboiler envelope with
// internal flows reconstructed from the predicted distillate composition;
// q_kw is the applied reboiler duty.
PairTerms balance_pair(const PhysicsContext& ctx,
                       const Eigen::RowVectorXd& raw_a,
                       const Eigen::RowVectorXd& raw_b, double dt_hours,
                       const nn::ModelOutput& out_a,
                       const nn::ModelOutput& out_b, double q_kw);

// Single-pair conveniences (dimensional, used directly by tests).
double mass_balance_residual(const PhysicsContext& ctx,
                             const Eigen::RowVectorXd& raw_a,
                             const Eigen::RowVectorXd& raw_b, double dt_hours,
                             const nn::ModelOutput& out_a,
                             const nn::ModelOutput& out_b);
double energy_balance_residual(const PhysicsContext& ctx,
                               const Eigen::RowVectorXd& raw_a,
                               const Eigen::RowVectorXd& raw_b, double dt_hours,
                               const nn::ModelOutput& out_a,
                               const nn::ModelOutput& out_b, double q_kw);

// Reflux ratio / top-outlet anchors for a normalized collocation coordinate.
double denorm_reflux(const PhysicsContext& ctx, double u);
double denorm_s8_hx(const PhysicsContext& ctx, double u_sensor8);

// Physical tray temperature/pressure for the T/P heads (clamped window).
double denorm_t_head(const PhysicsContext& ctx, double t_hat);
double denorm_p_head(const PhysicsContext& ctx, double p_hat);

// Aggregate physics loss for one parameter vector: mean VLE + McCabe over the
// collocation set plus mean nondimensional mass/energy residuals over the
// consecutive-record pairs in [pair_row_begin, pair_row_end).
double phys_loss(const PhysicsContext& ctx, const nn::NetworkParams& params,
                 const CollocationSet& colloc, const data::Dataset& ds,
                 std::size_t pair_row_begin, std::size_t pair_row_end,
                 double q_kw);

}  // namespace coltwin::phys

#endif  // COLTWIN_PHYSICS_LOSS_HPP
