#ifndef COLTWIN_THERMO_HPP
#define COLTWIN_THERMO_HPP

#include <array>
#include <string>

namespace coltwin::thermo {

// Antoine correlation, fixed form log10(psat[kPa]) = a - b / (T[K] + c).
struct AntoineCoeffs {
  double a = 0.0;
  double b = 0.0;  // K, > 0
  double c = 0.0;  // K
};

// Two-parameter Wilson activity model for a binary liquid. Index 1 refers to
// the heavy component, index 2 to the light one.
struct WilsonParams {
  double lambda_12 = 1.0;  // > 0
  double lambda_21 = 1.0;  // > 0
};

struct BinarySystem {
  std::string name_heavy;
  std::string name_light;
  AntoineCoeffs antoine_heavy;
  AntoineCoeffs antoine_light;
  WilsonParams wilson;
  double cp_liquid_heavy = 0.0;   // kJ/(kmol K)
  double cp_liquid_light = 0.0;   // kJ/(kmol K)
  double dh_vap_heavy = 0.0;      // kJ/kmol
  double dh_vap_light = 0.0;      // kJ/kmol
  double t_ref = 298.15;          // K, enthalpy datum
  double molar_mass_heavy = 0.0;  // kg/kmol
  double molar_mass_light = 0.0;  // kg/kmol

  // Throws ConfigError when parameters are unphysical (non-positive cp or
  // latent heat, Wilson lambdas <= 0, or volatility ordering violated).
  void validate() const;
};

struct ComponentPair {
  double heavy = 0.0;
  double light = 0.0;
};

// psat in kPa. Throws std::domain_error when t + c.c <= 0.
double antoine_psat(double t, const AntoineCoeffs& c);
// d psat / dT, same domain.
double antoine_psat_dt(double t, const AntoineCoeffs& c);
// Closed-form inverse: temperature with psat(T) = p.
double antoine_boiling_t(double p, const AntoineCoeffs& c);

// Activity coefficients at liquid heavy fraction x_heavy in [0, 1].
ComponentPair wilson_gamma(double x_heavy, const WilsonParams& w);
// d gamma_i / d x_heavy.
ComponentPair wilson_dgamma_dx(double x_heavy, const WilsonParams& w);

// Modified Raoult vapor fractions y_i = gamma_i * psat_i(T) * x_i / P,
// unnormalized; their sum is 1 only at the bubble point.
ComponentPair raoult_y(double x_heavy, double t, double p,
                       const BinarySystem& sys);

// Temperature with sum_i gamma_i x_i psat_i(T) / p = 1, solved by bisection
// (bracketed by the pure-component boiling points -/+ 5 K) to a closure
// residual below 1e-13.
double bubble_point_t(double x_heavy, double p, const BinarySystem& sys);

struct BubblePoint {
  double t = 0.0;
  double dt_dx = 0.0;  // d T / d x_heavy along the bubble locus
  double dt_dp = 0.0;
};
// Bubble point plus implicit-function derivatives at the solution.
BubblePoint bubble_point_t_grad(double x_heavy, double p,
                                const BinarySystem& sys);

// Temperature with sum_i y_i p / (gamma_i(x*) psat_i(T)) = 1 where x* is the
// incipient liquid, found by an inner fixed point. y_light = 1 - y_heavy.
double dew_point_t(double y_heavy, double p, const BinarySystem& sys);

struct DewPoint {
  double t = 0.0;
  double dt_dy = 0.0;  // d T / d y_heavy with y_light = 1 - y_heavy
  double dt_dp = 0.0;
};
DewPoint dew_point_t_grad(double y_heavy, double p, const BinarySystem& sys);

// R_VLE = sum_i (y_i - gamma_i psat_i(T) x_i / P)^2.
double vle_residual(const std::array<double, 2>& x,
                    const std::array<double, 2>& y, double t, double p,
                    const BinarySystem& sys);

// Linear enthalpy model: H^L_i = cp_i (T - t_ref), H^V_i = H^L_i + dh_vap_i,
// mixtures mole-fraction weighted. kJ/kmol.
double h_liquid(double x_heavy, double t, const BinarySystem& sys);
double h_vapor(double y_heavy, double t, const BinarySystem& sys);

}  // namespace coltwin::thermo

#endif  // COLTWIN_THERMO_HPP
