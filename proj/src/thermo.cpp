#include "coltwin/thermo.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "coltwin/errors.hpp"

namespace coltwin::thermo {

namespace {

constexpr double kLn10 = 2.302585092994045684;
// Residual and interval exits chosen so the solved temperature is resolved to
// ~1e-13 K; the physics-loss gradients are differentiated through these
// roots, and central differences with h = 1e-5 see the root quantization.
constexpr double kClosureTol = 1e-15;
constexpr double kIntervalTol = 1e-13;
constexpr int kMaxBisect = 200;

double bracket_lo(double p, const BinarySystem& sys) {
  double tl = antoine_boiling_t(p, sys.antoine_light);
  double th = antoine_boiling_t(p, sys.antoine_heavy);
  return std::min(tl, th) - 5.0;
}

double bracket_hi(double p, const BinarySystem& sys) {
  double tl = antoine_boiling_t(p, sys.antoine_light);
  double th = antoine_boiling_t(p, sys.antoine_heavy);
  return std::max(tl, th) + 5.0;
}

// Incipient liquid heavy fraction for a vapor (y_h, 1-y_h) at (T, p),
// normalized fixed point of x_i ~ y_i p / (gamma_i(x) psat_i(T)).
double dew_incipient_x(double y_heavy, double t, double p,
                       const BinarySystem& sys) {
  double w = y_heavy;
  for (int it = 0; it < 200; ++it) {
    ComponentPair g = wilson_gamma(w, sys.wilson);
    double uh = y_heavy * p / (g.heavy * antoine_psat(t, sys.antoine_heavy));
    double ul =
        (1.0 - y_heavy) * p / (g.light * antoine_psat(t, sys.antoine_light));
    double next = uh / (uh + ul);
    if (std::abs(next - w) < 1e-15) return next;
    w = next;
  }
  return w;
}

// Dew closure sum_i y_i p / (gamma_i(x*) psat_i(T)) at temperature t.
double dew_sum(double y_heavy, double t, double p, const BinarySystem& sys) {
  double w = dew_incipient_x(y_heavy, t, p, sys);
  ComponentPair g = wilson_gamma(w, sys.wilson);
  return y_heavy * p / (g.heavy * antoine_psat(t, sys.antoine_heavy)) +
         (1.0 - y_heavy) * p / (g.light * antoine_psat(t, sys.antoine_light));
}

}  // namespace

void BinarySystem::validate() const {
  if (antoine_heavy.b <= 0.0 || antoine_light.b <= 0.0)
    throw ConfigError("antoine b coefficient must be positive");
  if (wilson.lambda_12 <= 0.0 || wilson.lambda_21 <= 0.0)
    throw ConfigError("wilson lambdas must be positive");
  if (cp_liquid_heavy <= 0.0 || cp_liquid_light <= 0.0)
    throw ConfigError("liquid heat capacities must be positive");
  if (dh_vap_heavy <= 0.0 || dh_vap_light <= 0.0)
    throw ConfigError("heats of vaporization must be positive");
  if (molar_mass_heavy <= 0.0 || molar_mass_light <= 0.0)
    throw ConfigError("molar masses must be positive");
  // Volatility ordering over the operating range: light must stay more
  // volatile between the two atmospheric boiling points.
  double tl = antoine_boiling_t(101.325, antoine_light);
  double th = antoine_boiling_t(101.325, antoine_heavy);
  if (!(tl < th))
    throw ConfigError("light component must boil below the heavy one");
  for (double t : {tl, 0.5 * (tl + th), th}) {
    if (!(antoine_psat(t, antoine_light) > antoine_psat(t, antoine_heavy)))
      throw ConfigError("psat(light) must exceed psat(heavy) in range");
  }
}

double antoine_psat(double t, const AntoineCoeffs& c) {
  const double denom = t + c.c;
  if (denom <= 0.0)
    throw std::domain_error("antoine_psat: T + c must be positive, got " +
                            std::to_string(denom));
  return std::pow(10.0, c.a - c.b / denom);
}

double antoine_psat_dt(double t, const AntoineCoeffs& c) {
  const double denom = t + c.c;
  if (denom <= 0.0)
    throw std::domain_error("antoine_psat_dt: T + c must be positive");
  return antoine_psat(t, c) * kLn10 * c.b / (denom * denom);
}

double antoine_boiling_t(double p, const AntoineCoeffs& c) {
  if (p <= 0.0) throw std::domain_error("antoine_boiling_t: p must be > 0");
  return c.b / (c.a - std::log10(p)) - c.c;
}

ComponentPair wilson_gamma(double x_heavy, const WilsonParams& w) {
  if (x_heavy < 0.0 || x_heavy > 1.0)
    throw std::domain_error("wilson_gamma: x_heavy outside [0, 1]");
  const double x1 = x_heavy, x2 = 1.0 - x_heavy;
  const double a = x1 + w.lambda_12 * x2;
  const double b = x2 + w.lambda_21 * x1;
  const double d = w.lambda_12 / a - w.lambda_21 / b;
  return {std::exp(-std::log(a) + x2 * d), std::exp(-std::log(b) - x1 * d)};
}

ComponentPair wilson_dgamma_dx(double x_heavy, const WilsonParams& w) {
  if (x_heavy < 0.0 || x_heavy > 1.0)
    throw std::domain_error("wilson_dgamma_dx: x_heavy outside [0, 1]");
  const double x1 = x_heavy, x2 = 1.0 - x_heavy;
  const double a = x1 + w.lambda_12 * x2;
  const double b = x2 + w.lambda_21 * x1;
  const double da = 1.0 - w.lambda_12;
  const double db = w.lambda_21 - 1.0;
  const double d = w.lambda_12 / a - w.lambda_21 / b;
  const double dd = -w.lambda_12 * da / (a * a) + w.lambda_21 * db / (b * b);
  const double dln_h = -da / a - d + x2 * dd;
  const double dln_l = -db / b - d - x1 * dd;
  ComponentPair g = wilson_gamma(x_heavy, w);
  return {g.heavy * dln_h, g.light * dln_l};
}

ComponentPair raoult_y(double x_heavy, double t, double p,
                       const BinarySystem& sys) {
  if (p <= 0.0) throw std::domain_error("raoult_y: p must be > 0");
  ComponentPair g = wilson_gamma(x_heavy, sys.wilson);
  return {g.heavy * antoine_psat(t, sys.antoine_heavy) * x_heavy / p,
          g.light * antoine_psat(t, sys.antoine_light) * (1.0 - x_heavy) / p};
}

double bubble_point_t(double x_heavy, double p, const BinarySystem& sys) {
  if (x_heavy < 0.0 || x_heavy > 1.0)
    throw std::domain_error("bubble_point_t: x_heavy outside [0, 1]");
  if (p <= 0.0) throw std::domain_error("bubble_point_t: p must be > 0");
  double lo = bracket_lo(p, sys), hi = bracket_hi(p, sys);
  auto closure = [&](double t) {
    ComponentPair y = raoult_y(x_heavy, t, p, sys);
    return y.heavy + y.light - 1.0;
  };
  double flo = closure(lo), fhi = closure(hi);
  if (flo * fhi > 0.0)
    throw ConvergenceError("bubble_point_t: no sign change in bracket");
  for (int it = 0; it < kMaxBisect; ++it) {
    double mid = 0.5 * (lo + hi);
    double fm = closure(mid);
    if (std::abs(fm) < kClosureTol || hi - lo < kIntervalTol) return mid;
    if ((fm > 0.0) == (fhi > 0.0)) {
      hi = mid;
      fhi = fm;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

BubblePoint bubble_point_t_grad(double x_heavy, double p,
                                const BinarySystem& sys) {
  BubblePoint out;
  out.t = bubble_point_t(x_heavy, p, sys);
  ComponentPair g = wilson_gamma(x_heavy, sys.wilson);
  ComponentPair dg = wilson_dgamma_dx(x_heavy, sys.wilson);
  const double ph = antoine_psat(out.t, sys.antoine_heavy);
  const double pl = antoine_psat(out.t, sys.antoine_light);
  const double dph = antoine_psat_dt(out.t, sys.antoine_heavy);
  const double dpl = antoine_psat_dt(out.t, sys.antoine_light);
  const double xl = 1.0 - x_heavy;
  // S(T, x, p) = (g_h x ph + g_l xl pl)/p - 1 = 0
  const double s_t = (g.heavy * x_heavy * dph + g.light * xl * dpl) / p;
  const double s_x = (dg.heavy * x_heavy * ph + g.heavy * ph +
                      dg.light * xl * pl - g.light * pl) /
                     p;
  const double s_p = -1.0 / p;  // = -(S+1)/p with S = 0 at the root
  out.dt_dx = -s_x / s_t;
  out.dt_dp = -s_p / s_t;
  return out;
}

double dew_point_t(double y_heavy, double p, const BinarySystem& sys) {
  if (y_heavy < 0.0 || y_heavy > 1.0)
    throw std::domain_error("dew_point_t: y_heavy outside [0, 1]");
  if (p <= 0.0) throw std::domain_error("dew_point_t: p must be > 0");
  double lo = bracket_lo(p, sys), hi = bracket_hi(p, sys);
  // dew_sum is decreasing in T.
  double flo = dew_sum(y_heavy, lo, p, sys) - 1.0;
  double fhi = dew_sum(y_heavy, hi, p, sys) - 1.0;
  if (flo * fhi > 0.0)
    throw ConvergenceError("dew_point_t: no sign change in bracket");
  for (int it = 0; it < kMaxBisect; ++it) {
    double mid = 0.5 * (lo + hi);
    double fm = dew_sum(y_heavy, mid, p, sys) - 1.0;
    if (std::abs(fm) < kClosureTol || hi - lo < kIntervalTol) return mid;
    if ((fm > 0.0) == (fhi > 0.0)) {
      hi = mid;
      fhi = fm;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

DewPoint dew_point_t_grad(double y_heavy, double p, const BinarySystem& sys) {
  DewPoint out;
  out.t = dew_point_t(y_heavy, p, sys);
  const double w = dew_incipient_x(y_heavy, out.t, p, sys);
  ComponentPair g = wilson_gamma(w, sys.wilson);
  ComponentPair dg = wilson_dgamma_dx(w, sys.wilson);
  const double ph = antoine_psat(out.t, sys.antoine_heavy);
  const double pl = antoine_psat(out.t, sys.antoine_light);
  const double psi_h = antoine_psat_dt(out.t, sys.antoine_heavy) / ph;
  const double psi_l = antoine_psat_dt(out.t, sys.antoine_light) / pl;
  const double uh = y_heavy * p / (g.heavy * ph);
  const double ul = (1.0 - y_heavy) * p / (g.light * pl);
  const double gh = dg.heavy / g.heavy;  // d ln gamma / d x at x = w
  const double gl = dg.light / g.light;
  // Unknowns (T, w) solve G1 = uh + ul - 1 = 0 and G2 = uh - w = 0.
  const double j11 = -(uh * psi_h + ul * psi_l);  // dG1/dT
  const double j12 = -(uh * gh + ul * gl);        // dG1/dw
  const double j21 = -uh * psi_h;                 // dG2/dT
  const double j22 = -uh * gh - 1.0;              // dG2/dw
  const double det = j11 * j22 - j12 * j21;
  auto solve_t = [&](double r1, double r2) {
    return -(r1 * j22 - j12 * r2) / det;
  };
  // y_light = 1 - y_heavy: d u_h/d y = P/(g_h ph), d u_l/d y = -P/(g_l pl).
  const double du_dy = p / (g.heavy * ph) - p / (g.light * pl);
  out.dt_dy = solve_t(du_dy, p / (g.heavy * ph));
  out.dt_dp = solve_t((uh + ul) / p, uh / p);
  return out;
}

double vle_residual(const std::array<double, 2>& x,
                    const std::array<double, 2>& y, double t, double p,
                    const BinarySystem& sys) {
  for (double v : {x[0], x[1], y[0], y[1]})
    if (v < 0.0 || v > 1.0)
      throw std::domain_error("vle_residual: fraction outside [0, 1]");
  if (p <= 0.0) throw std::domain_error("vle_residual: p must be > 0");
  ComponentPair g = wilson_gamma(x[0], sys.wilson);
  const double eh = y[0] - g.heavy * antoine_psat(t, sys.antoine_heavy) * x[0] / p;
  const double el = y[1] - g.light * antoine_psat(t, sys.antoine_light) * x[1] / p;
  return eh * eh + el * el;
}

double h_liquid(double x_heavy, double t, const BinarySystem& sys) {
  const double dt = t - sys.t_ref;
  return (x_heavy * sys.cp_liquid_heavy + (1.0 - x_heavy) * sys.cp_liquid_light) * dt;
}

double h_vapor(double y_heavy, double t, const BinarySystem& sys) {
  const double dt = t - sys.t_ref;
  return y_heavy * (sys.cp_liquid_heavy * dt + sys.dh_vap_heavy) +
         (1.0 - y_heavy) * (sys.cp_liquid_light * dt + sys.dh_vap_light);
}

}  // namespace coltwin::thermo
