#pragma once
// Explicit admissibility thresholds for normalized states of the coupled
// system, all phrased in terms of the interpolation constant C_{N,p}, the
// masses, the coupling, and the low Dirichlet eigenvalues of the domain.
//
// Central objects:
//   Lambda(rho1, rho2) = 2 C/(p+1) * max_t [ mu1 rho1^{2r} cos^{2a} t
//       + mu2 rho2^{2r} sin^{2a} t + 2 beta^+ rho1^r rho2^r cos^a t sin^a t ]
//   Lambda'            = closed-form eigenvalue bound dominating Lambda
//   budget R           = (p+1)/(2C) * (a-1)^{a-1}/a^a * lambda_j^{-(a-1)}
//   bar_alpha          = a/(a-1) * lambda_j
// with j = 1 when beta >= -sqrt(mu1 mu2) and j = 2 otherwise. At the
// mass-critical power the relevant condition is instead an algebraic bound
// against (N+2)/(N C_N). Exponents r = 0 follow the x^0 = 1 convention even
// at zero mass, which is what the Sobolev-critical formulas require.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "constants.hpp"
#include "model.hpp"

namespace gpnorm {

struct CheckResult {
  std::string name;
  bool passed = false;
  double margin = 0.0;  // positive distance to failure
};

// max over [0, pi/2] of the Lambda integrand by a 1024-point scan plus
// golden-section refinement around the best cell; deterministic.
inline double lambda_capital(ConstantsTable& tab, const SystemParams& sp, const MassPair& m) {
  validate(sp);
  if (m.rho1 < 0 || m.rho2 < 0)
    throw std::invalid_argument("lambda_capital: masses must be nonnegative");
  const Exponents e = exponents(sp.N, sp.p);
  const double C = gn_constant(tab, sp.N, sp.p);
  const double bplus = std::max(sp.beta, 0.0);
  const double c1 = sp.mu1 * pow_nn(m.rho1, 2.0 * e.r);
  const double c2 = sp.mu2 * pow_nn(m.rho2, 2.0 * e.r);
  const double cx = 2.0 * bplus * pow_nn(m.rho1, e.r) * pow_nn(m.rho2, e.r);
  auto f = [&](double t) {
    const double c = std::cos(t), s = std::sin(t);
    return c1 * pow_nn(c, 2.0 * e.a) + c2 * pow_nn(s, 2.0 * e.a) +
           cx * pow_nn(c, e.a) * pow_nn(s, e.a);
  };
  const double pi2 = 1.57079632679489661923132169164;
  const int n = 1024;
  int best = 0;
  double fbest = -1.0;
  for (int k = 0; k <= n; ++k) {
    const double v = f(pi2 * k / n);
    if (v > fbest) {
      fbest = v;
      best = k;
    }
  }
  double lo = pi2 * std::max(0, best - 1) / n;
  double hi = pi2 * std::min(n, best + 1) / n;
  const double gr = 0.61803398874989484820458683437;
  double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  while (hi - lo > 1e-12) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + gr * (hi - lo);
      f2 = f(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - gr * (hi - lo);
      f1 = f(x1);
    }
  }
  fbest = std::max(fbest, std::max(f1, f2));
  return 2.0 * C / (sp.p + 1.0) * fbest;
}

// Closed-form dominating value: the largest eigenvalue of the 2x2 quadratic
// form behind the same maximum,
//   C/(p+1) [ m1 + m2 + sqrt((m1 - m2)^2 + 4 (beta^+ rho1^r rho2^r)^2) ],
// with m_i = mu_i rho_i^{2r}. Dominates Lambda for a >= 1 (the replacement
// cos^{2a} -> cos^2 only grows the bracket then), with equality when
// beta <= 0; below the mass-critical power the domination can fail.
inline double lambda_prime(ConstantsTable& tab, const SystemParams& sp, const MassPair& m) {
  validate(sp);
  const Exponents e = exponents(sp.N, sp.p);
  const double C = gn_constant(tab, sp.N, sp.p);
  const double bplus = std::max(sp.beta, 0.0);
  const double m1 = sp.mu1 * pow_nn(m.rho1, 2.0 * e.r);
  const double m2 = sp.mu2 * pow_nn(m.rho2, 2.0 * e.r);
  const double cx = bplus * pow_nn(m.rho1, e.r) * pow_nn(m.rho2, e.r);
  return C / (sp.p + 1.0) * (m1 + m2 + std::sqrt(sq(m1 - m2) + 4.0 * cx * cx));
}

// Index of the eigenvalue entering the budget: the first for couplings down
// to -sqrt(mu1 mu2), the second below.
inline int eigen_index_j(const SystemParams& sp) {
  return sp.beta >= -std::sqrt(sp.mu1 * sp.mu2) ? 1 : 2;
}

// Mass-critical admissibility: every entry of
//   { mu1 rho1^{2/N}, mu2 rho2^{2/N},
//     mu1 rho1^{2/N} + mu2 rho2^{2/N}
//       + N C_N/(N+2) ((beta^+)^2 - mu1 mu2)(rho1 rho2)^{2/N} }
// must stay below (N+2)/(N C_N). Returns the worst margin.
inline CheckResult check_h2_condition(ConstantsTable& tab, const SystemParams& sp,
                                      const MassPair& m) {
  validate(sp);
  const double pc = 1.0 + 4.0 / sp.N;
  if (std::fabs(sp.p - pc) > 1e-9)
    throw std::invalid_argument("check_h2_condition: requires the mass-critical power p = 1+4/N");
  const double C = gn_constant(tab, sp.N, pc);
  const double T = (sp.N + 2.0) / (sp.N * C);
  const double bplus = std::max(sp.beta, 0.0);
  const double x = sp.mu1 * pow_nn(m.rho1, 2.0 / sp.N);
  const double y = sp.mu2 * pow_nn(m.rho2, 2.0 / sp.N);
  const double mixed =
      x + y + (bplus * bplus - sp.mu1 * sp.mu2) / T * pow_nn(m.rho1 * m.rho2, 2.0 / sp.N);
  const double worst = std::max({x, y, mixed});
  CheckResult r;
  r.name = "mass_critical_threshold";
  r.margin = T - worst;
  r.passed = r.margin > 0.0;
  return r;
}

// Energy bounds for local minimization inside the kinetic ball
// { kinetic <= (rho1+rho2) alpha }:
//   barrier: on the sphere kinetic = (rho1+rho2) alpha the energy is at least
//            1/2 [ (rho1+rho2) alpha - Lambda (rho1+rho2)^a alpha^a ];
//   level:   the constrained minimum is at most 1/2 (rho1+rho2) lambda_j
//            (rescaled eigenfunction competitor).
// When the budget condition holds, barrier(bar_alpha) >= level, so the
// minimum is attained strictly inside the ball. A converged minimizer must
// sit below the barrier.
struct HatCBounds {
  double lower = 0.0;       // barrier at the given alpha
  double upper = 0.0;       // level bound 1/2 (rho1+rho2) lambda_j
  double lower_alpha = 0.0; // the alpha the barrier was evaluated at
};

inline HatCBounds hat_c_bounds(double alpha, const MassPair& m, double Lambda, double a,
                               double lambda_j) {
  HatCBounds b;
  const double rho = m.total();
  b.lower = 0.5 * (rho * alpha - Lambda * std::pow(rho, a) * std::pow(alpha, a));
  b.upper = 0.5 * rho * lambda_j;
  b.lower_alpha = alpha;
  return b;
}

struct ThresholdReport {
  Regime regime = Regime::Subcritical;
  double a = 0.0, r = 0.0;
  double C = 0.0;           // C_{N,p} (or S_N at the critical power)
  double lambda1 = 0.0, lambda2 = 0.0;
  double Lambda = 0.0, LambdaPrime = 0.0;
  double budget_R = 0.0;    // right side of the sufficient condition
  int j = 1;
  std::optional<double> bar_alpha;  // defined when a > 1
  std::vector<CheckResult> checks;

  bool all_passed() const {
    for (const auto& c : checks)
      if (!c.passed) return false;
    return true;
  }
};

// Full threshold evaluation at (params, masses) for a domain described by
// its two lowest Dirichlet eigenvalues.
inline ThresholdReport check_supercritical(ConstantsTable& tab, const SystemParams& sp,
                                           const MassPair& m, double lambda1, double lambda2) {
  validate(sp);
  if (!(lambda1 > 0.0) || !(lambda2 >= lambda1))
    throw std::invalid_argument("check_supercritical: need 0 < lambda1 <= lambda2");
  ThresholdReport rep;
  rep.regime = classify_regime(sp.N, sp.p);
  const Exponents e = exponents(sp.N, sp.p);
  rep.a = e.a;
  rep.r = e.r;
  rep.C = gn_constant(tab, sp.N, sp.p);
  rep.lambda1 = lambda1;
  rep.lambda2 = lambda2;
  rep.j = eigen_index_j(sp);
  const double lam_j = (rep.j == 1) ? lambda1 : lambda2;
  rep.Lambda = lambda_capital(tab, sp, m);
  rep.LambdaPrime = lambda_prime(tab, sp, m);

  if (rep.regime == Regime::MassCritical) {
    rep.checks.push_back(check_h2_condition(tab, sp, m));
    return rep;
  }
  if (rep.regime == Regime::Subcritical) {
    // no threshold: admissible for every mass; record a trivially passing check
    rep.checks.push_back({"subcritical_no_threshold", true, std::numeric_limits<double>::infinity()});
    return rep;
  }

  // a > 1 from here on
  rep.bar_alpha = e.a / (e.a - 1.0) * lam_j;
  const double aa = std::pow(e.a - 1.0, e.a - 1.0) / std::pow(e.a, e.a);
  rep.budget_R = (sp.p + 1.0) / (2.0 * rep.C) * aa * std::pow(lam_j, -(e.a - 1.0));

  const double rho = m.total();
  const double lhs_main = rep.Lambda * std::pow(rho, e.a - 1.0);
  const double rhs_main = aa * std::pow(lam_j, -(e.a - 1.0));
  rep.checks.push_back({"concentration_vs_budget", lhs_main <= rhs_main, rhs_main - lhs_main});

  const double bplus = std::max(sp.beta, 0.0);
  const double lhs_nice = (std::max(sp.mu1 * pow_nn(m.rho1, 2.0 * e.r),
                                    sp.mu2 * pow_nn(m.rho2, 2.0 * e.r)) +
                           bplus * pow_nn(m.rho1, e.r) * pow_nn(m.rho2, e.r)) *
                          std::pow(rho, e.a - 1.0);
  rep.checks.push_back({"closed_form_budget", lhs_nice <= rep.budget_R, rep.budget_R - lhs_nice});

  if (rep.regime == Regime::SobolevCritical) {
    // compactness bound at bar_alpha: (rho1+rho2)(alpha - lambda1) <= Lambda^{-(N-2)/2}
    const double rhs = std::pow(rep.Lambda, -0.5 * (sp.N - 2));
    const double lhs = rho * (*rep.bar_alpha - lambda1);
    rep.checks.push_back({"critical_compactness", lhs <= rhs, rhs - lhs});
    rep.checks.push_back({"critical_compactness_strict", lhs < rhs, rhs - lhs});
  }
  return rep;
}

struct RegionOptions {
  int nx = 64, ny = 64;
  double xmax = 0.0, ymax = 0.0;  // 0: choose from the threshold value
  bool scaled_axes = true;        // axes mu_i rho_i^{2/N} (mass-critical mode)
};

struct RegionSample {
  std::vector<double> xs, ys;      // cell-center coordinates
  std::vector<unsigned char> mask; // row-major in y, 1 = admissible
  std::vector<std::pair<double, double>> boundary;  // explicit curve, mass-critical mode
};

// Admissible-region scan. At the mass-critical power the mask evaluates the
// algebraic condition on a grid in (mu1 rho1^{2/N}, mu2 rho2^{2/N}) (or raw
// masses) and the boundary polyline traces
//   y = (T - x) / (1 + x ((beta^+)^2 - mu1 mu2)/(mu1 mu2 T));
// otherwise the mask evaluates the closed-form budget on raw masses.
inline RegionSample region_sample(ConstantsTable& tab, const SystemParams& sp, double lambda1,
                                  double lambda2, const RegionOptions& opt = {}) {
  validate(sp);
  RegionSample out;
  const bool mass_crit = classify_regime(sp.N, sp.p) == Regime::MassCritical;
  double xmax = opt.xmax, ymax = opt.ymax;
  if (mass_crit) {
    const double C = gn_constant(tab, sp.N, sp.p);
    const double T = (sp.N + 2.0) / (sp.N * C);
    if (xmax <= 0) xmax = opt.scaled_axes ? 1.1 * T : 1.1 * std::pow(T / sp.mu1, 0.5 * sp.N);
    if (ymax <= 0) ymax = opt.scaled_axes ? 1.1 * T : 1.1 * std::pow(T / sp.mu2, 0.5 * sp.N);
  } else {
    const Exponents e = exponents(sp.N, sp.p);
    if (e.a <= 1.0)
      throw std::invalid_argument("region_sample: no finite budget in the subcritical regime");
    // solve the single-component budget for a scale: mu rho^{2r + a - 1} = R
    const int j = eigen_index_j(sp);
    const double lam_j = (j == 1) ? lambda1 : lambda2;
    const double aa = std::pow(e.a - 1.0, e.a - 1.0) / std::pow(e.a, e.a);
    const double R = (sp.p + 1.0) / (2.0 * gn_constant(tab, sp.N, sp.p)) * aa *
                     std::pow(lam_j, -(e.a - 1.0));
    const double ex = 2.0 * e.r + e.a - 1.0;
    if (xmax <= 0) xmax = 1.2 * std::pow(R / sp.mu1, 1.0 / ex);
    if (ymax <= 0) ymax = 1.2 * std::pow(R / sp.mu2, 1.0 / ex);
  }
  out.xs.resize(opt.nx);
  out.ys.resize(opt.ny);
  for (int i = 0; i < opt.nx; ++i) out.xs[i] = (i + 0.5) * xmax / opt.nx;
  for (int jj = 0; jj < opt.ny; ++jj) out.ys[jj] = (jj + 0.5) * ymax / opt.ny;
  out.mask.assign(std::size_t(opt.nx) * opt.ny, 0);
  for (int jj = 0; jj < opt.ny; ++jj) {
    for (int i = 0; i < opt.nx; ++i) {
      MassPair m;
      if (mass_crit && opt.scaled_axes) {
        m.rho1 = std::pow(out.xs[i] / sp.mu1, 0.5 * sp.N);
        m.rho2 = std::pow(out.ys[jj] / sp.mu2, 0.5 * sp.N);
      } else {
        m.rho1 = out.xs[i];
        m.rho2 = out.ys[jj];
      }
      bool ok;
      if (mass_crit) {
        ok = check_h2_condition(tab, sp, m).passed;
      } else {
        const auto rep = check_supercritical(tab, sp, m, lambda1, lambda2);
        ok = rep.all_passed();
      }
      out.mask[std::size_t(jj) * opt.nx + i] = ok ? 1 : 0;
    }
  }
  if (mass_crit) {
    const double C = gn_constant(tab, sp.N, sp.p);
    const double T = (sp.N + 2.0) / (sp.N * C);
    const double bplus = std::max(sp.beta, 0.0);
    const double kappa = (bplus * bplus - sp.mu1 * sp.mu2) / (sp.mu1 * sp.mu2 * T);
    const int nb = 512;
    for (int k = 0; k <= nb; ++k) {
      const double x = T * k / nb;
      const double den = 1.0 + kappa * x;
      if (den <= 0) break;
      // region boundary: the mixed constraint capped by the square side y = T
      double y = std::min((T - x) / den, T);
      if (y < 0) y = 0;
      out.boundary.emplace_back(x, y);
    }
  }
  return out;
}

}  // namespace gpnorm
