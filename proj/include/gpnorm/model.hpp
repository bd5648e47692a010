#pragma once
// The coupled cubic-power system on a bounded domain: parameters, growth
// regimes, the conserved energy, and the stationary (Euler-Lagrange)
// residual with its Lagrange multipliers.
//
// Two components u1, u2 with focusing self-interaction mu_i > 0 and coupling
// beta of either sign. The energy is
//   E = 1/2 sum_i |grad u_i|_2^2
//       - 1/(p+1) int( mu1 |u1|^{p+1} + 2 beta |u1 u2|^{(p+1)/2} + mu2 |u2|^{p+1} )
// and a constrained critical point with masses (rho1, rho2) solves
//   -Delta u_i + omega_i u_i = mu_i u_i |u_i|^{p-1}
//                              + beta u_i |u_i|^{(p-3)/2} |u_j|^{(p+1)/2}.
// The coupling is evaluated in the odd-extension form
// sign(u_i) |u_i|^{(p-1)/2} |u_j|^{(p+1)/2}, which agrees with the formula
// above wherever u_i != 0 and extends it by 0 across sign changes.

#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

#include "grid.hpp"
#include "util.hpp"

namespace gpnorm {

enum class Regime {
  Subcritical,      // 1 < p < 1 + 4/N        (mass-subcritical)
  MassCritical,     // p = 1 + 4/N
  Intercritical,    // 1 + 4/N < p < 2* - 1
  SobolevCritical,  // p = 2* - 1, N >= 3
};

inline const char* to_string(Regime r) {
  switch (r) {
    case Regime::Subcritical: return "subcritical";
    case Regime::MassCritical: return "mass_critical";
    case Regime::Intercritical: return "intercritical";
    case Regime::SobolevCritical: return "sobolev_critical";
  }
  return "?";
}

struct SystemParams {
  int N = 1;
  double p = 3.0;
  double mu1 = 1.0, mu2 = 1.0;
  double beta = 0.0;
  bool operator==(const SystemParams&) const = default;
};

struct MassPair {
  double rho1 = 0.0, rho2 = 0.0;
  double total() const { return rho1 + rho2; }
  bool operator==(const MassPair&) const = default;
};

// Scaling exponents of the nonlinear term:
//   a = N(p-1)/4        (power of the kinetic norm in the sharp interpolation bound)
//   r = (p+1)/4 - N(p-1)/8   (power of each mass)
struct Exponents {
  double a = 0.0, r = 0.0;
};

inline Exponents exponents(int N, double p) {
  Exponents e;
  e.a = N * (p - 1.0) / 4.0;
  e.r = (p + 1.0) / 4.0 - N * (p - 1.0) / 8.0;
  return e;
}

inline double critical_power(int N) {  // 2* - 1, +inf for N <= 2
  if (N <= 2) return std::numeric_limits<double>::infinity();
  return (N + 2.0) / (N - 2.0);
}

inline void validate(const SystemParams& sp) {
  std::ostringstream err;
  if (sp.N < 1) err << "N >= 1 violated (N=" << sp.N << "); ";
  if (!(sp.p > 1.0)) err << "p > 1 violated (p=" << sp.p << "); ";
  if (!(sp.mu1 > 0.0)) err << "mu1 > 0 violated; ";
  if (!(sp.mu2 > 0.0)) err << "mu2 > 0 violated; ";
  if (sp.N >= 3 && sp.p > critical_power(sp.N) + 1e-12)
    err << "p <= (N+2)/(N-2) violated (p=" << sp.p << ", limit " << critical_power(sp.N) << "); ";
  const std::string s = err.str();
  if (!s.empty()) throw std::invalid_argument("SystemParams: " + s);
}

// Tolerant classification: powers within 1e-9 of a critical value count as
// critical, so p = 1 + 4/N entered in decimal lands in the right regime.
inline Regime classify_regime(int N, double p) {
  if (N < 1 || !(p > 1.0))
    throw std::invalid_argument("classify_regime: need N >= 1 and p > 1");
  const double pc_mass = 1.0 + 4.0 / N;
  if (std::fabs(p - pc_mass) <= 1e-9) return Regime::MassCritical;
  if (p < pc_mass) return Regime::Subcritical;
  if (N >= 3) {
    const double pc_sob = critical_power(N);
    if (std::fabs(p - pc_sob) <= 1e-9) return Regime::SobolevCritical;
    if (p > pc_sob + 1e-9)
      throw std::invalid_argument("classify_regime: p beyond the Sobolev-critical power");
  }
  return Regime::Intercritical;
}

namespace detail {
template <class T>
double abs_val(const T& x) {
  if constexpr (std::is_same_v<T, std::complex<double>>)
    return std::abs(x);
  else
    return std::fabs(x);
}
}  // namespace detail

// F(u1,u2) = int( mu1 |u1|^{p+1} + 2 beta |u1|^{(p+1)/2} |u2|^{(p+1)/2}
//               + mu2 |u2|^{p+1} ); the full interaction integral.
template <class T>
double interaction_F(const SystemParams& sp, const Field<T>& u1, const Field<T>& u2) {
  detail::require_same_grid(u1.grid, u2.grid, "interaction_F");
  const auto& w = u1.grid.data().w;
  const double q = sp.p + 1.0;
  // separate accumulators so swapping the components swaps the result
  // bit-for-bit (addition commutes, chained addition does not)
  double s1 = 0.0, s2 = 0.0, cr = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double a1 = detail::abs_val(u1.v[i]);
    const double a2 = detail::abs_val(u2.v[i]);
    s1 += w[i] * pow_abs(a1, q);
    s2 += w[i] * pow_abs(a2, q);
    cr += w[i] * pow_abs(a1, q / 2) * pow_abs(a2, q / 2);
  }
  return (sp.mu1 * s1 + sp.mu2 * s2) + 2.0 * sp.beta * cr;
}

template <class T>
double energy(const SystemParams& sp, const Field<T>& u1, const Field<T>& u2) {
  detail::require_same_grid(u1.grid, u2.grid, "energy");
  return 0.5 * (kinetic(u1) + kinetic(u2)) - interaction_F(sp, u1, u2) / (sp.p + 1.0);
}

// Nonlinear right-hand side g_i(u1,u2) of component i, real fields:
//   g_i = mu_i sign(u_i)|u_i|^p + beta sign(u_i)|u_i|^{(p-1)/2}|u_j|^{(p+1)/2}
inline RealField nonlinear_rhs(const SystemParams& sp, const RealField& ui, const RealField& uj,
                               double mu_i) {
  detail::require_same_grid(ui.grid, uj.grid, "nonlinear_rhs");
  RealField g(ui.grid);
  const double p = sp.p;
  for (std::size_t k = 0; k < g.v.size(); ++k) {
    g.v[k] = mu_i * sgn_pow(ui.v[k], p) +
             sp.beta * sgn_pow(ui.v[k], (p - 1.0) / 2.0) * pow_abs(uj.v[k], (p + 1.0) / 2.0);
  }
  return g;
}

// Energy gradient in the weighted inner product: dE[(v1,v2)] =
// <grad_1, v1> + <grad_2, v2> with grad_i = -Delta u_i - g_i. Exact for the
// discrete energy, not merely consistent.
inline std::pair<RealField, RealField> energy_gradient(const SystemParams& sp, const RealField& u1,
                                                       const RealField& u2) {
  RealField g1 = laplacian_apply(u1);
  RealField g2 = laplacian_apply(u2);
  RealField n1 = nonlinear_rhs(sp, u1, u2, sp.mu1);
  RealField n2 = nonlinear_rhs(sp, u2, u1, sp.mu2);
  for (std::size_t k = 0; k < g1.v.size(); ++k) {
    g1.v[k] = -g1.v[k] - n1.v[k];
    g2.v[k] = -g2.v[k] - n2.v[k];
  }
  return {std::move(g1), std::move(g2)};
}

// L2 norm of the stationary residual -Delta u_i + omega_i u_i - g_i over
// both components.
inline double el_residual(const SystemParams& sp, const RealField& u1, const RealField& u2,
                          double omega1, double omega2) {
  auto [r1, r2] = energy_gradient(sp, u1, u2);
  const auto& w = u1.grid.data().w;
  double acc = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double a = r1.v[k] + omega1 * u1.v[k];
    const double b = r2.v[k] + omega2 * u2.v[k];
    acc += w[k] * (a * a + b * b);
  }
  return std::sqrt(acc);
}

struct Multipliers {
  std::optional<double> omega1, omega2;
};

// Multipliers of a constrained critical point, from testing the equation
// with u_i itself:
//   rho_i omega_i = int( mu_i |u_i|^{p+1} + beta |u1 u2|^{(p+1)/2} ) - |grad u_i|^2.
// Components with (numerically) zero mass have no multiplier.
inline Multipliers lagrange_multipliers(const SystemParams& sp, const RealField& u1,
                                        const RealField& u2) {
  detail::require_same_grid(u1.grid, u2.grid, "lagrange_multipliers");
  const auto& w = u1.grid.data().w;
  const double q = sp.p + 1.0;
  double cross = 0.0, self1 = 0.0, self2 = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double a1 = std::fabs(u1.v[k]);
    const double a2 = std::fabs(u2.v[k]);
    cross += w[k] * pow_abs(a1, q / 2) * pow_abs(a2, q / 2);
    self1 += w[k] * pow_abs(a1, q);
    self2 += w[k] * pow_abs(a2, q);
  }
  const double rho1 = mass(u1), rho2 = mass(u2);
  Multipliers m;
  if (rho1 > 1e-14)
    m.omega1 = (sp.mu1 * self1 + sp.beta * cross - kinetic(u1)) / rho1;
  if (rho2 > 1e-14)
    m.omega2 = (sp.mu2 * self2 + sp.beta * cross - kinetic(u2)) / rho2;
  return m;
}

}  // namespace gpnorm
