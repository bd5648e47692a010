#pragma once
// Constrained minimizers at fixed masses by normalized gradient flow.
//
// The scheme is semi-implicit: with s_i the current multiplier estimate,
//   (I - dt*Delta + dt*s_i) u*_i = u_i + dt*g_i(u1, u2),
// followed by |u*| and exact mass renormalization. A fixed point of the
// step solves the stationary system -Delta u_i + s_i u_i = g_i exactly, so
// the converged iterate carries no O(dt) bias. Energy is forced to be
// non-increasing by halving dt on any uphill step.
//
// The kinetic ball constraint is monitored, not projected: when the flow's
// total kinetic energy reaches (rho1+rho2)*alpha the run stops with
// boundary_hit set. An interior stop is the evidence that the constrained
// minimizer is a genuine local one.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "grid.hpp"
#include "model.hpp"
#include "thresholds.hpp"
#include "util.hpp"

namespace gpnorm {

struct ConstraintSpec {
  MassPair masses;
  std::optional<double> ball_alpha;  // kinetic budget (rho1+rho2)*alpha; needs alpha >= lambda1
};

enum class InitKind { eigen1, eigen2_split, segregated_bumps, custom };

struct FlowOptions {
  double dt = 0.0;            // <= 0 picks 1e-2 / lambda1
  double tol = 1e-9;          // relative H1 change per accepted step
  double residual_tol = 1e-6; // stationary residual demanded at convergence
  long max_iter = 200000;
};

struct GroundStateResult {
  RealField u1, u2;
  std::optional<double> omega1, omega2;
  double energy = 0.0;
  double kinetic_total = 0.0;
  bool converged = false;
  bool boundary_hit = false;
  long iterations = 0;
  double residual = std::numeric_limits<double>::quiet_NaN();
  double dt_final = 0.0;
  std::vector<double> energy_history;  // one entry per accepted step
};

namespace detail {

inline void renormalize_mass(RealField& u, double rho, const char* who) {
  if (rho <= 0.0) {
    std::fill(u.v.begin(), u.v.end(), 0.0);
    return;
  }
  const double m = mass(u);
  if (!(m > 0.0))
    throw std::runtime_error(std::string(who) + ": iterate carries no mass to renormalize");
  const double f = std::sqrt(rho / m);
  for (auto& x : u.v) x *= f;
}

inline void take_modulus(RealField& u) {
  for (auto& x : u.v) x = std::fabs(x);
}

// smooth compactly supported profile, positive on |s| < 1
inline double bump(double s) {
  const double q = 1.0 - s * s;
  return q > 0.0 ? std::exp(-1.0 / q) : 0.0;
}

// nodal bump of given center/radius in the domain's own geometry; radial
// grids get a ball around the origin or an annulus around |x| = center
inline RealField nodal_bump(const Grid& g, double cx, double cy, double radius) {
  const detail::GridData& gd = g.data();
  RealField f(g);
  if (gd.two_d) {
    for (int j = 0; j < gd.n; ++j)
      for (int i = 0; i < gd.n; ++i) {
        const double dx = gd.coord_x[i] - cx, dy = gd.coord_y[j] - cy;
        f.v[gd.idx(i, j)] = bump(std::sqrt(dx * dx + dy * dy) / radius);
      }
  } else {
    for (int i = 0; i < gd.n; ++i) f.v[i] = bump(std::fabs(gd.coord_x[i] - cx) / radius);
  }
  return f;
}

}  // namespace detail

// Initial iterates with exact masses. eigen1 sits on the lambda1 kinetic
// sphere, eigen2_split on the lambda2 one (up to the kink of the positive
// part); segregated_bumps have disjoint supports, so the coupling term
// vanishes on them.
inline std::pair<RealField, RealField> initial_guess(InitKind kind, const MassPair& m,
                                                     const Grid& g,
                                                     const RealField* custom1 = nullptr,
                                                     const RealField* custom2 = nullptr) {
  const detail::GridData& gd = g.data();
  switch (kind) {
    case InitKind::eigen1: {
      const auto ep = principal_eigenpairs(g, 1);
      RealField u1 = ep[0].phi, u2 = ep[0].phi;
      detail::renormalize_mass(u1, m.rho1, "initial_guess");
      detail::renormalize_mass(u2, m.rho2, "initial_guess");
      return {std::move(u1), std::move(u2)};
    }
    case InitKind::eigen2_split: {
      const auto ep = principal_eigenpairs(g, 2);
      RealField plus(g), minus(g);
      for (std::size_t k = 0; k < plus.v.size(); ++k) {
        plus.v[k] = std::max(ep[1].phi.v[k], 0.0);
        minus.v[k] = std::max(-ep[1].phi.v[k], 0.0);
      }
      if (!(mass(plus) > 1e-14) || !(mass(minus) > 1e-14))
        throw std::runtime_error("initial_guess: second eigenfunction did not change sign");
      detail::renormalize_mass(plus, m.rho1, "initial_guess");
      detail::renormalize_mass(minus, m.rho2, "initial_guess");
      return {std::move(plus), std::move(minus)};
    }
    case InitKind::segregated_bumps: {
      RealField u1(g), u2(g);
      switch (gd.dom.kind) {
        case DomainKind::Interval: {
          const double L = gd.dom.ext0;
          u1 = detail::nodal_bump(g, 0.25 * L, 0.0, 0.2 * L);
          u2 = detail::nodal_bump(g, 0.75 * L, 0.0, 0.2 * L);
          break;
        }
        case DomainKind::Rectangle: {
          const double Lx = gd.dom.ext0, Ly = gd.dom.ext1;
          const double rad = std::min(0.2 * Lx, 0.4 * Ly);
          u1 = detail::nodal_bump(g, 0.25 * Lx, 0.5 * Ly, rad);
          u2 = detail::nodal_bump(g, 0.75 * Lx, 0.5 * Ly, rad);
          break;
        }
        case DomainKind::RadialBall: {
          const double R = gd.dom.ext0;
          u1 = detail::nodal_bump(g, 0.0, 0.0, R / 3.0);        // core ball
          u2 = detail::nodal_bump(g, 0.75 * R, 0.0, 0.2 * R);   // annulus
          break;
        }
      }
      detail::renormalize_mass(u1, m.rho1, "initial_guess");
      detail::renormalize_mass(u2, m.rho2, "initial_guess");
      return {std::move(u1), std::move(u2)};
    }
    case InitKind::custom: {
      if (custom1 == nullptr || custom2 == nullptr)
        throw std::invalid_argument("initial_guess: custom kind needs both fields");
      RealField u1 = *custom1, u2 = *custom2;
      detail::take_modulus(u1);
      detail::take_modulus(u2);
      detail::renormalize_mass(u1, m.rho1, "initial_guess");
      detail::renormalize_mass(u2, m.rho2, "initial_guess");
      return {std::move(u1), std::move(u2)};
    }
  }
  throw std::logic_error("initial_guess: unknown kind");
}

inline GroundStateResult normalized_gradient_flow(const SystemParams& sp, const Grid& g,
                                                  const ConstraintSpec& spec,
                                                  std::pair<RealField, RealField> init,
                                                  const FlowOptions& opts = {}) {
  validate(sp);
  if (spec.masses.rho1 < 0.0 || spec.masses.rho2 < 0.0)
    throw std::invalid_argument("normalized_gradient_flow: negative mass");
  if (!init.first.grid.same_as(g) || !init.second.grid.same_as(g))
    throw std::invalid_argument("normalized_gradient_flow: init fields on a different grid");

  const double lambda1 = principal_eigenpairs(g, 1)[0].lambda;
  if (spec.ball_alpha && *spec.ball_alpha < lambda1 * (1.0 - 1e-12))
    throw std::invalid_argument("normalized_gradient_flow: ball_alpha below lambda1");

  const double rho1 = spec.masses.rho1, rho2 = spec.masses.rho2;
  GroundStateResult res{std::move(init.first), std::move(init.second), {}, {}, 0.0,
                        0.0,  false, false, 0, 0.0, 0.0, {}};
  detail::take_modulus(res.u1);
  detail::take_modulus(res.u2);
  detail::renormalize_mass(res.u1, rho1, "normalized_gradient_flow");
  detail::renormalize_mass(res.u2, rho2, "normalized_gradient_flow");

  const double dt0 = opts.dt > 0.0 ? opts.dt : 1e-2 / lambda1;
  double dt = dt0;
  const double budget = spec.ball_alpha ? spec.masses.total() * (*spec.ball_alpha)
                                        : std::numeric_limits<double>::infinity();

  double kin1 = kinetic(res.u1), kin2 = kinetic(res.u2);
  double E = 0.5 * (kin1 + kin2) - interaction_F(sp, res.u1, res.u2) / (sp.p + 1.0);
  res.energy_history.push_back(E);
  res.kinetic_total = kin1 + kin2;
  if (res.kinetic_total >= budget * (1.0 - 1e-12)) {
    res.boundary_hit = true;  // init already outside the open ball
    res.energy = E;
    res.dt_final = dt;
    const auto mu0 = lagrange_multipliers(sp, res.u1, res.u2);
    res.omega1 = mu0.omega1;
    res.omega2 = mu0.omega2;
    res.residual = el_residual(sp, res.u1, res.u2, mu0.omega1.value_or(0.0), mu0.omega2.value_or(0.0));
    return res;
  }

  RealField n1(g), n2(g);
  for (long it = 1; it <= opts.max_iter; ++it) {
    const Multipliers om = lagrange_multipliers(sp, res.u1, res.u2);

    // one trial step; energy increase rejects it and halves dt
    RealField v1(g), v2(g);
    double E_new = 0.0, k1_new = 0.0, k2_new = 0.0;
    bool accepted = false;
    for (int att = 0; att < 64; ++att) {
      // shift kept inside the positivity range of the implicit operator
      const double floor_shift = -0.9 / dt - lambda1;
      if (rho1 > 0.0) {
        const double s1 = std::max(om.omega1.value_or(0.0), floor_shift);
        n1 = nonlinear_rhs(sp, res.u1, res.u2, sp.mu1);
        RealField rhs(g);
        for (std::size_t k = 0; k < rhs.v.size(); ++k) rhs.v[k] = res.u1.v[k] + dt * n1.v[k];
        v1 = solve_identity_minus_laplacian(rhs, dt, s1);
        detail::take_modulus(v1);
        detail::renormalize_mass(v1, rho1, "normalized_gradient_flow");
      }
      if (rho2 > 0.0) {
        const double s2 = std::max(om.omega2.value_or(0.0), floor_shift);
        n2 = nonlinear_rhs(sp, res.u2, res.u1, sp.mu2);
        RealField rhs(g);
        for (std::size_t k = 0; k < rhs.v.size(); ++k) rhs.v[k] = res.u2.v[k] + dt * n2.v[k];
        v2 = solve_identity_minus_laplacian(rhs, dt, s2);
        detail::take_modulus(v2);
        detail::renormalize_mass(v2, rho2, "normalized_gradient_flow");
      }
      k1_new = kinetic(v1);
      k2_new = kinetic(v2);
      E_new = 0.5 * (k1_new + k2_new) - interaction_F(sp, v1, v2) / (sp.p + 1.0);
      if (!std::isfinite(E_new))
        throw std::runtime_error(
            "normalized_gradient_flow: non-finite energy; reduce dt or refine the initial guess");
      if (E_new <= E + 1e-12 * (1.0 + std::fabs(E))) {
        accepted = true;
        break;
      }
      dt *= 0.5;
      if (dt < dt0 * 1e-15) break;
    }
    res.iterations = it;
    if (!accepted) {
      res.converged = false;  // energy refuses to go down at any step size
      break;
    }

    // relative H1 change of the accepted step
    RealField d1(g), d2(g);
    for (std::size_t k = 0; k < d1.v.size(); ++k) {
      d1.v[k] = v1.v[k] - res.u1.v[k];
      d2.v[k] = v2.v[k] - res.u2.v[k];
    }
    const double dh1 = std::sqrt((kinetic(d1) + mass(d1)) + (kinetic(d2) + mass(d2)));
    const double nh1 = std::sqrt((k1_new + rho1) + (k2_new + rho2));

    res.u1 = std::move(v1);
    res.u2 = std::move(v2);
    kin1 = k1_new;
    kin2 = k2_new;
    E = E_new;
    res.energy_history.push_back(E);
    res.kinetic_total = kin1 + kin2;

    if (res.kinetic_total >= budget * (1.0 - 1e-12)) {
      res.boundary_hit = true;
      break;
    }
    if (dh1 <= opts.tol * std::max(1.0, nh1)) {
      const Multipliers mf = lagrange_multipliers(sp, res.u1, res.u2);
      const double r =
          el_residual(sp, res.u1, res.u2, mf.omega1.value_or(0.0), mf.omega2.value_or(0.0));
      if (r <= opts.residual_tol) {
        res.converged = true;
        break;
      }
    }
  }

  const Multipliers mf = lagrange_multipliers(sp, res.u1, res.u2);
  res.omega1 = mf.omega1;
  res.omega2 = mf.omega2;
  res.energy = E;
  res.dt_final = dt;
  res.residual = el_residual(sp, res.u1, res.u2, mf.omega1.value_or(0.0), mf.omega2.value_or(0.0));
  return res;
}

// Certificate that a ball-constrained run found an interior local minimizer:
// strictly inside the kinetic ball, energy at most the rescaled-eigenfunction
// level, and strictly below the boundary barrier at the same alpha.
struct LocalMinCertificate {
  bool interior = false;
  bool below_level = false;
  bool below_barrier = false;
  double margin_interior = 0.0;  // budget - kinetic_total
  double margin_level = 0.0;     // level + tol - energy
  double margin_barrier = 0.0;   // barrier - energy
  bool conclusive() const { return interior && below_level && below_barrier; }
};

inline LocalMinCertificate verify_local_min(const GroundStateResult& res,
                                            const ConstraintSpec& spec,
                                            const ThresholdReport& rep) {
  if (!spec.ball_alpha)
    throw std::invalid_argument("verify_local_min: no ball constraint present");
  const double alpha = *spec.ball_alpha;
  const double rho = spec.masses.total();
  const double lam_j = (rep.j == 1) ? rep.lambda1 : rep.lambda2;
  const HatCBounds b = hat_c_bounds(alpha, spec.masses, rep.Lambda, rep.a, lam_j);

  LocalMinCertificate cert;
  cert.margin_interior = rho * alpha - res.kinetic_total;
  cert.interior = cert.margin_interior > 0.0;
  const double level_tol = 1e-8 * (1.0 + std::fabs(b.upper));
  cert.margin_level = b.upper + level_tol - res.energy;
  cert.below_level = cert.margin_level >= 0.0;
  cert.margin_barrier = b.lower - res.energy;
  cert.below_barrier = cert.margin_barrier > 0.0;
  return cert;
}

// Pair of disjoint concentration bumps with exact masses. The first bump
// shrinks around an interior point (the origin for radial grids) with the
// full N-dimensional scaling, so past the mass-critical power its energy
// decreases without bound as k grows; the second occupies a separated
// support and never interacts through the coupling term.
inline std::pair<RealField, RealField> make_divergent_sequence(const SystemParams& sp,
                                                               const Grid& g, const MassPair& m,
                                                               double k) {
  validate(sp);
  const Exponents e = exponents(sp.N, sp.p);
  if (!(e.a > 1.0))
    throw std::invalid_argument("make_divergent_sequence: needs a mass-supercritical power");
  if (!(k > 0.0)) throw std::invalid_argument("make_divergent_sequence: k must be positive");
  const detail::GridData& gd = g.data();
  const double rad = 1.0 / k;
  RealField u1(g), u2(g);
  switch (gd.dom.kind) {
    case DomainKind::Interval: {
      const double L = gd.dom.ext0;
      if (rad > 0.25 * L)
        throw std::invalid_argument("make_divergent_sequence: k too small for disjoint supports");
      u1 = detail::nodal_bump(g, 0.25 * L, 0.0, rad);
      u2 = detail::nodal_bump(g, 0.75 * L, 0.0, rad);
      break;
    }
    case DomainKind::Rectangle: {
      const double Lx = gd.dom.ext0, Ly = gd.dom.ext1;
      if (rad > 0.25 * std::min(Lx, Ly))
        throw std::invalid_argument("make_divergent_sequence: k too small for disjoint supports");
      u1 = detail::nodal_bump(g, 0.25 * Lx, 0.5 * Ly, rad);
      u2 = detail::nodal_bump(g, 0.75 * Lx, 0.5 * Ly, rad);
      break;
    }
    case DomainKind::RadialBall: {
      const double R = gd.dom.ext0;
      if (rad > 0.25 * R)
        throw std::invalid_argument("make_divergent_sequence: k too small for disjoint supports");
      u1 = detail::nodal_bump(g, 0.0, 0.0, rad);
      u2 = detail::nodal_bump(g, 0.75 * R, 0.0, rad);
      break;
    }
  }
  if (m.rho1 > 0.0 && !(mass(u1) > 0.0))
    throw std::invalid_argument("make_divergent_sequence: first bump misses every grid node");
  if (m.rho2 > 0.0 && !(mass(u2) > 0.0))
    throw std::invalid_argument("make_divergent_sequence: second bump misses every grid node");
  detail::renormalize_mass(u1, m.rho1, "make_divergent_sequence");
  detail::renormalize_mass(u2, m.rho2, "make_divergent_sequence");
  return {std::move(u1), std::move(u2)};
}

}  // namespace gpnorm
