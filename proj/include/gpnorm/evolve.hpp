#pragma once

// Time integration of the coupled Schrodinger system
//   i d/dt psi_i = -Delta psi_i - (mu_i |psi_i|^{p-1}
//                  + beta |psi_i|^{(p-3)/2} |psi_j|^{(p+1)/2}) psi_i
// with Dirichlet boundary values, plus the orbital-stability experiment
// around a computed ground state.
//
// The step is midpoint-implicit in Cayley form: freeze the interaction
// potential at the midpoint modulus and apply (W + i dt/2 L)^{-1}
// (W - i dt/2 L) with L = K - W V.  For any real V that map is unitary in
// the W inner product, so the discrete masses are conserved at every
// fixed-point sweep, converged or not; the sweeps only decide the accuracy
// of the potential.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "grid.hpp"
#include "minimize.hpp"
#include "model.hpp"

namespace gpnorm {

struct WaveState {
  ComplexField psi1, psi2;
  double t = 0.0;
};

inline WaveState make_state(const RealField& u1, const RealField& u2, double t = 0.0) {
  detail::require_same_grid(u1.grid, u2.grid, "make_state");
  WaveState st{ComplexField(u1.grid), ComplexField(u2.grid), t};
  for (std::size_t i = 0; i < u1.v.size(); ++i) st.psi1.v[i] = u1.v[i];
  for (std::size_t i = 0; i < u2.v.size(); ++i) st.psi2.v[i] = u2.v[i];
  return st;
}

struct StepStats {
  int sweeps = 0;       // fixed-point sweeps, summed over internal sub-steps
  int halvings = 0;     // how many times a sub-step had to be split
  double dt_min = 0.0;  // smallest sub-step actually taken
};

namespace detail {

using Cx = std::complex<double>;

// The stepper is well defined for mu_i >= 0 (mu = beta = 0 is the plain
// linear flow, a useful calibration point), unlike the variational modules
// which need strict positivity.
inline void validate_evolution(const SystemParams& sp) {
  if (sp.N < 1 || !(sp.p > 1.0) || sp.mu1 < 0.0 || sp.mu2 < 0.0)
    throw std::invalid_argument("evolve: need N >= 1, p > 1, mu_i >= 0");
  if (sp.N >= 3 && sp.p > critical_power(sp.N) + 1e-12)
    throw std::invalid_argument("evolve: p beyond the Sobolev-critical power");
}

// Pointwise potential V_i = mu_i a_i^{p-1} + beta a_i^{(p-3)/2} a_j^{(p+1)/2}
// at moduli (a_i, a_j).  The cross factor is singular at a_i = 0 when p < 3,
// but there the force a_i V_i vanishes, so the potential is taken as zero.
inline double interaction_potential(double p, double mu_i, double beta, double ai, double aj) {
  double v = mu_i * std::pow(ai, p - 1.0);
  if (beta != 0.0 && aj > 0.0) {
    if (ai > 0.0)
      v += beta * std::pow(ai, (p - 3.0) / 2.0) * std::pow(aj, (p + 1.0) / 2.0);
    else if (p == 3.0)
      v += beta * std::pow(aj, (p + 1.0) / 2.0);
  }
  return v;
}

// Dirichlet stiffness matvec (K u); the same edge conductances as kinetic().
inline void stiffness_apply(const GridData& gd, const std::vector<Cx>& u, std::vector<Cx>& out) {
  const int n = gd.n;
  if (!gd.two_d) {
    for (int i = 0; i < n; ++i) {
      const Cx ul = (i > 0) ? u[i - 1] : Cx{};
      const Cx ur = (i + 1 < n) ? u[i + 1] : Cx{};
      out[i] = gd.cond_x[i] * (u[i] - ul) + gd.cond_x[i + 1] * (u[i] - ur);
    }
  } else {
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const std::size_t k = gd.idx(i, j);
        const Cx uc = u[k];
        const Cx uxl = (i > 0) ? u[k - 1] : Cx{};
        const Cx uxr = (i + 1 < n) ? u[k + 1] : Cx{};
        const Cx uyl = (j > 0) ? u[k - std::size_t(n)] : Cx{};
        const Cx uyr = (j + 1 < n) ? u[k + std::size_t(n)] : Cx{};
        out[k] = gd.wy[j] * (gd.cond_x[i] * (uc - uxl) + gd.cond_x[i + 1] * (uc - uxr)) +
                 gd.wx[i] * (gd.cond_y[j] * (uc - uyl) + gd.cond_y[j + 1] * (uc - uyr));
      }
  }
}

// Solve (W + i th (K - W V)) x = b.  Interval and radial grids use a direct
// complex Thomas pass; rectangles use diagonally preconditioned COCG (the
// matrix is complex symmetric, never Hermitian).
inline void cayley_solve(const GridData& gd, const std::vector<double>& V, double th,
                         const std::vector<Cx>& b, std::vector<Cx>& x) {
  const std::size_t sz = gd.w.size();
  const Cx ith(0.0, th);
  if (!gd.two_d) {
    const int n = gd.n;
    std::vector<Cx> diag(n), cp(n), dp(n);
    for (int i = 0; i < n; ++i)
      diag[i] = gd.w[i] + ith * ((gd.cond_x[i] + gd.cond_x[i + 1]) - gd.w[i] * V[i]);
    auto off = [&](int e) { return ith * (-gd.cond_x[e + 1]); };  // edge between e, e+1
    cp[0] = (n > 1) ? off(0) / diag[0] : Cx{};
    dp[0] = b[0] / diag[0];
    for (int i = 1; i < n; ++i) {
      const Cx m = diag[i] - off(i - 1) * cp[i - 1];
      if (i + 1 < n) cp[i] = off(i) / m;
      dp[i] = (b[i] - off(i - 1) * dp[i - 1]) / m;
    }
    x.resize(sz);
    x[n - 1] = dp[n - 1];
    for (int i = n - 1; i-- > 0;) x[i] = dp[i] - cp[i] * x[i + 1];
    return;
  }
  auto apply = [&](const std::vector<Cx>& u, std::vector<Cx>& out) {
    stiffness_apply(gd, u, out);
    for (std::size_t k = 0; k < sz; ++k) out[k] = gd.w[k] * u[k] + ith * (out[k] - gd.w[k] * V[k] * u[k]);
  };
  double bnorm = 0.0;
  for (const Cx& bi : b) bnorm += std::norm(bi);
  bnorm = std::sqrt(bnorm);
  x.assign(sz, Cx{});
  if (bnorm == 0.0) return;
  std::vector<Cx> r = b, z(sz), p(sz), q(sz), minv(sz);
  for (std::size_t k = 0; k < sz; ++k)
    minv[k] = 1.0 / (gd.w[k] + ith * ((gd.wy[k / std::size_t(gd.n)] *
                                           (gd.cond_x[k % std::size_t(gd.n)] +
                                            gd.cond_x[k % std::size_t(gd.n) + 1]) +
                                       gd.wx[k % std::size_t(gd.n)] *
                                           (gd.cond_y[k / std::size_t(gd.n)] +
                                            gd.cond_y[k / std::size_t(gd.n) + 1])) -
                                      gd.w[k] * V[k]));
  for (std::size_t k = 0; k < sz; ++k) z[k] = minv[k] * r[k];
  p = z;
  Cx rho{};
  for (std::size_t k = 0; k < sz; ++k) rho += r[k] * z[k];  // unconjugated
  for (int it = 0; it < 100000; ++it) {
    apply(p, q);
    Cx pq{};
    for (std::size_t k = 0; k < sz; ++k) pq += p[k] * q[k];
    if (std::abs(pq) == 0.0) throw std::runtime_error("cayley_solve: conjugate-direction breakdown");
    const Cx alpha = rho / pq;
    double rnorm = 0.0;
    for (std::size_t k = 0; k < sz; ++k) {
      x[k] += alpha * p[k];
      r[k] -= alpha * q[k];
      rnorm += std::norm(r[k]);
    }
    if (std::sqrt(rnorm) <= 1e-13 * bnorm) return;
    Cx rho2{};
    for (std::size_t k = 0; k < sz; ++k) {
      z[k] = minv[k] * r[k];
      rho2 += r[k] * z[k];
    }
    const Cx beta = rho2 / rho;
    rho = rho2;
    for (std::size_t k = 0; k < sz; ++k) p[k] = z[k] + beta * p[k];
  }
  throw std::runtime_error("cayley_solve: iteration stalled");
}

// One midpoint step of size dt.  On success commits the new values into
// (p1, p2) and returns true; on fixed-point failure leaves them untouched.
inline bool cn_sub_step(const SystemParams& sp, const GridData& gd, std::vector<Cx>& p1,
                        std::vector<Cx>& p2, double dt, int& sweeps) {
  const std::size_t sz = p1.size();
  const double th = 0.5 * dt;
  const Cx ith(0.0, th);
  double nrm0 = 0.0;
  for (std::size_t k = 0; k < sz; ++k) nrm0 += gd.w[k] * (std::norm(p1[k]) + std::norm(p2[k]));
  const double tol = 1e-12 * std::max(1.0, std::sqrt(nrm0));

  std::vector<Cx> q1 = p1, q2 = p2, s1(sz), s2(sz), rhs1(sz), rhs2(sz), kp1(sz), kp2(sz);
  std::vector<double> V1(sz), V2(sz);
  stiffness_apply(gd, p1, kp1);
  stiffness_apply(gd, p2, kp2);
  for (int sweep = 0; sweep < 50; ++sweep) {
    ++sweeps;
    for (std::size_t k = 0; k < sz; ++k) {
      const double a1 = std::abs(0.5 * (p1[k] + q1[k]));
      const double a2 = std::abs(0.5 * (p2[k] + q2[k]));
      V1[k] = interaction_potential(sp.p, sp.mu1, sp.beta, a1, a2);
      V2[k] = interaction_potential(sp.p, sp.mu2, sp.beta, a2, a1);
    }
    for (std::size_t k = 0; k < sz; ++k) {
      rhs1[k] = gd.w[k] * p1[k] - ith * (kp1[k] - gd.w[k] * V1[k] * p1[k]);
      rhs2[k] = gd.w[k] * p2[k] - ith * (kp2[k] - gd.w[k] * V2[k] * p2[k]);
    }
    cayley_solve(gd, V1, th, rhs1, s1);
    cayley_solve(gd, V2, th, rhs2, s2);
    double ch = 0.0;
    for (std::size_t k = 0; k < sz; ++k)
      ch += gd.w[k] * (std::norm(s1[k] - q1[k]) + std::norm(s2[k] - q2[k]));
    q1.swap(s1);
    q2.swap(s2);
    if (std::sqrt(ch) <= tol) {
      p1.swap(q1);
      p2.swap(q2);
      return true;
    }
  }
  return false;
}

inline void cn_advance(const SystemParams& sp, const GridData& gd, std::vector<Cx>& p1,
                       std::vector<Cx>& p2, double dt, int depth, StepStats& st) {
  int sweeps = 0;
  const bool ok = cn_sub_step(sp, gd, p1, p2, dt, sweeps);
  st.sweeps += sweeps;
  if (ok) {
    const double a = std::fabs(dt);
    if (st.dt_min == 0.0 || a < st.dt_min) st.dt_min = a;
    return;
  }
  if (depth >= 40)
    throw std::runtime_error("step_crank_nicolson: fixed point stalled after 40 dt halvings");
  ++st.halvings;
  cn_advance(sp, gd, p1, p2, 0.5 * dt, depth + 1, st);
  cn_advance(sp, gd, p1, p2, 0.5 * dt, depth + 1, st);
}

}  // namespace detail

// Midpoint-implicit step.  The nonlinearity is resolved by fixed-point
// sweeps (tolerance 1e-12, at most 50); if they fail to settle, the step is
// split in half internally and the stats report it.  Negative dt runs the
// reversed step; only dt = 0 is rejected.
inline WaveState step_crank_nicolson(const SystemParams& sp, const WaveState& state, double dt,
                                     StepStats* stats = nullptr) {
  detail::validate_evolution(sp);
  detail::require_same_grid(state.psi1.grid, state.psi2.grid, "step_crank_nicolson");
  if (dt == 0.0 || !std::isfinite(dt))
    throw std::invalid_argument("step_crank_nicolson: dt must be nonzero and finite");
  WaveState out{state.psi1, state.psi2, state.t + dt};
  StepStats local{};
  detail::cn_advance(sp, state.psi1.grid.data(), out.psi1.v, out.psi2.v, dt, 0, local);
  if (stats) *stats = local;
  return out;
}

// H^1 distance to the phase orbit of a ground state: the minimum over
// (theta1, theta2) of ||(psi1 - e^{i theta1} u1, psi2 - e^{i theta2} u2)||.
// The optimal phase of each component is the argument of the H^1 pairing
// <psi_i, u_i>, so no search is involved; the distance is then evaluated on
// the rotated difference field directly, which keeps it at roundoff level
// for states that actually sit on the orbit.
inline double orbit_distance(const WaveState& state, const GroundStateResult& gs) {
  detail::require_same_grid(state.psi1.grid, state.psi2.grid, "orbit_distance");
  detail::require_same_grid(state.psi1.grid, gs.u1.grid, "orbit_distance");
  using detail::Cx;
  auto part = [&](const ComplexField& psi, const RealField& u) {
    ComplexField uc(u.grid);
    for (std::size_t k = 0; k < u.v.size(); ++k) uc.v[k] = u.v[k];
    const Cx ip = kinetic_pairing(psi, uc) + inner_l2(psi, uc);
    const Cx phase = (ip == Cx{}) ? Cx(1.0, 0.0) : std::polar(1.0, std::arg(ip));
    ComplexField d(psi.grid);
    for (std::size_t k = 0; k < d.v.size(); ++k) d.v[k] = psi.v[k] - phase * u.v[k];
    return kinetic(d) + mass(d);
  };
  return std::sqrt(part(state.psi1, gs.u1) + part(state.psi2, gs.u2));
}

enum class PerturbKind { RandomSmooth, SecondEigenfunction, ComponentAsymmetric };

struct Perturbation {
  PerturbKind kind = PerturbKind::RandomSmooth;
  double size = 0.0;          // the amplitude delta; 0 runs the unperturbed wave
  std::uint64_t seed = 1234;  // RandomSmooth draws only
  bool operator==(const Perturbation&) const = default;
};

// Unit-mass perturbation directions.  RandomSmooth mixes the six lowest
// eigenmodes with seeded uniform coefficients; SecondEigenfunction pushes
// both components along phi_2; ComponentAsymmetric pushes them along
// +phi_1 / -phi_1.
inline std::pair<RealField, RealField> perturbation_fields(const Perturbation& pert,
                                                           const Grid& g) {
  switch (pert.kind) {
    case PerturbKind::RandomSmooth: {
      const auto modes = principal_eigenpairs(g, 6);
      std::mt19937_64 rng(pert.seed);
      std::uniform_real_distribution<double> unif(-1.0, 1.0);
      RealField p1(g), p2(g);
      for (const auto& m : modes) {
        const double c1 = unif(rng), c2 = unif(rng);
        for (std::size_t k = 0; k < p1.v.size(); ++k) {
          p1.v[k] += c1 * m.phi.v[k];
          p2.v[k] += c2 * m.phi.v[k];
        }
      }
      for (RealField* f : {&p1, &p2}) {
        const double mm = mass(*f);
        if (mm <= 0.0) throw std::runtime_error("perturbation_fields: degenerate random draw");
        const double s = 1.0 / std::sqrt(mm);
        for (double& x : f->v) x *= s;
      }
      return {std::move(p1), std::move(p2)};
    }
    case PerturbKind::SecondEigenfunction: {
      const auto modes = principal_eigenpairs(g, 2);
      return {modes[1].phi, modes[1].phi};
    }
    case PerturbKind::ComponentAsymmetric: {
      const auto modes = principal_eigenpairs(g, 1);
      RealField p2 = modes[0].phi;
      for (double& x : p2.v) x = -x;
      return {modes[0].phi, std::move(p2)};
    }
  }
  throw std::logic_error("perturbation_fields: unknown kind");
}

struct EvolutionTrace {
  std::vector<double> times;  // strictly increasing, starts at 0
  std::vector<double> mass1, mass2, energy, distance;
  std::vector<int> sweeps;  // fixed-point sweeps per step (0 on the initial row)
  double dt = 0.0;
  double sup_distance = 0.0;
  double mass1_drift = 0.0;        // max |mass - rho| / rho (absolute if rho = 0)
  double mass2_drift = 0.0;
  double energy_drift_rate = 0.0;  // max |E(t) - E(0)| / (t (1 + |E(0)|))
  bool blow_up = false;
};

// Perturb a converged ground state, renormalize the masses back to the
// constraint values, and follow the orbit distance up to time T.  The run
// reports what it saw and never asserts stability; if the H^1 norm grows
// past 1000x its initial value the trajectory is declared blown up and the
// trace ends there.
inline EvolutionTrace stability_experiment(const SystemParams& sp, const GroundStateResult& gs,
                                           const Perturbation& pert, double T, double dt) {
  detail::validate_evolution(sp);
  if (!gs.converged)
    throw std::invalid_argument("stability_experiment: ground state did not converge");
  if (!(pert.size >= 0.0))
    throw std::invalid_argument("stability_experiment: perturbation size must be nonnegative");
  if (!(T > 0.0) || !(dt > 0.0))
    throw std::invalid_argument("stability_experiment: need T > 0 and dt > 0");
  const Grid& g = gs.u1.grid;
  const double rho1 = mass(gs.u1), rho2 = mass(gs.u2);

  RealField v1 = gs.u1, v2 = gs.u2;
  if (pert.size > 0.0) {
    const auto dir = perturbation_fields(pert, g);
    for (std::size_t k = 0; k < v1.v.size(); ++k) {
      v1.v[k] += pert.size * dir.first.v[k];
      v2.v[k] += pert.size * dir.second.v[k];
    }
    detail::renormalize_mass(v1, rho1, "stability_experiment");
    detail::renormalize_mass(v2, rho2, "stability_experiment");
  }
  WaveState st = make_state(v1, v2);

  EvolutionTrace tr;
  tr.dt = dt;
  const double h1_0 = std::sqrt((kinetic(st.psi1) + mass(st.psi1)) +
                                (kinetic(st.psi2) + mass(st.psi2)));
  const double e0 = energy(sp, st.psi1, st.psi2);
  auto record = [&](int sweeps) {
    const double m1 = mass(st.psi1), m2 = mass(st.psi2);
    const double en = energy(sp, st.psi1, st.psi2);
    const double d = orbit_distance(st, gs);
    tr.times.push_back(st.t);
    tr.mass1.push_back(m1);
    tr.mass2.push_back(m2);
    tr.energy.push_back(en);
    tr.distance.push_back(d);
    tr.sweeps.push_back(sweeps);
    tr.sup_distance = std::max(tr.sup_distance, d);
    tr.mass1_drift = std::max(tr.mass1_drift,
                              rho1 > 0.0 ? std::fabs(m1 - rho1) / rho1 : std::fabs(m1));
    tr.mass2_drift = std::max(tr.mass2_drift,
                              rho2 > 0.0 ? std::fabs(m2 - rho2) / rho2 : std::fabs(m2));
    if (st.t > 0.0)
      tr.energy_drift_rate = std::max(tr.energy_drift_rate,
                                      std::fabs(en - e0) / (st.t * (1.0 + std::fabs(e0))));
  };
  record(0);
  const long nsteps = long(std::ceil(T / dt - 1e-9));
  for (long k = 0; k < nsteps; ++k) {
    StepStats ss{};
    st = step_crank_nicolson(sp, st, dt, &ss);
    record(ss.sweeps);
    const double h1 = std::sqrt((kinetic(st.psi1) + mass(st.psi1)) +
                                (kinetic(st.psi2) + mass(st.psi2)));
    if (h1 > 1e3 * h1_0) {
      tr.blow_up = true;
      break;
    }
  }
  return tr;
}

}  // namespace gpnorm
