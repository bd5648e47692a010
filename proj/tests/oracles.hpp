#pragma once
// Independent reference computations used by the test suites. Everything in
// here is deliberately written against closed forms or textbook reductions,
// not against the library code paths it is meant to check.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace oracle {

inline double simpson(const std::function<double(double)>& f, double a, double b, int panels) {
  if (panels % 2) ++panels;
  const double h = (b - a) / panels;
  double s = f(a) + f(b);
  for (int k = 1; k < panels; ++k) s += (k % 2 ? 4.0 : 2.0) * f(a + k * h);
  return s * h / 3.0;
}

inline double beta_fn(double x, double y) {
  return std::exp(std::lgamma(x) + std::lgamma(y) - std::lgamma(x + y));
}

// int_0^inf r^s (1 + r^2/c)^{-m} dr, convergent for m > (s+1)/2
inline double power_bubble_integral(double s, double c, double m) {
  const double e = 0.5 * (s + 1.0);
  if (!(m > e)) throw std::invalid_argument("power_bubble_integral: divergent");
  return 0.5 * std::pow(c, e) * beta_fn(e, m - e);
}

// Closed-form whole-line ground state of -Z'' + Z = Z^p:
//   Z(x) = ((p+1)/2)^{1/(p-1)} sech^{2/(p-1)}((p-1) x / 2)
struct LineSoliton {
  double p;
  double amp, rate;
  double operator()(double x) const {
    return amp * std::pow(1.0 / std::cosh(rate * x), 2.0 / (p - 1.0));
  }
};

inline LineSoliton line_soliton(double p) {
  LineSoliton z;
  z.p = p;
  z.amp = std::pow(0.5 * (p + 1.0), 1.0 / (p - 1.0));
  z.rate = 0.5 * (p - 1.0);
  return z;
}

// Richardson fit of v(h) = v0 + c2 h^2 + c4 h^4 through three samples.
inline double richardson3(const double h[3], const double v[3]) {
  double A[3][4];
  for (int i = 0; i < 3; ++i) {
    A[i][0] = 1.0;
    A[i][1] = h[i] * h[i];
    A[i][2] = A[i][1] * A[i][1];
    A[i][3] = v[i];
  }
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int i = col + 1; i < 3; ++i)
      if (std::fabs(A[i][col]) > std::fabs(A[piv][col])) piv = i;
    for (int k = 0; k < 4; ++k) std::swap(A[col][k], A[piv][k]);
    for (int i = col + 1; i < 3; ++i) {
      const double f = A[i][col] / A[col][col];
      for (int k = col; k < 4; ++k) A[i][k] -= f * A[col][k];
    }
  }
  double x[3];
  for (int i = 2; i >= 0; --i) {
    double s = A[i][3];
    for (int k = i + 1; k < 3; ++k) s -= A[i][k] * x[k];
    x[i] = s / A[i][i];
  }
  return x[0];
}

// Positive symmetric solution of -u'' + w u = mu u^p on (0, L), zero at the
// ends, with prescribed mass int u^2 = rho. Reduced to quadratures via the
// first integral u'^2 = s^2 + w u^2 - 2 mu/(p+1) u^{p+1}: the amplitude M
// fixes s, the half-length and mass become one-dimensional integrals in the
// amplitude variable, and two nested bisections (M against L, then w against
// rho) pin the solution. The profile itself is re-integrated by RK4.
struct BvpSolution {
  double omega = 0.0;
  double energy = 0.0;   // 1/2 kinetic - mu/(p+1) int u^{p+1}
  double mass = 0.0;
  double kinetic = 0.0;
  double L = 0.0;
  std::vector<double> x, u;  // dense profile on [0, L]

  double eval(double xx) const {
    if (xx <= 0.0 || xx >= L) return 0.0;
    const double h = x[1] - x[0];
    auto k = static_cast<std::size_t>(xx / h);
    if (k + 1 >= x.size()) return u.back();
    const double t = (xx - x[k]) / h;
    return (1.0 - t) * u[k] + t * u[k + 1];
  }
};

namespace detail {

struct HalfWave {
  double length = 0.0, mass = 0.0, kinetic = 0.0, lp1 = 0.0;
};

// substitute u = M - t^2; the factor (M-t^2)^{p+1} - M^{p+1} is evaluated
// through expm1/log1p so the integrand stays clean near the turning point
inline HalfWave half_wave(double p, double mu, double w, double M, int panels = 20000,
                          bool length_only = false) {
  const double c = 2.0 * mu / (p + 1.0);
  const double Mp1 = std::pow(M, p + 1.0);
  auto g_of_t = [&](double t) {
    const double t2 = t * t;
    // t = sqrt(M) can round so that t2/M lands just above 1; clamp, the
    // endpoint value expm1(-inf) = -1 is the exact limit
    const double ratio = std::min(t2 / M, 1.0);
    const double diff_pow = Mp1 * std::expm1((p + 1.0) * std::log1p(-ratio));
    return w * (t2 * t2 - 2.0 * M * t2) - c * diff_pow;
  };
  const double D = -2.0 * w * M + 2.0 * mu * std::pow(M, p);  // -g'(M) > 0
  if (!(D > 0)) throw std::runtime_error("half_wave: degenerate turning point");
  const double tmax = std::sqrt(M);
  auto with_weight = [&](const std::function<double(double)>& F) {
    return simpson(
        [&](double t) {
          const double uu = M - t * t;
          if (t == 0.0) return 2.0 * F(M) / std::sqrt(D);
          const double g = g_of_t(t);
          if (g <= 0.0) return 2.0 * F(uu) * t / std::sqrt(D * t * t);
          return 2.0 * F(uu) * t / std::sqrt(g);
        },
        0.0, tmax, panels);
  };
  HalfWave hw;
  hw.length = with_weight([](double) { return 1.0; });
  if (length_only) return hw;
  hw.mass = with_weight([](double uu) { return uu * uu; });
  hw.lp1 = with_weight([&](double uu) { return std::pow(uu, p + 1.0); });
  // kinetic: int u'^2 dx = int sqrt(g) du over the half wave
  hw.kinetic = simpson(
      [&](double t) {
        const double g = g_of_t(t);
        return 2.0 * t * std::sqrt(std::max(g, 0.0));
      },
      0.0, tmax, panels);
  return hw;
}

inline double half_length(double p, double mu, double w, double M) {
  return half_wave(p, mu, w, M, 2000, true).length;
}

inline double amplitude_for_length(double p, double mu, double w, double L, double Mhi) {
  // half length decreases in M; bracket then bisect
  double lo = 1e-12, hi = Mhi;
  while (half_length(p, mu, w, hi) > 0.5 * L) {
    hi *= 2.0;
    if (hi > 1e12) throw std::runtime_error("amplitude_for_length: no bracket");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (half_length(p, mu, w, mid) > 0.5 * L)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

inline BvpSolution bvp_ground_state_1d(double L, double p, double mu, double rho) {
  const double lam1 = (M_PI / L) * (M_PI / L);
  auto mass_at = [&](double w) {
    const double M = detail::amplitude_for_length(p, mu, w, L, 1.0);
    return 2.0 * detail::half_wave(p, mu, w, M, 4000).mass;
  };
  // mass is increasing in w; bracket around the linear limit w -> -lambda1
  double wlo = -lam1 + 1e-10, whi = -lam1 + 1.0;
  while (mass_at(whi) < rho) {
    whi = -lam1 + 2.0 * (whi + lam1);
    if (whi > 1e8) throw std::runtime_error("bvp_ground_state_1d: no bracket");
  }
  for (int it = 0; it < 120; ++it) {
    const double mid = 0.5 * (wlo + whi);
    if (mass_at(mid) < rho)
      wlo = mid;
    else
      whi = mid;
  }
  BvpSolution sol;
  sol.omega = 0.5 * (wlo + whi);
  sol.L = L;
  const double M = detail::amplitude_for_length(p, mu, sol.omega, L, 1.0);
  const auto hw = detail::half_wave(p, mu, sol.omega, M, 40000);
  sol.mass = 2.0 * hw.mass;
  sol.kinetic = 2.0 * hw.kinetic;
  sol.energy = 0.5 * sol.kinetic - mu / (p + 1.0) * 2.0 * hw.lp1;

  // dense profile by RK4 on u'' = w u - mu u^p from the left end
  const double s = std::sqrt(std::max(
      2.0 * mu / (p + 1.0) * std::pow(M, p + 1.0) - sol.omega * M * M, 0.0));
  const int n = 200000;
  const double h = L / n;
  sol.x.resize(n + 1);
  sol.u.resize(n + 1);
  double uu = 0.0, vv = s;
  auto acc = [&](double q) { return sol.omega * q - mu * std::pow(std::max(q, 0.0), p); };
  for (int k = 0; k <= n; ++k) {
    sol.x[k] = k * h;
    sol.u[k] = uu;
    const double k1u = vv, k1v = acc(uu);
    const double k2u = vv + 0.5 * h * k1v, k2v = acc(uu + 0.5 * h * k1u);
    const double k3u = vv + 0.5 * h * k2v, k3v = acc(uu + 0.5 * h * k2u);
    const double k4u = vv + h * k3v, k4v = acc(uu + h * k3u);
    uu += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
    vv += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
  }
  return sol;
}

}  // namespace oracle
