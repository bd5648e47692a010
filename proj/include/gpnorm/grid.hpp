#pragma once
// Uniform Dirichlet grids on intervals, axis-aligned rectangles, and balls
// reduced to their radial profile, plus the discrete Laplacian, quadrature,
// and the low generalized eigenpairs.
//
// Discretisation: interior nodes only, spacing h with h*(n+1) spanning each
// extent; boundary values are implicit zeros. The Laplacian is assembled in
// stiffness form, Delta = -W^{-1} K with K symmetric positive definite and
// W the diagonal quadrature weights. This makes <Delta f, g> = <f, Delta g>
// exact in the weighted inner product and kinetic(f) = <-Delta f, f> a true
// nonnegative quadratic form, which the flow and eigen solvers rely on.
//
// Radial grids use the conservative form (r^{N-1} f')'/r^{N-1} with a
// zero-flux closure at the origin (the even reflection f'(0)=0); the node
// nearest the origin owns the whole core cell, which keeps the stencil
// second-order accurate there. Quadrature weights are exact cell measures;
// the half cell hugging a Dirichlet wall belongs to the boundary node and
// carries no interior weight.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <memory>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "util.hpp"

namespace gpnorm {

enum class DomainKind { Interval, Rectangle, RadialBall };

inline const char* to_string(DomainKind k) {
  switch (k) {
    case DomainKind::Interval: return "interval";
    case DomainKind::Rectangle: return "rectangle";
    case DomainKind::RadialBall: return "radial_ball";
  }
  return "?";
}

// Surface measure of the unit sphere in R^N.
inline double sphere_area(int N) {
  // |S^{N-1}| = 2 pi^{N/2} / Gamma(N/2)
  const double pi = 3.14159265358979323846264338328;
  return 2.0 * std::pow(pi, 0.5 * N) / std::tgamma(0.5 * N);
}

struct Domain {
  DomainKind kind = DomainKind::Interval;
  int dim = 1;          // ambient dimension N
  double ext0 = 1.0;    // length | Lx | radius
  double ext1 = 0.0;    // Ly for rectangles

  bool operator==(const Domain&) const = default;

  static Domain interval(double length) {
    if (!(length > 0.0)) throw std::invalid_argument("Domain: length must be positive");
    return Domain{DomainKind::Interval, 1, length, 0.0};
  }
  static Domain rectangle(double lx, double ly) {
    if (!(lx > 0.0) || !(ly > 0.0)) throw std::invalid_argument("Domain: sides must be positive");
    return Domain{DomainKind::Rectangle, 2, lx, ly};
  }
  static Domain radial_ball(double radius, int N) {
    if (!(radius > 0.0)) throw std::invalid_argument("Domain: radius must be positive");
    if (N < 1) throw std::invalid_argument("Domain: ball dimension must be >= 1");
    return Domain{DomainKind::RadialBall, N, radius, 0.0};
  }

  double measure() const {
    switch (kind) {
      case DomainKind::Interval: return ext0;
      case DomainKind::Rectangle: return ext0 * ext1;
      case DomainKind::RadialBall: return sphere_area(dim) * std::pow(ext0, dim) / dim;
    }
    return 0.0;
  }

  std::string describe() const {
    std::ostringstream os;
    os << to_string(kind) << " dim=" << dim << " ext0=" << fmt_full(ext0);
    if (kind == DomainKind::Rectangle) os << " ext1=" << fmt_full(ext1);
    return os.str();
  }
};

namespace detail {

// All mesh data lives here; Grid is a cheap shared handle so Fields can copy
// their grid by value and outlive the builder.
struct GridData {
  Domain dom;
  int n = 0;          // interior nodes per axis
  double hx = 0.0, hy = 0.0;
  bool two_d = false;

  // 1D / radial: node coordinates and edge conductances. Edge e in [0, n]
  // joins node e and node e+1 (0 and n+1 denote the walls). cond[e] = 0
  // encodes the missing edge at a radial origin.
  std::vector<double> coord_x;   // size n
  std::vector<double> cond_x;    // size n+1
  std::vector<double> wx;        // per-axis weights, size n

  // second axis for rectangles
  std::vector<double> coord_y, cond_y, wy;

  std::vector<double> w;         // quadrature weight per interior node (flattened)

  std::size_t num_nodes() const { return two_d ? std::size_t(n) * n : std::size_t(n); }
  std::size_t idx(int i, int j) const { return std::size_t(j) * n + i; }  // row-major in y
};

}  // namespace detail

class Grid {
 public:
  Grid() = default;
  explicit Grid(std::shared_ptr<const detail::GridData> d) : d_(std::move(d)) {}

  bool valid() const { return bool(d_); }
  const Domain& domain() const { return data().dom; }
  int n() const { return data().n; }
  double h(int axis = 0) const { return axis == 0 ? data().hx : data().hy; }
  std::size_t num_nodes() const { return data().num_nodes(); }
  std::span<const double> quad_weights() const { return data().w; }

  // identity comparison: fields interoperate only on the same mesh object
  bool same_as(const Grid& o) const { return d_ == o.d_; }

  const detail::GridData& data() const {
    if (!d_) throw std::logic_error("Grid: empty handle");
    return *d_;
  }

 private:
  std::shared_ptr<const detail::GridData> d_;
};

// n interior nodes per axis, n >= 3; h*(n+1) spans each extent.
inline Grid build_grid(const Domain& dom, int n) {
  if (n < 3) throw std::invalid_argument("build_grid: need n >= 3 interior nodes per axis");
  auto g = std::make_shared<detail::GridData>();
  g->dom = dom;
  g->n = n;
  switch (dom.kind) {
    case DomainKind::Interval: {
      const double h = dom.ext0 / (n + 1);
      g->hx = g->hy = h;
      g->coord_x.resize(n);
      for (int i = 0; i < n; ++i) g->coord_x[i] = (i + 1) * h;
      g->cond_x.assign(n + 1, 1.0 / h);
      g->wx.assign(n, h);
      g->w = g->wx;
      break;
    }
    case DomainKind::Rectangle: {
      g->two_d = true;
      const double hx = dom.ext0 / (n + 1), hy = dom.ext1 / (n + 1);
      g->hx = hx; g->hy = hy;
      g->coord_x.resize(n); g->coord_y.resize(n);
      for (int i = 0; i < n; ++i) g->coord_x[i] = (i + 1) * hx;
      for (int j = 0; j < n; ++j) g->coord_y[j] = (j + 1) * hy;
      g->cond_x.assign(n + 1, 1.0 / hx);
      g->cond_y.assign(n + 1, 1.0 / hy);
      g->wx.assign(n, hx);
      g->wy.assign(n, hy);
      g->w.resize(std::size_t(n) * n);
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) g->w[g->idx(i, j)] = hx * hy;
      break;
    }
    case DomainKind::RadialBall: {
      const int N = dom.dim;
      const double R = dom.ext0;
      const double h = R / (n + 1);
      const double sig = sphere_area(N);
      g->hx = g->hy = h;
      g->coord_x.resize(n);
      for (int i = 0; i < n; ++i) g->coord_x[i] = (i + 1) * h;
      // faces at r_{i+1/2} = (i + 1/2) h ; no flux through the origin face
      g->cond_x.assign(n + 1, 0.0);
      for (int e = 1; e <= n; ++e) {
        const double rf = (e + 0.5) * h;
        g->cond_x[e] = sig * std::pow(rf, N - 1) / h;
      }
      // exact cell measures: node 1 owns [0, r_{3/2}], node n owns
      // [r_{n-1/2}, r_{n+1/2}]; the wall shell [r_{n+1/2}, R] has value 0.
      g->wx.resize(n);
      auto ball = [&](double r) { return sig * std::pow(r, N) / N; };
      for (int i = 0; i < n; ++i) {
        const double lo = (i == 0) ? 0.0 : (i + 0.5) * h;
        const double hi = (i + 1.5) * h;
        g->wx[i] = ball(hi) - ball(lo);
      }
      g->w = g->wx;
      break;
    }
  }
  return Grid(g);
}

template <class T>
struct Field {
  Grid grid;
  std::vector<T> v;

  Field() = default;
  explicit Field(const Grid& g, T fill = T{}) : grid(g), v(g.num_nodes(), fill) {}

  std::size_t size() const { return v.size(); }
  T& operator[](std::size_t i) { return v[i]; }
  const T& operator[](std::size_t i) const { return v[i]; }
};

using RealField = Field<double>;
using ComplexField = Field<std::complex<double>>;

namespace detail {
inline void require_same_grid(const Grid& a, const Grid& b, const char* who) {
  if (!a.same_as(b)) throw std::invalid_argument(std::string(who) + ": fields live on different grids");
}
}  // namespace detail

// ---- quadrature -----------------------------------------------------------

template <class T>
T inner_l2(const Field<T>& f, const Field<T>& g) {
  detail::require_same_grid(f.grid, g.grid, "inner_l2");
  const auto& w = f.grid.data().w;
  T acc{};
  if constexpr (std::is_same_v<T, std::complex<double>>) {
    for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * f.v[i] * std::conj(g.v[i]);
  } else {
    for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * f.v[i] * g.v[i];
  }
  return acc;
}

template <class T>
double mass(const Field<T>& f) {
  const auto& w = f.grid.data().w;
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * std::norm(f.v[i]);
  return acc;
}

inline double mass(const RealField& f) {
  const auto& w = f.grid.data().w;
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * f.v[i] * f.v[i];
  return acc;
}

// integral of an arbitrary nodal integrand against the quadrature weights
inline double integrate(const Grid& g, const std::vector<double>& vals) {
  const auto& w = g.data().w;
  if (vals.size() != w.size()) throw std::invalid_argument("integrate: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * vals[i];
  return acc;
}

// ---- Laplacian ------------------------------------------------------------

// Delta f with implicit zero boundary values (and zero flux through a radial
// origin). Returns the W-self-adjoint finite-volume operator described in the
// header comment; on uniform axes it coincides with the classic central
// stencil at every node.
template <class T>
Field<T> laplacian_apply(const Field<T>& f) {
  const auto& gd = f.grid.data();
  Field<T> out(f.grid);
  const int n = gd.n;
  if (!gd.two_d) {
    const auto& c = gd.cond_x;
    for (int i = 0; i < n; ++i) {
      const T fl = (i > 0) ? f.v[i - 1] : T{};
      const T fr = (i + 1 < n) ? f.v[i + 1] : T{};
      T acc = c[i + 1] * (fr - f.v[i]);
      if (c[i] != 0.0) acc -= c[i] * (f.v[i] - fl);
      out.v[i] = acc / gd.w[i];
    }
  } else {
    const auto& cx = gd.cond_x;
    const auto& cy = gd.cond_y;
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        const std::size_t k = gd.idx(i, j);
        const T fc = f.v[k];
        const T fxl = (i > 0) ? f.v[k - 1] : T{};
        const T fxr = (i + 1 < n) ? f.v[k + 1] : T{};
        const T fyl = (j > 0) ? f.v[k - n] : T{};
        const T fyr = (j + 1 < n) ? f.v[k + n] : T{};
        T acc = gd.wy[j] * (cx[i + 1] * (fxr - fc) - cx[i] * (fc - fxl)) +
                gd.wx[i] * (cy[j + 1] * (fyr - fc) - cy[j] * (fc - fyl));
        out.v[k] = acc / gd.w[k];
      }
    }
  }
  return out;
}

// kinetic(f) = integral of |grad f|^2, evaluated as the stiffness form
// <-Delta f, f>; nonnegative by construction.
template <class T>
double kinetic(const Field<T>& f) {
  const auto& gd = f.grid.data();
  const int n = gd.n;
  double acc = 0.0;
  if (!gd.two_d) {
    const auto& c = gd.cond_x;
    for (int e = 0; e <= n; ++e) {
      if (c[e] == 0.0) continue;
      const T a = (e > 0) ? f.v[e - 1] : T{};
      const T b = (e < n) ? f.v[e] : T{};
      acc += c[e] * std::norm(b - a);
    }
  } else {
    const auto& cx = gd.cond_x;
    const auto& cy = gd.cond_y;
    for (int j = 0; j < n; ++j)
      for (int e = 0; e <= n; ++e) {
        const T a = (e > 0) ? f.v[gd.idx(e - 1, j)] : T{};
        const T b = (e < n) ? f.v[gd.idx(e, j)] : T{};
        acc += gd.wy[j] * cx[e] * std::norm(b - a);
      }
    for (int i = 0; i < n; ++i)
      for (int e = 0; e <= n; ++e) {
        const T a = (e > 0) ? f.v[gd.idx(i, e - 1)] : T{};
        const T b = (e < n) ? f.v[gd.idx(i, e)] : T{};
        acc += gd.wx[i] * cy[e] * std::norm(b - a);
      }
  }
  return acc;
}

// H1 pairing sum over edges of cond * (df)(conj dg); real part is the
// gradient inner product. Used by the orbit distance.
inline std::complex<double> kinetic_pairing(const ComplexField& f, const ComplexField& g) {
  detail::require_same_grid(f.grid, g.grid, "kinetic_pairing");
  const auto& gd = f.grid.data();
  const int n = gd.n;
  std::complex<double> acc{};
  auto edge = [&](std::complex<double> fa, std::complex<double> fb, std::complex<double> ga,
                  std::complex<double> gb, double c) { acc += c * (fb - fa) * std::conj(gb - ga); };
  if (!gd.two_d) {
    for (int e = 0; e <= n; ++e) {
      if (gd.cond_x[e] == 0.0) continue;
      edge(e > 0 ? f.v[e - 1] : 0.0, e < n ? f.v[e] : 0.0, e > 0 ? g.v[e - 1] : 0.0,
           e < n ? g.v[e] : 0.0, gd.cond_x[e]);
    }
  } else {
    for (int j = 0; j < n; ++j)
      for (int e = 0; e <= n; ++e)
        edge(e > 0 ? f.v[gd.idx(e - 1, j)] : 0.0, e < n ? f.v[gd.idx(e, j)] : 0.0,
             e > 0 ? g.v[gd.idx(e - 1, j)] : 0.0, e < n ? g.v[gd.idx(e, j)] : 0.0,
             gd.wy[j] * gd.cond_x[e]);
    for (int i = 0; i < n; ++i)
      for (int e = 0; e <= n; ++e)
        edge(e > 0 ? f.v[gd.idx(i, e - 1)] : 0.0, e < n ? f.v[gd.idx(i, e)] : 0.0,
             e > 0 ? g.v[gd.idx(i, e - 1)] : 0.0, e < n ? g.v[gd.idx(i, e)] : 0.0,
             gd.wx[i] * gd.cond_y[e]);
  }
  return acc;
}

// ---- eigenpairs -----------------------------------------------------------

struct EigenPair {
  double lambda = 0.0;
  RealField phi;  // unit mass
};

namespace detail {

// Generalized symmetric tridiagonal problem K phi = lambda W phi.
// kd/ko: stiffness diagonal and off-diagonal, w: weights.
struct Tridiag1D {
  std::vector<double> kd, ko, w;
};

inline Tridiag1D axis_problem(const GridData& gd, int axis) {
  const auto& c = (axis == 0) ? gd.cond_x : gd.cond_y;
  const auto& w = (axis == 0) ? gd.wx : gd.wy;
  const int n = gd.n;
  Tridiag1D t;
  t.kd.resize(n);
  t.ko.resize(n - 1);
  t.w = w;
  for (int i = 0; i < n; ++i) t.kd[i] = c[i] + c[i + 1];
  for (int i = 0; i + 1 < n; ++i) t.ko[i] = -c[i + 1];
  return t;
}

// Thomas solve of (kd + shift*w) x = b with off-diagonal ko; the matrix must
// be SPD, which holds for shift > -lambda_1.
inline void tridiag_solve(const std::vector<double>& kd, const std::vector<double>& ko,
                          const std::vector<double>& w, double shift, std::vector<double>& x,
                          const std::vector<double>& b) {
  const std::size_t n = kd.size();
  static thread_local std::vector<double> cp, dp;
  cp.assign(n, 0.0);
  dp.assign(n, 0.0);
  double diag0 = kd[0] + shift * w[0];
  cp[0] = (n > 1) ? ko[0] / diag0 : 0.0;
  dp[0] = b[0] / diag0;
  for (std::size_t i = 1; i < n; ++i) {
    const double m = (kd[i] + shift * w[i]) - ko[i - 1] * cp[i - 1];
    if (i + 1 < n) cp[i] = ko[i] / m;
    dp[i] = (b[i] - ko[i - 1] * dp[i - 1]) / m;
  }
  x.resize(n);
  x[n - 1] = dp[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) x[i] = dp[i] - cp[i] * x[i + 1];
}

// Smallest k eigenpairs by shift-and-invert power iteration (shift 0) with
// W-orthogonal deflation against the converged pairs. Deterministic start:
// a golden-ratio ramp, which overlaps every mode (the all-ones vector is
// exactly orthogonal to the antisymmetric ones). Stops on the equation
// residual, so the vectors are accurate, not just the values.
inline void eig_tridiag_smallest(const Tridiag1D& t, int k, std::vector<double>& lambdas,
                                 std::vector<std::vector<double>>& vecs) {
  const std::size_t n = t.kd.size();
  lambdas.clear();
  vecs.clear();
  auto wdot = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += t.w[i] * a[i] * b[i];
    return s;
  };
  auto kform = [&](const std::vector<double>& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += t.kd[i] * a[i] * a[i];
    for (std::size_t i = 0; i + 1 < n; ++i) s += 2.0 * t.ko[i] * a[i] * a[i + 1];
    return s;
  };
  auto deflate = [&](std::vector<double>& x) {
    for (const auto& v : vecs) {
      const double c = wdot(x, v);
      for (std::size_t i = 0; i < n; ++i) x[i] -= c * v[i];
    }
  };
  auto residual = [&](const std::vector<double>& x, double lam) {
    // || W^{-1} K x - lam x ||_W for a W-normalized x
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double kx = t.kd[i] * x[i];
      if (i > 0) kx += t.ko[i - 1] * x[i - 1];
      if (i + 1 < n) kx += t.ko[i] * x[i + 1];
      const double r = kx / t.w[i] - lam * x[i];
      s += t.w[i] * r * r;
    }
    return std::sqrt(s);
  };
  // Gershgorin bound on the spectrum of W^{-1}K: the attainable residual is
  // limited to roundoff times this scale (~1/h^2), so the stopping rule must
  // not ask for less.
  double gersh = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = std::fabs(t.kd[i]);
    if (i > 0) row += std::fabs(t.ko[i - 1]);
    if (i + 1 < n) row += std::fabs(t.ko[i]);
    gersh = std::max(gersh, row / t.w[i]);
  }
  const double eps = std::numeric_limits<double>::epsilon();
  const double golden = 0.61803398874989484820458683437;
  for (int m = 0; m < k; ++m) {
    std::vector<double> x(n), b(n), y;
    for (std::size_t i = 0; i < n; ++i) x[i] = 1.0 + golden * double(i + 1) / double(n);
    deflate(x);
    double nrm = std::sqrt(wdot(x, x));
    if (!(nrm > 0)) throw std::runtime_error("eigensolver: start vector deflated to zero");
    for (auto& xi : x) xi /= nrm;
    double lam = 0.0;
    double res = 1e300;
    int it = 0;
    const int max_it = 20000;
    for (; it < max_it; ++it) {
      for (std::size_t i = 0; i < n; ++i) b[i] = t.w[i] * x[i];
      tridiag_solve(t.kd, t.ko, t.w, 0.0, y, b);
      deflate(y);
      deflate(y);  // twice: keeps orthogonality at roundoff level
      nrm = std::sqrt(wdot(y, y));
      if (!(nrm > 0)) throw std::runtime_error("eigensolver: iterate collapsed");
      for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / nrm;
      lam = kform(x);  // Rayleigh quotient, W-normalized x
      res = residual(x, lam);
      if (res <= std::max(1e-11 * std::max(1.0, std::fabs(lam)), 32.0 * eps * gersh)) break;
    }
    if (it == max_it) {
      std::ostringstream os;
      os << "eigensolver: no convergence for pair " << (m + 1) << ", residual " << res;
      throw std::runtime_error(os.str());
    }
    lambdas.push_back(lam);
    vecs.push_back(x);
  }
}

}  // namespace detail

// Low Dirichlet eigenpairs, ordered by eigenvalue. phi_1 is strictly
// positive; the sign of later pairs puts the larger-mass nodal part on the
// positive side (first-node sign breaks exact ties). Rectangles combine the
// per-axis problems: every product mode phi_i^x phi_j^y is an exact discrete
// eigenvector with eigenvalue lambda_i^x + lambda_j^y, so the 2D spectrum is
// assembled from the two tridiagonal solves; ties are ordered by (i, j).
inline std::vector<EigenPair> principal_eigenpairs(const Grid& grid, int k) {
  if (k < 1) throw std::invalid_argument("principal_eigenpairs: k >= 1 required");
  const auto& gd = grid.data();
  if (std::size_t(k) > gd.num_nodes())
    throw std::invalid_argument("principal_eigenpairs: k exceeds grid size");
  std::vector<EigenPair> out;
  auto fix_signs = [&](std::vector<EigenPair>& ps) {
    for (std::size_t m = 0; m < ps.size(); ++m) {
      auto& f = ps[m].phi;
      if (m == 0) {
        std::size_t imax = 0;
        for (std::size_t i = 1; i < f.v.size(); ++i)
          if (std::fabs(f.v[i]) > std::fabs(f.v[imax])) imax = i;
        if (f.v[imax] < 0)
          for (auto& x : f.v) x = -x;
      } else {
        double mp = 0.0, mn = 0.0;
        const auto& w = f.grid.data().w;
        for (std::size_t i = 0; i < f.v.size(); ++i) {
          const double s = w[i] * f.v[i] * f.v[i];
          (f.v[i] > 0 ? mp : mn) += s;
        }
        const bool flip = (mn > mp + 1e-14 * (mp + mn)) ||
                          (std::fabs(mn - mp) <= 1e-14 * (mp + mn) && f.v[0] < 0);
        if (flip)
          for (auto& x : f.v) x = -x;
      }
    }
  };

  if (!gd.two_d) {
    auto t = detail::axis_problem(gd, 0);
    std::vector<double> lams;
    std::vector<std::vector<double>> vecs;
    detail::eig_tridiag_smallest(t, k, lams, vecs);
    for (int m = 0; m < k; ++m) {
      EigenPair p;
      p.lambda = lams[m];
      p.phi = RealField(grid);
      p.phi.v = vecs[m];
      out.push_back(std::move(p));
    }
  } else {
    const int kk = std::min(gd.n, k + 1);
    auto tx = detail::axis_problem(gd, 0);
    auto ty = detail::axis_problem(gd, 1);
    std::vector<double> lx, ly;
    std::vector<std::vector<double>> vx, vy;
    detail::eig_tridiag_smallest(tx, kk, lx, vx);
    detail::eig_tridiag_smallest(ty, kk, ly, vy);
    struct Mode {
      double lam;
      int i, j;
    };
    std::vector<Mode> modes;
    for (int i = 0; i < kk; ++i)
      for (int j = 0; j < kk; ++j) modes.push_back({lx[i] + ly[j], i, j});
    std::sort(modes.begin(), modes.end(), [](const Mode& a, const Mode& b) {
      if (a.lam != b.lam) return a.lam < b.lam;
      if (a.i != b.i) return a.i < b.i;
      return a.j < b.j;
    });
    for (int m = 0; m < k; ++m) {
      EigenPair p;
      p.lambda = modes[m].lam;
      p.phi = RealField(grid);
      const auto& ux = vx[modes[m].i];
      const auto& uy = vy[modes[m].j];
      for (int j = 0; j < gd.n; ++j)
        for (int i = 0; i < gd.n; ++i) p.phi.v[gd.idx(i, j)] = ux[i] * uy[j];
      out.push_back(std::move(p));
    }
  }
  fix_signs(out);
  return out;
}

// ---- implicit solves used by the flow and the propagator ------------------

// Solve (W + a K) x = W rhs + (optional) extra diagonal term; concretely the
// flow needs (I - dt Delta + dt s) u = rhs with s a nodal shift, i.e.
// (W (1 + dt s) + dt K) u = W rhs.
template <class T>
Field<T> solve_identity_minus_laplacian(const Field<T>& rhs, double a, double shift) {
  const auto& gd = rhs.grid.data();
  const int n = gd.n;
  Field<T> out(rhs.grid);
  if (!gd.two_d) {
    // symmetric tridiagonal (W(1+a*shift) + a K), complex-safe Thomas
    static thread_local std::vector<T> cp, dp;
    std::vector<double> diag(n);
    const auto& c = gd.cond_x;
    for (int i = 0; i < n; ++i) diag[i] = gd.w[i] * (1.0 + a * shift) + a * (c[i] + c[i + 1]);
    cp.assign(n, T{});
    dp.assign(n, T{});
    auto off = [&](int e) { return -a * gd.cond_x[e + 1]; };  // between node e,e+1
    T d0 = diag[0];
    cp[0] = (n > 1) ? T(off(0)) / d0 : T{};
    dp[0] = gd.w[0] * rhs.v[0] / d0;
    for (int i = 1; i < n; ++i) {
      const T m = diag[i] - T(off(i - 1)) * cp[i - 1];
      if (i + 1 < n) cp[i] = T(off(i)) / m;
      dp[i] = (gd.w[i] * rhs.v[i] - T(off(i - 1)) * dp[i - 1]) / m;
    }
    out.v[n - 1] = dp[n - 1];
    for (int i = n - 1; i-- > 0;) out.v[i] = dp[i] - cp[i] * out.v[i + 1];
  } else {
    // conjugate gradients on the SPD system; deterministic iteration
    const std::size_t sz = gd.num_nodes();
    std::vector<T> x(sz, T{}), r(sz), p(sz), ap(sz);
    auto apply = [&](const std::vector<T>& u, std::vector<T>& res) {
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
          const std::size_t idx = gd.idx(i, j);
          const T uc = u[idx];
          const T uxl = (i > 0) ? u[idx - 1] : T{};
          const T uxr = (i + 1 < n) ? u[idx + 1] : T{};
          const T uyl = (j > 0) ? u[idx - n] : T{};
          const T uyr = (j + 1 < n) ? u[idx + n] : T{};
          T kx = gd.wy[j] * (gd.cond_x[i] * (uc - uxl) + gd.cond_x[i + 1] * (uc - uxr));
          T ky = gd.wx[i] * (gd.cond_y[j] * (uc - uyl) + gd.cond_y[j + 1] * (uc - uyr));
          res[idx] = gd.w[idx] * (1.0 + a * shift) * uc + a * (kx + ky);
        }
    };
    double bnorm = 0.0;
    for (std::size_t i = 0; i < sz; ++i) {
      r[i] = gd.w[i] * rhs.v[i];
      bnorm += std::norm(r[i]);
    }
    bnorm = std::sqrt(bnorm);
    if (bnorm == 0.0) return out;
    p = r;
    double rs = 0.0;
    for (std::size_t i = 0; i < sz; ++i) rs += std::norm(r[i]);
    for (int it = 0; it < 4000; ++it) {
      apply(p, ap);
      std::complex<double> pap{};
      if constexpr (std::is_same_v<T, std::complex<double>>) {
        for (std::size_t i = 0; i < sz; ++i) pap += std::conj(p[i]) * ap[i];
      } else {
        double s = 0.0;
        for (std::size_t i = 0; i < sz; ++i) s += p[i] * ap[i];
        pap = s;
      }
      const double alpha = rs / pap.real();
      for (std::size_t i = 0; i < sz; ++i) {
        x[i] += alpha * p[i];
        r[i] -= alpha * ap[i];
      }
      double rs2 = 0.0;
      for (std::size_t i = 0; i < sz; ++i) rs2 += std::norm(r[i]);
      if (std::sqrt(rs2) <= 1e-14 * bnorm) break;
      const double beta = rs2 / rs;
      rs = rs2;
      for (std::size_t i = 0; i < sz; ++i) p[i] = r[i] + beta * p[i];
    }
    out.v = std::move(x);
  }
  return out;
}

// ---- serialization --------------------------------------------------------

// CSV layout: three header lines (domain descriptor, n, h), then one value
// per line (real) or "re,im" (complex), nodes in storage order.
inline std::string field_to_csv(const RealField& f) {
  std::ostringstream os;
  const auto& gd = f.grid.data();
  os << "# domain," << gd.dom.describe() << "\n";
  os << "# n," << gd.n << "\n";
  os << "# h," << fmt_full(gd.hx);
  if (gd.two_d) os << "," << fmt_full(gd.hy);
  os << "\n";
  for (double x : f.v) os << fmt_full(x) << "\n";
  return os.str();
}

inline RealField field_from_csv(const Grid& grid, const std::string& text) {
  RealField f(grid);
  std::istringstream is(text);
  std::string line;
  std::size_t i = 0;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (i >= f.v.size()) throw std::invalid_argument("field_from_csv: too many values for grid");
    f.v[i++] = std::stod(line);
  }
  if (i != f.v.size()) throw std::invalid_argument("field_from_csv: too few values for grid");
  return f;
}

}  // namespace gpnorm
