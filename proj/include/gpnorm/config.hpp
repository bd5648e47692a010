#pragma once

// Run configuration: JSON in, validated struct out, canonical text back.
// Parsing reports every problem it can find in one pass rather than the
// first, and unknown keys are errors so a typo cannot silently disable an
// option. emit_config writes all defaults out explicitly; parse(emit(c))
// reproduces c exactly.

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "evolve.hpp"
#include "grid.hpp"
#include "model.hpp"

namespace gpnorm {

struct SolverOptions {
  int n = 200;            // grid resolution per axis
  double dt = 0.0;        // flow step; <= 0 picks it from lambda1
  double tol = 1e-9;
  long max_iter = 200000;
  bool operator==(const SolverOptions&) const = default;
};

struct EvolveSpec {
  std::string groundstate_file;  // artifact written by the groundstate subcommand
  double horizon = 1.0;
  double dt = 1e-3;
  Perturbation perturbation;
  bool operator==(const EvolveSpec&) const = default;
};

struct RegionSpec {
  int nx = 64, ny = 64;
  double xmax = 0.0, ymax = 0.0;  // 0: sized from the threshold value
  bool scaled_axes = true;
  bool operator==(const RegionSpec&) const = default;
};

struct RunConfig {
  Domain domain = Domain::interval(1.0);
  SystemParams params;
  MassPair masses;
  SolverOptions solver;
  std::optional<double> alpha;             // kinetic-ball radius for groundstate
  std::vector<double> betas;               // sweep-beta couplings, descending
  std::optional<EvolveSpec> evolve;
  std::optional<RegionSpec> region;
  std::optional<double> lambda1, lambda2;  // eigenvalue overrides for external domains
  bool operator==(const RunConfig&) const = default;
};

struct ParseResult {
  std::optional<RunConfig> config;  // engaged exactly when errors is empty
  std::vector<std::string> errors;
};

namespace detail {

inline const char* to_string(PerturbKind k) {
  switch (k) {
    case PerturbKind::RandomSmooth: return "random_smooth";
    case PerturbKind::SecondEigenfunction: return "second_eigenfunction";
    case PerturbKind::ComponentAsymmetric: return "component_asymmetric";
  }
  return "?";
}

inline std::optional<PerturbKind> perturb_kind_from(const std::string& s) {
  if (s == "random_smooth") return PerturbKind::RandomSmooth;
  if (s == "second_eigenfunction") return PerturbKind::SecondEigenfunction;
  if (s == "component_asymmetric") return PerturbKind::ComponentAsymmetric;
  return {};
}

// Pulls typed values out of a JSON object, accumulating errors instead of
// throwing, and remembers which keys were touched so the leftovers can be
// reported as unknown.
struct ObjReader {
  const nlohmann::json& obj;
  std::string path;
  std::vector<std::string>& errors;
  std::set<std::string> seen;

  std::string at(const char* key) const { return path.empty() ? key : path + "." + key; }

  template <class T>
  bool fetch(const char* key, T& out, bool required) {
    seen.insert(key);
    if (!obj.contains(key)) {
      if (required) errors.push_back("missing key '" + at(key) + "'");
      return false;
    }
    const nlohmann::json& v = obj[key];
    if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) return type_error(key, "a number");
      out = v.get<double>();
    } else if constexpr (std::is_same_v<T, int> || std::is_same_v<T, long>) {
      if (!v.is_number_integer()) return type_error(key, "an integer");
      out = v.get<T>();
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<long long>() < 0))
        return type_error(key, "a nonnegative integer");
      out = v.get<std::uint64_t>();
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) return type_error(key, "a boolean");
      out = v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) return type_error(key, "a string");
      out = v.get<std::string>();
    } else if constexpr (std::is_same_v<T, std::vector<double>>) {
      if (!v.is_array()) return type_error(key, "an array of numbers");
      out.clear();
      for (const auto& e : v) {
        if (!e.is_number()) return type_error(key, "an array of numbers");
        out.push_back(e.get<double>());
      }
    }
    return true;
  }

  bool type_error(const char* key, const char* want) {
    errors.push_back("key '" + at(key) + "' must be " + want);
    return false;
  }

  // Call after all fetches: any key not fetched is unknown.
  void finish() {
    for (auto it = obj.begin(); it != obj.end(); ++it)
      if (!seen.count(it.key())) errors.push_back("unknown key '" + at(it.key().c_str()) + "'");
  }
};

}  // namespace detail

inline ParseResult parse_config(const std::string& text) {
  ParseResult out;
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) {
    out.errors.push_back("config is not valid JSON");
    return out;
  }
  if (!j.is_object()) {
    out.errors.push_back("config must be a JSON object");
    return out;
  }
  auto& errors = out.errors;
  RunConfig c;

  detail::ObjReader top{j, "", errors, {}};

  // domain
  bool have_domain = false;
  top.seen.insert("domain");
  if (!j.contains("domain")) {
    errors.push_back("missing key 'domain'");
  } else if (!j["domain"].is_object()) {
    errors.push_back("key 'domain' must be an object");
  } else {
    const std::size_t errs_before = errors.size();
    detail::ObjReader d{j["domain"], "domain", errors, {}};
    std::string kind;
    if (d.fetch("kind", kind, true)) {
      if (kind == "interval") {
        double length = 0.0;
        if (d.fetch("length", length, true)) {
          if (length > 0.0)
            c.domain = Domain::interval(length);
          else
            errors.push_back("domain.length must be positive");
        }
      } else if (kind == "rectangle") {
        double w = 0.0, h = 0.0;
        bool ok = d.fetch("width", w, true);
        ok = d.fetch("height", h, true) && ok;
        if (ok) {
          if (w > 0.0 && h > 0.0)
            c.domain = Domain::rectangle(w, h);
          else
            errors.push_back("domain.width and domain.height must be positive");
        }
      } else if (kind == "radial_ball") {
        double radius = 0.0;
        int dim = 0;
        bool ok = d.fetch("radius", radius, true);
        ok = d.fetch("dim", dim, true) && ok;
        if (ok) {
          if (radius > 0.0 && dim >= 1)
            c.domain = Domain::radial_ball(radius, dim);
          else
            errors.push_back("domain.radius must be positive and domain.dim >= 1");
        }
      } else {
        errors.push_back("domain.kind must be one of interval, rectangle, radial_ball");
      }
    }
    d.finish();
    have_domain = errors.size() == errs_before;
  }

  // params
  top.seen.insert("params");
  bool have_params = false;
  if (!j.contains("params")) {
    errors.push_back("missing key 'params'");
  } else if (!j["params"].is_object()) {
    errors.push_back("key 'params' must be an object");
  } else {
    detail::ObjReader p{j["params"], "params", errors, {}};
    bool ok = p.fetch("N", c.params.N, true);
    ok = p.fetch("p", c.params.p, true) && ok;
    ok = p.fetch("mu1", c.params.mu1, true) && ok;
    ok = p.fetch("mu2", c.params.mu2, true) && ok;
    ok = p.fetch("beta", c.params.beta, true) && ok;
    p.finish();
    have_params = ok;
  }
  if (have_params) {
    try {
      validate(c.params);
    } catch (const std::invalid_argument& e) {
      errors.push_back(e.what());
      have_params = false;
    }
  }
  if (have_params && have_domain && c.params.N != c.domain.dim)
    errors.push_back("params.N must match the domain dimension (N=" +
                     std::to_string(c.params.N) + ", domain has dim " +
                     std::to_string(c.domain.dim) + ")");

  // masses
  top.seen.insert("masses");
  if (!j.contains("masses")) {
    errors.push_back("missing key 'masses'");
  } else if (!j["masses"].is_object()) {
    errors.push_back("key 'masses' must be an object");
  } else {
    detail::ObjReader m{j["masses"], "masses", errors, {}};
    bool ok = m.fetch("rho1", c.masses.rho1, true);
    ok = m.fetch("rho2", c.masses.rho2, true) && ok;
    m.finish();
    if (ok) {
      if (c.masses.rho1 < 0.0 || c.masses.rho2 < 0.0)
        errors.push_back("masses must satisfy rho1 >= 0 and rho2 >= 0");
      else if (c.masses.total() <= 0.0)
        errors.push_back("masses must satisfy rho1 + rho2 > 0");
    }
  }

  // solver (optional, defaults)
  top.seen.insert("solver");
  if (j.contains("solver")) {
    if (!j["solver"].is_object()) {
      errors.push_back("key 'solver' must be an object");
    } else {
      detail::ObjReader s{j["solver"], "solver", errors, {}};
      s.fetch("n", c.solver.n, false);
      s.fetch("dt", c.solver.dt, false);
      s.fetch("tol", c.solver.tol, false);
      s.fetch("max_iter", c.solver.max_iter, false);
      s.finish();
      if (c.solver.n < 2) errors.push_back("solver.n must be at least 2");
      if (!(c.solver.tol > 0.0)) errors.push_back("solver.tol must be positive");
      if (c.solver.max_iter < 1) errors.push_back("solver.max_iter must be at least 1");
    }
  }

  // alpha override
  top.seen.insert("alpha");
  if (j.contains("alpha")) {
    double a = 0.0;
    if (top.fetch("alpha", a, false)) {
      if (a > 0.0)
        c.alpha = a;
      else
        errors.push_back("alpha must be positive");
    }
  }

  // sweep couplings
  top.seen.insert("betas");
  if (j.contains("betas")) {
    std::vector<double> bs;
    if (top.fetch("betas", bs, false)) {
      if (bs.empty()) errors.push_back("betas must be a nonempty array");
      for (std::size_t k = 0; k < bs.size(); ++k) {
        if (!(bs[k] < 0.0)) {
          errors.push_back("betas must all be negative");
          break;
        }
        if (k > 0 && !(bs[k] < bs[k - 1])) {
          errors.push_back("betas must be strictly descending");
          break;
        }
      }
      c.betas = std::move(bs);
    }
  }

  // evolve block
  top.seen.insert("evolve");
  if (j.contains("evolve")) {
    if (!j["evolve"].is_object()) {
      errors.push_back("key 'evolve' must be an object");
    } else {
      detail::ObjReader e{j["evolve"], "evolve", errors, {}};
      EvolveSpec es;
      e.fetch("groundstate_file", es.groundstate_file, true);
      e.fetch("horizon", es.horizon, false);
      e.fetch("dt", es.dt, false);
      e.seen.insert("perturbation");
      if (j["evolve"].contains("perturbation")) {
        if (!j["evolve"]["perturbation"].is_object()) {
          errors.push_back("key 'evolve.perturbation' must be an object");
        } else {
          detail::ObjReader q{j["evolve"]["perturbation"], "evolve.perturbation", errors, {}};
          std::string kind = detail::to_string(es.perturbation.kind);
          q.fetch("kind", kind, false);
          q.fetch("size", es.perturbation.size, false);
          q.fetch("seed", es.perturbation.seed, false);
          q.finish();
          if (auto pk = detail::perturb_kind_from(kind))
            es.perturbation.kind = *pk;
          else
            errors.push_back("evolve.perturbation.kind must be one of random_smooth, "
                             "second_eigenfunction, component_asymmetric");
          if (es.perturbation.size < 0.0)
            errors.push_back("evolve.perturbation.size must be nonnegative");
        }
      }
      e.finish();
      if (es.groundstate_file.empty())
        errors.push_back("evolve.groundstate_file must name the groundstate artifact");
      if (!(es.horizon > 0.0)) errors.push_back("evolve.horizon must be positive");
      if (!(es.dt > 0.0)) errors.push_back("evolve.dt must be positive");
      c.evolve = std::move(es);
    }
  }

  // region block
  top.seen.insert("region");
  if (j.contains("region")) {
    if (!j["region"].is_object()) {
      errors.push_back("key 'region' must be an object");
    } else {
      detail::ObjReader r{j["region"], "region", errors, {}};
      RegionSpec rs;
      r.fetch("nx", rs.nx, false);
      r.fetch("ny", rs.ny, false);
      r.fetch("xmax", rs.xmax, false);
      r.fetch("ymax", rs.ymax, false);
      r.fetch("scaled_axes", rs.scaled_axes, false);
      r.finish();
      if (rs.nx < 2 || rs.ny < 2) errors.push_back("region.nx and region.ny must be at least 2");
      if (rs.xmax < 0.0 || rs.ymax < 0.0)
        errors.push_back("region.xmax and region.ymax must be nonnegative");
      c.region = rs;
    }
  }

  // eigenvalue overrides, both or neither
  top.seen.insert("lambda1");
  top.seen.insert("lambda2");
  {
    const bool h1 = j.contains("lambda1"), h2 = j.contains("lambda2");
    double l1 = 0.0, l2 = 0.0;
    bool ok = true;
    if (h1) ok = top.fetch("lambda1", l1, false) && ok;
    if (h2) ok = top.fetch("lambda2", l2, false) && ok;
    if (h1 != h2) {
      errors.push_back("lambda1 and lambda2 overrides must be given together");
    } else if (h1 && ok) {
      if (!(l1 > 0.0) || !(l2 >= l1))
        errors.push_back("eigenvalue overrides must satisfy 0 < lambda1 <= lambda2");
      c.lambda1 = l1;
      c.lambda2 = l2;
    }
  }

  top.finish();
  if (errors.empty()) out.config = std::move(c);
  return out;
}

inline std::string emit_config(const RunConfig& c) {
  nlohmann::json j;
  switch (c.domain.kind) {
    case DomainKind::Interval:
      j["domain"] = {{"kind", "interval"}, {"length", c.domain.ext0}};
      break;
    case DomainKind::Rectangle:
      j["domain"] = {{"kind", "rectangle"}, {"width", c.domain.ext0}, {"height", c.domain.ext1}};
      break;
    case DomainKind::RadialBall:
      j["domain"] = {{"kind", "radial_ball"}, {"radius", c.domain.ext0}, {"dim", c.domain.dim}};
      break;
  }
  j["params"] = {{"N", c.params.N},   {"p", c.params.p},       {"mu1", c.params.mu1},
                 {"mu2", c.params.mu2}, {"beta", c.params.beta}};
  j["masses"] = {{"rho1", c.masses.rho1}, {"rho2", c.masses.rho2}};
  j["solver"] = {{"n", c.solver.n},
                 {"dt", c.solver.dt},
                 {"tol", c.solver.tol},
                 {"max_iter", c.solver.max_iter}};
  if (c.alpha) j["alpha"] = *c.alpha;
  if (!c.betas.empty()) j["betas"] = c.betas;
  if (c.evolve) {
    j["evolve"] = {{"groundstate_file", c.evolve->groundstate_file},
                   {"horizon", c.evolve->horizon},
                   {"dt", c.evolve->dt},
                   {"perturbation",
                    {{"kind", detail::to_string(c.evolve->perturbation.kind)},
                     {"size", c.evolve->perturbation.size},
                     {"seed", c.evolve->perturbation.seed}}}};
  }
  if (c.region) {
    j["region"] = {{"nx", c.region->nx},
                   {"ny", c.region->ny},
                   {"xmax", c.region->xmax},
                   {"ymax", c.region->ymax},
                   {"scaled_axes", c.region->scaled_axes}};
  }
  if (c.lambda1) j["lambda1"] = *c.lambda1;
  if (c.lambda2) j["lambda2"] = *c.lambda2;
  return j.dump(2) + "\n";
}

}  // namespace gpnorm
