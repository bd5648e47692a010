#pragma once

// Orchestration behind the command-line tool. Each run owns an output
// directory: it writes the subcommand's artifacts there plus a manifest
// echoing the config, versions, the effective seed, anything flagged, and
// the wall time. All numeric output goes through shortest-round-trip
// formatting, so a fixed config and seed reproduce every CSV byte for byte;
// the manifest alone carries the timing and is excluded from such
// comparisons. Non-convergence and blow-ups are flagged, not thrown, and
// turn into exit status 2 unless partial results were allowed.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "constants.hpp"
#include "evolve.hpp"
#include "grid.hpp"
#include "minimize.hpp"
#include "model.hpp"
#include "segregation.hpp"
#include "thresholds.hpp"
#include "util.hpp"

namespace gpnorm {

inline constexpr const char* toolkit_version = "0.1.0";

enum class Subcommand { constants, thresholds, groundstate, evolve, sweep_beta, region };

inline const char* to_string(Subcommand c) {
  switch (c) {
    case Subcommand::constants: return "constants";
    case Subcommand::thresholds: return "thresholds";
    case Subcommand::groundstate: return "groundstate";
    case Subcommand::evolve: return "evolve";
    case Subcommand::sweep_beta: return "sweep-beta";
    case Subcommand::region: return "region";
  }
  return "?";
}

inline std::optional<Subcommand> subcommand_from(const std::string& s) {
  if (s == "constants") return Subcommand::constants;
  if (s == "thresholds") return Subcommand::thresholds;
  if (s == "groundstate") return Subcommand::groundstate;
  if (s == "evolve") return Subcommand::evolve;
  if (s == "sweep-beta") return Subcommand::sweep_beta;
  if (s == "region") return Subcommand::region;
  return {};
}

struct RunFlags {
  std::optional<std::uint64_t> seed;  // overrides the config's perturbation seed
  bool allow_partial = false;         // flagged runs still exit 0
};

namespace detail {

inline void write_text(const std::filesystem::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + file.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("write failed for " + file.string());
}

// Rows of doubles under a fixed header; '.' decimal point, shortest text
// that parses back to the identical value.
struct CsvTable {
  std::ostringstream body;

  explicit CsvTable(std::initializer_list<const char*> cols) {
    bool first = true;
    for (const char* c : cols) {
      if (!first) body << ',';
      body << c;
      first = false;
    }
    body << '\n';
  }

  void row(std::initializer_list<double> vals) {
    bool first = true;
    for (double v : vals) {
      if (!first) body << ',';
      body << fmt_full(v);
      first = false;
    }
    body << '\n';
  }

  void save(const std::filesystem::path& file) const { write_text(file, body.str()); }
};

inline const char* regime_name(Regime r) {
  switch (r) {
    case Regime::Subcritical: return "subcritical";
    case Regime::MassCritical: return "mass_critical";
    case Regime::Intercritical: return "intercritical";
    case Regime::SobolevCritical: return "sobolev_critical";
  }
  return "?";
}

inline nlohmann::json domain_json(const Domain& d) {
  switch (d.kind) {
    case DomainKind::Interval: return {{"kind", "interval"}, {"length", d.ext0}};
    case DomainKind::Rectangle:
      return {{"kind", "rectangle"}, {"width", d.ext0}, {"height", d.ext1}};
    case DomainKind::RadialBall:
      return {{"kind", "radial_ball"}, {"radius", d.ext0}, {"dim", d.dim}};
  }
  return {};
}

inline nlohmann::json params_json(const SystemParams& sp) {
  return {{"N", sp.N}, {"p", sp.p}, {"mu1", sp.mu1}, {"mu2", sp.mu2}, {"beta", sp.beta}};
}

// The two lowest Dirichlet eigenvalues entering every threshold formula:
// the overrides when the config names an external domain, the grid's
// otherwise.
inline std::pair<double, double> domain_eigs(const RunConfig& cfg) {
  if (cfg.lambda1) return {*cfg.lambda1, *cfg.lambda2};
  Grid g = build_grid(cfg.domain, cfg.solver.n);
  const auto ep = principal_eigenpairs(g, 2);
  return {ep[0].lambda, ep[1].lambda};
}

inline FlowOptions flow_options(const RunConfig& cfg) {
  FlowOptions fo;
  fo.dt = cfg.solver.dt;
  fo.tol = cfg.solver.tol;
  fo.max_iter = cfg.solver.max_iter;
  return fo;
}

inline nlohmann::json opt_json(const std::optional<double>& v) {
  if (v && std::isfinite(*v)) return *v;
  return nullptr;
}

inline void run_constants(const RunConfig& cfg, const std::filesystem::path& out) {
  ConstantsTable tab;
  const auto [l1, l2] = domain_eigs(cfg);
  const Exponents e = exponents(cfg.params.N, cfg.params.p);
  const double C = gn_constant(tab, cfg.params.N, cfg.params.p);
  const double L = lambda_capital(tab, cfg.params, cfg.masses);
  const double Lp = lambda_prime(tab, cfg.params, cfg.masses);
  CsvTable t{"N", "p", "a", "r", "C", "lambda1", "lambda2", "Lambda", "LambdaPrime"};
  t.row({double(cfg.params.N), cfg.params.p, e.a, e.r, C, l1, l2, L, Lp});
  t.save(out / "constants.csv");
}

inline void run_thresholds(const RunConfig& cfg, const std::filesystem::path& out) {
  ConstantsTable tab;
  const auto [l1, l2] = domain_eigs(cfg);
  const ThresholdReport rep = check_supercritical(tab, cfg.params, cfg.masses, l1, l2);
  nlohmann::json j;
  j["regime"] = regime_name(rep.regime);
  j["a"] = rep.a;
  j["r"] = rep.r;
  j["C"] = rep.C;
  j["lambda1"] = rep.lambda1;
  j["lambda2"] = rep.lambda2;
  j["Lambda"] = rep.Lambda;
  j["LambdaPrime"] = rep.LambdaPrime;
  j["budget_R"] = rep.budget_R;
  j["j"] = rep.j;
  j["bar_alpha"] = opt_json(rep.bar_alpha);
  j["all_passed"] = rep.all_passed();
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : rep.checks)
    checks.push_back({{"name", c.name}, {"passed", c.passed}, {"margin", c.margin}});
  j["checks"] = checks;
  write_text(out / "thresholds.json", j.dump(2) + "\n");
}

inline void run_groundstate(const RunConfig& cfg, const std::filesystem::path& out,
                            std::vector<std::string>& flagged) {
  Grid g = build_grid(cfg.domain, cfg.solver.n);
  ConstraintSpec spec{cfg.masses, cfg.alpha ? std::optional<double>(*cfg.alpha) : std::nullopt};
  const GroundStateResult gs = normalized_gradient_flow(
      cfg.params, g, spec, initial_guess(InitKind::eigen1, cfg.masses, g), flow_options(cfg));
  if (!gs.converged) flagged.push_back("groundstate: flow did not converge");
  if (gs.boundary_hit) flagged.push_back("groundstate: kinetic ball boundary was hit");

  nlohmann::json j;
  j["domain"] = domain_json(cfg.domain);
  j["n"] = cfg.solver.n;
  j["params"] = params_json(cfg.params);
  j["masses"] = {{"rho1", cfg.masses.rho1}, {"rho2", cfg.masses.rho2}};
  j["alpha"] = opt_json(cfg.alpha);
  j["omega1"] = opt_json(gs.omega1);
  j["omega2"] = opt_json(gs.omega2);
  j["energy"] = gs.energy;
  j["kinetic_total"] = gs.kinetic_total;
  j["converged"] = gs.converged;
  j["boundary_hit"] = gs.boundary_hit;
  j["iterations"] = gs.iterations;
  j["residual"] = std::isfinite(gs.residual) ? nlohmann::json(gs.residual) : nullptr;
  j["dt_final"] = gs.dt_final;
  j["u1"] = gs.u1.v;
  j["u2"] = gs.u2.v;
  write_text(out / "groundstate.json", j.dump() + "\n");

  const auto& gd = g.data();
  if (gd.two_d) {
    CsvTable t{"x", "y", "u1", "u2"};
    for (std::size_t k = 0; k < gs.u1.v.size(); ++k)
      t.row({gd.coord_x[k % std::size_t(gd.n)], gd.coord_y[k / std::size_t(gd.n)],
             gs.u1.v[k], gs.u2.v[k]});
    t.save(out / "profile.csv");
  } else {
    CsvTable t{"x", "u1", "u2"};
    for (std::size_t k = 0; k < gs.u1.v.size(); ++k)
      t.row({gd.coord_x[k], gs.u1.v[k], gs.u2.v[k]});
    t.save(out / "profile.csv");
  }
  CsvTable h{"step", "energy"};
  for (std::size_t k = 0; k < gs.energy_history.size(); ++k)
    h.row({double(k), gs.energy_history[k]});
  h.save(out / "energy_history.csv");
}

// Reader for the groundstate artifact; the evolve run rebuilds the exact
// grid it was computed on and refuses configs that disagree with it.
inline GroundStateResult read_groundstate_artifact(const std::filesystem::path& file,
                                                   const RunConfig& cfg, Grid& g_out) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open groundstate artifact " + file.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  nlohmann::json j = nlohmann::json::parse(buf.str(), nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw std::runtime_error("groundstate artifact is not valid JSON: " + file.string());

  const nlohmann::json dj = domain_json(cfg.domain);
  if (j.value("domain", nlohmann::json()) != dj)
    throw std::runtime_error("groundstate artifact domain differs from the config");
  if (j.value("n", -1) != cfg.solver.n)
    throw std::runtime_error("groundstate artifact resolution differs from solver.n");
  if (j.value("params", nlohmann::json()) != params_json(cfg.params))
    throw std::runtime_error("groundstate artifact parameters differ from the config");

  g_out = build_grid(cfg.domain, cfg.solver.n);
  GroundStateResult gs{RealField(g_out), RealField(g_out), {}, {}, 0.0, 0.0,
                       false,            false,            0,  0.0, 0.0, {}};
  const auto u1 = j.value("u1", std::vector<double>{});
  const auto u2 = j.value("u2", std::vector<double>{});
  if (u1.size() != gs.u1.v.size() || u2.size() != gs.u2.v.size())
    throw std::runtime_error("groundstate artifact field size does not match the grid");
  gs.u1.v = u1;
  gs.u2.v = u2;
  if (j.contains("omega1") && j["omega1"].is_number()) gs.omega1 = j["omega1"].get<double>();
  if (j.contains("omega2") && j["omega2"].is_number()) gs.omega2 = j["omega2"].get<double>();
  gs.energy = j.value("energy", 0.0);
  gs.kinetic_total = j.value("kinetic_total", 0.0);
  gs.converged = j.value("converged", false);
  gs.boundary_hit = j.value("boundary_hit", false);
  gs.iterations = j.value("iterations", 0L);
  gs.residual = j.contains("residual") && j["residual"].is_number()
                    ? j["residual"].get<double>()
                    : std::numeric_limits<double>::quiet_NaN();
  gs.dt_final = j.value("dt_final", 0.0);
  return gs;
}

inline void run_evolve(const RunConfig& cfg, const std::filesystem::path& out,
                       const RunFlags& flags, std::vector<std::string>& flagged,
                       std::optional<std::uint64_t>& seed_used) {
  if (!cfg.evolve) throw std::runtime_error("the evolve subcommand needs an 'evolve' block");
  Grid g;  // filled in by the artifact reader
  const GroundStateResult gs =
      read_groundstate_artifact(cfg.evolve->groundstate_file, cfg, g);
  if (!gs.converged) {
    flagged.push_back("evolve: groundstate artifact is not converged");
    return;
  }
  Perturbation pert = cfg.evolve->perturbation;
  if (flags.seed) pert.seed = *flags.seed;
  seed_used = pert.seed;

  const EvolutionTrace tr =
      stability_experiment(cfg.params, gs, pert, cfg.evolve->horizon, cfg.evolve->dt);
  if (tr.blow_up) flagged.push_back("evolve: trajectory left the safety ball (blow-up guard)");

  CsvTable t{"t", "mass1", "mass2", "energy", "dist"};
  for (std::size_t k = 0; k < tr.times.size(); ++k)
    t.row({tr.times[k], tr.mass1[k], tr.mass2[k], tr.energy[k], tr.distance[k]});
  t.save(out / "trace.csv");

  nlohmann::json j;
  j["sup_distance"] = tr.sup_distance;
  j["mass1_drift"] = tr.mass1_drift;
  j["mass2_drift"] = tr.mass2_drift;
  j["energy_drift_rate"] = tr.energy_drift_rate;
  j["blow_up"] = tr.blow_up;
  j["dt"] = tr.dt;
  j["steps"] = tr.times.empty() ? 0 : tr.times.size() - 1;
  j["perturbation"] = {{"kind", detail::to_string(pert.kind)},
                       {"size", pert.size},
                       {"seed", pert.seed}};
  write_text(out / "evolve_summary.json", j.dump(2) + "\n");
}

inline void run_sweep_beta(const RunConfig& cfg, const std::filesystem::path& out,
                           std::vector<std::string>& flagged) {
  if (cfg.betas.empty())
    throw std::runtime_error("the sweep-beta subcommand needs a 'betas' list");
  Grid g = build_grid(cfg.domain, cfg.solver.n);
  ConstantsTable tab;
  const auto recs = beta_sweep(tab, cfg.params, cfg.masses, cfg.betas, g, flow_options(cfg));

  CsvTable t{"beta", "energy", "omega1", "omega2", "overlap", "holder_proxy"};
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& rec : recs) {
    t.row({rec.beta, rec.state.energy, rec.omega1.value_or(nan), rec.omega2.value_or(nan),
           rec.overlap, rec.holder_half});
    if (!rec.state.converged)
      flagged.push_back("sweep-beta: flow did not converge at beta=" + fmt_full(rec.beta));
    if (rec.energy_dropped)
      flagged.push_back("sweep-beta: energy dropped at beta=" + fmt_full(rec.beta) +
                        " (possible branch switch)");
  }
  t.save(out / "sweep.csv");

  const auto rep = limit_profile_check(cfg.params, recs.back());
  nlohmann::json j;
  j["beta"] = recs.back().beta;
  j["mass_wplus"] = rep.mass_wplus;
  j["mass_wminus"] = rep.mass_wminus;
  j["mass_err1"] = rep.mass_err1;
  j["mass_err2"] = rep.mass_err2;
  j["residual"] = rep.residual;
  j["nonlinearity_norm"] = rep.nonlinearity_norm;
  j["residual_far"] = rep.residual_far;
  j["nonlinearity_far"] = rep.nonlinearity_far;
  j["interface_width"] = rep.interface_width;
  j["interface_nodes"] = rep.interface_nodes;
  write_text(out / "limit_profile.json", j.dump(2) + "\n");
}

inline void run_region(const RunConfig& cfg, const std::filesystem::path& out) {
  const RegionSpec rs = cfg.region.value_or(RegionSpec{});
  ConstantsTable tab;
  const auto [l1, l2] = domain_eigs(cfg);
  RegionOptions opt;
  opt.nx = rs.nx;
  opt.ny = rs.ny;
  opt.xmax = rs.xmax;
  opt.ymax = rs.ymax;
  opt.scaled_axes = rs.scaled_axes;
  const RegionSample sample = region_sample(tab, cfg.params, l1, l2, opt);

  CsvTable t{"x", "y", "admissible"};
  for (int jy = 0; jy < opt.ny; ++jy)
    for (int ix = 0; ix < opt.nx; ++ix)
      t.row({sample.xs[std::size_t(ix)], sample.ys[std::size_t(jy)],
             double(sample.mask[std::size_t(jy) * opt.nx + ix])});
  t.save(out / "region.csv");

  if (!sample.boundary.empty()) {
    CsvTable b{"x", "y"};
    for (const auto& [x, y] : sample.boundary) b.row({x, y});
    b.save(out / "boundary.csv");
  }
}

}  // namespace detail

// Runs one subcommand into out_dir. Returns 0 on success, 2 when something
// was flagged (non-convergence, blow-up) and partial results were not
// allowed. Configuration and I/O problems throw.
inline int run(Subcommand cmd, const RunConfig& cfg, const std::filesystem::path& out_dir,
               const RunFlags& flags = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  std::filesystem::create_directories(out_dir);
  std::vector<std::string> flagged;
  std::optional<std::uint64_t> seed_used;

  switch (cmd) {
    case Subcommand::constants: detail::run_constants(cfg, out_dir); break;
    case Subcommand::thresholds: detail::run_thresholds(cfg, out_dir); break;
    case Subcommand::groundstate: detail::run_groundstate(cfg, out_dir, flagged); break;
    case Subcommand::evolve: detail::run_evolve(cfg, out_dir, flags, flagged, seed_used); break;
    case Subcommand::sweep_beta: detail::run_sweep_beta(cfg, out_dir, flagged); break;
    case Subcommand::region: detail::run_region(cfg, out_dir); break;
  }

  nlohmann::json manifest;
  manifest["command"] = to_string(cmd);
  manifest["config"] = nlohmann::json::parse(emit_config(cfg));
  manifest["allow_partial"] = flags.allow_partial;
  manifest["seed"] = seed_used ? nlohmann::json(*seed_used) : nullptr;
  manifest["versions"] = {{"toolkit", toolkit_version}, {"compiler", __VERSION__}};
  manifest["flagged"] = flagged;
  const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
  manifest["wall_time_s"] = dt.count();
  detail::write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");

  return (!flagged.empty() && !flags.allow_partial) ? 2 : 0;
}

}  // namespace gpnorm
