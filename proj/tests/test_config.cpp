#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <string>
#include <vector>

#include <gpnorm/config.hpp>

using namespace gpnorm;

namespace {

bool mentions(const std::vector<std::string>& errs, const std::string& frag) {
  return std::any_of(errs.begin(), errs.end(), [&](const std::string& e) {
    return e.find(frag) != std::string::npos;
  });
}

}  // namespace

TEST_CASE("a minimal config parses and the solver gets its defaults") {
  const auto pr = parse_config(R"({
    "domain": {"kind": "interval", "length": 3.0},
    "params": {"N": 1, "p": 3, "mu1": 1.0, "mu2": 2.0, "beta": -0.5},
    "masses": {"rho1": 1.0, "rho2": 0.5}
  })");
  CAPTURE(pr.errors);
  REQUIRE(pr.config.has_value());
  const RunConfig& c = *pr.config;
  CHECK(c.domain.kind == DomainKind::Interval);
  CHECK(c.domain.ext0 == 3.0);
  CHECK(c.params.p == 3.0);
  CHECK(c.solver.n == 200);
  CHECK(c.solver.dt == 0.0);
  CHECK(c.solver.tol == 1e-9);
  CHECK(c.solver.max_iter == 200000);
  CHECK_FALSE(c.alpha);
  CHECK(c.betas.empty());
  CHECK_FALSE(c.evolve);
  CHECK_FALSE(c.region);
  CHECK_FALSE(c.lambda1);
}

TEST_CASE("every problem is reported, not just the first") {
  const auto pr = parse_config(R"({
    "domain": {"kind": "interval", "length": -2.0},
    "params": {"N": 1, "p": 0.5, "mu1": 1.0, "mu2": 1.0, "beta": 0.0},
    "masses": {"rho1": -1.0, "rho2": 0.5},
    "betas": [-1.0, -0.5]
  })");
  REQUIRE_FALSE(pr.config.has_value());
  CHECK(pr.errors.size() >= 4);
  CHECK(mentions(pr.errors, "domain.length must be positive"));
  CHECK(mentions(pr.errors, "p > 1 violated"));
  CHECK(mentions(pr.errors, "rho1 >= 0"));
  CHECK(mentions(pr.errors, "strictly descending"));
}

TEST_CASE("unknown keys are rejected at every level") {
  const auto pr = parse_config(R"({
    "domain": {"kind": "interval", "length": 1.0, "widht": 2.0},
    "params": {"N": 1, "p": 3, "mu1": 1, "mu2": 1, "beta": 0},
    "masses": {"rho1": 1, "rho2": 1},
    "solver": {"n": 50, "tolerance": 1e-8},
    "colour": "red"
  })");
  REQUIRE_FALSE(pr.config.has_value());
  CHECK(mentions(pr.errors, "unknown key 'domain.widht'"));
  CHECK(mentions(pr.errors, "unknown key 'solver.tolerance'"));
  CHECK(mentions(pr.errors, "unknown key 'colour'"));
}

TEST_CASE("powers beyond the Sobolev limit are refused with the inequality") {
  const auto pr = parse_config(R"({
    "domain": {"kind": "radial_ball", "radius": 1.0, "dim": 3},
    "params": {"N": 3, "p": 7, "mu1": 1, "mu2": 1, "beta": -1},
    "masses": {"rho1": 0.1, "rho2": 0.1}
  })");
  REQUIRE_FALSE(pr.config.has_value());
  CHECK(mentions(pr.errors, "p <= (N+2)/(N-2) violated"));
}

TEST_CASE("the domain dimension must match N") {
  const auto pr = parse_config(R"({
    "domain": {"kind": "rectangle", "width": 1.0, "height": 2.0},
    "params": {"N": 3, "p": 3, "mu1": 1, "mu2": 1, "beta": 0},
    "masses": {"rho1": 1, "rho2": 1}
  })");
  REQUIRE_FALSE(pr.config.has_value());
  CHECK(mentions(pr.errors, "params.N must match the domain dimension"));

  // the check stays quiet while the domain itself failed to parse
  const auto pr2 = parse_config(R"({
    "domain": {"kind": "rectangle", "width": -1.0, "height": 2.0},
    "params": {"N": 3, "p": 3, "mu1": 1, "mu2": 1, "beta": 0},
    "masses": {"rho1": 1, "rho2": 1}
  })");
  REQUIRE_FALSE(pr2.config.has_value());
  CHECK_FALSE(mentions(pr2.errors, "params.N must match"));
}

TEST_CASE("sweep couplings must be negative and strictly descending") {
  const std::string head = R"({
    "domain": {"kind": "interval", "length": 1.0},
    "params": {"N": 1, "p": 3, "mu1": 1, "mu2": 1, "beta": -1},
    "masses": {"rho1": 1, "rho2": 1},
    "betas": )";
  CHECK(mentions(parse_config(head + "[]}").errors, "nonempty"));
  CHECK(mentions(parse_config(head + "[1.0]}").errors, "negative"));
  CHECK(mentions(parse_config(head + "[-1.0, -1.0]}").errors, "strictly descending"));
  CHECK(parse_config(head + "[-1.0, -2.5, -10.0]}").config.has_value());
}

TEST_CASE("eigenvalue overrides come in ordered pairs or not at all") {
  const std::string head = R"({
    "domain": {"kind": "interval", "length": 1.0},
    "params": {"N": 1, "p": 3, "mu1": 1, "mu2": 1, "beta": -1},
    "masses": {"rho1": 1, "rho2": 1},
    )";
  CHECK(mentions(parse_config(head + "\"lambda1\": 2.0}").errors, "given together"));
  CHECK(mentions(parse_config(head + "\"lambda1\": 5.0, \"lambda2\": 2.0}").errors,
                 "0 < lambda1 <= lambda2"));
  CHECK(mentions(parse_config(head + "\"lambda1\": -1.0, \"lambda2\": 2.0}").errors,
                 "0 < lambda1 <= lambda2"));
  const auto ok = parse_config(head + "\"lambda1\": 2.0, \"lambda2\": 5.0}");
  REQUIRE(ok.config.has_value());
  CHECK(*ok.config->lambda1 == 2.0);
  CHECK(*ok.config->lambda2 == 5.0);
}

TEST_CASE("malformed JSON and non-object roots are single clear errors") {
  CHECK(mentions(parse_config("{oops").errors, "not valid JSON"));
  CHECK(mentions(parse_config("[1,2]").errors, "must be a JSON object"));
}

TEST_CASE("emit and parse are inverse on a fully loaded config") {
  RunConfig c;
  c.domain = Domain::radial_ball(2.5, 3);
  c.params = {3, 2.2, 1.25, 0.75, -3.5};
  c.masses = {0.1, 0.07};
  c.solver = {150, 1e-3, 1e-10, 50000};
  c.alpha = 17.5;
  c.betas = {-1.0, -32.125, -1024.0};
  EvolveSpec es;
  es.groundstate_file = "runs/gs.json";
  es.horizon = 2.5;
  es.dt = 5e-4;
  es.perturbation.kind = PerturbKind::ComponentAsymmetric;
  es.perturbation.size = 0.01;
  es.perturbation.seed = 987654321;
  c.evolve = es;
  c.region = RegionSpec{32, 48, 1.5, 2.5, false};
  c.lambda1 = 3.1875;
  c.lambda2 = 9.25;

  const std::string text = emit_config(c);
  const auto pr = parse_config(text);
  CAPTURE(pr.errors);
  REQUIRE(pr.config.has_value());
  CHECK(*pr.config == c);
  // canonical text: a second emit reproduces the bytes
  CHECK(emit_config(*pr.config) == text);
}

TEST_CASE("a default-constructed config emits and parses back unchanged") {
  RunConfig c;
  c.params = {1, 3.0, 1.0, 1.0, -1.0};
  c.masses = {1.0, 1.0};
  const auto pr = parse_config(emit_config(c));
  CAPTURE(pr.errors);
  REQUIRE(pr.config.has_value());
  CHECK(*pr.config == c);
}
