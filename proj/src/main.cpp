// Command-line front end. Everything interesting lives in the headers; this
// file only reads the config, reports validation errors, and maps run()
// results to exit codes: 0 ok, 1 usage/config/runtime error, 2 flagged
// non-convergence without --allow-partial.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include <gpnorm/driver.hpp>

int main(int argc, char** argv) {
  CLI::App app{"mass-constrained ground states of coupled Gross-Pitaevskii systems"};
  app.set_version_flag("--version", gpnorm::toolkit_version);
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_file, out_dir;
  std::optional<std::uint64_t> seed;
  bool allow_partial = false;
  app.add_option("--config", config_file, "JSON run configuration")->required();
  app.add_option("--out", out_dir, "output directory (created if missing)")->required();
  app.add_option("--seed", seed, "override the perturbation seed");
  app.add_flag("--allow-partial", allow_partial, "exit 0 even when a run is flagged");

  for (const char* name : {"constants", "thresholds", "groundstate", "evolve",
                           "sweep-beta", "region"})
    app.add_subcommand(name)->fallthrough();

  CLI11_PARSE(app, argc, argv);

  const auto cmd = gpnorm::subcommand_from(app.get_subcommands().front()->get_name());

  std::ifstream in(config_file, std::ios::binary);
  if (!in) {
    std::fprintf(stderr, "error: cannot open config file '%s'\n", config_file.c_str());
    return 1;
  }
  std::ostringstream buf;
  buf << in.rdbuf();

  const gpnorm::ParseResult parsed = gpnorm::parse_config(buf.str());
  if (!parsed.config) {
    for (const auto& e : parsed.errors) std::fprintf(stderr, "config error: %s\n", e.c_str());
    return 1;
  }

  gpnorm::RunFlags flags;
  flags.seed = seed;
  flags.allow_partial = allow_partial;
  try {
    return gpnorm::run(*cmd, *parsed.config, out_dir, flags);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
