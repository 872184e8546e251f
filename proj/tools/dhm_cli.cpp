#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "dhm/experiment.hpp"

namespace {

std::vector<double> parse_levels(const std::string& s) {
  std::vector<double> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw dhm::ConfigError("--levels: not a number: '" + item + "'");
    }
  }
  if (out.empty()) throw dhm::ConfigError("--levels: empty list");
  return out;
}

int fail(const char* module, const std::exception& e) {
  std::cerr << "dhm_cli: error [" << module << "]: " << e.what() << "\n";
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dirac-harmonic maps with curvature term on flat tori"};
  app.require_subcommand(1);
  std::string config_path, out_dir, input_dir, levels;
  std::optional<int> speed;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment config (JSON)");
    sub->add_option("--out", out_dir, "output directory");
  };
  auto* energy = app.add_subcommand("energy", "energy breakdown of the initial fields");
  auto* residual = app.add_subcommand("residual", "Euler-Lagrange residual norms of the initial fields");
  auto* solve = app.add_subcommand("solve", "coupled solve or nonlinear Dirac continuation");
  auto* spectrum = app.add_subcommand("spectrum", "flat Dirac spectrum against the lattice values");
  auto* diagnostics = app.add_subcommand("diagnostics", "identity and conservation residuals");
  auto* sweep = app.add_subcommand("sweep", "small-energy vanishing table");
  auto* example = app.add_subcommand("example", "explicit circle solution");
  for (auto* s : {energy, residual, solve, spectrum, diagnostics, sweep, example}) common(s);
  diagnostics->add_option("--input", input_dir, "field snapshot directory");
  sweep->add_option("--levels", levels, "comma-separated energy levels");
  example->add_option("--speed", speed, "winding number of the equator");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  dhm::ExperimentConfig cfg;
  try {
    if (!config_path.empty()) cfg = dhm::load_config(config_path);
    dhm::apply_seed_override(cfg, std::getenv("DHC_SEED"));
  } catch (const std::exception& e) {
    return fail("config", e);
  }
  if (out_dir.empty()) out_dir = cfg.output_dir;

  dhm::RunResult res;
  try {
    if (*energy) res = dhm::run_energy(cfg);
    else if (*residual) res = dhm::run_residual(cfg);
    else if (*solve) res = dhm::run_solve(cfg);
    else if (*spectrum) res = dhm::run_spectrum(cfg);
    else if (*diagnostics) res = dhm::run_diagnostics(cfg, input_dir);
    else if (*sweep) res = dhm::run_sweep(cfg, levels.empty() ? std::nullopt : std::optional(parse_levels(levels)));
    else res = dhm::run_example(cfg, speed);
  } catch (const dhm::ConfigError& e) {
    return fail("config", e);
  } catch (const dhm::DomainError& e) {
    return fail("domain", e);
  } catch (const dhm::SingularProjection& e) {
    return fail("target", e);
  } catch (const dhm::OffManifold& e) {
    return fail("target", e);
  } catch (const dhm::NumericalError& e) {
    return fail("numerics", e);
  } catch (const std::exception& e) {
    return fail("runtime", e);
  }

  try {
    if (!out_dir.empty()) dhm::write_outputs(out_dir, res);
  } catch (const std::exception& e) {
    return fail("io", e);
  }
  if (res.report.pass) {
    std::cout << "PASS\n";
  } else {
    std::cout << "FAIL:";
    for (const auto& f : res.report.failures) std::cout << " " << f;
    std::cout << "\n";
  }
  return res.exit_code();
}
