#include <iostream>

#include <CLI11.hpp>

#include "spectraldist/cli.hpp"

namespace sd = spectraldist;
namespace cli = spectraldist::cli;

int main(int argc, char** argv) {
  CLI::App app{"Spectral distributions of matrices, multiplication operators and rank-one perturbations"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", cli::kVersion);

  int threads = 1;
  std::optional<std::uint64_t> seed;
  double tol_scale = 1.0;
  app.add_option("--threads", threads, "worker threads for grid scans and checks")->check(CLI::Range(1, 256));
  app.add_option("--seed", seed, "override the probe seed from the configuration");
  app.add_option("--tol-scale", tol_scale, "multiply every check tolerance")->check(CLI::PositiveNumber);

  std::string config, out;
  auto* spectrum = app.add_subcommand("spectrum", "compute point spectrum, density and checks");
  spectrum->add_option("--config", config, "configuration file")->required();
  spectrum->add_option("--out", out, "output directory")->required();
  auto* verify = app.add_subcommand("verify", "run the check suite; exit 0 iff every check passes");
  verify->add_option("--config", config, "configuration file")->required();
  verify->add_option("--out", out, "directory for report.json (default: output.dir from the configuration)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  cli::Config c;
  try {
    c = cli::load_config(config);
  } catch (const cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  if (seed) c.seed = *seed;
  c.tol_scale = tol_scale;
  c.threads = threads;
  std::filesystem::path dir = out.empty() ? c.output_dir : out;

  auto failed = [&](const char* kind, const std::exception& e, int rc) {
    std::cerr << kind << ": " << e.what() << "\n";
    try {
      cli::Result r;
      r.meta["error"] = {{"kind", kind}, {"message", e.what()}};
      cli::write_report(c, r, dir);
    } catch (const std::exception& w) {
      std::cerr << "error: " << w.what() << "\n";
    }
    return rc;
  };

  try {
    if (*spectrum) {
      auto r = cli::run_scenario(c, true);
      cli::write_spectrum(c, r, dir);
      return 0;
    }
    auto r = cli::run_scenario(c, false);
    cli::write_report(c, r, dir);
    bool ok = true;
    for (const auto& x : r.checks) {
      std::printf("%s %s abs=%.3e rel=%.3e tol=%.1e\n", x.passed ? "PASS" : "FAIL", x.name.c_str(), x.abs_err, x.rel_err, x.tolerance);
      ok &= x.passed;
    }
    return ok ? 0 : 1;
  } catch (const cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const sd::RegimeError& e) {
    return failed("regime error", e, 3);
  } catch (const sd::Error& e) {
    return failed("numerical error", e, 3);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}
