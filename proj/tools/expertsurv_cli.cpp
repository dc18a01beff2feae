#include <CLI11.hpp>

#include <iostream>

#include "expertsurv/appendix_validation.hpp"
#include "expertsurv/cli_io.hpp"
#include "expertsurv/errors.hpp"

namespace es = expertsurv;

int main(int argc, char** argv) {
  CLI::App app{"Parametric survival models with pooled expert opinion"};
  app.set_version_flag("--version", es::io::software_version());
  app.require_subcommand(1);

  std::string config_path;
  es::io::Overrides ov;
  std::uint64_t seed = 0;
  int chains = 0, iters = 0, burnin = 0;
  std::string out_dir;
  auto* fit = app.add_subcommand("fit", "Fit every configured model and write comparison tables");
  fit->add_option("--config", config_path, "Analysis configuration (JSON)")->required()->check(CLI::ExistingFile);
  fit->add_flag("--ml-only", ov.ml_only, "Maximum likelihood only (BIC ranking, no MCMC)");
  auto* o_seed = fit->add_option("--seed", seed, "Random seed");
  auto* o_chains = fit->add_option("--chains", chains, "MCMC chains")->check(CLI::PositiveNumber);
  auto* o_iters = fit->add_option("--iters", iters, "MCMC iterations per chain, burn-in included")->check(CLI::PositiveNumber);
  auto* o_burnin = fit->add_option("--burnin", burnin, "MCMC burn-in iterations")->check(CLI::NonNegativeNumber);
  auto* o_out = fit->add_option("--out", out_dir, "Output directory");

  std::string judgments_path;
  auto* elicit = app.add_subcommand("elicit", "Fit distributions to expert judgments and report ESS");
  elicit->add_option("--judgments", judgments_path, "Judgments file (JSON)")->required()->check(CLI::ExistingFile);

  es::appendix::Config ac;
  auto* val = app.add_subcommand("validate-appendix", "Median-parameterized Weibull validation with a scaled-chi prior");
  val->add_option("--alpha", ac.gamma_alpha, "Gamma shape for the Weibull shape parameter")->required();
  val->add_option("--beta", ac.gamma_beta, "Gamma rate for the Weibull shape parameter")->required();
  val->add_option("--l", ac.l, "Expert location for the median")->capture_default_str();
  val->add_option("--s", ac.s, "Expert spread")->capture_default_str();
  val->add_option("--adjusted-l", ac.adjusted_l, "Lowered expert location")->capture_default_str();
  val->add_option("--n", ac.sample_size, "Simulated sample size")->capture_default_str();
  val->add_option("--data-seed", ac.data_seed, "Seed for the simulated data")->capture_default_str();
  val->add_option("--seed", ac.mcmc.seed, "MCMC seed")->capture_default_str();
  val->add_option("--chains", ac.mcmc.chains, "MCMC chains")->capture_default_str();
  val->add_option("--iters", ac.mcmc.iterations, "MCMC iterations per chain")->capture_default_str();
  val->add_option("--burnin", ac.mcmc.burnin, "MCMC burn-in")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (fit->parsed()) {
      if (*o_seed) ov.seed = seed;
      if (*o_chains) ov.chains = chains;
      if (*o_iters) ov.iterations = iters;
      if (*o_burnin) ov.burnin = burnin;
      if (*o_out) ov.output_dir = out_dir;
      auto cfg = es::io::load_analysis_config(config_path);
      es::io::apply_overrides(cfg, ov);
      const auto res = es::io::run_analysis(cfg, &std::cerr);
      std::cout << res.comparison.format_table();
      std::cout << "outputs written to " << res.output_dir.string() << '\n';
      return res.exit_code;
    }
    if (elicit->parsed()) {
      std::cout << es::io::elicitation_report(judgments_path);
      return 0;
    }
    if (val->parsed()) {
      const auto rep = es::appendix::run(ac);
      std::cout << rep.format();
      return rep.bands_overlap && rep.adjusted_below_data_interval ? 0 : 1;
    }
  } catch (const es::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const es::PreconditionError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
