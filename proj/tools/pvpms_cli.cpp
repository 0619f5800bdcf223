// pvpms: photovoltaic chain simulator with a boost-converter power management stage.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "pvpms/cli.hpp"

int main(int argc, char** argv) {
  using namespace pvpms::cli;

  CLI::App app{"Simulate a PV panel feeding an MPPT charge controller, with and without a boost power management stage"};
  app.require_subcommand(1);

  Options opt;
  std::string config, out_dir, model, fixture;
  double alpha = 0.05;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config, "Configuration file (section.key = value)")->check(CLI::ExistingFile);
    cmd->add_option("--out", out_dir, "Output directory");
    cmd->add_option("--model", model, "Boost loss model")->check(CLI::IsMember({"analytic", "empirical"}));
  };

  auto* simulate = app.add_subcommand("simulate", "Run both scenarios over one day and write CSV, summary and SVG");
  add_common(simulate);

  auto* verify = app.add_subcommand("verify-pms", "Replay the PMS verification table");
  add_common(verify);
  verify->add_option("--fixture", fixture, "CSV with columns vin,vout_expected");

  auto* bench = app.add_subcommand("bench-boost", "Regulate each bench row to the target into 100 ohm");
  add_common(bench);
  bench->add_option("--fixture", fixture, "CSV with columns vin,p_in,p_out[,eta_pct]");

  auto* derive = app.add_subcommand("derive-profile", "Derive the irradiance profile from hourly MPPT-only power");
  add_common(derive);
  derive->add_option("--fixture", fixture, "CSV with columns hour,mppt_only_w");

  auto* stats = app.add_subcommand("stats", "Paired t-test between two per-sample power CSVs");
  stats->add_option("csv_a", opt.csv_a, "First series (t_min,p_delivered)")->required();
  stats->add_option("csv_b", opt.csv_b, "Second series (t_min,p_delivered)")->required();
  stats->add_option("--alpha", alpha, "Significance level")->check(CLI::Range(1e-9, 1.0 - 1e-9));
  stats->add_option("--out", out_dir, "Directory for stats.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kInputError;
  }

  if (!config.empty()) opt.config = config;
  if (!out_dir.empty()) opt.out_dir = out_dir;
  if (!model.empty()) opt.model = model;
  if (!fixture.empty()) opt.fixture = fixture;
  opt.alpha = alpha;

  if (simulate->parsed()) return cmd_simulate(opt, std::cout, std::cerr);
  if (verify->parsed()) return cmd_verify_pms(opt, std::cout, std::cerr);
  if (bench->parsed()) return cmd_bench_boost(opt, std::cout, std::cerr);
  if (derive->parsed()) return cmd_derive_profile(opt, std::cout, std::cerr);
  return cmd_stats(opt, std::cout, std::cerr);
}
