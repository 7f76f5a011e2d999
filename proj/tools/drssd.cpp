#include <iostream>

#include <CLI11.hpp>

#include "drssd/cli_io.hpp"
#include "drssd/error.hpp"

int main(int argc, char** argv) {
  using namespace drssd::cli;
  CLI::App app{"Lower and upper bounds for distributionally robust SSD-constrained problems"};
  app.require_subcommand(1, 1);

  CommandOptions opt;
  std::string units;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string config;

  for (const char* name : {"lower", "upper", "both", "verify", "sweep"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "JSON run configuration");
    sub->add_option("--seed", seed, "grid seed (verify: RNG seed)");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--trials", opt.trials, "verify: number of random trials");
    sub->add_option("--units", units, "scenario units: percent or fraction")
        ->check(CLI::IsMember({"percent", "fraction"}));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  opt.command = app.get_subcommands().front()->get_name();
  const CLI::App* sub = app.get_subcommands().front();
  if (sub->count("--config")) opt.config = config;
  if (sub->count("--seed")) opt.seed = seed;
  if (sub->count("--out")) opt.out_dir = out_dir;
  if (sub->count("--units")) opt.units = parse_units(units);
  return run_command(opt, std::cout, std::cerr);
}
