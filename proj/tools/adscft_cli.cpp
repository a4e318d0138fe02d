// Command-line driver: one subcommand per experiment.

#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "adscft/cli.hpp"

namespace cli = adscft::cli;

namespace {

struct Flags {
  std::string config_path;
  std::string out_dir = ".";
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
  int workers = -1;
  int d = 0;
  double nu = 0.0;
  double m2 = 0.0;
  bool print_config = false;
  bool quiet = false;
};

std::string footer(const std::string& name) {
  return "CSV columns (" + name + ".csv): " + cli::csv_columns(name) +
         "\n\nDefault configuration (override with --config or --set KEY=VALUE):\n" +
         cli::default_config(name).dump(2) +
         "\n\nExit status: 0 all checks pass, 2 a check fails or a computation errors, "
         "1 usage or configuration error.";
}

cli::Json read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw cli::ConfigError("--config", "cannot open '" + path + "'");
  }
  try {
    return cli::Json::parse(in);
  } catch (const cli::Json::parse_error& err) {
    throw cli::ConfigError("--config", std::string("invalid JSON: ") + err.what());
  }
}

int execute(const std::string& name, const Flags& f, CLI::App& sub) {
  const cli::Json file = f.config_path.empty() ? cli::Json::object() : read_config(f.config_path);
  cli::Json overrides = cli::Json::object();
  for (const auto& s : f.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      throw cli::ConfigError("--set", "expected KEY=VALUE, got '" + s + "'");
    }
    cli::set_path(overrides, s.substr(0, eq), s.substr(eq + 1));
  }
  auto given = [&](const char* flag) {
    const CLI::Option* opt = sub.get_option_no_throw(flag);
    return opt != nullptr && opt->count() > 0;
  };
  if (given("--seed")) {
    overrides["seed"] = f.seed;
  }
  if (given("--workers")) {
    overrides["workers"] = f.workers;
  }
  if (given("--d")) {
    overrides["params"]["d"] = f.d;
  }
  if (given("--nu")) {
    overrides["params"]["nu"] = f.nu;
  }
  if (given("--m2")) {
    overrides["params"]["m2"] = f.m2;
  }
  const cli::RunConfig rc = cli::resolve(name, file, overrides);
  if (f.print_config) {
    std::cout << rc.config.dump(2) << "\n";
    return cli::kExitPass;
  }
  const cli::RunResult res = cli::run(rc);
  cli::write_outputs(res, name, f.out_dir);
  if (!f.quiet) {
    for (const auto& ch : res.record["checks"]) {
      std::cout << (ch["pass"].get<bool>() ? "PASS " : "FAIL ") << ch["name"].get<std::string>()
                << ": " << ch["value"].dump() << " (tolerance " << ch["tolerance"].dump() << ")\n";
    }
    for (const auto& err : res.record["errors"]) {
      std::cerr << "error: " << err["message"].get<std::string>() << "\n";
    }
    std::cout << name << ": " << (res.exit_code == cli::kExitPass ? "pass" : "fail") << " -> "
              << f.out_dir << "/" << name << ".json\n";
  }
  return res.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Verification experiments for the free and interacting scalar field on "
               "hyperbolic space and its boundary.\nWorker count defaults to ADSCFT_WORKERS, "
               "then the hardware thread count."};
  app.set_version_flag("--version", cli::library_version());
  app.require_subcommand(1);

  Flags flags;
  std::map<std::string, CLI::App*> subs;
  for (const auto& name : cli::experiments()) {
    CLI::App* sub = app.add_subcommand(name, cli::summary(name));
    sub->footer(footer(name));
    sub->add_option("--config", flags.config_path, "JSON configuration file");
    sub->add_option("--out", flags.out_dir, "output directory for <experiment>.json/.csv")
        ->capture_default_str();
    sub->add_option("--seed", flags.seed, "random seed");
    sub->add_option("--workers", flags.workers, "worker threads (0: ADSCFT_WORKERS or hardware)");
    if (cli::default_config(name).contains("params")) {
      sub->add_option("--d", flags.d, "boundary dimension d");
      auto* nu = sub->add_option("--nu", flags.nu, "nu = sqrt(d^2 + 4 m^2) / 2, not an integer");
      sub->add_option("--m2", flags.m2, "mass squared (alternative to --nu)")->excludes(nu);
    }
    sub->add_option("--set", flags.sets, "override KEY=VALUE, e.g. options.samples=1000000");
    sub->add_flag("--print-config", flags.print_config, "print the resolved config and exit");
    sub->add_flag("--quiet", flags.quiet, "no console summary");
    subs[name] = sub;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? cli::kExitPass : cli::kExitUsage;
  }

  for (const auto& [name, sub] : subs) {
    if (!sub->parsed()) {
      continue;
    }
    try {
      return execute(name, flags, *sub);
    } catch (const cli::ConfigError& err) {
      std::cerr << "config error: " << err.what() << "\n";
      return cli::kExitUsage;
    } catch (const std::exception& err) {
      std::cerr << "error: " << err.what() << "\n";
      return cli::kExitUsage;
    }
  }
  return cli::kExitUsage;
}
