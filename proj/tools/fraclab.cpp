// Command-line experiment runner.
//
//   fraclab run --config <path> [--seed N] [--out DIR]
//   fraclab plotdata --in <csv> --kind <k>
//
// Exit codes: 0 success, 2 config error, 3 numerical failure,
// 4 invariant (contract) failure.

#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "fraclab/config.hpp"
#include "fraclab/errors.hpp"
#include "fraclab/plotdata.hpp"
#include "fraclab/runner.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kNumericalFailure = 3;
constexpr int kContractFailure = 4;

int do_run(const std::string& config_path, const std::int64_t* seed,
           const std::string* out_dir) {
  fraclab::ExperimentConfig cfg = fraclab::load_config(config_path);
  if (seed) cfg.seed = static_cast<std::uint64_t>(*seed);
  if (out_dir) cfg.output_dir = *out_dir;
  const std::string dir = fraclab::run_experiment(cfg);
  std::cout << dir << "\n";
  return kOk;
}

int do_plotdata(const std::string& csv_path, const std::string& kind) {
  const fraclab::PlotKind k = fraclab::plot_kind_from_name(kind);
  std::cout << fraclab::plot_description(csv_path, k).dump(2) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical experiments for nonlocal phase transitions"};
  app.require_subcommand(1);

  std::string config_path, csv_path, kind, out_dir;
  std::int64_t seed = 0;

  CLI::App* run = app.add_subcommand("run", "run one experiment from a config");
  run->add_option("--config", config_path, "config file path")->required();
  CLI::Option* seed_opt =
      run->add_option("--seed", seed, "override experiment.seed");
  CLI::Option* out_opt =
      run->add_option("--out", out_dir, "override experiment.output_dir");

  CLI::App* plot =
      app.add_subcommand("plotdata", "emit a plot description for a run CSV");
  plot->add_option("--in", csv_path, "input CSV produced by run")->required();
  plot->add_option("--kind", kind, "table kind")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return kConfigError;
  }

  try {
    if (run->parsed())
      return do_run(config_path, seed_opt->count() ? &seed : nullptr,
                    out_opt->count() ? &out_dir : nullptr);
    return do_plotdata(csv_path, kind);
  } catch (const fraclab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const fraclab::ContractError& e) {
    std::cerr << "invariant failure: " << e.what() << "\n";
    return kContractFailure;
  } catch (const fraclab::DomainError& e) {
    std::cerr << "invariant failure: " << e.what() << "\n";
    return kContractFailure;
  } catch (const fraclab::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumericalFailure;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return kNumericalFailure;
  }
}
