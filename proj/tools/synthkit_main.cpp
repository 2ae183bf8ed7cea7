#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "synthkit/commands.hpp"
#include "synthkit/errors.hpp"

int main(int argc, char** argv) {
  CLI::App app{"synthkit: synthetic training-data toolkit (generation, mixing, packing, metrics, "
               "scaling fits, evaluation)"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;

  // estimate-flops takes raw numbers instead of a config file.
  double trainee_params = 0.0;
  double generator_params = 0.0;
  double tokens = 0.0;
  auto* flops = app.add_subcommand("estimate-flops",
                                   "Training-compute estimate for N trainee / M generator params and D tokens");
  flops->add_option("N", trainee_params, "trainee parameter count")->required();
  flops->add_option("M", generator_params, "generator parameter count")->required();
  flops->add_option("D", tokens, "token count")->required();

  const std::vector<std::pair<std::string, std::string>> config_commands = {
      {"ingest", "Validate the corpus and write a normalized copy with token counts"},
      {"generate", "Run the selected generation methods until their token budgets"},
      {"mix", "Build the mixture of formatted records at the configured ratios"},
      {"pack", "Mix, then pack into fixed-length EOD-delimited training sequences"},
      {"metrics", "Diversity report (and gradient similarity when configured)"},
      {"fit", "Log-linear accuracy fit, crossover extrapolation and band CSV"},
      {"eval", "MCQA or judged free-form evaluation"},
      {"rag-index", "Chunk and embed the corpus into a persistent index"},
      {"rag-eval", "Retrieve, rerank and evaluate with retrieved context"},
  };
  for (const auto& [name, description] : config_commands) {
    auto* sub = app.add_subcommand(name, description);
    sub->add_option("-c,--config", config_path, "run config file (JSON)")->required();
    sub->add_option("--set", overrides, "override a config key, e.g. --set seed=7 or --set pack.seq_len=1024");
  }

  CLI11_PARSE(app, argc, argv);

  auto* sub = app.get_subcommands().front();
  if (sub == flops) {
    try {
      synthkit::cmd_estimate_flops(trainee_params, generator_params, tokens, std::cout);
      return synthkit::kExitOk;
    } catch (const synthkit::ValidationError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return synthkit::kExitConfig;
    }
  }

  synthkit::RunConfig config;
  try {
    config = synthkit::load_config(config_path, overrides);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return synthkit::kExitConfig;
  }
  return synthkit::run_command(sub->get_name(), config, std::cout, std::cerr);
}
