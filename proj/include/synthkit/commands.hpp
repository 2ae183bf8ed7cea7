#pragma once

#include <ostream>
#include <string>

#include "synthkit/config.hpp"

namespace synthkit {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;   // config / validation problems
inline constexpr int kExitRuntime = 3;  // backend / generation failures

void cmd_ingest(const RunConfig& config, std::ostream& out);
void cmd_generate(const RunConfig& config, std::ostream& out);
void cmd_mix(const RunConfig& config, std::ostream& out);
void cmd_pack(const RunConfig& config, std::ostream& out);
void cmd_metrics(const RunConfig& config, std::ostream& out);
void cmd_fit(const RunConfig& config, std::ostream& out);
void cmd_eval(const RunConfig& config, std::ostream& out);
void cmd_rag_index(const RunConfig& config, std::ostream& out);
void cmd_rag_eval(const RunConfig& config, std::ostream& out);
void cmd_estimate_flops(double trainee_params, double generator_params, double tokens,
                        std::ostream& out);

// Dispatches by subcommand name and maps exceptions to the exit-code
// contract: 0 ok, 2 validation, 3 runtime.
int run_command(const std::string& name, const RunConfig& config, std::ostream& out,
                std::ostream& err);

}  // namespace synthkit
