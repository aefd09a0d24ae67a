#pragma once

#include <functional>
#include <ostream>
#include <string>

#include "dlca/config.hpp"

namespace dlca::cli {

// Exit codes shared by all subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitNumerical = 4;

// Subcommand bodies; they throw Config/Io/NumericalError, which run_guarded
// maps onto the exit codes above.
void cmd_generate(const RunConfig& cfg, bool export_csv, std::ostream& out);
void cmd_train(const RunConfig& cfg, std::ostream& out);
void cmd_eval(const RunConfig& cfg, std::ostream& out);
void cmd_sweep(const RunConfig& cfg, const std::string& figure, std::ostream& out);
void cmd_report(const RunConfig& cfg, std::ostream& out);
void cmd_selftest(const RunConfig& cfg, std::ostream& out);

int run_guarded(const std::function<void()>& body, std::ostream& err);

// Resolved worker count (config value, 0 meaning hardware concurrency).
int effective_workers(const RunConfig& cfg);

}  // namespace dlca::cli
