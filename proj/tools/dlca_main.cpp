#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "dlca/commands.hpp"
#include "dlca/version.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out_dir;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "JSON run configuration")
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", flags.seed, "override the master seed");
  cmd->add_option("--workers", flags.workers, "worker threads (0 = hardware)");
  cmd->add_option("--out", flags.out_dir, "output directory");
}

dlca::cli::RunConfig resolve(const CommonFlags& flags) {
  dlca::cli::RunConfig cfg = flags.config_path.empty()
                                 ? dlca::cli::RunConfig{}
                                 : dlca::cli::load_config(flags.config_path);
  if (flags.seed) cfg.master_seed = *flags.seed;
  if (flags.workers) cfg.workers = *flags.workers;
  if (flags.out_dir) cfg.output.dir = *flags.out_dir;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"BB84 continuous-eavesdropping workbench"};
  app.set_version_flag("--version", dlca::kVersion);
  app.require_subcommand(1);

  CommonFlags generate_flags, train_flags, eval_flags, sweep_flags, report_flags, selftest_flags;
  bool generate_csv = false;
  std::string figure;

  auto* generate = app.add_subcommand("generate", "simulate and persist photocurrent datasets");
  add_common(generate, generate_flags);
  generate->add_flag("--csv", generate_csv, "also export the datasets as CSV");

  auto* train = app.add_subcommand("train", "train the classifier on a generated dataset");
  add_common(train, train_flags);

  auto* eval = app.add_subcommand("eval", "evaluate a trained checkpoint on the test dataset");
  add_common(eval, eval_flags);

  auto* sweep = app.add_subcommand("sweep", "produce one figure CSV");
  add_common(sweep, sweep_flags);
  sweep
      ->add_option("--figure", figure,
                   "qber-map | feedback-map | accuracy-vs-theta | lambda | accuracy-vs-window | "
                   "qber-traces")
      ->required();

  auto* report = app.add_subcommand("report", "collate the attack-scheme summary table");
  add_common(report, report_flags);

  auto* selftest = app.add_subcommand("selftest", "run the analytic-oracle invariant suite");
  add_common(selftest, selftest_flags);

  CLI11_PARSE(app, argc, argv);

  using dlca::cli::run_guarded;
  if (generate->parsed())
    return run_guarded(
        [&] { dlca::cli::cmd_generate(resolve(generate_flags), generate_csv, std::cout); },
        std::cerr);
  if (train->parsed())
    return run_guarded([&] { dlca::cli::cmd_train(resolve(train_flags), std::cout); }, std::cerr);
  if (eval->parsed())
    return run_guarded([&] { dlca::cli::cmd_eval(resolve(eval_flags), std::cout); }, std::cerr);
  if (sweep->parsed())
    return run_guarded([&] { dlca::cli::cmd_sweep(resolve(sweep_flags), figure, std::cout); },
                       std::cerr);
  if (report->parsed())
    return run_guarded([&] { dlca::cli::cmd_report(resolve(report_flags), std::cout); },
                       std::cerr);
  return run_guarded([&] { dlca::cli::cmd_selftest(resolve(selftest_flags), std::cout); },
                     std::cerr);
}
