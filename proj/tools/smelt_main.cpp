// smelt — drive artifact refinement runs from the command line.
//
// Subcommands: run, resume, bench, inspect, validate-config.
// Exit codes: 0 success, 2 usage/config problem, 3 runtime abort.

#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "smelt.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitAbort = 3;

int exit_code_for(smelt_status status) {
  switch (status) {
    case SMELT_OK:
      return kExitOk;
    case SMELT_ERR_INVALID_ARGUMENT:
    case SMELT_ERR_CONFIG:
    case SMELT_ERR_NOT_FOUND:
      return kExitUsage;
    default:
      return kExitAbort;
  }
}

void print_error(smelt_status status) {
  std::fprintf(stderr, "error: %s\n", smelt_last_error());
  (void)status;
}

void progress_line(void*, int iteration, double best_delta, int pool_size,
                   double cache_hit_rate) {
  std::printf("t=%d best_delta=%.6g pool=%d cache_hit_rate=%.2f\n", iteration,
              best_delta, pool_size, cache_hit_rate);
  std::fflush(stdout);
}

struct OwnedString {
  char* value = nullptr;
  ~OwnedString() { smelt_string_free(value); }
};

int execute_run(smelt_run* run) {
  const smelt_status status = smelt_run_execute(run, progress_line, nullptr);
  if (status != SMELT_OK) {
    print_error(status);
    smelt_run_free(run);
    return exit_code_for(status);
  }
  OwnedString summary;
  if (smelt_run_result_json(run, &summary.value) == SMELT_OK)
    std::printf("%s\n", summary.value);
  smelt_run_free(run);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"iterative artifact refinement engine"};
  app.require_subcommand(1);

  std::string config_path, artifact_dir, run_dir, fixture, out_path, what;
  std::int64_t seed = -1;
  int replicates = 10;
  int at_iteration = 1;

  auto* run_cmd = app.add_subcommand("run", "start a refinement run");
  run_cmd->add_option("--config", config_path, "config file")->required();
  run_cmd->add_option("--artifact", artifact_dir, "base artifact directory")
      ->required();
  run_cmd->add_option("--out", run_dir, "run directory to create")->required();
  run_cmd->add_option("--seed", seed, "seed override");

  auto* resume_cmd = app.add_subcommand("resume", "continue an interrupted run");
  resume_cmd->add_option("--run", run_dir, "run directory")->required();

  auto* bench_cmd =
      app.add_subcommand("bench", "run a synthetic convergence experiment");
  bench_cmd->add_option("--fixture", fixture, "fixture id or space file")
      ->required();
  bench_cmd->add_option("--replicates", replicates, "number of seeded runs");
  bench_cmd->add_option("--out", out_path, "report CSV path")->required();
  bench_cmd->add_option("--seed", seed, "base seed");

  auto* inspect_cmd = app.add_subcommand("inspect", "print stored run records");
  inspect_cmd->add_option("--run", run_dir, "run directory")->required();
  inspect_cmd
      ->add_option("--what", what, "distribution | history | feedback")
      ->required();
  inspect_cmd->add_option("--at", at_iteration, "iteration")->required();

  auto* validate_cmd =
      app.add_subcommand("validate-config", "check a config file");
  validate_cmd->add_option("--config", config_path, "config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (run_cmd->parsed()) {
    smelt_run* run = nullptr;
    const smelt_status status = smelt_run_new(
        config_path.c_str(), artifact_dir.c_str(), run_dir.c_str(), seed, &run);
    if (status != SMELT_OK) {
      print_error(status);
      return exit_code_for(status);
    }
    return execute_run(run);
  }

  if (resume_cmd->parsed()) {
    smelt_run* run = nullptr;
    const smelt_status status = smelt_run_resume(run_dir.c_str(), &run);
    if (status != SMELT_OK) {
      print_error(status);
      return exit_code_for(status);
    }
    return execute_run(run);
  }

  if (bench_cmd->parsed()) {
    OwnedString summary;
    const smelt_status status = smelt_bench(
        fixture.c_str(), replicates, out_path.c_str(), seed, &summary.value);
    if (status != SMELT_OK) {
      print_error(status);
      return exit_code_for(status);
    }
    std::printf("%s\n", summary.value);
    return kExitOk;
  }

  if (inspect_cmd->parsed()) {
    OwnedString text;
    const smelt_status status =
        smelt_inspect(run_dir.c_str(), what.c_str(), at_iteration, &text.value);
    if (status != SMELT_OK) {
      print_error(status);
      return exit_code_for(status);
    }
    std::fputs(text.value, stdout);
    return kExitOk;
  }

  if (validate_cmd->parsed()) {
    OwnedString diagnostics;
    const smelt_status status =
        smelt_config_validate(config_path.c_str(), &diagnostics.value);
    if (status == SMELT_OK) {
      std::printf("config ok\n");
      return kExitOk;
    }
    if (diagnostics.value != nullptr && diagnostics.value[0] != '\0')
      std::fputs(diagnostics.value, stderr);
    else
      print_error(status);
    return exit_code_for(status);
  }

  return kExitUsage;
}
