#include "smelt.h"

#include <cstring>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "smelt/config.hpp"
#include "smelt/error.hpp"
#include "smelt/hypothesis.hpp"
#include "smelt/orchestrator.hpp"
#include "smelt/synthbench.hpp"
#include "smelt/util.hpp"

namespace {

thread_local std::string g_last_error;

smelt_status status_from(smelt::Errc code) {
  using smelt::Errc;
  switch (code) {
    case Errc::invalid_argument:
    case Errc::input_shape:
    case Errc::invalid_trace:
    case Errc::no_signal:
      return SMELT_ERR_INVALID_ARGUMENT;
    case Errc::config:
      return SMELT_ERR_CONFIG;
    case Errc::io:
    case Errc::materialization:
      return SMELT_ERR_IO;
    case Errc::not_found:
      return SMELT_ERR_NOT_FOUND;
    case Errc::aborted:
      return SMELT_ERR_ABORTED;
    case Errc::remote:
    case Errc::internal:
      return SMELT_ERR_INTERNAL;
  }
  return SMELT_ERR_INTERNAL;
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(::malloc(s.size() + 1));
  if (out != nullptr) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <typename Fn>
smelt_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const smelt::Error& e) {
    g_last_error = e.what();
    return status_from(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SMELT_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return SMELT_ERR_INTERNAL;
  }
}

nlohmann::json result_summary(const smelt::RunResult& result) {
  return nlohmann::json{
      {"reason", smelt::termination_reason_name(result.reason)},
      {"final_candidate", result.final_candidate},
      {"final_delta", result.final_delta},
      {"final_mu", result.final_mu},
      {"iterations", result.iterations},
      {"spec_version", result.spec_version}};
}

}  // namespace

struct smelt_run {
  // exactly one of these modes is armed before execute()
  bool is_resume = false;
  std::filesystem::path run_dir;
  smelt::RunSetup setup;
  std::optional<smelt::RunResult> result;
};

extern "C" {

const char* smelt_version(void) { return "0.1.0"; }

const char* smelt_last_error(void) { return g_last_error.c_str(); }

void smelt_string_free(char* s) { ::free(s); }

smelt_status smelt_config_validate(const char* config_path,
                                   char** diagnostics_out) {
  if (diagnostics_out != nullptr) *diagnostics_out = nullptr;
  if (config_path == nullptr) {
    g_last_error = "config_path is NULL";
    return SMELT_ERR_INVALID_ARGUMENT;
  }
  return guarded([&]() {
    std::vector<std::string> diagnostics;
    smelt::load_config(config_path, diagnostics);
    if (diagnostics_out != nullptr) {
      std::string joined;
      for (const auto& d : diagnostics) {
        joined += d;
        joined += '\n';
      }
      *diagnostics_out = copy_string(joined);
    }
    if (!diagnostics.empty()) {
      g_last_error = diagnostics.front();
      return SMELT_ERR_CONFIG;
    }
    return SMELT_OK;
  });
}

smelt_status smelt_run_new(const char* config_path, const char* artifact_dir,
                           const char* run_dir, int64_t seed_override,
                           smelt_run** out) {
  if (out == nullptr || config_path == nullptr || artifact_dir == nullptr ||
      run_dir == nullptr) {
    g_last_error = "NULL argument";
    return SMELT_ERR_INVALID_ARGUMENT;
  }
  *out = nullptr;
  return guarded([&]() {
    std::vector<std::string> diagnostics;
    smelt::RunConfig cfg = smelt::load_config(config_path, diagnostics);
    if (!diagnostics.empty()) {
      std::string joined;
      for (const auto& d : diagnostics) {
        if (!joined.empty()) joined += "; ";
        joined += d;
      }
      g_last_error = joined;
      return SMELT_ERR_CONFIG;
    }
    if (std::filesystem::exists(std::filesystem::path(run_dir) /
                                "config.json")) {
      g_last_error = std::string("run directory '") + run_dir +
                     "' already holds a run (use resume)";
      return SMELT_ERR_INVALID_ARGUMENT;
    }
    auto handle = std::make_unique<smelt_run>();
    handle->setup.cfg = std::move(cfg);
    if (seed_override >= 0)
      handle->setup.cfg.seed = static_cast<std::uint64_t>(seed_override);
    handle->setup.base = smelt::snapshot_from_directory(artifact_dir);
    handle->setup.run_dir = run_dir;
    *out = handle.release();
    return SMELT_OK;
  });
}

smelt_status smelt_run_resume(const char* run_dir, smelt_run** out) {
  if (out == nullptr || run_dir == nullptr) {
    g_last_error = "NULL argument";
    return SMELT_ERR_INVALID_ARGUMENT;
  }
  *out = nullptr;
  return guarded([&]() {
    auto handle = std::make_unique<smelt_run>();
    handle->is_resume = true;
    handle->run_dir = run_dir;
    if (!std::filesystem::exists(handle->run_dir / "config.json")) {
      g_last_error = std::string("no run found at '") + run_dir + "'";
      return SMELT_ERR_NOT_FOUND;
    }
    *out = handle.release();
    return SMELT_OK;
  });
}

smelt_status smelt_run_execute(smelt_run* run, smelt_progress_fn progress,
                               void* user) {
  if (run == nullptr) {
    g_last_error = "run handle is NULL";
    return SMELT_ERR_INVALID_ARGUMENT;
  }
  return guarded([&]() {
    smelt::ProgressFn cb;
    if (progress != nullptr)
      cb = [progress, user](const smelt::IterationRecord& record) {
        progress(user, record.t, record.best_delta,
                 static_cast<int>(record.pool.size()), record.cache_hit_rate);
      };
    if (run->is_resume)
      run->result = smelt::resume(run->run_dir, cb);
    else {
      run->setup.progress = cb;
      run->result = smelt::run(run->setup);
    }
    return SMELT_OK;
  });
}

smelt_status smelt_run_result_json(smelt_run* run, char** json_out) {
  if (run == nullptr || json_out == nullptr) {
    g_last_error = "NULL argument";
    return SMELT_ERR_INVALID_ARGUMENT;
  }
  *json_out = nullptr;
  if (!run->result.has_value()) {
    g_last_error = "run has not been executed";
    return SMELT_ERR_INVALID_ARGUMENT;
  }
  return guarded([&]() {
    *json_out = copy_string(result_summary(*run->result).dump());
    return SMELT_OK;
  });
}

void smelt_run_free(smelt_run* run) { delete run; }

smelt_status smelt_bench(const char* fixture, int replicates,
                         const char* out_path, int64_t base_seed,
                         char** summary_json_out) {
  if (summary_json_out != nullptr) *summary_json_out = nullptr;
  if (fixture == nullptr || out_path == nullptr) {
    g_last_error = "NULL argument";
    return SMELT_ERR_INVALID_ARGUMENT;
  }
  if (replicates < 1) {
    g_last_error = "replicates must be at least 1";
    return SMELT_ERR_INVALID_ARGUMENT;
  }
  return guarded([&]() {
    smelt::ConvergenceExperiment exp;
    exp.space = smelt::fixture(fixture);
    exp.config = smelt::bench_config(exp.space);
    exp.replicates = replicates;
    exp.base_seed = base_seed >= 0 ? static_cast<std::uint64_t>(base_seed) : 1;
    const smelt::ExperimentResult result = smelt::run_experiment(exp);
    smelt::emit_report(result, out_path);
    if (summary_json_out != nullptr) {
      nlohmann::json j{{"fixture", result.space_id},
                       {"replicates", replicates},
                       {"success_rate", result.success_rate},
                       {"median_iterations", result.median_iterations},
                       {"report", out_path}};
      *summary_json_out = copy_string(j.dump());
    }
    return SMELT_OK;
  });
}

smelt_status smelt_inspect(const char* run_dir, const char* what, int t,
                           char** text_out) {
  if (run_dir == nullptr || what == nullptr || text_out == nullptr) {
    g_last_error = "NULL argument";
    return SMELT_ERR_INVALID_ARGUMENT;
  }
  *text_out = nullptr;
  return guarded([&]() {
    *text_out = copy_string(smelt::inspect_run(run_dir, what, t));
    return SMELT_OK;
  });
}

}  // extern "C"
