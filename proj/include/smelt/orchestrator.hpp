#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "smelt/config.hpp"
#include "smelt/context.hpp"
#include "smelt/distribution.hpp"
#include "smelt/generator.hpp"
#include "smelt/hypothesis.hpp"
#include "smelt/metrics.hpp"
#include "smelt/verification.hpp"

namespace smelt {

/// Runtime extension of the specification.
struct DemandEvent {
  int at_iteration = 1;
  std::vector<SpecClause> new_clauses;
};

/// extend_spec: version+1 with clauses appended; duplicate ids rejected.
/// Tracked candidates keep their stale deltas and are recomputed lazily at
/// their next evaluation.
Specification extend_spec(const Specification& spec,
                          const std::vector<SpecClause>& new_clauses);

struct EvaluatedCandidate {
  double delta = 1.0;
  double mu = 0.0;
  FeedbackVector feedback;
};

struct DistributionEntry {
  std::string id;
  double mass = 0.0;
  std::optional<double> last_delta;
};

struct IterationRecord {
  int t = 0;
  int spec_version = 0;
  std::vector<std::string> pool;  // candidate ids evaluated this iteration
  std::map<std::string, EvaluatedCandidate> evaluated;
  std::vector<DistributionEntry> distribution;  // post-update snapshot
  double best_delta = 1.0;        // best within the current spec version
  std::string best_candidate;
  double cache_hit_rate = 0.0;
  double wall_seconds = 0.0;
};

nlohmann::json record_to_json(const IterationRecord& record);
IterationRecord record_from_json(const nlohmann::json& j);

enum class TerminationReason { success, budget, stall };
const char* termination_reason_name(TerminationReason reason);

struct RunResult {
  TerminationReason reason = TerminationReason::budget;
  bool completed = true;  // false when stopped by the interrupt hook
  std::string final_candidate;
  std::optional<Candidate> final;  // edit sequence of the final candidate
  double final_delta = 1.0;
  double final_mu = 0.0;
  int iterations = 0;
  int spec_version = 0;
  std::vector<IterationRecord> records;
};

using ProgressFn = std::function<void(const IterationRecord&)>;

/// Everything a run needs beyond the config: the base artifact, an optional
/// generator override, persistence location (empty = in-memory run) and
/// test hooks.
struct RunSetup {
  ArtifactSnapshot base;
  RunConfig cfg;
  std::shared_ptr<Generator> generator;  // built from cfg when null
  std::filesystem::path run_dir;         // empty = no persistence
  std::optional<int> stop_after;         // clean interrupt after iteration t
  ProgressFn progress;
};

/// Propose / verify / aggregate / re-weight / record until the termination
/// rule fires. Success requires the composite error at or below the
/// threshold and no demand events still pending.
RunResult run(const RunSetup& setup);

/// Continues an interrupted run; same record stream as an uninterrupted run
/// with identical seed and deterministic runners. A completed run is a
/// no-op returning the stored result.
RunResult resume(const std::filesystem::path& run_dir,
                 const ProgressFn& progress = {},
                 std::optional<int> stop_after = std::nullopt);

/// Renders one stored aspect of a run ("distribution", "history",
/// "feedback") at iteration `t` as plain text.
std::string inspect_run(const std::filesystem::path& run_dir,
                        const std::string& what, int t);

/// Builds the generator named by the config (mutation, remote with env
/// overrides, or a registered synthetic space).
std::shared_ptr<Generator> make_generator_from_config(const RunConfig& cfg);

}  // namespace smelt
