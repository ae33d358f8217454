#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "smelt/context.hpp"
#include "smelt/distribution.hpp"
#include "smelt/generator.hpp"
#include "smelt/metrics.hpp"
#include "smelt/verification.hpp"

namespace smelt {

struct TerminationConfig {
  double delta_threshold = 0.0;
  int max_iterations = 50;
  int stall_window = 10;
};

/// A spec clause together with the runner that evaluates it.
struct ClauseBinding {
  SpecClause clause;
  ChannelRunner runner;
};

struct DemandEventConfig {
  int at_iteration = 1;
  std::vector<ClauseBinding> clauses;
};

/// Full run configuration; mirrors the on-disk JSON config one to one.
struct RunConfig {
  ErrorWeights weights;
  SearchConfig search;
  ScoringWeights scoring;
  int recency_window = kDefaultRecencyWindow;
  std::size_t context_budget = 4096;
  int worker_count = 4;
  std::uint64_t seed = 0;
  TerminationConfig termination;
  double log_horizon = 10.0;
  std::vector<std::string> anomaly_patterns;
  int max_history_items_per_iteration = 32;

  std::string generator_kind = "mutation";  // mutation | remote | synthetic
  MutationConfig mutation;
  RemoteConfig remote;
  std::string synthetic_space;  // fixture id when generator_kind == synthetic
  int proposals_per_iteration = 0;  // 0 = refill to pool size automatically

  std::vector<ClauseBinding> clauses;
  std::vector<ChannelRunner> trace_probes;
  std::vector<DemandEventConfig> demands;
};

/// Parses best-effort, appending one human-readable message per offending
/// field to `diagnostics`. The result is only meaningful when no
/// diagnostics were added.
RunConfig config_from_json(const nlohmann::json& j,
                           std::vector<std::string>& diagnostics);

nlohmann::json config_to_json(const RunConfig& cfg);

/// Loads and fully validates; file-level problems (missing file, bad JSON)
/// become diagnostics too.
RunConfig load_config(const std::filesystem::path& path,
                      std::vector<std::string>& diagnostics);

/// Semantic checks beyond JSON shape (positive weights, runner/clause
/// compatibility, demand ordering, ...).
void validate_config(const RunConfig& cfg, std::vector<std::string>& diagnostics);

}  // namespace smelt
