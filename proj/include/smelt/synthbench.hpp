#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "smelt/config.hpp"
#include "smelt/generator.hpp"
#include "smelt/hypothesis.hpp"
#include "smelt/metrics.hpp"
#include "smelt/orchestrator.hpp"

namespace smelt {

/// A spec clause whose outcome is a pure function of the symbol vector.
struct SyntheticClause {
  enum class Predicate { slot_equals, slot_distance, sum_equals, sum_parity };

  SpecClause clause;
  Predicate predicate = Predicate::slot_equals;
  int slot = 0;
  int target = 0;
  double penalty = 1.0;  // structural penalty factor
};

/// Enumerable hypothesis space: one symbol per slot, single-slot mutations
/// as the neighborhood, all four feedback channels derived from the vector.
struct SyntheticSpace {
  std::string id;
  std::vector<int> dimensions;  // alphabet size per slot
  std::vector<SyntheticClause> clauses;
  std::vector<std::pair<int, std::vector<SyntheticClause>>> demand_schedule;
  std::optional<std::vector<int>> planted_optimum;
  std::vector<int> initial;          // the C_0 vector
  bool log_probe = true;             // emit a distance-based anomaly trace
  std::vector<int> probe_reference;  // defaults to the plant, else zeros

  std::uint64_t size() const;
};

inline constexpr double kSyntheticHorizon = 10.0;
inline constexpr std::uint64_t kBruteForceCap = 100000;

/// The genome file encoding "s<i> = <symbol>" used for synthetic artifacts.
ArtifactSnapshot genome_snapshot(const std::vector<int>& symbols);

/// Strict inverse of genome_snapshot; raises on any malformed content so
/// that arbitrary mutations degrade to maximal-error candidates.
std::vector<int> parse_genome(const ArtifactSnapshot& snap,
                              const std::vector<int>& dimensions);

/// Registers the space's clause builtins and trace probe process-wide.
void register_space(const SyntheticSpace& space);

Specification initial_spec(const SyntheticSpace& space);

/// Ready-to-run configuration for convergence experiments on this space.
RunConfig bench_config(const SyntheticSpace& space);

/// Proposes single-slot mutations of the incumbent vector; cycles through
/// the shuffled neighbor list when asked for more proposals than neighbors.
std::shared_ptr<Generator> make_space_generator(const SyntheticSpace& space);

/// Resolves a shipped fixture id (or a path to a space JSON file) and
/// registers its builtins.
std::shared_ptr<Generator> make_fixture_generator(const std::string& fixture);

SyntheticSpace fixture(const std::string& id);
std::vector<std::string> fixture_ids();

nlohmann::json space_to_json(const SyntheticSpace& space);
SyntheticSpace space_from_json(const nlohmann::json& j);

/// Composite error evaluated directly from the symbol vector, bypassing the
/// verification engine entirely; the search oracle.
double direct_delta(const SyntheticSpace& space, const Specification& spec,
                    const ErrorWeights& weights,
                    const std::vector<int>& symbols);

struct BruteForceResult {
  double min_delta = 1.0;
  std::vector<std::vector<int>> argmin;  // lexicographic order
};

/// Exhaustive sweep over the whole space; refuses spaces above the cap.
BruteForceResult brute_force_min_delta(const SyntheticSpace& space,
                                       const Specification& spec,
                                       const ErrorWeights& weights);

struct ReplicateRow {
  std::uint64_t seed = 0;
  bool success = false;
  int iterations = 0;
  double final_delta = 1.0;
  int reconverged = -1;  // 1/0, -1 = no demand events in the fixture
  std::vector<double> trajectory;  // best-so-far delta per iteration
};

struct ExperimentResult {
  std::string space_id;
  std::vector<ReplicateRow> rows;
  double success_rate = 0.0;
  double median_iterations = 0.0;
};

struct ConvergenceExperiment {
  SyntheticSpace space;
  RunConfig config;  // typically bench_config(space) with overrides
  int replicates = 10;
  std::uint64_t base_seed = 1;  // replicate i runs with seed base_seed + i
  int parallelism = 0;          // 0 = hardware concurrency
};

ExperimentResult run_experiment(const ConvergenceExperiment& exp);

/// Per-replicate RunResults in seed order, for callers that need records.
std::vector<RunResult> run_replicates(const ConvergenceExperiment& exp);

/// CSV with a fixed column schema plus a trailing summary record;
/// byte-identical for identical tables.
void emit_report(const ExperimentResult& result,
                 const std::filesystem::path& path);

}  // namespace smelt
