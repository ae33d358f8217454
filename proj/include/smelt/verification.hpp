#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "smelt/context.hpp"
#include "smelt/hypothesis.hpp"
#include "smelt/metrics.hpp"

namespace smelt {

enum class RunnerParser { exit_code, severity_json, trace_json };

const char* runner_parser_name(RunnerParser parser);
RunnerParser runner_parser_from_name(const std::string& name);

/// Binds one clause (or trace probe) to something executable: either an
/// external command (argv; "{workdir}" expands to the candidate's isolated
/// directory) or a registered in-process builtin.
struct ChannelRunner {
  std::string clause_id;              // spec clause id, or probe id
  std::vector<std::string> command;   // empty when builtin is set
  std::string builtin;                // registered builtin id
  double timeout_seconds = 60.0;
  RunnerParser parser = RunnerParser::exit_code;
};

/// What a builtin computes from a materialized snapshot. Only the fields
/// matching the runner's parser are consulted.
struct BuiltinResult {
  bool passed = true;
  double severity = 0.0;
  double penalty = 0.0;
  bool violated = false;
  bool holds = true;
  std::vector<LogSample> trace;
};

using BuiltinFn = std::function<BuiltinResult(const ArtifactSnapshot&)>;

/// Process-wide registry resolving builtin runner ids; lets synthetic
/// fixtures run all four channels without subprocesses.
class BuiltinRegistry {
 public:
  static BuiltinRegistry& instance();

  void add(const std::string& id, BuiltinFn fn);
  std::optional<BuiltinFn> find(const std::string& id) const;
  bool contains(const std::string& id) const;

 private:
  mutable std::mutex mutex_;
  std::unordered_map<std::string, BuiltinFn> fns_;
};

/// Normalized result of one runner execution; the cache payload.
struct ClauseResult {
  std::string clause_id;
  bool crashed = false;
  bool timed_out = false;
  bool passed = false;
  double severity = 0.0;
  double penalty = 0.0;
  bool violated = false;
  bool holds = false;
  std::vector<LogSample> trace_points;
  std::string excerpt;  // failure context for crash reporting
};

/// (candidate content hash, clause id, clause+runner definition hash);
/// the definition hash makes spec evolution cache-correct with no flushes.
std::string cache_key(const std::string& candidate_id,
                      const std::string& clause_id,
                      const std::string& definition_hash);

std::string runner_definition_hash(const SpecClause* clause,
                                   const ChannelRunner& runner,
                                   double log_horizon,
                                   const std::vector<std::string>& patterns);

/// Hit-or-miss store for ClauseResults, optionally persisted one JSON file
/// per hex key. Concurrent reads, serialized writes.
class VerificationCache {
 public:
  VerificationCache() = default;
  explicit VerificationCache(std::filesystem::path dir);

  std::optional<ClauseResult> get(const std::string& key);
  void put(const std::string& key, const ClauseResult& result);
  std::size_t invalidate(const std::vector<std::string>& clause_ids);
  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::unordered_map<std::string, ClauseResult> entries_;
  std::filesystem::path dir_;  // empty = memory only
};

struct VerificationReport {
  std::string candidate_id;
  std::vector<TestOutcome> test_outcomes;            // clause-id order
  std::vector<StructuralOutcome> structural_outcomes;
  std::vector<VerifyOutcome> verify_outcomes;
  LogTrace log_trace;
  FeedbackVector feedback;
  ChannelSet channels;
  double delta = 1.0;
  double mu = 0.0;
  bool materialization_failed = false;
  double wall_seconds = 0.0;
  int cache_hits = 0;
  /// log_excerpt items describing runner crashes; iteration and failure
  /// counts are filled in by the orchestrator when it appends them.
  std::vector<ContextItem> incidents;
};

/// Canonical JSON form; timing is excluded unless requested so reports can
/// be compared across schedules.
std::string report_to_json(const VerificationReport& report,
                           bool include_timing = false);

struct VerificationConfig {
  ErrorWeights weights;
  double log_horizon = 10.0;
  std::vector<std::string> anomaly_patterns;
  std::filesystem::path workdir_root;  // required for command runners
  std::filesystem::path cache_dir;     // empty = in-memory cache
};

/// The composite oracle: runs every channel for a candidate with bounded
/// concurrency, merges outcomes deterministically, and caches per-clause
/// results. The report is a pure function of (candidate, spec, runners)
/// regardless of worker_count.
class VerificationEngine {
 public:
  VerificationEngine(ArtifactSnapshot base, VerificationConfig cfg);

  /// Replaces the runner set. Runners whose clause_id matches a spec clause
  /// feed that clause's channel; parser trace_json marks a pure trace probe.
  void set_runners(std::vector<ChannelRunner> runners);

  VerificationReport verify(const Candidate& candidate,
                            const Specification& spec, int worker_count);

  std::size_t invalidate(const std::vector<std::string>& clause_ids);

  /// Actual executions (cache misses) per runner id; probes included.
  std::uint64_t execution_count(const std::string& clause_id) const;
  std::uint64_t total_executions() const;

  const ArtifactSnapshot& base() const { return base_; }
  const VerificationConfig& config() const { return cfg_; }

 private:
  ArtifactSnapshot base_;
  VerificationConfig cfg_;
  std::vector<ChannelRunner> runners_;
  VerificationCache cache_;
  mutable std::mutex counter_mutex_;
  std::unordered_map<std::string, std::uint64_t> executions_;
};

/// Assembles the piecewise-linear anomaly trace: clamps, sorts, collapses
/// duplicate times to the max level, and pads the endpoints with zeros.
LogTrace build_trace(std::vector<LogSample> points, double horizon);

}  // namespace smelt
