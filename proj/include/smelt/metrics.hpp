#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace smelt {

enum class ClauseKind { test, structural, verify };

const char* clause_kind_name(ClauseKind kind);
ClauseKind clause_kind_from_name(const std::string& name);

/// One weighted demand; weight plays the role of the per-channel clause
/// weight (test, structural or verify, depending on kind).
struct SpecClause {
  std::string id;
  ClauseKind kind = ClauseKind::test;
  double weight = 1.0;
  std::string description;
};

/// Ordered, append-only clause set. Extensions bump the version by one and
/// may only add clauses with fresh ids.
class Specification {
 public:
  Specification() = default;
  explicit Specification(std::vector<SpecClause> clauses, int version = 0);

  const std::vector<SpecClause>& clauses() const { return clauses_; }
  int version() const { return version_; }
  std::size_t size() const { return clauses_.size(); }

  const SpecClause* find(const std::string& clause_id) const;
  std::vector<const SpecClause*> of_kind(ClauseKind kind) const;

  /// Appends new clauses and bumps the version. Duplicate ids are rejected.
  Specification extended(const std::vector<SpecClause>& new_clauses) const;

  /// Human-readable clause list handed to generators.
  std::string digest_text() const;

 private:
  std::vector<SpecClause> clauses_;
  int version_ = 0;
};

struct TestOutcome {
  std::string clause_id;
  bool passed = false;
};

struct StructuralOutcome {
  std::string clause_id;
  double severity = 0.0;  // in [0,1], 0 when not violated
  double penalty = 0.0;   // in [0,1]
  bool violated = false;
};

struct VerifyOutcome {
  std::string clause_id;
  bool holds = false;
};

struct LogSample {
  double time = 0.0;
  double level = 0.0;  // anomaly level in [0,1]
};

/// Discretized anomaly curve; interpreted as the piecewise-linear
/// interpolant of its samples over [0, horizon].
struct LogTrace {
  double horizon = 0.0;
  std::vector<LogSample> samples;  // strictly increasing times, 0..horizon
};

struct ErrorWeights {
  double alpha_test = 1.0;
  double alpha_struct = 1.0;
  double alpha_verify = 1.0;
  double alpha_logs = 1.0;
};

enum class Channel : std::uint8_t { test = 0, structural = 1, verify = 2, logs = 3 };

/// Which of the four feedback channels carry signal for an evaluation.
/// A spec without clauses of some kind drops that channel entirely.
struct ChannelSet {
  std::array<bool, 4> present{false, false, false, false};

  bool has(Channel c) const { return present[static_cast<std::size_t>(c)]; }
  void set(Channel c, bool value = true) {
    present[static_cast<std::size_t>(c)] = value;
  }
  bool empty() const {
    return !present[0] && !present[1] && !present[2] && !present[3];
  }
  static ChannelSet all() { return ChannelSet{{true, true, true, true}}; }
};

struct FeedbackVector {
  double e_test = 0.0;
  double e_struct = 0.0;
  double e_verify = 0.0;
  double e_logs = 0.0;
};

/// Fraction of clauses satisfied. `satisfied` must contain exactly one entry
/// per clause in the spec, keyed by clause id.
double compute_mu(const std::unordered_map<std::string, bool>& satisfied,
                  const Specification& spec);

/// Weighted test failure ratio; nullopt when the spec has no test clauses.
std::optional<double> compute_test_error(const std::vector<TestOutcome>& outcomes,
                                         const Specification& spec);

/// Weighted severity*penalty ratio over structural clauses.
std::optional<double> compute_struct_error(
    const std::vector<StructuralOutcome>& outcomes, const Specification& spec);

/// Weighted failed-property ratio over verify clauses.
std::optional<double> compute_verify_error(
    const std::vector<VerifyOutcome>& outcomes, const Specification& spec);

/// Mean anomaly level: trapezoidal integral of the trace divided by its
/// horizon. Exact for piecewise-linear anomaly curves.
double compute_log_error(const LogTrace& trace);

/// Weighted average of the present channel errors, normalized by the sum of
/// the participating weights so the result stays in [0,1].
double aggregate_delta(const FeedbackVector& f, const ErrorWeights& w,
                       const ChannelSet& present);

}  // namespace smelt
