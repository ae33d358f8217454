#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace smelt {

enum class ContextOrigin {
  test_failure,
  structural_finding,
  verify_finding,
  log_excerpt,
  code_excerpt,
  prior_feedback,
};

const char* context_origin_name(ContextOrigin origin);
ContextOrigin context_origin_from_name(const std::string& name);

enum class SeverityClass { low, high };

struct ContextItem {
  std::string id;
  std::string payload;
  std::size_t size = 0;  // payload length in context units
  ContextOrigin origin = ContextOrigin::prior_feedback;
  int iteration = 0;
  SeverityClass severity_class = SeverityClass::low;
  std::uint64_t failure_count = 0;  // cumulative failures of the source clause
  double complexity = 0.0;          // supplied by the producer
  bool anomalous_logs = false;
  std::string clause_id;  // source clause, when the item describes one
};

struct ScoringWeights {
  double theta1 = 1.0;  // recent test/verify failure
  double theta2 = 1.0;  // high severity
  double theta3 = 1.0;  // log(1 + failure_count)
  double theta4 = 1.0;  // structural complexity
  double theta5 = 1.0;  // anomalous logs
};

inline constexpr int kDefaultRecencyWindow = 3;

double score_item(const ContextItem& x, const ScoringWeights& w,
                  int current_iteration,
                  int recency_window = kDefaultRecencyWindow);

/// Structured filter over the history; empty origin set means any origin.
struct ContextQuery {
  std::set<ContextOrigin> origins;
  std::optional<int> iteration_min;
  std::optional<int> iteration_max;
  int current_iteration = 0;
  int recency_window = kDefaultRecencyWindow;
};

struct ContextBundle {
  std::vector<std::string> items;  // item ids, descending score
  std::size_t total_size = 0;
  double total_score = 0.0;
};

/// Budget-constrained selection maximizing total score. Exact
/// branch-and-bound for up to 25 matching items, greedy by score density
/// with a single-swap improvement pass beyond that. The byte budget is a
/// hard constraint in both paths.
ContextBundle select_context(const std::vector<ContextItem>& items,
                             const ScoringWeights& w, std::size_t budget,
                             const ContextQuery& query);

/// Append-only item store backing H_t. Appends assign sequential ids;
/// reads return copies so selection always runs on an immutable snapshot.
class HistoryStore {
 public:
  HistoryStore() = default;
  /// Persisted store: appends are also written to `path` as one JSON record
  /// per line; existing records are loaded on construction.
  explicit HistoryStore(std::filesystem::path path);

  std::string append(ContextItem item);

  std::optional<ContextItem> fetch(const std::string& id) const;
  std::vector<ContextItem> filter(const ContextQuery& query) const;
  std::vector<ContextItem> all() const;
  std::size_t size() const;

  /// Failures recorded so far for a clause (drives ContextItem::failure_count).
  std::uint64_t failure_count(const std::string& clause_id) const;

 private:
  mutable std::mutex mutex_;
  std::vector<ContextItem> items_;
  std::filesystem::path path_;  // empty = in-memory only
};

/// Items concatenated in descending-score order with origin headers; the
/// form handed to generators.
std::string render_bundle(const ContextBundle& bundle,
                          const HistoryStore& store);

}  // namespace smelt
