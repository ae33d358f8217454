#include "smelt/context.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "smelt/error.hpp"
#include "smelt/util.hpp"

namespace smelt {

const char* context_origin_name(ContextOrigin origin) {
  switch (origin) {
    case ContextOrigin::test_failure: return "test_failure";
    case ContextOrigin::structural_finding: return "structural_finding";
    case ContextOrigin::verify_finding: return "verify_finding";
    case ContextOrigin::log_excerpt: return "log_excerpt";
    case ContextOrigin::code_excerpt: return "code_excerpt";
    case ContextOrigin::prior_feedback: return "prior_feedback";
  }
  return "unknown";
}

ContextOrigin context_origin_from_name(const std::string& name) {
  if (name == "test_failure") return ContextOrigin::test_failure;
  if (name == "structural_finding") return ContextOrigin::structural_finding;
  if (name == "verify_finding") return ContextOrigin::verify_finding;
  if (name == "log_excerpt") return ContextOrigin::log_excerpt;
  if (name == "code_excerpt") return ContextOrigin::code_excerpt;
  if (name == "prior_feedback") return ContextOrigin::prior_feedback;
  raise(Errc::config, "unknown context origin '" + name + "'");
}

double score_item(const ContextItem& x, const ScoringWeights& w,
                  int current_iteration, int recency_window) {
  double score = 0.0;
  const bool failure_origin = x.origin == ContextOrigin::test_failure ||
                              x.origin == ContextOrigin::verify_finding;
  if (failure_origin && x.iteration >= current_iteration - recency_window)
    score += w.theta1;
  if (x.severity_class == SeverityClass::high) score += w.theta2;
  score += w.theta3 * std::log1p(static_cast<double>(x.failure_count));
  score += w.theta4 * x.complexity;
  if (x.anomalous_logs) score += w.theta5;
  return score;
}

namespace {

struct Scored {
  const ContextItem* item;
  double score;
};

bool matches(const ContextItem& x, const ContextQuery& q) {
  if (!q.origins.empty() && q.origins.find(x.origin) == q.origins.end())
    return false;
  if (q.iteration_min && x.iteration < *q.iteration_min) return false;
  if (q.iteration_max && x.iteration > *q.iteration_max) return false;
  return true;
}

ContextBundle bundle_from(const std::vector<Scored>& items,
                          const std::vector<std::size_t>& picked) {
  std::vector<std::pair<double, const ContextItem*>> chosen;
  ContextBundle bundle;
  for (std::size_t i : picked) {
    chosen.emplace_back(items[i].score, items[i].item);
    bundle.total_size += items[i].item->size;
    bundle.total_score += items[i].score;
  }
  std::sort(chosen.begin(), chosen.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second->id < b.second->id;
  });
  for (const auto& [score, item] : chosen) bundle.items.push_back(item->id);
  return bundle;
}

// Exact 0/1 knapsack via depth-first branch and bound with the fractional
// relaxation as the upper bound. Items must be sorted by density descending.
class ExactSolver {
 public:
  ExactSolver(const std::vector<Scored>& items, std::size_t budget)
      : items_(items), budget_(budget) {}

  std::vector<std::size_t> solve() {
    current_.clear();
    best_.clear();
    best_score_ = 0.0;
    descend(0, 0, 0.0);
    return best_;
  }

 private:
  double fractional_bound(std::size_t idx, std::size_t used) const {
    double bound = 0.0;
    std::size_t room = budget_ - used;
    for (std::size_t i = idx; i < items_.size() && room > 0; ++i) {
      const std::size_t sz = items_[i].item->size;
      if (sz <= room) {
        bound += items_[i].score;
        room -= sz;
      } else {
        bound += items_[i].score * static_cast<double>(room) /
                 static_cast<double>(sz);
        break;
      }
    }
    return bound;
  }

  void descend(std::size_t idx, std::size_t used, double score) {
    if (score > best_score_) {
      best_score_ = score;
      best_ = current_;
    }
    if (idx >= items_.size()) return;
    if (score + fractional_bound(idx, used) <= best_score_) return;

    const std::size_t sz = items_[idx].item->size;
    if (used + sz <= budget_) {
      current_.push_back(idx);
      descend(idx + 1, used + sz, score + items_[idx].score);
      current_.pop_back();
    }
    descend(idx + 1, used, score);
  }

  const std::vector<Scored>& items_;
  std::size_t budget_;
  std::vector<std::size_t> current_;
  std::vector<std::size_t> best_;
  double best_score_ = 0.0;
};

std::vector<std::size_t> greedy_with_swap(const std::vector<Scored>& items,
                                          std::size_t budget) {
  std::vector<bool> in_bundle(items.size(), false);
  std::size_t used = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (used + items[i].item->size <= budget) {
      in_bundle[i] = true;
      used += items[i].item->size;
    }
  }

  // A lone high-score item can beat the whole density greedy pick.
  double greedy_score = 0.0;
  for (std::size_t i = 0; i < items.size(); ++i)
    if (in_bundle[i]) greedy_score += items[i].score;
  std::size_t best_single = items.size();
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].item->size > budget) continue;
    if (best_single == items.size() ||
        items[i].score > items[best_single].score)
      best_single = i;
  }
  if (best_single != items.size() && items[best_single].score > greedy_score) {
    std::fill(in_bundle.begin(), in_bundle.end(), false);
    in_bundle[best_single] = true;
    used = items[best_single].item->size;
  }

  // One improvement pass: each excluded item may displace the single
  // included item whose removal both frees enough room and costs less score
  // than the newcomer adds.
  for (std::size_t u = 0; u < items.size(); ++u) {
    if (in_bundle[u]) continue;
    const std::size_t u_size = items[u].item->size;
    if (used + u_size <= budget) {
      in_bundle[u] = true;
      used += u_size;
      continue;
    }
    std::size_t best_out = items.size();
    double best_gain = 0.0;
    for (std::size_t s = 0; s < items.size(); ++s) {
      if (!in_bundle[s]) continue;
      if (used - items[s].item->size + u_size > budget) continue;
      const double gain = items[u].score - items[s].score;
      if (gain > best_gain) {
        best_gain = gain;
        best_out = s;
      }
    }
    if (best_out != items.size()) {
      in_bundle[best_out] = false;
      in_bundle[u] = true;
      used += u_size - items[best_out].item->size;
    }
  }

  std::vector<std::size_t> picked;
  for (std::size_t i = 0; i < items.size(); ++i)
    if (in_bundle[i]) picked.push_back(i);
  return picked;
}

}  // namespace

ContextBundle select_context(const std::vector<ContextItem>& items,
                             const ScoringWeights& w, std::size_t budget,
                             const ContextQuery& query) {
  std::vector<Scored> filtered;
  for (const auto& item : items) {
    if (!matches(item, query)) continue;
    if (item.size == 0 || item.size > budget) continue;
    filtered.push_back(
        {&item, score_item(item, w, query.current_iteration,
                           query.recency_window)});
  }
  // density-descending order shared by both solvers; ties by id for
  // platform-independent results
  std::sort(filtered.begin(), filtered.end(), [](const Scored& a,
                                                 const Scored& b) {
    const double da = a.score / static_cast<double>(a.item->size);
    const double db = b.score / static_cast<double>(b.item->size);
    if (da != db) return da > db;
    return a.item->id < b.item->id;
  });

  std::vector<std::size_t> picked;
  if (filtered.size() <= 25) {
    picked = ExactSolver(filtered, budget).solve();
  } else {
    picked = greedy_with_swap(filtered, budget);
  }
  return bundle_from(filtered, picked);
}

HistoryStore::HistoryStore(std::filesystem::path path)
    : path_(std::move(path)) {
  if (!std::filesystem::exists(path_)) return;
  const std::string content = read_file(path_);
  for (const auto& line : split_lines(content)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded())
      raise(Errc::io, "corrupt history record in " + path_.string());
    ContextItem item;
    item.id = j.at("id").get<std::string>();
    item.payload = j.at("payload").get<std::string>();
    item.size = item.payload.size();
    item.origin = context_origin_from_name(j.at("origin").get<std::string>());
    item.iteration = j.at("iteration").get<int>();
    item.severity_class = j.at("high_severity").get<bool>()
                              ? SeverityClass::high
                              : SeverityClass::low;
    item.failure_count = j.at("failure_count").get<std::uint64_t>();
    item.complexity = j.at("complexity").get<double>();
    item.anomalous_logs = j.at("anomalous_logs").get<bool>();
    item.clause_id = j.value("clause_id", std::string());
    items_.push_back(std::move(item));
  }
}

std::string HistoryStore::append(ContextItem item) {
  if (item.payload.empty())
    raise(Errc::invalid_argument, "history item payload must be non-empty");
  std::lock_guard<std::mutex> lock(mutex_);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "h%06zu", items_.size() + 1);
  item.id = buf;
  item.size = item.payload.size();
  if (!path_.empty()) {
    nlohmann::json j{{"id", item.id},
                     {"payload", item.payload},
                     {"size", item.size},
                     {"origin", context_origin_name(item.origin)},
                     {"iteration", item.iteration},
                     {"high_severity", item.severity_class == SeverityClass::high},
                     {"failure_count", item.failure_count},
                     {"complexity", item.complexity},
                     {"anomalous_logs", item.anomalous_logs},
                     {"clause_id", item.clause_id}};
    append_line(path_, j.dump());
  }
  items_.push_back(item);
  return items_.back().id;
}

std::optional<ContextItem> HistoryStore::fetch(const std::string& id) const {
  std::lock_guard<std::mutex> lock(mutex_);
  for (const auto& item : items_)
    if (item.id == id) return item;
  return std::nullopt;
}

std::vector<ContextItem> HistoryStore::filter(const ContextQuery& query) const {
  std::lock_guard<std::mutex> lock(mutex_);
  std::vector<ContextItem> out;
  for (const auto& item : items_)
    if (matches(item, query)) out.push_back(item);
  return out;
}

std::vector<ContextItem> HistoryStore::all() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return items_;
}

std::size_t HistoryStore::size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return items_.size();
}

std::uint64_t HistoryStore::failure_count(const std::string& clause_id) const {
  std::lock_guard<std::mutex> lock(mutex_);
  std::uint64_t count = 0;
  for (const auto& item : items_)
    if (item.clause_id == clause_id &&
        (item.origin == ContextOrigin::test_failure ||
         item.origin == ContextOrigin::structural_finding ||
         item.origin == ContextOrigin::verify_finding))
      ++count;
  return count;
}

std::string render_bundle(const ContextBundle& bundle,
                          const HistoryStore& store) {
  std::string out;
  for (const auto& id : bundle.items) {
    const auto item = store.fetch(id);
    if (!item) continue;
    out += "== [";
    out += context_origin_name(item->origin);
    out += "] ";
    out += item->id;
    out += " (iteration ";
    out += std::to_string(item->iteration);
    out += ")\n";
    out += item->payload;
    if (out.back() != '\n') out += '\n';
  }
  return out;
}

}  // namespace smelt
