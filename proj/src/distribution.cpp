#include "smelt/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "smelt/error.hpp"
#include "smelt/util.hpp"

namespace smelt {

double CandidateDistribution::mass_sum() const {
  double s = 0.0;
  for (const auto& [id, mass] : entries) s += mass;
  return s;
}

std::optional<std::string> CandidateDistribution::incumbent() const {
  std::optional<std::string> best;
  double best_delta = 0.0;
  for (const auto& [id, delta] : last_delta) {
    if (entries.find(id) == entries.end()) continue;
    if (!best || delta < best_delta || (delta == best_delta && id < *best)) {
      best = id;
      best_delta = delta;
    }
  }
  return best;
}

CandidateDistribution CandidateDistribution::single(
    const std::string& candidate_id) {
  CandidateDistribution d;
  d.entries[candidate_id] = 1.0;
  return d;
}

void validate(const SearchConfig& cfg) {
  if (cfg.lambda < 0.0)
    raise(Errc::invalid_argument, "lambda must be non-negative");
  if (cfg.pool_size < 1)
    raise(Errc::invalid_argument, "pool_size must be at least 1");
  if (cfg.exploration_fraction < 0.0 || cfg.exploration_fraction > 1.0)
    raise(Errc::invalid_argument, "exploration_fraction must be in [0,1]");
  if (cfg.newcomer_mass <= 0.0 || cfg.newcomer_mass >= 1.0)
    raise(Errc::invalid_argument, "newcomer_mass must be in (0,1)");
}

CandidateDistribution gibbs_update(const CandidateDistribution& dist,
                                   const std::map<std::string, double>& deltas,
                                   double lambda) {
  if (lambda < 0.0)
    raise(Errc::invalid_argument, "lambda must be non-negative");
  if (dist.entries.empty())
    raise(Errc::invalid_argument, "distribution has no entries");
  for (const auto& [id, delta] : deltas) {
    if (dist.entries.find(id) == dist.entries.end())
      raise(Errc::invalid_argument,
            "delta for untracked candidate '" + id + "'");
    if (!std::isfinite(delta))
      raise(Errc::invalid_argument, "non-finite delta for '" + id + "'");
  }

  CandidateDistribution out = dist;
  out.iteration = dist.iteration + 1;
  for (const auto& [id, delta] : deltas) out.last_delta[id] = delta;

  if (lambda == 0.0) return out;  // prior preserved bit-identically

  // log weight per candidate, shifted by the max so exp never underflows
  // everywhere at once.
  std::map<std::string, double> logw;
  double max_logw = -std::numeric_limits<double>::infinity();
  for (const auto& [id, mass] : dist.entries) {
    double delta;
    if (auto it = deltas.find(id); it != deltas.end()) {
      delta = it->second;
    } else if (auto known = dist.last_delta.find(id);
               known != dist.last_delta.end()) {
      delta = known->second;
    } else {
      delta = 1.0;
    }
    const double lw = (mass > 0.0)
                          ? std::log(mass) - lambda * delta
                          : -std::numeric_limits<double>::infinity();
    logw[id] = lw;
    max_logw = std::max(max_logw, lw);
  }
  if (!std::isfinite(max_logw))
    raise(Errc::invalid_argument, "all candidate masses are zero");

  double norm = 0.0;
  for (auto& [id, lw] : logw) {
    lw = std::isfinite(lw) ? std::exp(lw - max_logw) : 0.0;
    norm += lw;
  }
  for (const auto& [id, w] : logw) out.entries[id] = w / norm;
  return out;
}

std::vector<std::string> select_pool(const CandidateDistribution& dist,
                                     const SearchConfig& cfg,
                                     std::uint64_t rng_seed) {
  validate(cfg);
  const auto pool_size = static_cast<std::size_t>(cfg.pool_size);
  const auto explore_slots = static_cast<std::size_t>(
      std::floor(cfg.exploration_fraction * cfg.pool_size));
  const std::size_t top_slots = pool_size - explore_slots;

  // mass-descending, ties by lexicographic id
  std::vector<std::pair<std::string, double>> ranked(dist.entries.begin(),
                                                     dist.entries.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  std::vector<std::string> selected;
  std::set<std::string> chosen;
  for (const auto& [id, mass] : ranked) {
    if (selected.size() >= top_slots) break;
    selected.push_back(id);
    chosen.insert(id);
  }

  std::vector<std::string> remainder;
  for (const auto& [id, mass] : ranked)
    if (chosen.find(id) == chosen.end()) remainder.push_back(id);
  std::sort(remainder.begin(), remainder.end());

  std::mt19937_64 rng(rng_seed);
  for (std::size_t k = 0; k < explore_slots && !remainder.empty(); ++k) {
    const std::uint64_t pick = uniform_index(rng, remainder.size());
    selected.push_back(remainder[pick]);
    chosen.insert(remainder[pick]);
    remainder.erase(remainder.begin() + static_cast<std::ptrdiff_t>(pick));
  }

  if (auto inc = dist.incumbent(); inc && chosen.find(*inc) == chosen.end()) {
    if (selected.size() >= pool_size) {
      chosen.erase(selected.back());
      selected.back() = *inc;
    } else {
      selected.push_back(*inc);
    }
    chosen.insert(*inc);
  }
  return selected;
}

CandidateDistribution admit_candidates(const CandidateDistribution& dist,
                                       const std::vector<std::string>& new_ids,
                                       const SearchConfig& cfg) {
  validate(cfg);
  if (new_ids.empty()) return dist;
  for (const auto& id : new_ids)
    if (dist.entries.find(id) != dist.entries.end())
      raise(Errc::invalid_argument,
            "candidate '" + id + "' already tracked");
  std::set<std::string> uniq(new_ids.begin(), new_ids.end());
  if (uniq.size() != new_ids.size())
    raise(Errc::invalid_argument, "duplicate ids in admission batch");

  CandidateDistribution out = dist;
  const double keep = 1.0 - cfg.newcomer_mass;
  for (auto& [id, mass] : out.entries) mass *= keep;
  const double share = cfg.newcomer_mass / static_cast<double>(new_ids.size());
  for (const auto& id : new_ids) out.entries[id] = share;
  return out;
}

}  // namespace smelt
