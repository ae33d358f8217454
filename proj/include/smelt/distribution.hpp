#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace smelt {

/// Probability mass over the tracked candidate pool, plus the last observed
/// composite error per candidate (used both for incumbent selection and for
/// re-weighting candidates outside the evaluated pool).
struct CandidateDistribution {
  std::map<std::string, double> entries;      // candidate id -> mass
  std::map<std::string, double> last_delta;   // candidate id -> last delta
  int iteration = 0;

  double mass_sum() const;
  /// Lowest last-known delta; ties broken by lexicographic id. Empty until
  /// some candidate has been evaluated.
  std::optional<std::string> incumbent() const;

  static CandidateDistribution single(const std::string& candidate_id);
};

struct SearchConfig {
  double lambda = 1.0;              // >= 0
  int pool_size = 8;                // >= 1
  double exploration_fraction = 0.25;  // in [0,1]
  double newcomer_mass = 0.3;       // in (0,1)
};

void validate(const SearchConfig& cfg);

/// Multiplies each candidate's mass by exp(-lambda * delta) and renormalizes
/// globally. Candidates outside `deltas` use their last recorded delta (1.0
/// if never evaluated). Weights are computed in log space, so large lambda
/// cannot underflow the whole posterior. lambda == 0 returns the prior
/// masses bit-identically.
CandidateDistribution gibbs_update(const CandidateDistribution& dist,
                                   const std::map<std::string, double>& deltas,
                                   double lambda);

/// Deterministic pool selection: the top (pool_size - floor(exploration *
/// pool_size)) candidates by mass (ties by id), then exploration picks drawn
/// uniformly without replacement from the rest, then the incumbent forced in
/// if missing.
std::vector<std::string> select_pool(const CandidateDistribution& dist,
                                     const SearchConfig& cfg,
                                     std::uint64_t rng_seed);

/// New candidates split `newcomer_mass` of the total equally; existing
/// masses scale by (1 - newcomer_mass). No-op for an empty id list.
CandidateDistribution admit_candidates(const CandidateDistribution& dist,
                                       const std::vector<std::string>& new_ids,
                                       const SearchConfig& cfg);

}  // namespace smelt
