#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "smelt/distribution.hpp"
#include "smelt/error.hpp"
#include "smelt/util.hpp"

using namespace smelt;

namespace {

CandidateDistribution uniform_over(const std::vector<std::string>& ids) {
  CandidateDistribution d;
  for (const auto& id : ids) d.entries[id] = 1.0 / ids.size();
  return d;
}

SearchConfig basic_config() {
  SearchConfig cfg;
  cfg.lambda = 1.0;
  cfg.pool_size = 4;
  cfg.exploration_fraction = 0.0;
  cfg.newcomer_mass = 0.3;
  return cfg;
}

// direct long-double evaluation of the exponential re-weighting rule
std::map<std::string, double> direct_gibbs(
    const CandidateDistribution& dist,
    const std::map<std::string, double>& deltas, double lambda) {
  long double z = 0.0L;
  std::map<std::string, long double> weights;
  for (const auto& [id, mass] : dist.entries) {
    double delta = 1.0;
    if (auto it = deltas.find(id); it != deltas.end())
      delta = it->second;
    else if (auto known = dist.last_delta.find(id);
             known != dist.last_delta.end())
      delta = known->second;
    const long double w =
        static_cast<long double>(mass) *
        std::exp(-static_cast<long double>(lambda) * delta);
    weights[id] = w;
    z += w;
  }
  std::map<std::string, double> out;
  for (const auto& [id, w] : weights)
    out[id] = static_cast<double>(w / z);
  return out;
}

}  // namespace

TEST_CASE("equal deltas keep a uniform distribution uniform") {
  const auto dist = uniform_over({"a", "b"});
  const auto next = gibbs_update(dist, {{"a", 0.3}, {"b", 0.3}}, 1.0);
  CHECK(next.entries.at("a") == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(next.entries.at("b") == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(next.iteration == 1);
}

TEST_CASE("a delta gap of ln 3 yields the 3:1 posterior") {
  const auto dist = uniform_over({"a", "b"});
  const auto next =
      gibbs_update(dist, {{"a", 0.0}, {"b", std::log(3.0)}}, 1.0);
  CHECK(next.entries.at("a") == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(next.entries.at("b") == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("lambda zero preserves the prior bit-identically") {
  CandidateDistribution dist;
  dist.entries["a"] = 0.123456789012345;
  dist.entries["b"] = 1.0 - 0.123456789012345;
  const auto next = gibbs_update(dist, {{"a", 0.9}, {"b", 0.1}}, 0.0);
  CHECK(std::memcmp(&next.entries.at("a"), &dist.entries.at("a"),
                    sizeof(double)) == 0);
  CHECK(std::memcmp(&next.entries.at("b"), &dist.entries.at("b"),
                    sizeof(double)) == 0);
  CHECK(next.last_delta.at("a") == 0.9);
}

TEST_CASE("unevaluated candidates fall back to their last known delta") {
  CandidateDistribution dist = uniform_over({"a", "b", "c"});
  dist.last_delta["c"] = 0.2;
  const auto next = gibbs_update(dist, {{"a", 0.1}, {"b", 0.5}}, 2.0);
  const auto expected = direct_gibbs(dist, {{"a", 0.1}, {"b", 0.5}}, 2.0);
  for (const auto& [id, mass] : expected)
    CHECK(next.entries.at(id) == doctest::Approx(mass).epsilon(1e-12));
  // never-evaluated candidates are treated as maximally wrong
  CandidateDistribution fresh = uniform_over({"a", "z"});
  const auto updated = gibbs_update(fresh, {{"a", 0.0}}, 3.0);
  CHECK(updated.entries.at("a") > updated.entries.at("z"));
}

TEST_CASE("gibbs matches the direct rule on random pools") {
  std::mt19937_64 rng(2024);
  for (int round = 0; round < 200; ++round) {
    const int n = 1 + static_cast<int>(uniform_index(rng, 100));
    CandidateDistribution dist;
    double total = 0.0;
    std::map<std::string, double> deltas;
    for (int i = 0; i < n; ++i) {
      char name[16];
      std::snprintf(name, sizeof(name), "c%03d", i);
      const double m = 0.01 + uniform_real(rng);
      dist.entries[name] = m;
      total += m;
      deltas[name] = uniform_real(rng);
    }
    for (auto& [id, mass] : dist.entries) mass /= total;
    const double lambda = uniform_real(rng) * 10.0;
    const auto next = gibbs_update(dist, deltas, lambda);
    const auto expected = direct_gibbs(dist, deltas, lambda);
    double sum = 0.0;
    for (const auto& [id, mass] : next.entries) {
      CHECK(mass == doctest::Approx(expected.at(id)).epsilon(1e-12));
      sum += mass;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("large lambda does not underflow to NaN") {
  const auto dist = uniform_over({"a", "b", "c"});
  const auto next =
      gibbs_update(dist, {{"a", 0.9}, {"b", 0.95}, {"c", 1.0}}, 5000.0);
  double sum = 0.0;
  for (const auto& [id, mass] : next.entries) {
    CHECK(std::isfinite(mass));
    sum += mass;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(next.entries.at("a") > 0.999);
}

TEST_CASE("lower delta with equal prior mass wins posterior mass") {
  std::mt19937_64 rng(5);
  for (int round = 0; round < 100; ++round) {
    const auto dist = uniform_over({"x", "y"});
    const double d1 = uniform_real(rng), d2 = uniform_real(rng);
    if (d1 == d2) continue;
    const double lambda = 0.1 + uniform_real(rng) * 5;
    const auto next = gibbs_update(dist, {{"x", d1}, {"y", d2}}, lambda);
    if (d1 < d2)
      CHECK(next.entries.at("x") > next.entries.at("y"));
    else
      CHECK(next.entries.at("y") > next.entries.at("x"));
  }
}

TEST_CASE("select_pool returns everything when the pool covers the space") {
  CandidateDistribution dist;
  dist.entries = {{"a", 0.5}, {"b", 0.3}, {"c", 0.2}};
  SearchConfig cfg = basic_config();
  cfg.pool_size = 3;
  const auto pool = select_pool(dist, cfg, 1);
  CHECK(pool == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("select_pool picks the argmax for a pool of one") {
  CandidateDistribution dist;
  dist.entries = {{"a", 0.7}, {"b", 0.2}, {"c", 0.1}};
  SearchConfig cfg = basic_config();
  cfg.pool_size = 1;
  CHECK(select_pool(dist, cfg, 7) == std::vector<std::string>{"a"});
}

TEST_CASE("mass ties break toward the lexicographically smaller id") {
  CandidateDistribution dist;
  dist.entries = {{"bb", 0.4}, {"aa", 0.4}, {"cc", 0.2}};
  SearchConfig cfg = basic_config();
  cfg.pool_size = 1;
  CHECK(select_pool(dist, cfg, 7) == std::vector<std::string>{"aa"});
}

TEST_CASE("the incumbent is always part of the pool") {
  CandidateDistribution dist;
  dist.entries = {{"a", 0.6}, {"b", 0.3}, {"c", 0.1}};
  dist.last_delta = {{"a", 0.9}, {"b", 0.8}, {"c", 0.05}};
  SearchConfig cfg = basic_config();
  cfg.pool_size = 2;
  const auto pool = select_pool(dist, cfg, 3);
  CHECK(std::find(pool.begin(), pool.end(), "c") != pool.end());
  CHECK(pool.size() == 2);
}

TEST_CASE("identical seeds give identical pools, different seeds may differ") {
  CandidateDistribution dist;
  for (int i = 0; i < 40; ++i)
    dist.entries["c" + std::to_string(100 + i)] = 1.0 / 40;
  SearchConfig cfg = basic_config();
  cfg.pool_size = 8;
  cfg.exploration_fraction = 0.5;
  const auto p1 = select_pool(dist, cfg, 11);
  const auto p2 = select_pool(dist, cfg, 11);
  CHECK(p1 == p2);
  bool any_different = false;
  for (std::uint64_t seed = 0; seed < 10 && !any_different; ++seed)
    any_different = select_pool(dist, cfg, seed) != p1;
  CHECK(any_different);
}

TEST_CASE("exploration samples come from outside the top share") {
  CandidateDistribution dist;
  dist.entries = {{"a", 0.5}, {"b", 0.3}, {"c", 0.1}, {"d", 0.06}, {"e", 0.04}};
  SearchConfig cfg = basic_config();
  cfg.pool_size = 4;
  cfg.exploration_fraction = 0.5;  // 2 top slots + 2 sampled
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto pool = select_pool(dist, cfg, seed);
    REQUIRE(pool.size() == 4);
    CHECK(pool[0] == "a");
    CHECK(pool[1] == "b");
    for (std::size_t i = 2; i < pool.size(); ++i)
      CHECK((pool[i] == "c" || pool[i] == "d" || pool[i] == "e"));
  }
}

TEST_CASE("admission reserves the newcomer share") {
  CandidateDistribution dist;
  dist.entries = {{"a", 1.0}};
  SearchConfig cfg = basic_config();
  cfg.newcomer_mass = 0.5;
  const auto one = admit_candidates(dist, {"b"}, cfg);
  CHECK(one.entries.at("a") == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(one.entries.at("b") == doctest::Approx(0.5).epsilon(1e-12));

  cfg.newcomer_mass = 0.4;
  const auto two = admit_candidates(dist, {"b", "c"}, cfg);
  CHECK(two.entries.at("a") == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(two.entries.at("b") == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(two.entries.at("c") == doctest::Approx(0.2).epsilon(1e-12));

  const auto none = admit_candidates(dist, {}, cfg);
  CHECK(none.entries == dist.entries);

  CHECK_THROWS_AS(admit_candidates(dist, {"a"}, cfg), Error);
}

TEST_CASE("masses stay normalized through update and admission rounds") {
  std::mt19937_64 rng(77);
  CandidateDistribution dist = uniform_over({"c0"});
  SearchConfig cfg = basic_config();
  for (int round = 0; round < 50; ++round) {
    std::vector<std::string> fresh;
    const int admits = static_cast<int>(uniform_index(rng, 3));
    for (int i = 0; i < admits; ++i)
      fresh.push_back("c" + std::to_string(round * 10 + i + 1));
    if (!fresh.empty()) dist = admit_candidates(dist, fresh, cfg);
    std::map<std::string, double> deltas;
    for (const auto& [id, mass] : dist.entries)
      if (uniform_index(rng, 2) == 0) deltas[id] = uniform_real(rng);
    if (!deltas.empty())
      dist = gibbs_update(dist, deltas, uniform_real(rng) * 4);
    CHECK(dist.mass_sum() == doctest::Approx(1.0).epsilon(1e-9));
    for (const auto& [id, mass] : dist.entries) CHECK(mass >= 0.0);
  }
}

TEST_CASE("validation rejects malformed search configs") {
  SearchConfig cfg = basic_config();
  cfg.lambda = -1;
  CHECK_THROWS_AS(validate(cfg), Error);
  cfg = basic_config();
  cfg.pool_size = 0;
  CHECK_THROWS_AS(validate(cfg), Error);
  cfg = basic_config();
  cfg.newcomer_mass = 1.0;
  CHECK_THROWS_AS(validate(cfg), Error);
  cfg = basic_config();
  cfg.exploration_fraction = 1.5;
  CHECK_THROWS_AS(validate(cfg), Error);
}
