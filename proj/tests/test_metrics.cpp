#include <doctest.h>

#include <cmath>
#include <random>

#include "smelt/error.hpp"
#include "smelt/metrics.hpp"
#include "smelt/util.hpp"

using namespace smelt;

namespace {

Specification spec_of(std::vector<SpecClause> clauses) {
  return Specification(std::move(clauses), 0);
}

SpecClause test_clause(const std::string& id, double w) {
  return {id, ClauseKind::test, w, ""};
}
SpecClause struct_clause(const std::string& id, double w) {
  return {id, ClauseKind::structural, w, ""};
}
SpecClause verify_clause(const std::string& id, double w) {
  return {id, ClauseKind::verify, w, ""};
}

// independent fine-grained Riemann sum over the piecewise-linear
// interpolant; subintervals are segment-aligned so kinks never straddle one
double riemann_log_error(const LogTrace& trace, int subintervals) {
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < trace.samples.size(); ++i) {
    const auto& a = trace.samples[i];
    const auto& b = trace.samples[i + 1];
    const int n = std::max(
        1, static_cast<int>(subintervals * (b.time - a.time) / trace.horizon));
    const double h = (b.time - a.time) / n;
    for (int k = 0; k < n; ++k) {
      const double t = a.time + (k + 0.5) * h;
      const double u = (t - a.time) / (b.time - a.time);
      sum += (a.level + u * (b.level - a.level)) * h;
    }
  }
  return sum / trace.horizon;
}

}  // namespace

TEST_CASE("mu counts satisfied clauses") {
  const auto spec = spec_of({test_clause("a", 1), test_clause("b", 1),
                             struct_clause("c", 1), verify_clause("d", 1)});
  CHECK(compute_mu({{"a", true}, {"b", true}, {"c", true}, {"d", true}}, spec) ==
        1.0);
  CHECK(compute_mu({{"a", false}, {"b", false}, {"c", false}, {"d", false}},
                   spec) == 0.0);
  CHECK(compute_mu({{"a", true}, {"b", true}, {"c", true}, {"d", false}},
                   spec) == 0.75);
  CHECK_THROWS_AS(compute_mu({{"a", true}}, spec), Error);
  CHECK_THROWS_AS(
      compute_mu({{"a", true}, {"b", true}, {"c", true}, {"x", true}}, spec),
      Error);
}

TEST_CASE("test error is the weighted failure ratio") {
  const auto spec = spec_of({test_clause("a", 1), test_clause("b", 1)});
  CHECK(*compute_test_error({{"a", false}, {"b", false}}, spec) == 1.0);
  CHECK(*compute_test_error({{"a", true}, {"b", true}}, spec) == 0.0);

  const auto weighted = spec_of({test_clause("a", 3), test_clause("b", 1)});
  CHECK(*compute_test_error({{"a", true}, {"b", false}}, weighted) ==
        doctest::Approx(0.25).epsilon(1e-12));

  const auto no_tests = spec_of({struct_clause("s", 1)});
  CHECK_FALSE(compute_test_error({}, no_tests).has_value());
}

TEST_CASE("structural error weights severity times penalty") {
  const auto spec = spec_of({struct_clause("a", 1), struct_clause("b", 3)});
  CHECK(*compute_struct_error(
            {{"a", 0.0, 0.0, false}, {"b", 0.0, 0.0, false}}, spec) == 0.0);
  CHECK(*compute_struct_error({{"a", 1.0, 1.0, true}, {"b", 0.5, 1.0, true}},
                              spec) == doctest::Approx(0.625).epsilon(1e-12));

  const auto single = spec_of({struct_clause("only", 2)});
  CHECK(*compute_struct_error({{"only", 1.0, 1.0, true}}, single) == 1.0);

  CHECK_THROWS_AS(
      compute_struct_error({{"a", 1.5, 1.0, true}, {"b", 0, 0, false}}, spec),
      Error);
  CHECK_THROWS_AS(
      compute_struct_error({{"a", 0.2, 1.0, false}, {"b", 0, 0, false}}, spec),
      Error);
}

TEST_CASE("verify error is the weighted failed-property ratio") {
  const auto spec = spec_of(
      {verify_clause("a", 1), verify_clause("b", 1), verify_clause("c", 2)});
  CHECK(*compute_verify_error({{"a", true}, {"b", true}, {"c", true}}, spec) ==
        0.0);
  CHECK(*compute_verify_error({{"a", true}, {"b", true}, {"c", false}}, spec) ==
        doctest::Approx(0.5).epsilon(1e-12));

  const auto single = spec_of({verify_clause("v", 1)});
  CHECK(*compute_verify_error({{"v", false}}, single) == 1.0);
}

TEST_CASE("log error integrates the anomaly curve") {
  LogTrace quiet{10.0, {{0.0, 0.0}, {10.0, 0.0}}};
  CHECK(compute_log_error(quiet) == 0.0);

  LogTrace saturated{5.0, {{0.0, 1.0}, {5.0, 1.0}}};
  CHECK(compute_log_error(saturated) == 1.0);

  LogTrace ramp{10.0, {{0.0, 0.0}, {10.0, 1.0}}};
  CHECK(compute_log_error(ramp) == doctest::Approx(0.5).epsilon(1e-12));

  LogTrace bad{0.0, {{0.0, 0.0}}};
  CHECK_THROWS_AS(compute_log_error(bad), Error);
  LogTrace unordered{1.0, {{0.0, 0.0}, {0.7, 0.2}, {0.3, 0.2}, {1.0, 0.0}}};
  CHECK_THROWS_AS(compute_log_error(unordered), Error);
}

TEST_CASE("trapezoid matches a fine Riemann oracle on random traces") {
  std::mt19937_64 rng(1234);
  for (int round = 0; round < 50; ++round) {
    const int n = 2 + static_cast<int>(uniform_index(rng, 63));
    LogTrace trace;
    trace.horizon = 1.0 + uniform_real(rng) * 20.0;
    std::vector<double> times{0.0, trace.horizon};
    for (int i = 0; i < n - 2; ++i)
      times.push_back(uniform_real(rng) * trace.horizon);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    for (const double t : times)
      trace.samples.push_back({t, uniform_real(rng)});
    const double expected = riemann_log_error(trace, 100000);
    CHECK(std::abs(compute_log_error(trace) - expected) <= 1e-9);
  }
}

TEST_CASE("delta aggregates present channels") {
  const ErrorWeights w{0.4, 0.3, 0.2, 0.1};
  CHECK(aggregate_delta({0, 0, 0, 0}, w, ChannelSet::all()) == 0.0);
  CHECK(aggregate_delta({1, 1, 1, 1}, w, ChannelSet::all()) ==
        doctest::Approx(1.0).epsilon(1e-12));

  // a present channel contributing zero still divides by the full weight sum
  CHECK(aggregate_delta({0.5, 0.0, 1.0, 0.2}, w, ChannelSet::all()) ==
        doctest::Approx(0.42).epsilon(1e-12));

  // an absent channel drops out of both sums
  ChannelSet no_struct;
  no_struct.set(Channel::test);
  no_struct.set(Channel::verify);
  no_struct.set(Channel::logs);
  CHECK(aggregate_delta({0.5, 0.0, 1.0, 0.2}, w, no_struct) ==
        doctest::Approx(0.42 / 0.7).epsilon(1e-12));

  CHECK_THROWS_AS(aggregate_delta({0, 0, 0, 0}, w, ChannelSet{}), Error);
  CHECK_THROWS_AS(
      aggregate_delta({0, 0, 0, 0}, ErrorWeights{0, 1, 1, 1}, ChannelSet::all()),
      Error);
}

TEST_CASE("channel errors and delta stay in range on random instances") {
  std::mt19937_64 rng(99);
  for (int round = 0; round < 200; ++round) {
    std::vector<SpecClause> clauses;
    std::vector<TestOutcome> tests;
    std::vector<StructuralOutcome> structs;
    std::vector<VerifyOutcome> verifies;
    const int nt = 1 + static_cast<int>(uniform_index(rng, 5));
    const int ns = 1 + static_cast<int>(uniform_index(rng, 5));
    const int nv = 1 + static_cast<int>(uniform_index(rng, 5));
    for (int i = 0; i < nt; ++i) {
      clauses.push_back(test_clause("t" + std::to_string(i),
                                    0.1 + uniform_real(rng) * 5));
      tests.push_back({"t" + std::to_string(i), uniform_index(rng, 2) == 0});
    }
    for (int i = 0; i < ns; ++i) {
      clauses.push_back(struct_clause("s" + std::to_string(i),
                                      0.1 + uniform_real(rng) * 5));
      const bool violated = uniform_index(rng, 2) == 0;
      structs.push_back({"s" + std::to_string(i),
                         violated ? uniform_real(rng) : 0.0, uniform_real(rng),
                         violated});
    }
    for (int i = 0; i < nv; ++i) {
      clauses.push_back(verify_clause("v" + std::to_string(i),
                                      0.1 + uniform_real(rng) * 5));
      verifies.push_back({"v" + std::to_string(i), uniform_index(rng, 2) == 0});
    }
    const auto spec = spec_of(clauses);
    const double et = *compute_test_error(tests, spec);
    const double es = *compute_struct_error(structs, spec);
    const double ev = *compute_verify_error(verifies, spec);
    CHECK(et >= 0.0);
    CHECK(et <= 1.0);
    CHECK(es >= 0.0);
    CHECK(es <= 1.0);
    CHECK(ev >= 0.0);
    CHECK(ev <= 1.0);
    const ErrorWeights w{0.1 + uniform_real(rng), 0.1 + uniform_real(rng),
                         0.1 + uniform_real(rng), 0.1 + uniform_real(rng)};
    const double delta =
        aggregate_delta({et, es, ev, uniform_real(rng)}, w, ChannelSet::all());
    CHECK(delta >= 0.0);
    CHECK(delta <= 1.0);
  }
}

TEST_CASE("flipping one test to fail never decreases the error") {
  std::mt19937_64 rng(7);
  for (int round = 0; round < 100; ++round) {
    const int n = 1 + static_cast<int>(uniform_index(rng, 6));
    std::vector<SpecClause> clauses;
    std::vector<TestOutcome> outcomes;
    for (int i = 0; i < n; ++i) {
      clauses.push_back(test_clause("t" + std::to_string(i),
                                    0.1 + uniform_real(rng) * 4));
      outcomes.push_back({"t" + std::to_string(i), uniform_index(rng, 2) == 0});
    }
    const auto spec = spec_of(clauses);
    const double before = *compute_test_error(outcomes, spec);
    const std::size_t flip = uniform_index(rng, outcomes.size());
    if (!outcomes[flip].passed) continue;
    outcomes[flip].passed = false;
    CHECK(*compute_test_error(outcomes, spec) >= before);
  }
}

TEST_CASE("raising a severity never decreases the structural error") {
  std::mt19937_64 rng(8);
  for (int round = 0; round < 100; ++round) {
    const int n = 1 + static_cast<int>(uniform_index(rng, 6));
    std::vector<SpecClause> clauses;
    std::vector<StructuralOutcome> outcomes;
    for (int i = 0; i < n; ++i) {
      clauses.push_back(struct_clause("s" + std::to_string(i),
                                      0.1 + uniform_real(rng) * 4));
      outcomes.push_back({"s" + std::to_string(i), uniform_real(rng) * 0.5,
                          uniform_real(rng), true});
    }
    const auto spec = spec_of(clauses);
    const double before = *compute_struct_error(outcomes, spec);
    const std::size_t bump = uniform_index(rng, outcomes.size());
    outcomes[bump].severity =
        std::min(1.0, outcomes[bump].severity + uniform_real(rng) * 0.5);
    CHECK(*compute_struct_error(outcomes, spec) >= before);
  }
}

TEST_CASE("pointwise-raising a trace never decreases the log error") {
  std::mt19937_64 rng(9);
  for (int round = 0; round < 100; ++round) {
    LogTrace trace;
    trace.horizon = 10.0;
    const int n = 3 + static_cast<int>(uniform_index(rng, 10));
    trace.samples.push_back({0.0, uniform_real(rng) * 0.5});
    for (int i = 1; i < n - 1; ++i)
      trace.samples.push_back(
          {10.0 * i / (n - 1), uniform_real(rng) * 0.5});
    trace.samples.push_back({10.0, uniform_real(rng) * 0.5});
    const double before = compute_log_error(trace);
    LogTrace raised = trace;
    for (auto& s : raised.samples)
      s.level = std::min(1.0, s.level + uniform_real(rng) * 0.4);
    CHECK(compute_log_error(raised) >= before);
  }
}

TEST_CASE("scaling all weights by a common factor changes nothing") {
  std::mt19937_64 rng(10);
  for (int round = 0; round < 50; ++round) {
    const int n = 1 + static_cast<int>(uniform_index(rng, 5));
    std::vector<SpecClause> clauses, scaled_clauses;
    std::vector<TestOutcome> outcomes;
    const double factor = 0.25 + uniform_real(rng) * 8;
    for (int i = 0; i < n; ++i) {
      const double w = 0.1 + uniform_real(rng) * 4;
      clauses.push_back(test_clause("t" + std::to_string(i), w));
      scaled_clauses.push_back(test_clause("t" + std::to_string(i), w * factor));
      outcomes.push_back({"t" + std::to_string(i), uniform_index(rng, 2) == 0});
    }
    const double a = *compute_test_error(outcomes, spec_of(clauses));
    const double b = *compute_test_error(outcomes, spec_of(scaled_clauses));
    CHECK(a == doctest::Approx(b).epsilon(1e-12));

    const ErrorWeights w{0.3, 0.9, 1.7, 0.2};
    const ErrorWeights scaled{w.alpha_test * factor, w.alpha_struct * factor,
                              w.alpha_verify * factor, w.alpha_logs * factor};
    const FeedbackVector f{uniform_real(rng), uniform_real(rng),
                           uniform_real(rng), uniform_real(rng)};
    CHECK(aggregate_delta(f, w, ChannelSet::all()) ==
          doctest::Approx(aggregate_delta(f, scaled, ChannelSet::all()))
              .epsilon(1e-12));
  }
}

TEST_CASE("channels are isolated from each other") {
  const auto spec = spec_of({test_clause("t", 1), struct_clause("s", 1),
                             verify_clause("v", 1)});
  const std::vector<TestOutcome> tests_pass{{"t", true}};
  const std::vector<TestOutcome> tests_fail{{"t", false}};
  const std::vector<StructuralOutcome> structs{{"s", 0.4, 0.5, true}};
  const std::vector<VerifyOutcome> verifies{{"v", true}};
  CHECK(*compute_struct_error(structs, spec) ==
        *compute_struct_error(structs, spec));
  // changing the test channel leaves the other channels untouched
  const double es = *compute_struct_error(structs, spec);
  const double ev = *compute_verify_error(verifies, spec);
  CHECK(*compute_test_error(tests_pass, spec) !=
        *compute_test_error(tests_fail, spec));
  CHECK(es == *compute_struct_error(structs, spec));
  CHECK(ev == *compute_verify_error(verifies, spec));
}

TEST_CASE("specification extension appends and bumps the version") {
  const auto spec = spec_of({test_clause("a", 1)});
  const auto grown = spec.extended({verify_clause("b", 2)});
  CHECK(grown.version() == 1);
  CHECK(grown.size() == 2);
  CHECK(grown.clauses().front().id == "a");
  CHECK_THROWS_AS(grown.extended({test_clause("a", 1)}), Error);
  CHECK_THROWS_AS(spec_of({test_clause("x", 0.0)}), Error);
}
