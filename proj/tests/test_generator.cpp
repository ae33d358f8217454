#include <doctest.h>

#include <set>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "smelt/generator.hpp"
#include "smelt/hypothesis.hpp"

using namespace smelt;

namespace {

ProposalRequest basic_request(int n, std::uint64_t seed) {
  ProposalRequest req;
  req.incumbent_id = "inc";
  req.incumbent_files = {
      {"main.txt", "alpha beta gamma\nalpha delta\nepsilon\n"},
      {"config.ini", "threshold = 10\nrate = 0.5\n"}};
  req.spec_digest = "spec";
  req.n = n;
  req.seed = seed;
  return req;
}

MutationConfig vocab_config() {
  MutationConfig cfg;
  cfg.vocabulary = {"alpha", "beta", "gamma", "delta"};
  return cfg;
}

}  // namespace

TEST_CASE("mutation proposals are a pure function of content and seed") {
  MutationGenerator gen(vocab_config());
  const auto a = gen.propose(basic_request(5, 77));
  const auto b = gen.propose(basic_request(5, 77));
  REQUIRE(a.proposals.size() == b.proposals.size());
  for (std::size_t i = 0; i < a.proposals.size(); ++i) {
    CHECK(a.proposals[i].rationale == b.proposals[i].rationale);
    CHECK(candidate_id("x", a.proposals[i].edits) ==
          candidate_id("x", b.proposals[i].edits));
  }
  const auto c = gen.propose(basic_request(5, 78));
  bool differs = c.proposals.size() != a.proposals.size();
  for (std::size_t i = 0; !differs && i < a.proposals.size(); ++i)
    differs = candidate_id("x", a.proposals[i].edits) !=
              candidate_id("x", c.proposals[i].edits);
  CHECK(differs);
}

TEST_CASE("proposals are pairwise distinct and within the requested count") {
  MutationGenerator gen(vocab_config());
  const auto out = gen.propose(basic_request(3, 5));
  CHECK(out.proposals.size() <= 3);
  CHECK(!out.proposals.empty());
  std::set<std::string> ids;
  for (const auto& p : out.proposals) ids.insert(candidate_id("x", p.edits));
  CHECK(ids.size() == out.proposals.size());
}

TEST_CASE("every mutation applies cleanly to the incumbent") {
  MutationGenerator gen(vocab_config());
  const auto req = basic_request(16, 1234);
  ArtifactSnapshot incumbent;
  incumbent.files = req.incumbent_files;
  const auto out = gen.propose(req);
  CHECK(out.proposals.size() >= 8);
  for (const auto& p : out.proposals) {
    const auto verdict = validate_proposal(p, incumbent, 4096);
    CHECK(verdict.accepted);
    Candidate c;
    c.edits = p.edits;
    const auto snap = materialize(incumbent, c);
    CHECK(!snap.files.empty());
  }
}

TEST_CASE("a vocabulary-free generator still mutates lines and parameters") {
  MutationGenerator gen(MutationConfig{});
  const auto out = gen.propose(basic_request(6, 9));
  CHECK(!out.proposals.empty());
}

TEST_CASE("an empty incumbent yields no proposals") {
  MutationGenerator gen(vocab_config());
  ProposalRequest req;
  req.incumbent_id = "empty";
  req.n = 3;
  req.seed = 1;
  const auto out = gen.propose(req);
  CHECK(out.proposals.empty());
  CHECK_FALSE(out.retriable_error);
}

TEST_CASE("proposal validation rejects the documented cases") {
  ArtifactSnapshot incumbent;
  incumbent.files["main.txt"] = "hello\n";

  Proposal empty;
  const auto no_edits = validate_proposal(empty, incumbent, 4096);
  CHECK_FALSE(no_edits.accepted);
  CHECK(no_edits.reason == "no edits");

  Proposal bad_target;
  bad_target.edits.push_back({EditKind::insert, "absent.txt", 0, 0, "x", ""});
  const auto target = validate_proposal(bad_target, incumbent, 4096);
  CHECK_FALSE(target.accepted);
  CHECK(target.reason.find("target") == 0);

  Proposal oversized;
  oversized.edits.push_back(
      {EditKind::insert, "main.txt", 0, 0, std::string(5000, 'x'), ""});
  CHECK_FALSE(validate_proposal(oversized, incumbent, 4096).accepted);

  Proposal good;
  good.edits.push_back({EditKind::replace_region, "main.txt", 0, 5, "HELLO", ""});
  CHECK(validate_proposal(good, incumbent, 4096).accepted);
}

TEST_CASE("remote generator round-trips proposals over HTTP") {
  httplib::Server server;
  std::atomic<int> requests{0};
  server.Post("/propose", [&](const httplib::Request& req,
                              httplib::Response& res) {
    ++requests;
    const auto body = nlohmann::json::parse(req.body);
    CHECK(body.at("n").get<int>() == 1);
    CHECK(req.get_header_value("Authorization") == "Bearer sesame");
    nlohmann::json edit{{"kind", "insert"},
                        {"target", "main.txt"},
                        {"offset", 0},
                        {"length", 0},
                        {"payload", "remote says hi (seed " +
                                        std::to_string(
                                            body.at("seed").get<std::uint64_t>()) +
                                        ")\n"},
                        {"parameter", ""}};
    nlohmann::json out{{"proposals",
                        {{{"edits", {edit}}, {"rationale", "from service"}}}}};
    res.set_content(out.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread listener([&]() { server.listen_after_bind(); });
  server.wait_until_ready();

  RemoteConfig cfg;
  cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/propose";
  cfg.auth_token = "sesame";
  cfg.timeout_seconds = 5.0;
  cfg.max_in_flight = 2;
  RemoteGenerator gen(cfg);
  const auto out = gen.propose(basic_request(3, 42));
  CHECK(out.proposals.size() == 3);
  CHECK_FALSE(out.retriable_error);
  CHECK(requests.load() == 3);  // one request per proposal
  for (const auto& p : out.proposals) {
    REQUIRE(p.edits.size() == 1);
    CHECK(p.edits[0].kind == EditKind::insert);
    CHECK(p.rationale == "from service");
  }

  server.stop();
  listener.join();
}

TEST_CASE("malformed remote proposals are dropped and noted") {
  httplib::Server server;
  server.Post("/propose", [&](const httplib::Request&, httplib::Response& res) {
    // edits with an unknown kind must be rejected by the parser
    res.set_content(
        R"({"proposals":[{"edits":[{"kind":"teleport","target":"x"}],"rationale":"bad"}]})",
        "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread listener([&]() { server.listen_after_bind(); });
  server.wait_until_ready();

  RemoteConfig cfg;
  cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/propose";
  RemoteGenerator gen(cfg);
  const auto out = gen.propose(basic_request(2, 1));
  CHECK(out.proposals.empty());
  CHECK_FALSE(out.retriable_error);  // the service responded; nothing to retry
  CHECK(!out.notes.empty());

  server.stop();
  listener.join();
}

TEST_CASE("an unreachable remote reports a retriable error") {
  RemoteConfig cfg;
  cfg.endpoint = "http://127.0.0.1:9/propose";  // discard port, nothing listens
  cfg.timeout_seconds = 0.5;
  RemoteGenerator gen(cfg);
  const auto out = gen.propose(basic_request(2, 1));
  CHECK(out.proposals.empty());
  CHECK(out.retriable_error);
}
