#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "smelt/hypothesis.hpp"
#include "smelt/context.hpp"

namespace smelt {

/// Everything a generator is allowed to see: the candidate it should refine
/// (id plus materialized content), the rendered context bundle, and the
/// clause digest. Verification internals never cross this boundary.
struct ProposalRequest {
  std::string incumbent_id;
  std::map<std::string, std::string> incumbent_files;
  std::string bundle_rendering;
  std::string spec_digest;
  int n = 1;
  std::uint64_t seed = 0;
};

/// Edits are relative to the incumbent's materialized content; the
/// orchestrator appends them to the incumbent's edit list.
struct Proposal {
  std::vector<Edit> edits;
  std::string rationale;
};

struct ProposeOutcome {
  std::vector<Proposal> proposals;
  bool retriable_error = false;     // e.g. remote unreachable; pool re-used
  std::vector<ContextItem> notes;   // dropped/malformed proposals
};

class Generator {
 public:
  virtual ~Generator() = default;
  virtual ProposeOutcome propose(const ProposalRequest& req) = 0;
};

struct ValidationResult {
  bool accepted = false;
  std::string reason;
};

/// Cheap pre-verification gate: rejects empty edit lists, unresolvable
/// targets and oversized payloads before any verification cost is paid.
ValidationResult validate_proposal(const Proposal& p,
                                   const ArtifactSnapshot& incumbent,
                                   std::size_t max_payload_bytes);

struct MutationConfig {
  std::vector<std::string> vocabulary;  // tokens eligible for substitution
  std::size_t max_payload_bytes = 4096;
};

/// Deterministic desk-scale stand-in for a remote model: draws edits from a
/// small mutation repertoire (vocabulary token substitution, numeric
/// parameter perturbation, line deletion/duplication, region swap) as a
/// pure function of (incumbent content, seed).
class MutationGenerator : public Generator {
 public:
  explicit MutationGenerator(MutationConfig cfg);
  ProposeOutcome propose(const ProposalRequest& req) override;

 private:
  MutationConfig cfg_;
};

struct RemoteConfig {
  std::string endpoint;   // http(s)://host[:port][/path]
  std::string auth_token;
  double timeout_seconds = 30.0;
  int max_in_flight = 2;
};

/// HTTP client for an external proposal service. One request per proposal,
/// bounded in-flight; unreachable service yields an empty outcome with the
/// retriable flag set, malformed proposals are dropped and noted.
class RemoteGenerator : public Generator {
 public:
  explicit RemoteGenerator(RemoteConfig cfg);
  ProposeOutcome propose(const ProposalRequest& req) override;

 private:
  RemoteConfig cfg_;
};

nlohmann::json edit_to_json(const Edit& e);
Edit edit_from_json(const nlohmann::json& j);

nlohmann::json request_to_json(const ProposalRequest& req);

std::unique_ptr<Generator> make_mutation_generator(MutationConfig cfg);
std::unique_ptr<Generator> make_remote_generator(RemoteConfig cfg);

}  // namespace smelt
