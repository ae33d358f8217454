#include "smelt/generator.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <random>
#include <set>
#include <thread>

#include <httplib.h>

#include "smelt/digest.hpp"
#include "smelt/error.hpp"
#include "smelt/util.hpp"

namespace smelt {

nlohmann::json edit_to_json(const Edit& e) {
  return nlohmann::json{{"kind", edit_kind_name(e.kind)},
                        {"target", e.target},
                        {"offset", e.offset},
                        {"length", e.length},
                        {"payload", e.payload},
                        {"parameter", e.parameter}};
}

Edit edit_from_json(const nlohmann::json& j) {
  Edit e;
  e.kind = edit_kind_from_name(j.at("kind").get<std::string>());
  e.target = j.at("target").get<std::string>();
  e.offset = j.value("offset", std::size_t{0});
  e.length = j.value("length", std::size_t{0});
  e.payload = j.value("payload", std::string());
  e.parameter = j.value("parameter", std::string());
  return e;
}

nlohmann::json request_to_json(const ProposalRequest& req) {
  return nlohmann::json{{"spec_digest", req.spec_digest},
                        {"context", req.bundle_rendering},
                        {"incumbent_excerpt", req.incumbent_files},
                        {"n", req.n},
                        {"seed", req.seed}};
}

ValidationResult validate_proposal(const Proposal& p,
                                   const ArtifactSnapshot& incumbent,
                                   std::size_t max_payload_bytes) {
  if (p.edits.empty()) return {false, "no edits"};
  for (const auto& e : p.edits)
    if (e.payload.size() > max_payload_bytes)
      return {false, "payload exceeds " + std::to_string(max_payload_bytes) +
                         " bytes"};
  Candidate probe;
  probe.edits = p.edits;
  try {
    materialize(incumbent, probe);
  } catch (const Error& e) {
    return {false, std::string("target: ") + e.what()};
  }
  return {true, ""};
}

namespace {

struct TokenSite {
  std::string path;
  std::size_t offset;
  std::size_t token;  // index into vocabulary
};

struct ParameterSite {
  std::string path;
  std::string key;
  double value;
  bool integral;
};

struct LineSite {
  std::string path;
  std::size_t offset;  // start of line
  std::size_t length;  // line content, excluding newline
};

bool parse_number(const std::string& text, double& out) {
  if (text.empty()) return false;
  char* end = nullptr;
  out = std::strtod(text.c_str(), &end);
  return end == text.c_str() + text.size();
}

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

struct MutationSites {
  std::vector<TokenSite> tokens;
  std::vector<ParameterSite> parameters;
  std::vector<LineSite> lines;
};

MutationSites scan_sites(const std::map<std::string, std::string>& files,
                         const std::vector<std::string>& vocabulary) {
  MutationSites sites;
  for (const auto& [path, content] : files) {
    for (std::size_t v = 0; v < vocabulary.size(); ++v) {
      const auto& token = vocabulary[v];
      if (token.empty()) continue;
      std::size_t pos = 0;
      while ((pos = content.find(token, pos)) != std::string::npos) {
        sites.tokens.push_back({path, pos, v});
        pos += token.size();
      }
    }
    std::set<std::string> seen_keys;
    std::size_t line_start = 0;
    for (const auto& line : split_lines(content)) {
      sites.lines.push_back({path, line_start, line.size()});
      const std::size_t eq = line.find('=');
      if (eq != std::string::npos) {
        const std::string key = trim(line.substr(0, eq));
        double value = 0.0;
        if (!key.empty() && seen_keys.insert(key).second &&
            parse_number(trim(line.substr(eq + 1)), value)) {
          const bool integral = value == std::floor(value) &&
                                std::abs(value) < 1e15;
          sites.parameters.push_back({path, key, value, integral});
        }
      }
      line_start += line.size() + 1;
    }
  }
  return sites;
}

std::string edits_fingerprint(const std::vector<Edit>& edits) {
  return candidate_id("", edits);
}

}  // namespace

MutationGenerator::MutationGenerator(MutationConfig cfg)
    : cfg_(std::move(cfg)) {}

ProposeOutcome MutationGenerator::propose(const ProposalRequest& req) {
  if (req.n < 1) raise(Errc::invalid_argument, "proposal count must be >= 1");
  ProposeOutcome outcome;

  Digest content_digest;
  content_digest.field_u64(req.incumbent_files.size());
  for (const auto& [path, content] : req.incumbent_files) {
    content_digest.field(path);
    content_digest.field(content);
  }
  const std::uint64_t mix =
      derive_seed(req.seed, "mutation", derive_seed(0, content_digest.hex(), 0));
  std::mt19937_64 rng(mix);

  const MutationSites sites = scan_sites(req.incumbent_files, cfg_.vocabulary);

  enum Kind { substitute, perturb, erase_line, duplicate_line, swap_lines };
  std::vector<Kind> applicable;
  if (!sites.tokens.empty() && cfg_.vocabulary.size() >= 2)
    applicable.push_back(substitute);
  if (!sites.parameters.empty()) applicable.push_back(perturb);
  if (!sites.lines.empty()) {
    applicable.push_back(erase_line);
    applicable.push_back(duplicate_line);
    if (sites.lines.size() >= 2) applicable.push_back(swap_lines);
  }
  if (applicable.empty()) return outcome;

  std::set<std::string> seen;
  const int max_attempts = 64 * req.n + 16;
  for (int attempt = 0;
       attempt < max_attempts &&
       outcome.proposals.size() < static_cast<std::size_t>(req.n);
       ++attempt) {
    const Kind kind =
        applicable[uniform_index(rng, applicable.size())];
    Proposal p;
    switch (kind) {
      case substitute: {
        const auto& site =
            sites.tokens[uniform_index(rng, sites.tokens.size())];
        std::size_t other = uniform_index(rng, cfg_.vocabulary.size() - 1);
        if (other >= site.token) ++other;
        Edit e;
        e.kind = EditKind::replace_region;
        e.target = site.path;
        e.offset = site.offset;
        e.length = cfg_.vocabulary[site.token].size();
        e.payload = cfg_.vocabulary[other];
        p.edits.push_back(e);
        p.rationale = "substitute '" + cfg_.vocabulary[site.token] + "' -> '" +
                      cfg_.vocabulary[other] + "' in " + site.path;
        break;
      }
      case perturb: {
        const auto& site =
            sites.parameters[uniform_index(rng, sites.parameters.size())];
        double next = site.value;
        if (site.integral) {
          std::int64_t step =
              static_cast<std::int64_t>(uniform_index(rng, 6)) - 3;
          if (step >= 0) ++step;  // skip zero
          next = site.value + static_cast<double>(step);
        } else {
          static const double factors[] = {0.5, 0.8, 0.9, 1.1, 1.25, 2.0};
          next = site.value * factors[uniform_index(rng, 6)];
        }
        Edit e;
        e.kind = EditKind::set_parameter;
        e.target = site.path;
        e.parameter = site.key;
        e.payload = site.integral
                        ? std::to_string(static_cast<long long>(next))
                        : format_double(next);
        p.edits.push_back(e);
        p.rationale = "set " + site.key + " = " + e.payload + " in " +
                      site.path;
        break;
      }
      case erase_line: {
        const auto& site = sites.lines[uniform_index(rng, sites.lines.size())];
        Edit e;
        e.kind = EditKind::delete_region;
        e.target = site.path;
        e.offset = site.offset;
        const std::string& content = req.incumbent_files.at(site.path);
        const bool has_newline = site.offset + site.length < content.size();
        e.length = site.length + (has_newline ? 1 : 0);
        if (e.length == 0) continue;
        p.edits.push_back(e);
        p.rationale = "delete line at " + site.path + ":" +
                      std::to_string(site.offset);
        break;
      }
      case duplicate_line: {
        const auto& site = sites.lines[uniform_index(rng, sites.lines.size())];
        if (site.length == 0) continue;
        const std::string& content = req.incumbent_files.at(site.path);
        Edit e;
        e.kind = EditKind::insert;
        e.target = site.path;
        e.offset = site.offset;
        e.payload = content.substr(site.offset, site.length) + "\n";
        p.edits.push_back(e);
        p.rationale = "duplicate line at " + site.path + ":" +
                      std::to_string(site.offset);
        break;
      }
      case swap_lines: {
        std::size_t i = uniform_index(rng, sites.lines.size());
        std::size_t j = uniform_index(rng, sites.lines.size() - 1);
        if (j >= i) ++j;
        const LineSite* a = &sites.lines[std::min(i, j)];
        const LineSite* b = &sites.lines[std::max(i, j)];
        if (a->path != b->path) continue;
        const std::string& content = req.incumbent_files.at(a->path);
        const std::string text_a = content.substr(a->offset, a->length);
        const std::string text_b = content.substr(b->offset, b->length);
        if (text_a == text_b) continue;
        Edit first;
        first.kind = EditKind::replace_region;
        first.target = a->path;
        first.offset = a->offset;
        first.length = a->length;
        first.payload = text_b;
        Edit second;
        second.kind = EditKind::replace_region;
        second.target = b->path;
        // the first replacement shifts everything after it
        second.offset = b->offset + text_b.size() - text_a.size();
        second.length = b->length;
        second.payload = text_a;
        p.edits.push_back(first);
        p.edits.push_back(second);
        p.rationale = "swap lines at " + a->path + ":" +
                      std::to_string(a->offset) + "," +
                      std::to_string(b->offset);
        break;
      }
    }
    if (p.edits.empty()) continue;
    const std::string fp = edits_fingerprint(p.edits);
    if (!seen.insert(fp).second) continue;
    ArtifactSnapshot incumbent;
    incumbent.files = req.incumbent_files;
    if (!validate_proposal(p, incumbent, cfg_.max_payload_bytes).accepted)
      continue;
    outcome.proposals.push_back(std::move(p));
  }
  return outcome;
}

RemoteGenerator::RemoteGenerator(RemoteConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.endpoint.empty())
    raise(Errc::config, "remote generator endpoint not configured");
  if (cfg_.max_in_flight < 1)
    raise(Errc::config, "max_in_flight must be at least 1");
}

ProposeOutcome RemoteGenerator::propose(const ProposalRequest& req) {
  if (req.n < 1) raise(Errc::invalid_argument, "proposal count must be >= 1");

  // split endpoint into client base and resource path
  std::string base = cfg_.endpoint, path = "/";
  const std::size_t scheme = base.find("://");
  if (scheme != std::string::npos) {
    const std::size_t slash = base.find('/', scheme + 3);
    if (slash != std::string::npos) {
      path = base.substr(slash);
      base = base.substr(0, slash);
    }
  }

  struct Slot {
    std::vector<Proposal> proposals;
    bool transport_error = false;
    std::string note;
  };
  std::vector<Slot> slots(static_cast<std::size_t>(req.n));

  std::atomic<int> next{0};
  auto worker = [&]() {
    httplib::Client client(base);
    client.set_connection_timeout(std::chrono::duration<double>(
        cfg_.timeout_seconds));
    client.set_read_timeout(std::chrono::duration<double>(
        cfg_.timeout_seconds));
    for (;;) {
      const int k = next.fetch_add(1);
      if (k >= req.n) return;
      ProposalRequest one = req;
      one.n = 1;
      one.seed = derive_seed(req.seed, "remote", static_cast<std::uint64_t>(k));
      httplib::Headers headers;
      if (!cfg_.auth_token.empty())
        headers.emplace("Authorization", "Bearer " + cfg_.auth_token);
      auto res = client.Post(path, headers, request_to_json(one).dump(),
                             "application/json");
      Slot& slot = slots[static_cast<std::size_t>(k)];
      if (!res || res->status != 200) {
        slot.transport_error = true;
        continue;
      }
      nlohmann::json j = nlohmann::json::parse(res->body, nullptr, false);
      if (j.is_discarded() || !j.contains("proposals")) {
        slot.note = "malformed response body";
        continue;
      }
      for (const auto& pj : j["proposals"]) {
        Proposal p;
        try {
          for (const auto& ej : pj.at("edits")) p.edits.push_back(edit_from_json(ej));
          p.rationale = pj.value("rationale", std::string());
        } catch (const std::exception& e) {
          slot.note = std::string("malformed edit: ") + e.what();
          continue;
        }
        if (p.edits.empty()) {
          slot.note = "proposal without edits";
          continue;
        }
        slot.proposals.push_back(std::move(p));
      }
    }
  };

  const int thread_count = std::min(cfg_.max_in_flight, req.n);
  if (thread_count <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int i = 0; i < thread_count; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }

  ProposeOutcome outcome;
  bool any_transport_error = false;
  for (const auto& slot : slots) {
    any_transport_error |= slot.transport_error;
    for (const auto& p : slot.proposals) outcome.proposals.push_back(p);
    if (!slot.note.empty()) {
      ContextItem item;
      item.origin = ContextOrigin::prior_feedback;
      item.payload = "remote proposal dropped: " + slot.note;
      outcome.notes.push_back(std::move(item));
    }
  }
  outcome.retriable_error = outcome.proposals.empty() && any_transport_error;
  return outcome;
}

std::unique_ptr<Generator> make_mutation_generator(MutationConfig cfg) {
  return std::make_unique<MutationGenerator>(std::move(cfg));
}

std::unique_ptr<Generator> make_remote_generator(RemoteConfig cfg) {
  return std::make_unique<RemoteGenerator>(std::move(cfg));
}

}  // namespace smelt
