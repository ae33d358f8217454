#include "smelt/orchestrator.hpp"

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <random>
#include <set>
#include <sstream>

#include "smelt/error.hpp"
#include "smelt/synthbench.hpp"
#include "smelt/util.hpp"

namespace smelt {

Specification extend_spec(const Specification& spec,
                          const std::vector<SpecClause>& new_clauses) {
  return spec.extended(new_clauses);
}

const char* termination_reason_name(TerminationReason reason) {
  switch (reason) {
    case TerminationReason::success: return "success";
    case TerminationReason::budget: return "budget";
    case TerminationReason::stall: return "stall";
  }
  return "unknown";
}

nlohmann::json record_to_json(const IterationRecord& record) {
  nlohmann::json evaluated = nlohmann::json::object();
  for (const auto& [id, e] : record.evaluated)
    evaluated[id] = {{"delta", e.delta},
                     {"mu", e.mu},
                     {"feedback",
                      {{"e_test", e.feedback.e_test},
                       {"e_struct", e.feedback.e_struct},
                       {"e_verify", e.feedback.e_verify},
                       {"e_logs", e.feedback.e_logs}}}};
  nlohmann::json dist = nlohmann::json::array();
  for (const auto& d : record.distribution) {
    nlohmann::json dj{{"id", d.id}, {"mass", d.mass}};
    if (d.last_delta)
      dj["last_delta"] = *d.last_delta;
    else
      dj["last_delta"] = nullptr;
    dist.push_back(dj);
  }
  return nlohmann::json{{"t", record.t},
                        {"spec_version", record.spec_version},
                        {"pool", record.pool},
                        {"evaluated", evaluated},
                        {"distribution", dist},
                        {"best_delta", record.best_delta},
                        {"best_candidate", record.best_candidate},
                        {"cache_hit_rate", record.cache_hit_rate},
                        {"wall_seconds", record.wall_seconds}};
}

IterationRecord record_from_json(const nlohmann::json& j) {
  IterationRecord r;
  r.t = j.at("t").get<int>();
  r.spec_version = j.at("spec_version").get<int>();
  r.pool = j.at("pool").get<std::vector<std::string>>();
  for (const auto& [id, e] : j.at("evaluated").items()) {
    EvaluatedCandidate ec;
    ec.delta = e.at("delta").get<double>();
    ec.mu = e.at("mu").get<double>();
    const auto& f = e.at("feedback");
    ec.feedback = {f.at("e_test").get<double>(), f.at("e_struct").get<double>(),
                   f.at("e_verify").get<double>(),
                   f.at("e_logs").get<double>()};
    r.evaluated[id] = ec;
  }
  for (const auto& d : j.at("distribution")) {
    DistributionEntry entry;
    entry.id = d.at("id").get<std::string>();
    entry.mass = d.at("mass").get<double>();
    if (!d.at("last_delta").is_null())
      entry.last_delta = d.at("last_delta").get<double>();
    r.distribution.push_back(std::move(entry));
  }
  r.best_delta = j.at("best_delta").get<double>();
  r.best_candidate = j.at("best_candidate").get<std::string>();
  r.cache_hit_rate = j.at("cache_hit_rate").get<double>();
  r.wall_seconds = j.at("wall_seconds").get<double>();
  return r;
}

namespace {

nlohmann::json candidate_to_json(const Candidate& c) {
  nlohmann::json edits = nlohmann::json::array();
  for (const auto& e : c.edits) edits.push_back(edit_to_json(e));
  nlohmann::json j{{"id", c.id},
                   {"birth_iteration", c.birth_iteration},
                   {"edits", edits}};
  if (c.parent)
    j["parent"] = *c.parent;
  else
    j["parent"] = nullptr;
  return j;
}

Candidate candidate_from_json(const nlohmann::json& j) {
  Candidate c;
  c.id = j.at("id").get<std::string>();
  c.birth_iteration = j.at("birth_iteration").get<int>();
  for (const auto& ej : j.at("edits")) c.edits.push_back(edit_from_json(ej));
  if (!j.at("parent").is_null()) c.parent = j.at("parent").get<std::string>();
  return c;
}

struct RunPaths {
  std::filesystem::path root;
  bool persistent() const { return !root.empty(); }
  std::filesystem::path config() const { return root / "config.json"; }
  std::filesystem::path artifact() const { return root / "artifact"; }
  std::filesystem::path records() const { return root / "records.jsonl"; }
  std::filesystem::path candidates() const { return root / "candidates.jsonl"; }
  std::filesystem::path history() const { return root / "history.jsonl"; }
  std::filesystem::path cache() const { return root / "cache"; }
  std::filesystem::path workdirs() const { return root / "workdirs"; }
  std::filesystem::path result() const { return root / "result.json"; }
};

struct RunState {
  RunConfig cfg;
  RunPaths paths;
  ArtifactSnapshot base;
  std::string base_id;
  Specification spec;
  std::vector<DemandEventConfig> pending;  // ascending at_iteration
  std::vector<ChannelRunner> runners;
  std::unique_ptr<VerificationEngine> engine;
  std::shared_ptr<Generator> generator;
  std::unique_ptr<HistoryStore> history;
  std::map<std::string, Candidate> tracked;
  std::set<std::string> logged_candidates;
  CandidateDistribution dist;
  std::map<std::string, EvaluatedCandidate> last_eval;
  double best_delta = std::numeric_limits<double>::infinity();
  std::string best_candidate;
  int stall_streak = 0;
  std::vector<IterationRecord> records;
  std::filesystem::path scratch_workdirs;  // for in-memory runs
  int items_this_iteration = 0;

  ~RunState() {
    if (!scratch_workdirs.empty()) {
      std::error_code ec;
      std::filesystem::remove_all(scratch_workdirs, ec);
    }
  }
};

std::string short_id(const std::string& id) { return id.substr(0, 12); }

void log_candidate(RunState& state, const Candidate& c) {
  if (!state.paths.persistent()) return;
  if (!state.logged_candidates.insert(c.id).second) return;
  append_line(state.paths.candidates(), candidate_to_json(c).dump());
}

void append_history_item(RunState& state, ContextItem item) {
  if (state.items_this_iteration >= state.cfg.max_history_items_per_iteration)
    return;
  state.history->append(std::move(item));
  ++state.items_this_iteration;
}

void emit_feedback_items(RunState& state, int t,
                         const VerificationReport& report) {
  const bool anomalous = report.feedback.e_logs > 0.0;
  const std::string who = "candidate " + short_id(report.candidate_id);
  // clause weight >= 2 marks the demand as high-stakes for scoring purposes
  auto weight_class = [&](const std::string& clause_id) {
    const SpecClause* c = state.spec.find(clause_id);
    return (c != nullptr && c->weight >= 2.0) ? SeverityClass::high
                                              : SeverityClass::low;
  };
  auto base_item = [&](ContextOrigin origin, const std::string& clause_id,
                       std::string payload) {
    ContextItem item;
    item.origin = origin;
    item.iteration = t;
    item.clause_id = clause_id;
    item.payload = std::move(payload);
    item.failure_count = state.history->failure_count(clause_id) + 1;
    item.anomalous_logs = anomalous;
    return item;
  };

  for (const auto& o : report.test_outcomes) {
    if (o.passed) continue;
    ContextItem item = base_item(ContextOrigin::test_failure, o.clause_id,
                                 who + " failed test '" + o.clause_id + "'");
    item.severity_class = weight_class(o.clause_id);
    append_history_item(state, std::move(item));
  }
  for (const auto& o : report.structural_outcomes) {
    if (!o.violated) continue;
    ContextItem item = base_item(
        ContextOrigin::structural_finding, o.clause_id,
        who + " violates '" + o.clause_id + "' severity " +
            format_double(o.severity) + " penalty " + format_double(o.penalty));
    item.severity_class =
        o.severity >= 0.5 ? SeverityClass::high : SeverityClass::low;
    item.complexity = o.severity;
    append_history_item(state, std::move(item));
  }
  for (const auto& o : report.verify_outcomes) {
    if (o.holds) continue;
    ContextItem item =
        base_item(ContextOrigin::verify_finding, o.clause_id,
                  who + " fails verification '" + o.clause_id + "'");
    item.severity_class = weight_class(o.clause_id);
    append_history_item(state, std::move(item));
  }
  if (anomalous) {
    ContextItem item;
    item.origin = ContextOrigin::log_excerpt;
    item.iteration = t;
    item.payload = who + " anomalous trace, mean level " +
                   format_double(report.feedback.e_logs) + " over " +
                   std::to_string(report.log_trace.samples.size()) +
                   " samples";
    item.anomalous_logs = true;
    append_history_item(state, std::move(item));
  }
  for (ContextItem incident : report.incidents) {
    incident.iteration = t;
    append_history_item(state, std::move(incident));
  }
}

VerificationReport evaluate(RunState& state, int t, const std::string& id) {
  const auto report =
      state.engine->verify(state.tracked.at(id), state.spec,
                           state.cfg.worker_count);
  EvaluatedCandidate e;
  e.delta = report.delta;
  e.mu = report.mu;
  e.feedback = report.feedback;
  state.last_eval[id] = e;
  if (report.delta < state.best_delta ||
      (report.delta == state.best_delta && id < state.best_candidate)) {
    state.best_delta = report.delta;
    state.best_candidate = id;
  }
  emit_feedback_items(state, t, report);
  return report;
}

void apply_due_demands(RunState& state, int t) {
  bool applied = false;
  while (!state.pending.empty() && state.pending.front().at_iteration == t) {
    const DemandEventConfig event = state.pending.front();
    state.pending.erase(state.pending.begin());
    std::vector<SpecClause> clauses;
    for (const auto& b : event.clauses) {
      clauses.push_back(b.clause);
      state.runners.push_back(b.runner);
    }
    state.spec = extend_spec(state.spec, clauses);
    applied = true;
  }
  if (applied) {
    state.engine->set_runners(state.runners);
    // deltas are stale under the new spec version; best-so-far restarts
    state.best_delta = std::numeric_limits<double>::infinity();
    state.best_candidate.clear();
    state.stall_streak = 0;
  }
}

std::string render_context_bundle(RunState& state, int t) {
  ContextQuery query;
  query.current_iteration = t;
  query.recency_window = state.cfg.recency_window;
  const ContextBundle bundle =
      select_context(state.history->all(), state.cfg.scoring,
                     state.cfg.context_budget, query);
  return render_bundle(bundle, *state.history);
}

std::vector<std::pair<std::string, int>> draw_parents(
    const RunState& state, const std::vector<std::string>& pool, int n,
    std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double total = 0.0;
  for (const auto& id : pool) total += state.dist.entries.at(id);
  std::vector<std::pair<std::string, int>> groups;
  for (int k = 0; k < n; ++k) {
    std::string pick = pool.back();
    if (total > 0.0) {
      double u = uniform_real(rng) * total;
      for (const auto& id : pool) {
        u -= state.dist.entries.at(id);
        if (u <= 0.0) {
          pick = id;
          break;
        }
      }
    } else {
      pick = pool[uniform_index(rng, pool.size())];
    }
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const auto& g) { return g.first == pick; });
    if (it == groups.end())
      groups.emplace_back(pick, 1);
    else
      ++it->second;
  }
  return groups;
}

void persist_setup(RunState& state) {
  if (!state.paths.persistent()) return;
  std::filesystem::create_directories(state.paths.root);
  std::filesystem::create_directories(state.paths.cache());
  std::filesystem::create_directories(state.paths.workdirs());
  atomic_write_file(state.paths.config(), config_to_json(state.cfg).dump(2));
  snapshot_to_directory(state.base, state.paths.artifact());
  nlohmann::json meta{{"digest_algorithm", "sha256"},
                      {"base_artifact_id", state.base_id},
                      {"engine_version", "0.1.0"}};
  atomic_write_file(state.paths.root / "meta.json", meta.dump(2));
}

void init_engine(RunState& state) {
  VerificationConfig vcfg;
  vcfg.weights = state.cfg.weights;
  vcfg.log_horizon = state.cfg.log_horizon;
  vcfg.anomaly_patterns = state.cfg.anomaly_patterns;
  if (state.paths.persistent()) {
    vcfg.workdir_root = state.paths.workdirs();
    vcfg.cache_dir = state.paths.cache();
  } else {
    state.scratch_workdirs =
        std::filesystem::temp_directory_path() /
        ("smelt-work-" + state.base_id.substr(0, 12) + "-" +
         std::to_string(::getpid()) + "-" +
         std::to_string(
             std::chrono::steady_clock::now().time_since_epoch().count()));
    vcfg.workdir_root = state.scratch_workdirs;
  }
  state.engine =
      std::make_unique<VerificationEngine>(state.base, std::move(vcfg));
  state.engine->set_runners(state.runners);
}

void check_config(const RunConfig& cfg) {
  std::vector<std::string> diagnostics;
  validate_config(cfg, diagnostics);
  if (!diagnostics.empty()) {
    std::string joined;
    for (const auto& d : diagnostics) {
      if (!joined.empty()) joined += "; ";
      joined += d;
    }
    raise(Errc::config, joined);
  }
}

RunResult finalize(RunState& state, TerminationReason reason, int t) {
  RunResult result;
  result.reason = reason;
  result.final_candidate = state.best_candidate;
  if (auto it = state.tracked.find(state.best_candidate);
      it != state.tracked.end())
    result.final = it->second;
  result.final_delta = state.best_delta;
  result.final_mu = state.best_candidate.empty()
                        ? 0.0
                        : state.last_eval.at(state.best_candidate).mu;
  result.iterations = t;
  result.spec_version = state.spec.version();
  result.records = state.records;
  if (state.paths.persistent()) {
    nlohmann::json j{{"reason", termination_reason_name(reason)},
                     {"final_candidate", result.final_candidate},
                     {"final_delta", result.final_delta},
                     {"final_mu", result.final_mu},
                     {"iterations", result.iterations},
                     {"spec_version", result.spec_version}};
    atomic_write_file(state.paths.result(), j.dump(2));
  }
  return result;
}

/// One full iteration; returns the termination reason if the run is done.
std::optional<TerminationReason> step(RunState& state, int t,
                                      const ProgressFn& progress) {
  const auto t0 = std::chrono::steady_clock::now();
  state.items_this_iteration = 0;
  apply_due_demands(state, t);
  const double best_before = state.best_delta;

  const std::vector<std::string> pool =
      select_pool(state.dist, state.cfg.search,
                  derive_seed(state.cfg.seed, "pool", static_cast<std::uint64_t>(t)));

  std::map<std::string, VerificationReport> reports;
  std::set<std::string> eval_ids(pool.begin(), pool.end());
  for (const auto& id : eval_ids) reports[id] = evaluate(state, t, id);

  const bool demands_pending = !state.pending.empty();
  const bool satisfied =
      state.best_delta <= state.cfg.termination.delta_threshold;

  // fresh proposals, unless the pool already satisfies the spec and nothing
  // else is queued
  std::vector<std::string> admitted;
  if (!(satisfied && !demands_pending)) {
    const int explore_slots = static_cast<int>(std::floor(
        state.cfg.search.exploration_fraction * state.cfg.search.pool_size));
    int n = state.cfg.proposals_per_iteration > 0
                ? state.cfg.proposals_per_iteration
                : std::max(explore_slots,
                           state.cfg.search.pool_size -
                               static_cast<int>(pool.size()));
    std::vector<std::string> reproposed;
    if (n > 0) {
      const std::string bundle_text = render_context_bundle(state, t);
      const std::string digest = state.spec.digest_text();
      const auto groups = draw_parents(
          state, pool, n,
          derive_seed(state.cfg.seed, "parents", static_cast<std::uint64_t>(t)));
      const std::uint64_t gen_seed =
          derive_seed(state.cfg.seed, "gen", static_cast<std::uint64_t>(t));
      for (std::size_t k = 0; k < groups.size(); ++k) {
        const auto& [parent_id, count] = groups[k];
        const Candidate& parent = state.tracked.at(parent_id);
        const ArtifactSnapshot parent_snap = materialize(state.base, parent);
        ProposalRequest req;
        req.incumbent_id = parent_id;
        req.incumbent_files = parent_snap.files;
        req.bundle_rendering = bundle_text;
        req.spec_digest = digest;
        req.n = count;
        req.seed = derive_seed(gen_seed, "slot", k);
        ProposeOutcome outcome = state.generator->propose(req);
        for (ContextItem note : outcome.notes) {
          note.iteration = t;
          append_history_item(state, std::move(note));
        }
        for (const auto& proposal : outcome.proposals) {
          const auto verdict = validate_proposal(
              proposal, parent_snap, state.cfg.mutation.max_payload_bytes);
          if (!verdict.accepted) {
            ContextItem note;
            note.origin = ContextOrigin::prior_feedback;
            note.iteration = t;
            note.payload = "proposal rejected: " + verdict.reason;
            append_history_item(state, std::move(note));
            continue;
          }
          std::vector<Edit> edits = parent.edits;
          edits.insert(edits.end(), proposal.edits.begin(),
                       proposal.edits.end());
          Candidate c = make_candidate(state.base_id, std::move(edits),
                                       parent_id, t);
          const std::string cid = c.id;
          const bool fresh =
              state.dist.entries.find(cid) == state.dist.entries.end() &&
              std::find(admitted.begin(), admitted.end(), cid) ==
                  admitted.end();
          if (state.tracked.find(cid) == state.tracked.end()) {
            log_candidate(state, c);
            state.tracked.emplace(cid, std::move(c));
          }
          if (fresh)
            admitted.push_back(cid);
          else
            reproposed.push_back(cid);  // re-evaluated alongside the pool
        }
      }
      // admission and evaluation of the fresh candidates
      if (!admitted.empty())
        state.dist = admit_candidates(state.dist, admitted, state.cfg.search);
      for (const auto& id : admitted)
        if (eval_ids.insert(id).second) reports[id] = evaluate(state, t, id);
      for (const auto& id : reproposed)
        if (eval_ids.insert(id).second) reports[id] = evaluate(state, t, id);
    }
  }

  // exponential re-weighting over everything evaluated this iteration
  std::map<std::string, double> deltas;
  for (const auto& [id, report] : reports) deltas[id] = report.delta;
  state.dist = gibbs_update(state.dist, deltas, state.cfg.search.lambda);
  state.dist.iteration = t;

  IterationRecord record;
  record.t = t;
  record.spec_version = state.spec.version();
  record.pool.assign(eval_ids.begin(), eval_ids.end());
  int cache_hits = 0, outcome_count = 0;
  for (const auto& [id, report] : reports) {
    record.evaluated[id] = state.last_eval.at(id);
    cache_hits += report.cache_hits;
    outcome_count += static_cast<int>(report.test_outcomes.size() +
                                      report.structural_outcomes.size() +
                                      report.verify_outcomes.size());
  }
  for (const auto& [id, mass] : state.dist.entries) {
    DistributionEntry entry;
    entry.id = id;
    entry.mass = mass;
    if (auto it = state.dist.last_delta.find(id);
        it != state.dist.last_delta.end())
      entry.last_delta = it->second;
    record.distribution.push_back(std::move(entry));
  }
  record.best_delta = state.best_delta;
  record.best_candidate = state.best_candidate;
  record.cache_hit_rate =
      outcome_count > 0
          ? static_cast<double>(cache_hits) / static_cast<double>(outcome_count)
          : 0.0;
  record.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  state.records.push_back(record);
  if (state.paths.persistent())
    append_line(state.paths.records(), record_to_json(record).dump());
  if (progress) progress(record);

  if (state.best_delta <= state.cfg.termination.delta_threshold &&
      state.pending.empty())
    return TerminationReason::success;
  if (state.best_delta < best_before)
    state.stall_streak = 0;
  else
    ++state.stall_streak;
  if (state.stall_streak >= state.cfg.termination.stall_window &&
      state.pending.empty())
    return TerminationReason::stall;
  if (t >= state.cfg.termination.max_iterations)
    return TerminationReason::budget;
  return std::nullopt;
}

RunResult drive(RunState& state, int start_t, std::optional<int> stop_after,
                const ProgressFn& progress) {
  if (start_t > state.cfg.termination.max_iterations)
    return finalize(state, TerminationReason::budget, start_t - 1);
  for (int t = start_t;; ++t) {
    const auto done = step(state, t, progress);
    if (done) return finalize(state, *done, t);
    if (stop_after && t >= *stop_after) {
      RunResult partial;
      partial.completed = false;
      partial.iterations = t;
      partial.spec_version = state.spec.version();
      partial.final_candidate = state.best_candidate;
      partial.final_delta = state.best_delta;
      partial.records = state.records;
      return partial;
    }
  }
}

void init_common(RunState& state) {
  check_config(state.cfg);
  state.base_id = state.base.content_hash();
  std::vector<SpecClause> clauses;
  for (const auto& b : state.cfg.clauses) {
    clauses.push_back(b.clause);
    state.runners.push_back(b.runner);
  }
  for (const auto& p : state.cfg.trace_probes) state.runners.push_back(p);
  state.spec = Specification(clauses, 0);
  state.pending = state.cfg.demands;
  std::stable_sort(state.pending.begin(), state.pending.end(),
                   [](const auto& a, const auto& b) {
                     return a.at_iteration < b.at_iteration;
                   });
}

}  // namespace

std::shared_ptr<Generator> make_generator_from_config(const RunConfig& cfg) {
  if (cfg.generator_kind == "mutation")
    return std::make_shared<MutationGenerator>(cfg.mutation);
  if (cfg.generator_kind == "remote") {
    RemoteConfig rc = cfg.remote;
    if (const char* endpoint = std::getenv("SMELT_REMOTE_ENDPOINT"))
      rc.endpoint = endpoint;
    if (const char* token = std::getenv("SMELT_REMOTE_TOKEN"))
      rc.auth_token = token;
    return std::make_shared<RemoteGenerator>(rc);
  }
  if (cfg.generator_kind == "synthetic")
    return make_fixture_generator(cfg.synthetic_space);
  raise(Errc::config, "unknown generator kind '" + cfg.generator_kind + "'");
}

RunResult run(const RunSetup& setup) {
  RunState state;
  state.cfg = setup.cfg;
  state.paths.root = setup.run_dir;
  state.base = setup.base;
  init_common(state);
  state.generator =
      setup.generator ? setup.generator : make_generator_from_config(state.cfg);
  persist_setup(state);
  init_engine(state);
  state.history = std::make_unique<HistoryStore>(
      state.paths.persistent() ? state.paths.history()
                               : std::filesystem::path());

  const Candidate c0 = root_candidate(state.base_id);
  state.dist = CandidateDistribution::single(c0.id);
  log_candidate(state, c0);
  state.tracked.emplace(c0.id, c0);

  return drive(state, 1, setup.stop_after, setup.progress);
}

RunResult resume(const std::filesystem::path& run_dir,
                 const ProgressFn& progress, std::optional<int> stop_after) {
  RunPaths paths;
  paths.root = run_dir;
  if (!std::filesystem::exists(paths.config()))
    raise(Errc::not_found,
          "no run found at '" + run_dir.string() + "' (missing config.json)");

  std::vector<std::string> diagnostics;
  RunConfig cfg = load_config(paths.config(), diagnostics);
  if (!diagnostics.empty())
    raise(Errc::config, "stored config invalid: " + diagnostics.front());

  // completed runs are a no-op
  if (std::filesystem::exists(paths.result())) {
    nlohmann::json j = nlohmann::json::parse(read_file(paths.result()));
    RunResult result;
    const std::string reason = j.at("reason").get<std::string>();
    result.reason = reason == "success" ? TerminationReason::success
                    : reason == "stall" ? TerminationReason::stall
                                        : TerminationReason::budget;
    result.final_candidate = j.at("final_candidate").get<std::string>();
    result.final_delta = j.at("final_delta").get<double>();
    result.final_mu = j.at("final_mu").get<double>();
    result.iterations = j.at("iterations").get<int>();
    result.spec_version = j.at("spec_version").get<int>();
    if (std::filesystem::exists(paths.records()))
      for (const auto& line : split_lines(read_file(paths.records()))) {
        if (line.empty()) continue;
        result.records.push_back(
            record_from_json(nlohmann::json::parse(line)));
      }
    if (std::filesystem::exists(paths.candidates()))
      for (const auto& line : split_lines(read_file(paths.candidates()))) {
        if (line.empty()) continue;
        nlohmann::json cj = nlohmann::json::parse(line, nullptr, false);
        if (cj.is_discarded()) continue;
        if (cj.value("id", std::string()) == result.final_candidate) {
          result.final = candidate_from_json(cj);
          break;
        }
      }
    return result;
  }

  RunState state;
  state.cfg = std::move(cfg);
  state.paths = paths;
  state.base = snapshot_from_directory(paths.artifact());
  init_common(state);
  state.generator = make_generator_from_config(state.cfg);
  init_engine(state);

  // records: a torn trailing line means the writer died mid-append
  if (std::filesystem::exists(paths.records())) {
    const std::string content = read_file(paths.records());
    const auto lines = split_lines(content);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      nlohmann::json j = nlohmann::json::parse(lines[i], nullptr, false);
      if (j.is_discarded()) {
        const bool last_and_torn =
            i + 1 == lines.size() && !content.ends_with("\n");
        if (last_and_torn) break;
        raise(Errc::io, "corrupt record at line " + std::to_string(i + 1) +
                            " of " + paths.records().string());
      }
      try {
        state.records.push_back(record_from_json(j));
      } catch (const std::exception& e) {
        raise(Errc::io, "corrupt record at line " + std::to_string(i + 1) +
                            ": " + e.what());
      }
    }
  }

  if (std::filesystem::exists(paths.candidates()))
    for (const auto& line : split_lines(read_file(paths.candidates()))) {
      if (line.empty()) continue;
      nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded()) continue;  // torn append
      Candidate c = candidate_from_json(j);
      state.logged_candidates.insert(c.id);
      state.tracked.emplace(c.id, std::move(c));
    }

  const Candidate c0 = root_candidate(state.base_id);
  if (state.tracked.find(c0.id) == state.tracked.end()) {
    log_candidate(state, c0);
    state.tracked.emplace(c0.id, c0);
  }

  int start_t = 1;
  if (state.records.empty()) {
    state.dist = CandidateDistribution::single(c0.id);
  } else {
    const IterationRecord& last = state.records.back();
    start_t = last.t + 1;
    for (const auto& entry : last.distribution) {
      state.dist.entries[entry.id] = entry.mass;
      if (entry.last_delta) state.dist.last_delta[entry.id] = *entry.last_delta;
      if (state.tracked.find(entry.id) == state.tracked.end())
        raise(Errc::io, "distribution references unknown candidate '" +
                            entry.id + "'");
    }
    state.dist.iteration = last.t;

    // replay demand events that already fired
    while (!state.pending.empty() &&
           state.pending.front().at_iteration <= last.t) {
      std::vector<SpecClause> clauses;
      for (const auto& b : state.pending.front().clauses) {
        clauses.push_back(b.clause);
        state.runners.push_back(b.runner);
      }
      state.spec = extend_spec(state.spec, clauses);
      state.pending.erase(state.pending.begin());
    }
    state.engine->set_runners(state.runners);
    if (state.spec.version() != last.spec_version)
      raise(Errc::io, "spec version mismatch in stored records");

    for (const auto& record : state.records)
      for (const auto& [id, e] : record.evaluated) state.last_eval[id] = e;

    state.best_delta = last.best_delta;
    state.best_candidate = last.best_candidate;

    // stall streak: consecutive tail records without strict improvement
    // within the current spec version
    state.stall_streak = 0;
    for (std::size_t i = state.records.size(); i-- > 1;) {
      const IterationRecord& cur = state.records[i];
      const IterationRecord& prev = state.records[i - 1];
      if (cur.spec_version != last.spec_version ||
          prev.spec_version != cur.spec_version)
        break;  // version boundary counts as an improvement
      if (cur.best_delta < prev.best_delta) break;
      ++state.stall_streak;
    }
  }

  // drop history items from a torn iteration
  if (std::filesystem::exists(paths.history())) {
    HistoryStore loaded(paths.history());
    const auto items = loaded.all();
    const bool torn = std::any_of(items.begin(), items.end(), [&](const auto& i) {
      return i.iteration >= start_t;
    });
    if (torn) {
      std::filesystem::remove(paths.history());
      HistoryStore rewritten(paths.history());
      for (const auto& item : items)
        if (item.iteration < start_t) rewritten.append(item);
    }
  }
  state.history = std::make_unique<HistoryStore>(paths.history());

  return drive(state, start_t, stop_after, progress);
}

std::string inspect_run(const std::filesystem::path& run_dir,
                        const std::string& what, int t) {
  RunPaths paths;
  paths.root = run_dir;
  if (!std::filesystem::exists(paths.records()))
    raise(Errc::not_found, "no records at '" + run_dir.string() + "'");

  if (what == "history") {
    HistoryStore store(paths.history());
    std::ostringstream out;
    for (const auto& item : store.all()) {
      if (item.iteration != t) continue;
      out << item.id << " [" << context_origin_name(item.origin) << "] "
          << item.payload << "\n";
    }
    return out.str();
  }

  std::optional<IterationRecord> record;
  for (const auto& line : split_lines(read_file(paths.records()))) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) continue;
    IterationRecord r = record_from_json(j);
    if (r.t == t) {
      record = std::move(r);
      break;
    }
  }
  if (!record)
    raise(Errc::not_found, "no record for iteration " + std::to_string(t));

  std::ostringstream out;
  if (what == "distribution") {
    for (const auto& entry : record->distribution) {
      out << entry.id << " mass " << format_double(entry.mass);
      if (entry.last_delta)
        out << " delta " << format_double(*entry.last_delta);
      out << "\n";
    }
  } else if (what == "feedback") {
    for (const auto& [id, e] : record->evaluated) {
      out << id << " e_test " << format_double(e.feedback.e_test)
          << " e_struct " << format_double(e.feedback.e_struct)
          << " e_verify " << format_double(e.feedback.e_verify) << " e_logs "
          << format_double(e.feedback.e_logs) << " delta "
          << format_double(e.delta) << " mu " << format_double(e.mu) << "\n";
    }
  } else {
    raise(Errc::invalid_argument,
          "unknown inspection target '" + what +
              "' (expected distribution, history or feedback)");
  }
  return out.str();
}

}  // namespace smelt
