#include "smelt/verification.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <set>
#include <thread>

#include <nlohmann/json.hpp>

#include "smelt/digest.hpp"
#include "smelt/error.hpp"
#include "smelt/subprocess.hpp"
#include "smelt/util.hpp"

namespace smelt {

const char* runner_parser_name(RunnerParser parser) {
  switch (parser) {
    case RunnerParser::exit_code: return "exit_code";
    case RunnerParser::severity_json: return "severity_json";
    case RunnerParser::trace_json: return "trace_json";
  }
  return "unknown";
}

RunnerParser runner_parser_from_name(const std::string& name) {
  if (name == "exit_code") return RunnerParser::exit_code;
  if (name == "severity_json") return RunnerParser::severity_json;
  if (name == "trace_json") return RunnerParser::trace_json;
  raise(Errc::config, "unknown runner parser '" + name + "'");
}

BuiltinRegistry& BuiltinRegistry::instance() {
  static BuiltinRegistry registry;
  return registry;
}

void BuiltinRegistry::add(const std::string& id, BuiltinFn fn) {
  std::lock_guard<std::mutex> lock(mutex_);
  fns_[id] = std::move(fn);
}

std::optional<BuiltinFn> BuiltinRegistry::find(const std::string& id) const {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = fns_.find(id);
  if (it == fns_.end()) return std::nullopt;
  return it->second;
}

bool BuiltinRegistry::contains(const std::string& id) const {
  std::lock_guard<std::mutex> lock(mutex_);
  return fns_.find(id) != fns_.end();
}

std::string cache_key(const std::string& candidate_id,
                      const std::string& clause_id,
                      const std::string& definition_hash) {
  Digest d;
  d.field(candidate_id);
  d.field(clause_id);
  d.field(definition_hash);
  return d.hex();
}

std::string runner_definition_hash(const SpecClause* clause,
                                   const ChannelRunner& runner,
                                   double log_horizon,
                                   const std::vector<std::string>& patterns) {
  Digest d;
  if (clause != nullptr) {
    d.field(clause->id);
    d.field(clause_kind_name(clause->kind));
    d.field(clause->description);
  }
  d.field_u64(runner.command.size());
  for (const auto& arg : runner.command) d.field(arg);
  d.field(runner.builtin);
  d.field(format_double(runner.timeout_seconds));
  d.field(runner_parser_name(runner.parser));
  d.field(format_double(log_horizon));
  d.field_u64(patterns.size());
  for (const auto& p : patterns) d.field(p);
  return d.hex();
}

namespace {

nlohmann::json result_to_json(const ClauseResult& r) {
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& s : r.trace_points)
    trace.push_back({{"time", s.time}, {"level", s.level}});
  return nlohmann::json{{"clause_id", r.clause_id},
                        {"crashed", r.crashed},
                        {"timed_out", r.timed_out},
                        {"passed", r.passed},
                        {"severity", r.severity},
                        {"penalty", r.penalty},
                        {"violated", r.violated},
                        {"holds", r.holds},
                        {"trace", trace},
                        {"excerpt", r.excerpt}};
}

ClauseResult result_from_json(const nlohmann::json& j) {
  ClauseResult r;
  r.clause_id = j.at("clause_id").get<std::string>();
  r.crashed = j.at("crashed").get<bool>();
  r.timed_out = j.at("timed_out").get<bool>();
  r.passed = j.at("passed").get<bool>();
  r.severity = j.at("severity").get<double>();
  r.penalty = j.at("penalty").get<double>();
  r.violated = j.at("violated").get<bool>();
  r.holds = j.at("holds").get<bool>();
  for (const auto& s : j.at("trace"))
    r.trace_points.push_back(
        {s.at("time").get<double>(), s.at("level").get<double>()});
  r.excerpt = j.at("excerpt").get<std::string>();
  return r;
}

}  // namespace

VerificationCache::VerificationCache(std::filesystem::path dir)
    : dir_(std::move(dir)) {
  if (!dir_.empty()) std::filesystem::create_directories(dir_);
}

std::optional<ClauseResult> VerificationCache::get(const std::string& key) {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = entries_.find(key);
    if (it != entries_.end()) return it->second;
  }
  if (dir_.empty()) return std::nullopt;
  const auto file = dir_ / (key + ".json");
  if (!std::filesystem::exists(file)) return std::nullopt;
  nlohmann::json j = nlohmann::json::parse(read_file(file), nullptr, false);
  if (j.is_discarded()) return std::nullopt;  // torn write; treat as miss
  ClauseResult r = result_from_json(j);
  std::lock_guard<std::mutex> lock(mutex_);
  entries_[key] = r;
  return r;
}

void VerificationCache::put(const std::string& key, const ClauseResult& result) {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    entries_[key] = result;
  }
  if (!dir_.empty())
    atomic_write_file(dir_ / (key + ".json"), result_to_json(result).dump());
}

std::size_t VerificationCache::invalidate(
    const std::vector<std::string>& clause_ids) {
  std::set<std::string> evicted_keys;
  {
    std::lock_guard<std::mutex> lock(mutex_);
    for (auto it = entries_.begin(); it != entries_.end();) {
      if (std::find(clause_ids.begin(), clause_ids.end(),
                    it->second.clause_id) != clause_ids.end()) {
        evicted_keys.insert(it->first);
        it = entries_.erase(it);
      } else {
        ++it;
      }
    }
  }
  if (!dir_.empty() && std::filesystem::exists(dir_)) {
    for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
      if (!entry.is_regular_file()) continue;
      nlohmann::json j =
          nlohmann::json::parse(read_file(entry.path()), nullptr, false);
      if (j.is_discarded()) continue;
      const auto cid = j.value("clause_id", std::string());
      if (std::find(clause_ids.begin(), clause_ids.end(), cid) !=
          clause_ids.end()) {
        evicted_keys.insert(entry.path().stem().string());
        std::filesystem::remove(entry.path());
      }
    }
  }
  return evicted_keys.size();
}

std::size_t VerificationCache::size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return entries_.size();
}

LogTrace build_trace(std::vector<LogSample> points, double horizon) {
  if (horizon <= 0.0) raise(Errc::invalid_trace, "horizon must be positive");
  for (auto& p : points) {
    p.time = std::clamp(p.time, 0.0, horizon);
    p.level = std::clamp(p.level, 0.0, 1.0);
  }
  std::sort(points.begin(), points.end(), [](const auto& a, const auto& b) {
    if (a.time != b.time) return a.time < b.time;
    return a.level < b.level;
  });
  std::vector<LogSample> merged;
  for (const auto& p : points) {
    if (!merged.empty() && merged.back().time == p.time)
      merged.back().level = std::max(merged.back().level, p.level);
    else
      merged.push_back(p);
  }
  if (merged.empty() || merged.front().time != 0.0)
    merged.insert(merged.begin(), {0.0, 0.0});
  if (merged.back().time != horizon) merged.push_back({horizon, 0.0});
  LogTrace trace;
  trace.horizon = horizon;
  trace.samples = std::move(merged);
  return trace;
}

namespace {

ClauseResult failed_at_max(const std::string& clause_id, bool timed_out) {
  ClauseResult r;
  r.clause_id = clause_id;
  r.timed_out = timed_out;
  r.crashed = !timed_out;
  r.passed = false;
  r.severity = 1.0;
  r.penalty = 1.0;
  r.violated = true;
  r.holds = false;
  return r;
}

std::vector<LogSample> stderr_anomalies(
    const std::string& stderr_text, double horizon,
    const std::vector<std::string>& patterns) {
  std::vector<LogSample> points;
  if (patterns.empty()) return points;
  const auto lines = split_lines(stderr_text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    for (const auto& pattern : patterns) {
      if (lines[i].find(pattern) != std::string::npos) {
        const double t = horizon * static_cast<double>(i + 1) /
                         static_cast<double>(lines.size() + 1);
        points.push_back({t, 1.0});
        break;
      }
    }
  }
  return points;
}

std::string make_excerpt(const ProcessResult& proc) {
  std::string src = proc.stderr_text.empty() ? proc.stdout_text
                                             : proc.stderr_text;
  if (src.size() > 512) src.resize(512);
  return src;
}

ClauseResult run_builtin(const ChannelRunner& runner,
                         const ArtifactSnapshot& snap) {
  ClauseResult r;
  r.clause_id = runner.clause_id;
  const auto fn = BuiltinRegistry::instance().find(runner.builtin);
  if (!fn) {
    r = failed_at_max(runner.clause_id, false);
    r.excerpt = "builtin '" + runner.builtin + "' not registered";
    return r;
  }
  BuiltinResult out;
  try {
    out = (*fn)(snap);
  } catch (const std::exception& e) {
    r = failed_at_max(runner.clause_id, false);
    r.excerpt = std::string("builtin threw: ") + e.what();
    return r;
  }
  r.passed = out.passed;
  r.severity = std::clamp(out.severity, 0.0, 1.0);
  r.penalty = std::clamp(out.penalty, 0.0, 1.0);
  r.violated = out.violated;
  r.holds = out.holds;
  r.trace_points = out.trace;
  return r;
}

ClauseResult run_command(const ChannelRunner& runner, const std::string& workdir,
                         double horizon,
                         const std::vector<std::string>& patterns) {
  std::vector<std::string> argv = runner.command;
  for (auto& arg : argv) {
    std::size_t pos;
    while ((pos = arg.find("{workdir}")) != std::string::npos)
      arg.replace(pos, 9, workdir);
  }
  const ProcessResult proc =
      run_process(argv, workdir, runner.timeout_seconds);

  if (proc.timed_out) return failed_at_max(runner.clause_id, true);
  if (proc.spawn_failed || proc.signaled || proc.exit_code == 127) {
    ClauseResult r = failed_at_max(runner.clause_id, false);
    r.excerpt = make_excerpt(proc);
    return r;
  }

  ClauseResult r;
  r.clause_id = runner.clause_id;
  switch (runner.parser) {
    case RunnerParser::exit_code:
      r.passed = proc.exit_code == 0;
      r.holds = proc.exit_code == 0;
      r.violated = proc.exit_code != 0;
      r.severity = r.violated ? 1.0 : 0.0;
      r.penalty = r.violated ? 1.0 : 0.0;
      break;
    case RunnerParser::severity_json: {
      nlohmann::json j =
          nlohmann::json::parse(proc.stdout_text, nullptr, false);
      if (j.is_discarded() || !j.is_object() || !j.contains("severity") ||
          !j.contains("penalty")) {
        r = failed_at_max(runner.clause_id, false);
        r.excerpt = make_excerpt(proc);
        return r;
      }
      r.severity = std::clamp(j["severity"].get<double>(), 0.0, 1.0);
      r.penalty = std::clamp(j["penalty"].get<double>(), 0.0, 1.0);
      r.violated = r.severity > 0.0;
      r.passed = !r.violated;
      r.holds = !r.violated;
      break;
    }
    case RunnerParser::trace_json: {
      for (const auto& line : split_lines(proc.stdout_text)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("time") ||
            !j.contains("level")) {
          r = failed_at_max(runner.clause_id, false);
          r.excerpt = make_excerpt(proc);
          return r;
        }
        r.trace_points.push_back(
            {j["time"].get<double>(), j["level"].get<double>()});
      }
      r.passed = true;
      r.holds = true;
      break;
    }
  }
  const auto anomalies =
      stderr_anomalies(proc.stderr_text, horizon, patterns);
  r.trace_points.insert(r.trace_points.end(), anomalies.begin(),
                        anomalies.end());
  return r;
}

}  // namespace

VerificationEngine::VerificationEngine(ArtifactSnapshot base,
                                       VerificationConfig cfg)
    : base_(std::move(base)), cfg_(std::move(cfg)), cache_(cfg_.cache_dir) {
  if (cfg_.weights.alpha_test <= 0.0 || cfg_.weights.alpha_struct <= 0.0 ||
      cfg_.weights.alpha_verify <= 0.0 || cfg_.weights.alpha_logs <= 0.0)
    raise(Errc::invalid_argument, "error weights must be positive");
  if (cfg_.log_horizon <= 0.0)
    raise(Errc::invalid_argument, "log horizon must be positive");
}

void VerificationEngine::set_runners(std::vector<ChannelRunner> runners) {
  runners_ = std::move(runners);
}

std::size_t VerificationEngine::invalidate(
    const std::vector<std::string>& clause_ids) {
  return cache_.invalidate(clause_ids);
}

std::uint64_t VerificationEngine::execution_count(
    const std::string& clause_id) const {
  std::lock_guard<std::mutex> lock(counter_mutex_);
  auto it = executions_.find(clause_id);
  return it == executions_.end() ? 0 : it->second;
}

std::uint64_t VerificationEngine::total_executions() const {
  std::lock_guard<std::mutex> lock(counter_mutex_);
  std::uint64_t total = 0;
  for (const auto& [id, n] : executions_) total += n;
  return total;
}

VerificationReport VerificationEngine::verify(const Candidate& candidate,
                                              const Specification& spec,
                                              int worker_count) {
  if (worker_count < 1)
    raise(Errc::invalid_argument, "worker_count must be at least 1");
  const auto t0 = std::chrono::steady_clock::now();

  VerificationReport report;
  report.candidate_id = candidate.id;

  ArtifactSnapshot snap;
  try {
    snap = materialize(base_, candidate);
  } catch (const Error&) {
    // infeasible candidate: maximal composite error, no outcomes
    report.materialization_failed = true;
    report.feedback = {1.0, 1.0, 1.0, 1.0};
    report.channels = ChannelSet::all();
    report.delta = 1.0;
    report.mu = 0.0;
    report.log_trace = build_trace({}, cfg_.log_horizon);
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    return report;
  }

  // pair every spec clause with its runner; leftover trace_json runners act
  // as pure probes
  struct Task {
    const ChannelRunner* runner;
    const SpecClause* clause;  // null for probes
    std::string key;
    ClauseResult result;
    bool cached = false;
  };
  std::vector<Task> tasks;
  for (const auto& clause : spec.clauses()) {
    const ChannelRunner* found = nullptr;
    for (const auto& r : runners_)
      if (r.clause_id == clause.id) found = &r;
    if (found == nullptr)
      raise(Errc::invalid_argument,
            "no runner bound to clause '" + clause.id + "'");
    const bool compatible =
        (clause.kind == ClauseKind::structural &&
         found->parser == RunnerParser::severity_json) ||
        (clause.kind != ClauseKind::structural &&
         found->parser == RunnerParser::exit_code);
    if (!compatible && found->builtin.empty())
      raise(Errc::invalid_argument,
            "parser incompatible with clause '" + clause.id + "'");
    tasks.push_back({found, &clause, "", {}, false});
  }
  for (const auto& r : runners_) {
    if (spec.find(r.clause_id) != nullptr) continue;
    if (r.parser != RunnerParser::trace_json)
      raise(Errc::invalid_argument,
            "runner '" + r.clause_id + "' matches no clause");
    tasks.push_back({&r, nullptr, "", {}, false});
  }
  std::sort(tasks.begin(), tasks.end(), [](const Task& a, const Task& b) {
    return a.runner->clause_id < b.runner->clause_id;
  });

  bool needs_workdir = false;
  for (auto& task : tasks) {
    const std::string def = runner_definition_hash(
        task.clause, *task.runner, cfg_.log_horizon, cfg_.anomaly_patterns);
    task.key = cache_key(candidate.id, task.runner->clause_id, def);
    if (auto hit = cache_.get(task.key)) {
      task.result = *hit;
      task.cached = true;
    } else if (task.runner->builtin.empty()) {
      needs_workdir = true;
    }
  }

  std::filesystem::path workdir;
  if (needs_workdir) {
    if (cfg_.workdir_root.empty())
      raise(Errc::invalid_argument,
            "command runners require a workdir root");
    workdir = cfg_.workdir_root / candidate.id;
    std::filesystem::remove_all(workdir);
    snapshot_to_directory(snap, workdir);
  }

  // bounded fan-out over the uncached tasks; each writes only its own slot
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < tasks.size(); ++i)
    if (!tasks[i].cached) pending.push_back(i);

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= pending.size()) return;
      Task& task = tasks[pending[k]];
      if (!task.runner->builtin.empty()) {
        task.result = run_builtin(*task.runner, snap);
      } else {
        task.result = run_command(*task.runner, workdir.string(),
                                  cfg_.log_horizon, cfg_.anomaly_patterns);
      }
    }
  };
  const std::size_t thread_count = std::min<std::size_t>(
      static_cast<std::size_t>(worker_count), pending.size());
  if (thread_count <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t i = 0; i < thread_count; ++i)
      threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }

  for (const auto idx : pending) {
    cache_.put(tasks[idx].key, tasks[idx].result);
    std::lock_guard<std::mutex> lock(counter_mutex_);
    ++executions_[tasks[idx].runner->clause_id];
  }
  if (needs_workdir) std::filesystem::remove_all(workdir);

  // deterministic merge in clause-id order (tasks are already sorted)
  std::vector<LogSample> trace_points;
  std::unordered_map<std::string, bool> satisfied;
  for (const auto& task : tasks) {
    const auto& r = task.result;
    trace_points.insert(trace_points.end(), r.trace_points.begin(),
                        r.trace_points.end());
    if (r.crashed && !r.excerpt.empty()) {
      ContextItem item;
      item.origin = ContextOrigin::log_excerpt;
      item.payload = "runner '" + task.runner->clause_id +
                     "' crashed: " + r.excerpt;
      item.clause_id = task.runner->clause_id;
      item.anomalous_logs = true;
      report.incidents.push_back(std::move(item));
    }
    if (task.clause == nullptr) continue;
    if (task.cached) ++report.cache_hits;
    switch (task.clause->kind) {
      case ClauseKind::test:
        report.test_outcomes.push_back({r.clause_id, r.passed});
        satisfied[r.clause_id] = r.passed;
        break;
      case ClauseKind::structural:
        report.structural_outcomes.push_back(
            {r.clause_id, r.severity, r.penalty, r.violated});
        satisfied[r.clause_id] = !r.violated;
        break;
      case ClauseKind::verify:
        report.verify_outcomes.push_back({r.clause_id, r.holds});
        satisfied[r.clause_id] = r.holds;
        break;
    }
  }

  report.log_trace = build_trace(std::move(trace_points), cfg_.log_horizon);

  const auto e_test = compute_test_error(report.test_outcomes, spec);
  const auto e_struct = compute_struct_error(report.structural_outcomes, spec);
  const auto e_verify = compute_verify_error(report.verify_outcomes, spec);
  const double e_logs = compute_log_error(report.log_trace);

  report.channels.set(Channel::test, e_test.has_value());
  report.channels.set(Channel::structural, e_struct.has_value());
  report.channels.set(Channel::verify, e_verify.has_value());
  report.channels.set(Channel::logs, true);
  report.feedback.e_test = e_test.value_or(0.0);
  report.feedback.e_struct = e_struct.value_or(0.0);
  report.feedback.e_verify = e_verify.value_or(0.0);
  report.feedback.e_logs = e_logs;
  report.delta = aggregate_delta(report.feedback, cfg_.weights, report.channels);
  report.mu = compute_mu(satisfied, spec);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return report;
}

std::string report_to_json(const VerificationReport& report,
                           bool include_timing) {
  nlohmann::json tests = nlohmann::json::array();
  for (const auto& o : report.test_outcomes)
    tests.push_back({{"clause_id", o.clause_id}, {"passed", o.passed}});
  nlohmann::json structs = nlohmann::json::array();
  for (const auto& o : report.structural_outcomes)
    structs.push_back({{"clause_id", o.clause_id},
                       {"severity", o.severity},
                       {"penalty", o.penalty},
                       {"violated", o.violated}});
  nlohmann::json verifies = nlohmann::json::array();
  for (const auto& o : report.verify_outcomes)
    verifies.push_back({{"clause_id", o.clause_id}, {"holds", o.holds}});
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& s : report.log_trace.samples)
    trace.push_back({{"time", s.time}, {"level", s.level}});
  nlohmann::json j{
      {"candidate_id", report.candidate_id},
      {"tests", tests},
      {"structural", structs},
      {"verify", verifies},
      {"trace", trace},
      {"horizon", report.log_trace.horizon},
      {"feedback",
       {{"e_test", report.feedback.e_test},
        {"e_struct", report.feedback.e_struct},
        {"e_verify", report.feedback.e_verify},
        {"e_logs", report.feedback.e_logs}}},
      {"delta", report.delta},
      {"mu", report.mu},
      {"materialization_failed", report.materialization_failed}};
  if (include_timing) {
    // execution telemetry, not verification content
    j["wall_seconds"] = report.wall_seconds;
    j["cache_hits"] = report.cache_hits;
  }
  return j.dump();
}

}  // namespace smelt
