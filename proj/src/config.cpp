#include "smelt/config.hpp"

#include <set>

#include "smelt/error.hpp"
#include "smelt/util.hpp"

namespace smelt {

namespace {

class Reader {
 public:
  Reader(const nlohmann::json& j, std::vector<std::string>& diags)
      : j_(j), diags_(diags) {}

  template <typename T>
  T get(const std::string& key, T fallback) {
    if (!j_.contains(key)) return fallback;
    try {
      return j_.at(key).get<T>();
    } catch (const std::exception&) {
      diags_.push_back("field '" + prefix_ + key + "' has the wrong type");
      return fallback;
    }
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  Reader sub(const std::string& key) {
    static const nlohmann::json empty = nlohmann::json::object();
    if (!j_.contains(key)) return Reader(empty, diags_, prefix_ + key + ".");
    if (!j_.at(key).is_object()) {
      diags_.push_back("field '" + prefix_ + key + "' must be an object");
      return Reader(empty, diags_, prefix_ + key + ".");
    }
    return Reader(j_.at(key), diags_, prefix_ + key + ".");
  }

 private:
  Reader(const nlohmann::json& j, std::vector<std::string>& diags,
         std::string prefix)
      : j_(j), diags_(diags), prefix_(std::move(prefix)) {}

  const nlohmann::json& j_;
  std::vector<std::string>& diags_;
  std::string prefix_;
};

ChannelRunner runner_from_json(const nlohmann::json& j, const std::string& id,
                               ClauseKind kind,
                               std::vector<std::string>& diags) {
  ChannelRunner r;
  r.clause_id = id;
  try {
    if (j.contains("command")) r.command = j.at("command").get<std::vector<std::string>>();
    r.builtin = j.value("builtin", std::string());
    r.timeout_seconds = j.value("timeout_s", 60.0);
    const std::string default_parser =
        kind == ClauseKind::structural ? "severity_json" : "exit_code";
    r.parser = runner_parser_from_name(j.value("parser", default_parser));
  } catch (const std::exception& e) {
    diags.push_back("runner for '" + id + "': " + e.what());
  }
  return r;
}

nlohmann::json runner_to_json(const ChannelRunner& r) {
  return nlohmann::json{{"command", r.command},
                        {"builtin", r.builtin},
                        {"timeout_s", r.timeout_seconds},
                        {"parser", runner_parser_name(r.parser)}};
}

std::vector<ClauseBinding> clauses_from_json(const nlohmann::json& arr,
                                             const std::string& where,
                                             std::vector<std::string>& diags) {
  std::vector<ClauseBinding> out;
  if (!arr.is_array()) {
    diags.push_back("'" + where + "' must be an array");
    return out;
  }
  for (const auto& cj : arr) {
    ClauseBinding b;
    try {
      b.clause.id = cj.at("id").get<std::string>();
      b.clause.kind = clause_kind_from_name(cj.at("kind").get<std::string>());
      b.clause.weight = cj.value("weight", 1.0);
      b.clause.description = cj.value("description", std::string());
    } catch (const std::exception& e) {
      diags.push_back("clause in '" + where + "': " + std::string(e.what()));
      continue;
    }
    if (cj.contains("runner")) {
      b.runner = runner_from_json(cj.at("runner"), b.clause.id, b.clause.kind,
                                  diags);
    } else {
      diags.push_back("clause '" + b.clause.id + "' has no runner");
    }
    out.push_back(std::move(b));
  }
  return out;
}

nlohmann::json clauses_to_json(const std::vector<ClauseBinding>& clauses) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& b : clauses) {
    arr.push_back({{"id", b.clause.id},
                   {"kind", clause_kind_name(b.clause.kind)},
                   {"weight", b.clause.weight},
                   {"description", b.clause.description},
                   {"runner", runner_to_json(b.runner)}});
  }
  return arr;
}

}  // namespace

RunConfig config_from_json(const nlohmann::json& j,
                           std::vector<std::string>& diagnostics) {
  RunConfig cfg;
  if (!j.is_object()) {
    diagnostics.push_back("config root must be a JSON object");
    return cfg;
  }
  Reader root(j, diagnostics);

  auto weights = root.sub("weights");
  cfg.weights.alpha_test = weights.get("alpha_test", 1.0);
  cfg.weights.alpha_struct = weights.get("alpha_struct", 1.0);
  cfg.weights.alpha_verify = weights.get("alpha_verify", 1.0);
  cfg.weights.alpha_logs = weights.get("alpha_logs", 1.0);

  auto search = root.sub("search");
  cfg.search.lambda = search.get("lambda", 1.0);
  cfg.search.pool_size = search.get("pool_size", 8);
  cfg.search.exploration_fraction = search.get("exploration_fraction", 0.25);
  cfg.search.newcomer_mass = search.get("newcomer_mass", 0.3);

  auto scoring = root.sub("scoring");
  cfg.scoring.theta1 = scoring.get("theta1", 1.0);
  cfg.scoring.theta2 = scoring.get("theta2", 1.0);
  cfg.scoring.theta3 = scoring.get("theta3", 1.0);
  cfg.scoring.theta4 = scoring.get("theta4", 1.0);
  cfg.scoring.theta5 = scoring.get("theta5", 1.0);
  cfg.recency_window = scoring.get("recency_window", kDefaultRecencyWindow);

  cfg.context_budget = root.get<std::size_t>("context_budget", 4096);
  cfg.worker_count = root.get("worker_count", 4);
  cfg.seed = root.get<std::uint64_t>("seed", 0);
  cfg.log_horizon = root.get("log_horizon", 10.0);
  cfg.anomaly_patterns =
      root.get<std::vector<std::string>>("anomaly_patterns", {});

  auto termination = root.sub("termination");
  cfg.termination.delta_threshold = termination.get("delta_threshold", 0.0);
  cfg.termination.max_iterations = termination.get("max_iterations", 50);
  cfg.termination.stall_window = termination.get("stall_window", 10);

  auto history = root.sub("history");
  cfg.max_history_items_per_iteration =
      history.get("max_items_per_iteration", 32);

  auto generator = root.sub("generator");
  cfg.generator_kind = generator.get<std::string>("kind", "mutation");
  cfg.mutation.vocabulary =
      generator.get<std::vector<std::string>>("vocabulary", {});
  cfg.mutation.max_payload_bytes =
      generator.get<std::size_t>("max_payload_bytes", 4096);
  cfg.synthetic_space = generator.get<std::string>("space", "");
  cfg.proposals_per_iteration = generator.get("proposals_per_iteration", 0);

  auto remote = root.sub("remote");
  cfg.remote.endpoint = remote.get<std::string>("endpoint", "");
  cfg.remote.auth_token = remote.get<std::string>("auth_token", "");
  cfg.remote.timeout_seconds = remote.get("timeout_s", 30.0);
  cfg.remote.max_in_flight = remote.get("max_in_flight", 2);

  if (root.has("clauses"))
    cfg.clauses = clauses_from_json(j.at("clauses"), "clauses", diagnostics);

  if (root.has("trace_probes")) {
    if (!j.at("trace_probes").is_array()) {
      diagnostics.push_back("'trace_probes' must be an array");
    } else {
      for (const auto& pj : j.at("trace_probes")) {
        const std::string id = pj.value("id", std::string());
        if (id.empty()) {
          diagnostics.push_back("trace probe without an id");
          continue;
        }
        ChannelRunner probe =
            runner_from_json(pj, id, ClauseKind::test, diagnostics);
        probe.parser = RunnerParser::trace_json;
        cfg.trace_probes.push_back(std::move(probe));
      }
    }
  }

  if (root.has("demands")) {
    if (!j.at("demands").is_array()) {
      diagnostics.push_back("'demands' must be an array");
    } else {
      for (const auto& dj : j.at("demands")) {
        DemandEventConfig event;
        event.at_iteration = dj.value("at_iteration", 0);
        if (dj.contains("clauses"))
          event.clauses =
              clauses_from_json(dj.at("clauses"), "demands", diagnostics);
        cfg.demands.push_back(std::move(event));
      }
    }
  }
  return cfg;
}

nlohmann::json config_to_json(const RunConfig& cfg) {
  nlohmann::json probes = nlohmann::json::array();
  for (const auto& p : cfg.trace_probes) {
    nlohmann::json pj = runner_to_json(p);
    pj["id"] = p.clause_id;
    probes.push_back(pj);
  }
  nlohmann::json demands = nlohmann::json::array();
  for (const auto& d : cfg.demands)
    demands.push_back({{"at_iteration", d.at_iteration},
                       {"clauses", clauses_to_json(d.clauses)}});
  return nlohmann::json{
      {"weights",
       {{"alpha_test", cfg.weights.alpha_test},
        {"alpha_struct", cfg.weights.alpha_struct},
        {"alpha_verify", cfg.weights.alpha_verify},
        {"alpha_logs", cfg.weights.alpha_logs}}},
      {"search",
       {{"lambda", cfg.search.lambda},
        {"pool_size", cfg.search.pool_size},
        {"exploration_fraction", cfg.search.exploration_fraction},
        {"newcomer_mass", cfg.search.newcomer_mass}}},
      {"scoring",
       {{"theta1", cfg.scoring.theta1},
        {"theta2", cfg.scoring.theta2},
        {"theta3", cfg.scoring.theta3},
        {"theta4", cfg.scoring.theta4},
        {"theta5", cfg.scoring.theta5},
        {"recency_window", cfg.recency_window}}},
      {"context_budget", cfg.context_budget},
      {"worker_count", cfg.worker_count},
      {"seed", cfg.seed},
      {"log_horizon", cfg.log_horizon},
      {"anomaly_patterns", cfg.anomaly_patterns},
      {"termination",
       {{"delta_threshold", cfg.termination.delta_threshold},
        {"max_iterations", cfg.termination.max_iterations},
        {"stall_window", cfg.termination.stall_window}}},
      {"history",
       {{"max_items_per_iteration", cfg.max_history_items_per_iteration}}},
      {"generator",
       {{"kind", cfg.generator_kind},
        {"vocabulary", cfg.mutation.vocabulary},
        {"max_payload_bytes", cfg.mutation.max_payload_bytes},
        {"space", cfg.synthetic_space},
        {"proposals_per_iteration", cfg.proposals_per_iteration}}},
      {"remote",
       {{"endpoint", cfg.remote.endpoint},
        {"auth_token", cfg.remote.auth_token},
        {"timeout_s", cfg.remote.timeout_seconds},
        {"max_in_flight", cfg.remote.max_in_flight}}},
      {"clauses", clauses_to_json(cfg.clauses)},
      {"trace_probes", probes},
      {"demands", demands}};
}

RunConfig load_config(const std::filesystem::path& path,
                      std::vector<std::string>& diagnostics) {
  if (!std::filesystem::exists(path)) {
    diagnostics.push_back("config file '" + path.string() + "' not found");
    return RunConfig{};
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const std::exception& e) {
    diagnostics.push_back("config is not valid JSON: " + std::string(e.what()));
    return RunConfig{};
  }
  RunConfig cfg = config_from_json(j, diagnostics);
  validate_config(cfg, diagnostics);
  return cfg;
}

void validate_config(const RunConfig& cfg,
                     std::vector<std::string>& diagnostics) {
  auto check = [&](bool ok, const std::string& message) {
    if (!ok) diagnostics.push_back(message);
  };
  check(cfg.weights.alpha_test > 0 && cfg.weights.alpha_struct > 0 &&
            cfg.weights.alpha_verify > 0 && cfg.weights.alpha_logs > 0,
        "weights.*: all alpha weights must be positive");
  check(cfg.search.lambda >= 0, "search.lambda: must be non-negative");
  check(cfg.search.pool_size >= 1, "search.pool_size: must be at least 1");
  check(cfg.search.exploration_fraction >= 0 &&
            cfg.search.exploration_fraction <= 1,
        "search.exploration_fraction: must be in [0,1]");
  check(cfg.search.newcomer_mass > 0 && cfg.search.newcomer_mass < 1,
        "search.newcomer_mass: must be in (0,1)");
  check(cfg.scoring.theta1 >= 0 && cfg.scoring.theta2 >= 0 &&
            cfg.scoring.theta3 >= 0 && cfg.scoring.theta4 >= 0 &&
            cfg.scoring.theta5 >= 0,
        "scoring.*: theta weights must be non-negative");
  check(cfg.recency_window >= 0, "scoring.recency_window: must be >= 0");
  check(cfg.worker_count >= 1, "worker_count: must be at least 1");
  check(cfg.log_horizon > 0, "log_horizon: must be positive");
  check(cfg.termination.delta_threshold >= 0 &&
            cfg.termination.delta_threshold <= 1,
        "termination.delta_threshold: must be in [0,1]");
  check(cfg.termination.max_iterations >= 1,
        "termination.max_iterations: must be at least 1");
  check(cfg.termination.stall_window >= 1,
        "termination.stall_window: must be at least 1");
  check(cfg.max_history_items_per_iteration >= 0,
        "history.max_items_per_iteration: must be >= 0");
  check(cfg.proposals_per_iteration >= 0,
        "generator.proposals_per_iteration: must be >= 0");

  const bool known_kind = cfg.generator_kind == "mutation" ||
                          cfg.generator_kind == "remote" ||
                          cfg.generator_kind == "synthetic";
  check(known_kind, "generator.kind: must be mutation, remote or synthetic");
  if (cfg.generator_kind == "synthetic")
    check(!cfg.synthetic_space.empty(),
          "generator.space: required for the synthetic generator");

  std::set<std::string> ids;
  auto check_bindings = [&](const std::vector<ClauseBinding>& bindings,
                            const std::string& where) {
    for (const auto& b : bindings) {
      check(!b.clause.id.empty(), where + ": clause id must be non-empty");
      check(b.clause.weight > 0,
            where + ": clause '" + b.clause.id + "' weight must be positive");
      check(ids.insert(b.clause.id).second,
            where + ": duplicate clause id '" + b.clause.id + "'");
      check(!b.runner.command.empty() || !b.runner.builtin.empty(),
            where + ": clause '" + b.clause.id +
                "' runner needs a command or builtin");
      check(b.runner.timeout_seconds > 0,
            where + ": clause '" + b.clause.id + "' timeout must be positive");
      if (b.runner.builtin.empty()) {
        const bool compatible =
            (b.clause.kind == ClauseKind::structural &&
             b.runner.parser == RunnerParser::severity_json) ||
            (b.clause.kind != ClauseKind::structural &&
             b.runner.parser == RunnerParser::exit_code);
        check(compatible, where + ": clause '" + b.clause.id +
                              "' parser incompatible with its kind");
      }
    }
  };
  check(!cfg.clauses.empty(), "clauses: at least one clause is required");
  check_bindings(cfg.clauses, "clauses");
  for (const auto& d : cfg.demands) {
    check(d.at_iteration >= 1, "demands: at_iteration must be >= 1");
    check_bindings(d.clauses, "demands");
  }
  for (const auto& p : cfg.trace_probes) {
    check(!p.command.empty() || !p.builtin.empty(),
          "trace_probes: probe '" + p.clause_id +
              "' needs a command or builtin");
    check(ids.insert(p.clause_id).second,
          "trace_probes: id '" + p.clause_id + "' collides with a clause");
  }
}

}  // namespace smelt
