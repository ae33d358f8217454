#include "smelt/synthbench.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

#include "smelt/error.hpp"
#include "smelt/util.hpp"
#include "smelt/verification.hpp"

namespace smelt {

namespace {

const char* predicate_name(SyntheticClause::Predicate p) {
  switch (p) {
    case SyntheticClause::Predicate::slot_equals: return "slot_equals";
    case SyntheticClause::Predicate::slot_distance: return "slot_distance";
    case SyntheticClause::Predicate::sum_equals: return "sum_equals";
    case SyntheticClause::Predicate::sum_parity: return "sum_parity";
  }
  return "unknown";
}

SyntheticClause::Predicate predicate_from_name(const std::string& name) {
  if (name == "slot_equals") return SyntheticClause::Predicate::slot_equals;
  if (name == "slot_distance") return SyntheticClause::Predicate::slot_distance;
  if (name == "sum_equals") return SyntheticClause::Predicate::sum_equals;
  if (name == "sum_parity") return SyntheticClause::Predicate::sum_parity;
  raise(Errc::config, "unknown synthetic predicate '" + name + "'");
}

std::string builtin_id(const SyntheticSpace& space, const std::string& clause) {
  return "synth:" + space.id + ":" + clause;
}

std::vector<int> reference_vector(const SyntheticSpace& space) {
  if (!space.probe_reference.empty()) return space.probe_reference;
  if (space.planted_optimum) return *space.planted_optimum;
  return std::vector<int>(space.dimensions.size(), 0);
}

struct ClauseEval {
  bool ok = true;
  double severity = 0.0;
};

ClauseEval eval_clause(const SyntheticClause& sc,
                       const std::vector<int>& symbols,
                       const std::vector<int>& dimensions) {
  ClauseEval out;
  const long long sum = std::accumulate(symbols.begin(), symbols.end(), 0LL);
  switch (sc.predicate) {
    case SyntheticClause::Predicate::slot_equals:
      out.ok = symbols.at(static_cast<std::size_t>(sc.slot)) == sc.target;
      break;
    case SyntheticClause::Predicate::sum_equals:
      out.ok = sum == sc.target;
      break;
    case SyntheticClause::Predicate::sum_parity:
      out.ok = (sum % 2) == (sc.target % 2);
      break;
    case SyntheticClause::Predicate::slot_distance: {
      const int dim = dimensions.at(static_cast<std::size_t>(sc.slot));
      const int value = symbols.at(static_cast<std::size_t>(sc.slot));
      out.severity = dim > 1 ? std::abs(value - sc.target) /
                                   static_cast<double>(dim - 1)
                             : 0.0;
      out.ok = out.severity == 0.0;
      break;
    }
  }
  return out;
}

double probe_level(const SyntheticSpace& space,
                   const std::vector<int>& symbols) {
  const auto ref = reference_vector(space);
  if (ref.size() != symbols.size() || symbols.empty()) return 1.0;
  int mismatched = 0;
  for (std::size_t i = 0; i < symbols.size(); ++i)
    if (symbols[i] != ref[i]) ++mismatched;
  return static_cast<double>(mismatched) / static_cast<double>(symbols.size());
}

std::vector<SyntheticClause> all_clauses(const SyntheticSpace& space) {
  std::vector<SyntheticClause> out = space.clauses;
  for (const auto& [at, clauses] : space.demand_schedule)
    out.insert(out.end(), clauses.begin(), clauses.end());
  return out;
}

}  // namespace

std::uint64_t SyntheticSpace::size() const {
  std::uint64_t n = 1;
  for (const int dim : dimensions) {
    if (dim < 1) raise(Errc::invalid_argument, "alphabet size must be >= 1");
    n *= static_cast<std::uint64_t>(dim);
    if (n > kBruteForceCap * 1000) break;  // avoid overflow on huge inputs
  }
  return n;
}

ArtifactSnapshot genome_snapshot(const std::vector<int>& symbols) {
  std::string content;
  for (std::size_t i = 0; i < symbols.size(); ++i)
    content += "s" + std::to_string(i) + " = " + std::to_string(symbols[i]) +
               "\n";
  ArtifactSnapshot snap;
  snap.files["genome.txt"] = content;
  return snap;
}

std::vector<int> parse_genome(const ArtifactSnapshot& snap,
                              const std::vector<int>& dimensions) {
  auto it = snap.files.find("genome.txt");
  if (it == snap.files.end())
    raise(Errc::invalid_argument, "genome.txt missing");
  const auto lines = split_lines(it->second);
  std::vector<std::string> non_empty;
  for (const auto& line : lines)
    if (!line.empty()) non_empty.push_back(line);
  if (non_empty.size() != dimensions.size())
    raise(Errc::invalid_argument, "genome has wrong slot count");
  std::vector<int> symbols;
  for (std::size_t i = 0; i < non_empty.size(); ++i) {
    const std::string expected = "s" + std::to_string(i) + " = ";
    if (non_empty[i].rfind(expected, 0) != 0)
      raise(Errc::invalid_argument, "malformed genome line " +
                                        std::to_string(i));
    const std::string value = non_empty[i].substr(expected.size());
    std::size_t consumed = 0;
    int symbol = 0;
    try {
      symbol = std::stoi(value, &consumed);
    } catch (const std::exception&) {
      raise(Errc::invalid_argument, "non-numeric genome value");
    }
    if (consumed != value.size())
      raise(Errc::invalid_argument, "trailing bytes in genome value");
    if (symbol < 0 || symbol >= dimensions[i])
      raise(Errc::invalid_argument, "genome symbol out of alphabet");
    symbols.push_back(symbol);
  }
  return symbols;
}

void register_space(const SyntheticSpace& space) {
  auto& registry = BuiltinRegistry::instance();
  for (const auto& sc : all_clauses(space)) {
    const SyntheticSpace space_copy = space;
    const SyntheticClause clause_copy = sc;
    registry.add(builtin_id(space, sc.clause.id),
                 [space_copy, clause_copy](const ArtifactSnapshot& snap) {
                   const auto symbols =
                       parse_genome(snap, space_copy.dimensions);
                   const ClauseEval eval = eval_clause(
                       clause_copy, symbols, space_copy.dimensions);
                   BuiltinResult out;
                   out.passed = eval.ok;
                   out.holds = eval.ok;
                   out.violated = !eval.ok;
                   out.severity = clause_copy.predicate ==
                                          SyntheticClause::Predicate::slot_distance
                                      ? eval.severity
                                      : (eval.ok ? 0.0 : 1.0);
                   out.penalty = out.violated ? clause_copy.penalty : 0.0;
                   return out;
                 });
  }
  if (space.log_probe) {
    const SyntheticSpace space_copy = space;
    registry.add(builtin_id(space, "probe"),
                 [space_copy](const ArtifactSnapshot& snap) {
                   const auto symbols =
                       parse_genome(snap, space_copy.dimensions);
                   const double level = probe_level(space_copy, symbols);
                   BuiltinResult out;
                   out.trace = {{0.0, level}, {kSyntheticHorizon, level}};
                   return out;
                 });
  }
}

Specification initial_spec(const SyntheticSpace& space) {
  std::vector<SpecClause> clauses;
  for (const auto& sc : space.clauses) clauses.push_back(sc.clause);
  return Specification(clauses, 0);
}

namespace {

ChannelRunner binding_runner(const SyntheticSpace& space,
                             const SyntheticClause& sc) {
  ChannelRunner r;
  r.clause_id = sc.clause.id;
  r.builtin = builtin_id(space, sc.clause.id);
  r.timeout_seconds = 5.0;
  r.parser = sc.clause.kind == ClauseKind::structural
                 ? RunnerParser::severity_json
                 : RunnerParser::exit_code;
  return r;
}

}  // namespace

RunConfig bench_config(const SyntheticSpace& space) {
  RunConfig cfg;
  cfg.weights = {0.4, 0.3, 0.2, 0.1};
  cfg.search.lambda = 2.0;
  cfg.search.pool_size = 8;
  cfg.search.exploration_fraction = 0.5;
  cfg.search.newcomer_mass = 0.3;
  cfg.scoring = {};
  cfg.recency_window = 3;
  cfg.context_budget = 2000;
  cfg.worker_count = 1;  // builtins are in-process; threads add nothing
  cfg.log_horizon = kSyntheticHorizon;
  cfg.termination = {0.0, 80, 80};
  cfg.max_history_items_per_iteration = 32;
  cfg.generator_kind = "synthetic";
  cfg.synthetic_space = space.id;
  for (const auto& sc : space.clauses)
    cfg.clauses.push_back({sc.clause, binding_runner(space, sc)});
  if (space.log_probe) {
    ChannelRunner probe;
    probe.clause_id = "synth_probe_" + space.id;
    probe.builtin = builtin_id(space, "probe");
    probe.timeout_seconds = 5.0;
    probe.parser = RunnerParser::trace_json;
    cfg.trace_probes.push_back(probe);
  }
  for (const auto& [at, clauses] : space.demand_schedule) {
    DemandEventConfig event;
    event.at_iteration = at;
    for (const auto& sc : clauses)
      event.clauses.push_back({sc.clause, binding_runner(space, sc)});
    cfg.demands.push_back(event);
  }
  return cfg;
}

namespace {

class SpaceGenerator : public Generator {
 public:
  explicit SpaceGenerator(SyntheticSpace space) : space_(std::move(space)) {}

  ProposeOutcome propose(const ProposalRequest& req) override {
    ProposeOutcome outcome;
    std::vector<int> symbols;
    try {
      ArtifactSnapshot snap;
      snap.files = req.incumbent_files;
      symbols = parse_genome(snap, space_.dimensions);
    } catch (const Error&) {
      return outcome;  // degenerate incumbent; nothing sensible to mutate
    }

    struct Move {
      std::size_t slot;
      int value;
    };
    std::vector<Move> moves;
    for (std::size_t slot = 0; slot < space_.dimensions.size(); ++slot)
      for (int value = 0; value < space_.dimensions[slot]; ++value)
        if (value != symbols[slot]) moves.push_back({slot, value});
    if (moves.empty()) return outcome;

    std::mt19937_64 rng(derive_seed(req.seed, "space-moves", 0));
    for (std::size_t i = moves.size(); i-- > 1;) {
      const std::size_t j = uniform_index(rng, i + 1);
      std::swap(moves[i], moves[j]);
    }

    for (int k = 0; k < req.n; ++k) {
      const Move& move = moves[static_cast<std::size_t>(k) % moves.size()];
      Proposal p;
      Edit e;
      e.kind = EditKind::set_parameter;
      e.target = "genome.txt";
      e.parameter = "s" + std::to_string(move.slot);
      e.payload = std::to_string(move.value);
      p.edits.push_back(e);
      p.rationale = "set slot " + std::to_string(move.slot) + " to " +
                    std::to_string(move.value);
      outcome.proposals.push_back(std::move(p));
    }
    return outcome;
  }

 private:
  SyntheticSpace space_;
};

}  // namespace

std::shared_ptr<Generator> make_space_generator(const SyntheticSpace& space) {
  register_space(space);
  return std::make_shared<SpaceGenerator>(space);
}

std::shared_ptr<Generator> make_fixture_generator(const std::string& name) {
  return make_space_generator(fixture(name));
}

SyntheticSpace fixture(const std::string& id) {
  auto slot_eq = [](const std::string& cid, ClauseKind kind, double weight,
                    int slot, int target) {
    SyntheticClause sc;
    sc.clause = {cid, kind, weight,
                 "slot " + std::to_string(slot) + " equals " +
                     std::to_string(target)};
    sc.predicate = SyntheticClause::Predicate::slot_equals;
    sc.slot = slot;
    sc.target = target;
    return sc;
  };
  auto slot_dist = [](const std::string& cid, double weight, int slot,
                      int target, double penalty) {
    SyntheticClause sc;
    sc.clause = {cid, ClauseKind::structural, weight,
                 "slot " + std::to_string(slot) + " near " +
                     std::to_string(target)};
    sc.predicate = SyntheticClause::Predicate::slot_distance;
    sc.slot = slot;
    sc.target = target;
    sc.penalty = penalty;
    return sc;
  };
  auto sum_eq = [](const std::string& cid, ClauseKind kind, double weight,
                   int target) {
    SyntheticClause sc;
    sc.clause = {cid, kind, weight,
                 "symbol sum equals " + std::to_string(target)};
    sc.predicate = SyntheticClause::Predicate::sum_equals;
    sc.target = target;
    return sc;
  };
  auto sum_par = [](const std::string& cid, double weight, int target) {
    SyntheticClause sc;
    sc.clause = {cid, ClauseKind::verify, weight,
                 "symbol sum parity " + std::to_string(target % 2)};
    sc.predicate = SyntheticClause::Predicate::sum_parity;
    sc.target = target;
    return sc;
  };

  if (id == "S1" || id == "S3") {
    SyntheticSpace space;
    space.id = id;
    space.dimensions = {8, 8, 8};
    space.initial = {0, 0, 0};
    space.planted_optimum = std::vector<int>{2, 5, 7};
    space.clauses = {
        slot_eq("t0", ClauseKind::test, 1.0, 0, 2),
        slot_eq("t1", ClauseKind::test, 2.0, 1, 5),
        slot_eq("t2", ClauseKind::test, 3.0, 2, 7),
        slot_dist("a0", 1.0, 0, 2, 1.0),
        slot_dist("a1", 1.0, 1, 5, 1.0),
        slot_dist("a2", 2.0, 2, 7, 0.5),
        sum_par("v0", 1.0, 14),
        slot_eq("v1", ClauseKind::verify, 2.0, 1, 5),
    };
    if (id == "S3")
      space.demand_schedule = {
          {10,
           {sum_eq("d0", ClauseKind::test, 2.0, 14),
            slot_dist("d1", 2.0, 2, 7, 1.0)}}};
    return space;
  }
  if (id == "S2") {
    SyntheticSpace space;
    space.id = id;
    space.dimensions = {4, 4};
    space.initial = {0, 0};
    space.planted_optimum = std::vector<int>{1, 3};
    space.clauses = {
        slot_eq("t0", ClauseKind::test, 3.0, 0, 1),
        slot_eq("t1", ClauseKind::test, 1.0, 1, 3),
        sum_eq("t2", ClauseKind::test, 2.0, 4),
    };
    return space;
  }
  if (std::filesystem::exists(id)) {
    try {
      return space_from_json(nlohmann::json::parse(read_file(id)));
    } catch (const std::exception& e) {
      raise(Errc::config,
            "fixture file '" + id + "' is invalid: " + e.what());
    }
  }
  raise(Errc::not_found, "unknown fixture '" + id + "'");
}

std::vector<std::string> fixture_ids() { return {"S1", "S2", "S3"}; }

nlohmann::json space_to_json(const SyntheticSpace& space) {
  auto clause_json = [](const SyntheticClause& sc) {
    return nlohmann::json{{"id", sc.clause.id},
                          {"kind", clause_kind_name(sc.clause.kind)},
                          {"weight", sc.clause.weight},
                          {"description", sc.clause.description},
                          {"predicate", predicate_name(sc.predicate)},
                          {"slot", sc.slot},
                          {"target", sc.target},
                          {"penalty", sc.penalty}};
  };
  nlohmann::json clauses = nlohmann::json::array();
  for (const auto& sc : space.clauses) clauses.push_back(clause_json(sc));
  nlohmann::json demands = nlohmann::json::array();
  for (const auto& [at, list] : space.demand_schedule) {
    nlohmann::json dj{{"at_iteration", at},
                      {"clauses", nlohmann::json::array()}};
    for (const auto& sc : list) dj["clauses"].push_back(clause_json(sc));
    demands.push_back(dj);
  }
  nlohmann::json j{{"id", space.id},
                   {"dimensions", space.dimensions},
                   {"initial", space.initial},
                   {"clauses", clauses},
                   {"demands", demands},
                   {"log_probe", space.log_probe},
                   {"probe_reference", space.probe_reference}};
  if (space.planted_optimum)
    j["planted_optimum"] = *space.planted_optimum;
  else
    j["planted_optimum"] = nullptr;
  return j;
}

SyntheticSpace space_from_json(const nlohmann::json& j) {
  auto clause_from = [](const nlohmann::json& cj) {
    SyntheticClause sc;
    sc.clause.id = cj.at("id").get<std::string>();
    sc.clause.kind = clause_kind_from_name(cj.at("kind").get<std::string>());
    sc.clause.weight = cj.value("weight", 1.0);
    sc.clause.description = cj.value("description", std::string());
    sc.predicate = predicate_from_name(cj.at("predicate").get<std::string>());
    sc.slot = cj.value("slot", 0);
    sc.target = cj.value("target", 0);
    sc.penalty = cj.value("penalty", 1.0);
    return sc;
  };
  SyntheticSpace space;
  space.id = j.at("id").get<std::string>();
  space.dimensions = j.at("dimensions").get<std::vector<int>>();
  space.initial = j.value("initial", std::vector<int>());
  if (space.initial.empty())
    space.initial.assign(space.dimensions.size(), 0);
  for (const auto& cj : j.at("clauses")) space.clauses.push_back(clause_from(cj));
  if (j.contains("demands"))
    for (const auto& dj : j.at("demands")) {
      std::vector<SyntheticClause> list;
      for (const auto& cj : dj.at("clauses")) list.push_back(clause_from(cj));
      space.demand_schedule.emplace_back(dj.at("at_iteration").get<int>(),
                                         std::move(list));
    }
  space.log_probe = j.value("log_probe", true);
  space.probe_reference = j.value("probe_reference", std::vector<int>());
  if (j.contains("planted_optimum") && !j.at("planted_optimum").is_null())
    space.planted_optimum = j.at("planted_optimum").get<std::vector<int>>();
  return space;
}

double direct_delta(const SyntheticSpace& space, const Specification& spec,
                    const ErrorWeights& weights,
                    const std::vector<int>& symbols) {
  const std::vector<SyntheticClause> known = all_clauses(space);
  std::map<std::string, const SyntheticClause*> catalog;
  for (const auto& sc : known) catalog[sc.clause.id] = &sc;

  // outcomes assembled in clause-id order so the arithmetic matches the
  // verification engine's merge exactly
  std::vector<const SpecClause*> ordered;
  for (const auto& c : spec.clauses()) ordered.push_back(&c);
  std::sort(ordered.begin(), ordered.end(),
            [](const SpecClause* a, const SpecClause* b) { return a->id < b->id; });

  std::vector<TestOutcome> tests;
  std::vector<StructuralOutcome> structs;
  std::vector<VerifyOutcome> verifies;
  for (const SpecClause* c : ordered) {
    auto it = catalog.find(c->id);
    if (it == catalog.end())
      raise(Errc::invalid_argument,
            "spec clause '" + c->id + "' unknown to space '" + space.id + "'");
    const ClauseEval eval = eval_clause(*it->second, symbols, space.dimensions);
    switch (c->kind) {
      case ClauseKind::test:
        tests.push_back({c->id, eval.ok});
        break;
      case ClauseKind::structural: {
        const double severity =
            it->second->predicate == SyntheticClause::Predicate::slot_distance
                ? eval.severity
                : (eval.ok ? 0.0 : 1.0);
        structs.push_back({c->id, severity,
                           eval.ok ? 0.0 : it->second->penalty, !eval.ok});
        break;
      }
      case ClauseKind::verify:
        verifies.push_back({c->id, eval.ok});
        break;
    }
  }

  FeedbackVector f;
  ChannelSet channels;
  const auto e_test = compute_test_error(tests, spec);
  const auto e_struct = compute_struct_error(structs, spec);
  const auto e_verify = compute_verify_error(verifies, spec);
  channels.set(Channel::test, e_test.has_value());
  channels.set(Channel::structural, e_struct.has_value());
  channels.set(Channel::verify, e_verify.has_value());
  channels.set(Channel::logs, true);
  f.e_test = e_test.value_or(0.0);
  f.e_struct = e_struct.value_or(0.0);
  f.e_verify = e_verify.value_or(0.0);

  LogTrace trace;
  trace.horizon = kSyntheticHorizon;
  const double level = space.log_probe ? probe_level(space, symbols) : 0.0;
  trace.samples = {{0.0, level}, {kSyntheticHorizon, level}};
  f.e_logs = compute_log_error(trace);

  return aggregate_delta(f, weights, channels);
}

BruteForceResult brute_force_min_delta(const SyntheticSpace& space,
                                       const Specification& spec,
                                       const ErrorWeights& weights) {
  if (space.dimensions.empty())
    raise(Errc::invalid_argument, "space has no slots");
  if (space.size() > kBruteForceCap)
    raise(Errc::invalid_argument,
          "space too large for exhaustive evaluation");

  BruteForceResult result;
  result.min_delta = std::numeric_limits<double>::infinity();
  std::vector<int> symbols(space.dimensions.size(), 0);
  for (;;) {
    const double delta = direct_delta(space, spec, weights, symbols);
    if (delta < result.min_delta) {
      result.min_delta = delta;
      result.argmin.clear();
      result.argmin.push_back(symbols);
    } else if (delta == result.min_delta) {
      result.argmin.push_back(symbols);
    }
    // odometer increment, most significant slot first => lexicographic order
    std::size_t slot = symbols.size();
    while (slot-- > 0) {
      if (++symbols[slot] < space.dimensions[slot]) break;
      symbols[slot] = 0;
      if (slot == 0) return result;
    }
  }
}

ExperimentResult run_experiment(const ConvergenceExperiment& exp) {
  const std::vector<RunResult> results = run_replicates(exp);
  ExperimentResult out;
  out.space_id = exp.space.id;
  const bool has_demands = !exp.space.demand_schedule.empty();
  int successes = 0;
  std::vector<int> iteration_counts;
  for (int i = 0; i < exp.replicates; ++i) {
    const RunResult& r = results[static_cast<std::size_t>(i)];
    ReplicateRow row;
    row.seed = exp.base_seed + static_cast<std::uint64_t>(i);
    row.success = r.reason == TerminationReason::success;
    row.iterations = r.iterations;
    row.final_delta = r.final_delta;
    if (has_demands)
      row.reconverged = row.success && r.spec_version > 0 ? 1 : 0;
    for (const auto& record : r.records)
      row.trajectory.push_back(record.best_delta);
    successes += row.success ? 1 : 0;
    iteration_counts.push_back(row.iterations);
    out.rows.push_back(std::move(row));
  }
  out.success_rate = exp.replicates > 0
                         ? static_cast<double>(successes) / exp.replicates
                         : 0.0;
  std::sort(iteration_counts.begin(), iteration_counts.end());
  if (!iteration_counts.empty()) {
    const std::size_t mid = iteration_counts.size() / 2;
    out.median_iterations =
        iteration_counts.size() % 2 == 1
            ? iteration_counts[mid]
            : (iteration_counts[mid - 1] + iteration_counts[mid]) / 2.0;
  }
  return out;
}

std::vector<RunResult> run_replicates(const ConvergenceExperiment& exp) {
  if (exp.replicates < 1)
    raise(Errc::invalid_argument, "replicates must be at least 1");
  register_space(exp.space);

  std::vector<RunResult> results(static_cast<std::size_t>(exp.replicates));
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= exp.replicates) return;
      RunSetup setup;
      setup.base = genome_snapshot(exp.space.initial);
      setup.cfg = exp.config;
      setup.cfg.seed = exp.base_seed + static_cast<std::uint64_t>(i);
      setup.generator = make_space_generator(exp.space);
      results[static_cast<std::size_t>(i)] = run(setup);
    }
  };
  int parallelism = exp.parallelism > 0
                        ? exp.parallelism
                        : static_cast<int>(std::thread::hardware_concurrency());
  parallelism = std::max(1, std::min(parallelism, exp.replicates));
  if (parallelism == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int i = 0; i < parallelism; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  return results;
}

void emit_report(const ExperimentResult& result,
                 const std::filesystem::path& path) {
  if (result.rows.empty())
    raise(Errc::invalid_argument, "refusing to emit an empty report");
  std::string out =
      "seed,success,iterations,final_delta,reconverged_after_demand,"
      "best_delta_trajectory\n";
  for (const auto& row : result.rows) {
    out += std::to_string(row.seed);
    out += ",";
    out += row.success ? "1" : "0";
    out += ",";
    out += std::to_string(row.iterations);
    out += ",";
    out += format_double(row.final_delta);
    out += ",";
    out += row.reconverged < 0 ? "na" : std::to_string(row.reconverged);
    out += ",";
    for (std::size_t i = 0; i < row.trajectory.size(); ++i) {
      if (i > 0) out += "|";
      out += format_double(row.trajectory[i]);
    }
    out += "\n";
  }
  out += "# summary success_rate=" + format_double(result.success_rate) +
         " median_iterations=" + format_double(result.median_iterations) +
         "\n";
  atomic_write_file(path, out);
}

}  // namespace smelt
