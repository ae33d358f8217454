#include "smelt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "smelt/error.hpp"

namespace smelt {

const char* clause_kind_name(ClauseKind kind) {
  switch (kind) {
    case ClauseKind::test: return "test";
    case ClauseKind::structural: return "structural";
    case ClauseKind::verify: return "verify";
  }
  return "unknown";
}

ClauseKind clause_kind_from_name(const std::string& name) {
  if (name == "test") return ClauseKind::test;
  if (name == "structural") return ClauseKind::structural;
  if (name == "verify") return ClauseKind::verify;
  raise(Errc::config, "unknown clause kind '" + name + "'");
}

Specification::Specification(std::vector<SpecClause> clauses, int version)
    : clauses_(std::move(clauses)), version_(version) {
  std::set<std::string> seen;
  for (const auto& c : clauses_) {
    if (c.weight <= 0.0)
      raise(Errc::invalid_argument,
            "clause '" + c.id + "' has non-positive weight");
    if (!seen.insert(c.id).second)
      raise(Errc::invalid_argument, "duplicate clause id '" + c.id + "'");
  }
}

const SpecClause* Specification::find(const std::string& clause_id) const {
  for (const auto& c : clauses_)
    if (c.id == clause_id) return &c;
  return nullptr;
}

std::vector<const SpecClause*> Specification::of_kind(ClauseKind kind) const {
  std::vector<const SpecClause*> out;
  for (const auto& c : clauses_)
    if (c.kind == kind) out.push_back(&c);
  return out;
}

Specification Specification::extended(
    const std::vector<SpecClause>& new_clauses) const {
  std::vector<SpecClause> merged = clauses_;
  for (const auto& c : new_clauses) {
    if (find(c.id) != nullptr)
      raise(Errc::invalid_argument,
            "extension reuses clause id '" + c.id + "'");
    merged.push_back(c);
  }
  return Specification(std::move(merged), version_ + 1);
}

std::string Specification::digest_text() const {
  std::ostringstream out;
  out << "specification v" << version_ << " (" << clauses_.size()
      << " clauses)\n";
  for (const auto& c : clauses_) {
    out << "  [" << clause_kind_name(c.kind) << "] " << c.id
        << " (weight " << c.weight << ")";
    if (!c.description.empty()) out << ": " << c.description;
    out << "\n";
  }
  return out.str();
}

double compute_mu(const std::unordered_map<std::string, bool>& satisfied,
                  const Specification& spec) {
  if (spec.size() == 0)
    raise(Errc::input_shape, "mu undefined for an empty specification");
  if (satisfied.size() != spec.size())
    raise(Errc::input_shape, "expected one outcome per clause");
  std::size_t met = 0;
  for (const auto& c : spec.clauses()) {
    auto it = satisfied.find(c.id);
    if (it == satisfied.end())
      raise(Errc::input_shape, "missing outcome for clause '" + c.id + "'");
    if (it->second) ++met;
  }
  return static_cast<double>(met) / static_cast<double>(spec.size());
}

namespace {

// Shared shape check: exactly one outcome per clause of the given kind.
template <typename Outcome>
void check_coverage(const std::vector<Outcome>& outcomes,
                    const std::vector<const SpecClause*>& clauses) {
  if (outcomes.size() != clauses.size())
    raise(Errc::input_shape, "expected one outcome per clause");
  std::set<std::string> ids;
  for (const auto* c : clauses) ids.insert(c->id);
  for (const auto& o : outcomes) {
    if (ids.erase(o.clause_id) == 0)
      raise(Errc::input_shape,
            "outcome for unknown or duplicated clause '" + o.clause_id + "'");
  }
}

}  // namespace

std::optional<double> compute_test_error(
    const std::vector<TestOutcome>& outcomes, const Specification& spec) {
  const auto clauses = spec.of_kind(ClauseKind::test);
  if (clauses.empty()) return std::nullopt;
  check_coverage(outcomes, clauses);
  double total = 0.0, failed = 0.0;
  for (const auto& o : outcomes) {
    const double beta = spec.find(o.clause_id)->weight;
    total += beta;
    if (!o.passed) failed += beta;
  }
  return failed / total;
}

std::optional<double> compute_struct_error(
    const std::vector<StructuralOutcome>& outcomes, const Specification& spec) {
  const auto clauses = spec.of_kind(ClauseKind::structural);
  if (clauses.empty()) return std::nullopt;
  check_coverage(outcomes, clauses);
  double total = 0.0, weighted = 0.0;
  for (const auto& o : outcomes) {
    if (o.severity < 0.0 || o.severity > 1.0 || o.penalty < 0.0 ||
        o.penalty > 1.0)
      raise(Errc::invalid_argument,
            "severity/penalty out of [0,1] for clause '" + o.clause_id + "'");
    if (!o.violated && o.severity != 0.0)
      raise(Errc::invalid_argument,
            "non-zero severity on unviolated clause '" + o.clause_id + "'");
    const double w = spec.find(o.clause_id)->weight;
    total += w;
    weighted += w * o.severity * o.penalty;
  }
  return weighted / total;
}

std::optional<double> compute_verify_error(
    const std::vector<VerifyOutcome>& outcomes, const Specification& spec) {
  const auto clauses = spec.of_kind(ClauseKind::verify);
  if (clauses.empty()) return std::nullopt;
  check_coverage(outcomes, clauses);
  double total = 0.0, failed = 0.0;
  for (const auto& o : outcomes) {
    const double zeta = spec.find(o.clause_id)->weight;
    total += zeta;
    if (!o.holds) failed += zeta;
  }
  return failed / total;
}

double compute_log_error(const LogTrace& trace) {
  if (trace.horizon <= 0.0)
    raise(Errc::invalid_trace, "trace horizon must be positive");
  if (trace.samples.size() < 2)
    raise(Errc::invalid_trace, "trace needs samples at 0 and horizon");
  if (trace.samples.front().time != 0.0)
    raise(Errc::invalid_trace, "first sample must be at time 0");
  if (trace.samples.back().time != trace.horizon)
    raise(Errc::invalid_trace, "last sample must be at the horizon");
  double integral = 0.0;
  for (std::size_t i = 0; i + 1 < trace.samples.size(); ++i) {
    const auto& a = trace.samples[i];
    const auto& b = trace.samples[i + 1];
    if (b.time <= a.time)
      raise(Errc::invalid_trace, "sample times must be strictly increasing");
    if (a.level < 0.0 || a.level > 1.0 || b.level < 0.0 || b.level > 1.0)
      raise(Errc::invalid_trace, "anomaly level out of [0,1]");
    integral += (b.time - a.time) * (a.level + b.level) * 0.5;
  }
  return integral / trace.horizon;
}

double aggregate_delta(const FeedbackVector& f, const ErrorWeights& w,
                       const ChannelSet& present) {
  if (present.empty())
    raise(Errc::no_signal, "no feedback channel present");
  if (w.alpha_test <= 0.0 || w.alpha_struct <= 0.0 || w.alpha_verify <= 0.0 ||
      w.alpha_logs <= 0.0)
    raise(Errc::invalid_argument, "error weights must be positive");
  double num = 0.0, den = 0.0;
  if (present.has(Channel::test)) {
    num += w.alpha_test * f.e_test;
    den += w.alpha_test;
  }
  if (present.has(Channel::structural)) {
    num += w.alpha_struct * f.e_struct;
    den += w.alpha_struct;
  }
  if (present.has(Channel::verify)) {
    num += w.alpha_verify * f.e_verify;
    den += w.alpha_verify;
  }
  if (present.has(Channel::logs)) {
    num += w.alpha_logs * f.e_logs;
    den += w.alpha_logs;
  }
  return num / den;
}

}  // namespace smelt
