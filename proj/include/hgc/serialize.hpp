#pragma once

#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hgc/consensus.hpp"
#include "hgc/eval.hpp"

// JSON forms of scenarios, run reports and sweep tables. nlohmann::json keeps
// object keys sorted, which gives the byte-stable output replay relies on.
namespace hgc::io {

using nlohmann::json;

inline constexpr int kFormatVersion = 1;

namespace detail {

[[noreturn]] inline void malformed(const std::string& what) { throw Error(ErrorCode::MalformedScenario, what); }

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    malformed(std::string("field '") + key + "' has the wrong type");
  }
}

inline const json& require(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) malformed(std::string("missing field '") + key + "'");
  return *it;
}

}  // namespace detail

inline json to_json(const Claim& c) { return {{"id", c.id}, {"text", c.text}, {"confidence", c.confidence}}; }

inline Claim claim_from_json(const json& j) {
  if (!j.is_object()) detail::malformed("claim must be an object");
  Claim c;
  c.id = detail::get_or<std::string>(j, "id", "");
  c.text = detail::get_or<std::string>(j, "text", "");
  c.confidence = detail::get_or<double>(j, "confidence", 1.0);
  if (c.id.empty()) detail::malformed("claim without id");
  return c;
}

inline json to_json(const std::vector<Claim>& claims) {
  json arr = json::array();
  for (const auto& c : claims) arr.push_back(to_json(c));
  return arr;
}

inline std::vector<Claim> claims_from_json(const json& j) {
  if (!j.is_array()) detail::malformed("claim list must be an array");
  std::vector<Claim> out;
  for (const auto& c : j) out.push_back(claim_from_json(c));
  return out;
}

inline json to_json(const Answer& a) {
  json j = {{"text", a.rendering()}, {"claims", to_json(a.claims())}};
  if (a.is_free_text()) j["free_text"] = true;
  return j;
}

inline json to_json(const HonestPolicyParams& p) {
  return {{"adopt_fraction", p.adopt_fraction},
          {"drop_confidence", p.drop_confidence},
          {"patience", p.patience},
          {"adopt_unopposed", p.adopt_unopposed},
          {"persistence_rounds", p.persistence_rounds}};
}

inline HonestPolicyParams honest_params_from_json(const json& j) {
  HonestPolicyParams p;
  if (j.is_null()) return p;
  p.adopt_fraction = detail::get_or(j, "adopt_fraction", p.adopt_fraction);
  p.drop_confidence = detail::get_or(j, "drop_confidence", p.drop_confidence);
  p.patience = detail::get_or(j, "patience", p.patience);
  p.adopt_unopposed = detail::get_or(j, "adopt_unopposed", p.adopt_unopposed);
  p.persistence_rounds = detail::get_or(j, "persistence_rounds", p.persistence_rounds);
  return p;
}

inline json to_json(const AgentSpec& a) {
  json j = {{"id", a.agent_id}, {"policy", std::string(to_string(a.policy))}, {"claims", to_json(a.initial_claims)}};
  if (a.policy == Policy::Honest) j["params"] = to_json(a.honest);
  if (a.endpoint) {
    j["endpoint"] = {{"url", a.endpoint->url},
                     {"deadline_ms", a.endpoint->deadline.count()},
                     {"retries", a.endpoint->retries}};
  }
  return j;
}

inline AgentSpec agent_from_json(const json& j, std::size_t position) {
  if (!j.is_object()) detail::malformed("agent must be an object");
  AgentSpec a;
  a.agent_id = detail::get_or<std::size_t>(j, "id", position);
  const auto policy = parse_policy(detail::get_or<std::string>(j, "policy", "honest"));
  if (!policy) detail::malformed("agent " + std::to_string(position) + " has an unknown policy");
  a.policy = *policy;
  if (j.contains("claims")) a.initial_claims = claims_from_json(j["claims"]);
  if (j.contains("params")) a.honest = honest_params_from_json(j["params"]);
  if (j.contains("endpoint")) {
    const json& e = j["endpoint"];
    ExternalEndpoint ep;
    ep.url = detail::get_or<std::string>(e, "url", "");
    ep.deadline = std::chrono::milliseconds(detail::get_or<std::int64_t>(e, "deadline_ms", 30000));
    ep.retries = detail::get_or<unsigned>(e, "retries", 0);
    a.endpoint = ep;
  }
  return a;
}

inline json to_json(const RunConfig& c) {
  return {{"gossip", std::string(to_string(c.gossip_mode))},
          {"max_rounds", c.max_rounds},
          {"equivalence", std::string(to_string(c.equivalence.mode))},
          {"jaccard_threshold", c.equivalence.jaccard_threshold},
          {"stability_confirmation", c.stability_confirmation},
          {"check_round_zero", c.check_round_zero},
          {"seed", c.seed},
          {"anonymize", c.anonymize}};
}

inline RunConfig config_from_json(const json& j, EquivalenceMode default_mode) {
  RunConfig c;
  c.equivalence.mode = default_mode;
  if (j.is_null()) return c;
  if (!j.is_object()) detail::malformed("config must be an object");
  const auto mode = parse_gossip_mode(detail::get_or<std::string>(j, "gossip", "full"));
  if (!mode) detail::malformed("unknown gossip mode");
  c.gossip_mode = *mode;
  c.max_rounds = detail::get_or(j, "max_rounds", c.max_rounds);
  if (j.contains("equivalence")) {
    const auto eq = parse_equivalence_mode(detail::get_or<std::string>(j, "equivalence", ""));
    if (!eq) detail::malformed("unknown equivalence mode");
    c.equivalence.mode = *eq;
  }
  c.equivalence.jaccard_threshold = detail::get_or(j, "jaccard_threshold", c.equivalence.jaccard_threshold);
  c.stability_confirmation = detail::get_or(j, "stability_confirmation", c.stability_confirmation);
  c.check_round_zero = detail::get_or(j, "check_round_zero", c.check_round_zero);
  c.seed = detail::get_or(j, "seed", c.seed);
  c.anonymize = detail::get_or(j, "anonymize", c.anonymize);
  return c;
}

inline json to_json(const WorldTruth& t) {
  json pairs = json::array();
  for (const auto& [a, b] : t.contradictions.pairs()) pairs.push_back({a, b});
  return {{"true_claims", t.true_claims}, {"false_claims", t.false_claims}, {"contradictions", pairs}};
}

inline WorldTruth truth_from_json(const json& j) {
  if (!j.is_object()) detail::malformed("truth must be an object");
  WorldTruth t;
  t.true_claims = detail::get_or(j, "true_claims", std::set<std::string>{});
  t.false_claims = detail::get_or(j, "false_claims", std::set<std::string>{});
  if (j.contains("contradictions")) {
    for (const auto& pair : j["contradictions"]) {
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() || !pair[1].is_string())
        detail::malformed("contradictions must be pairs of claim ids");
      try {
        t.contradictions.add(pair[0].get<std::string>(), pair[1].get<std::string>());
      } catch (const Error& e) {
        detail::malformed(e.what());
      }
    }
  }
  return t;
}

inline json to_json(const Scenario& s) {
  json agents = json::array();
  for (const auto& a : s.agents) agents.push_back(to_json(a));
  json j = {{"name", s.name},
            {"query", s.query},
            {"agents", std::move(agents)},
            {"truth", to_json(s.truth)},
            {"noise_pool", to_json(s.noise_pool)},
            {"config", to_json(s.config)}};
  if (s.expected) j["expected"] = *s.expected;
  return j;
}

// Parses and validates. Missing equivalence defaults to "claims", or to
// "normalized" when any agent is external (free text).
inline Scenario scenario_from_json(const json& j) {
  if (!j.is_object()) detail::malformed("scenario must be a JSON object");
  Scenario s;
  s.name = detail::get_or<std::string>(j, "name", "unnamed");
  s.query = detail::get_or<std::string>(j, "query", "");
  const json& agents = detail::require(j, "agents");
  if (!agents.is_array()) detail::malformed("agents must be an array");
  bool any_external = false;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    s.agents.push_back(agent_from_json(agents[i], i));
    any_external = any_external || s.agents.back().policy == Policy::External;
  }
  s.truth = truth_from_json(detail::require(j, "truth"));
  if (j.contains("noise_pool")) s.noise_pool = claims_from_json(j["noise_pool"]);
  s.config = config_from_json(j.contains("config") ? j["config"] : json(nullptr),
                              any_external ? EquivalenceMode::Normalized : EquivalenceMode::ClaimSet);
  if (j.contains("expected") && !j["expected"].is_null())
    s.expected = detail::get_or(j, "expected", std::set<std::string>{});
  validate(s);
  return s;
}

inline Scenario parse_scenario(const std::string& text) {
  const json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) detail::malformed("not valid JSON");
  return scenario_from_json(j);
}

inline std::string knowledge_row(const KnowledgeMatrix& m, std::size_t i) {
  std::string row;
  for (std::size_t j = 0; j < m.size(); ++j) row.push_back(m.knows(i, j) ? '1' : '0');
  return row;
}

inline json to_json(const RoundLedger& ledger) {
  json rounds = json::array();
  for (std::size_t r = 0; r < ledger.rounds.size(); ++r) {
    const auto& rec = ledger.rounds[r];
    json answers = json::array();
    for (const auto& [agent, a] : rec.outputs) {
      json entry = to_json(a);
      entry["agent"] = agent;
      if (rec.offline.count(agent)) entry["offline"] = true;
      answers.push_back(std::move(entry));
    }
    json knowledge = json::array();
    for (std::size_t i = 0; i < rec.knowledge.size(); ++i) knowledge.push_back(knowledge_row(rec.knowledge, i));
    rounds.push_back({{"round", r},
                      {"answers", std::move(answers)},
                      {"changed", rec.changed},
                      {"knowledge", std::move(knowledge)},
                      {"gossip_steps", rec.gossip_steps}});
  }
  return rounds;
}

inline json to_json(const Dag& dag) {
  json events = json::array();
  for (const auto& ev : dag.events()) {
    json knows = json::object();
    for (const auto& [agent, snap] : ev.payload) knows[std::to_string(agent)] = snap.round;
    events.push_back({{"id", ev.id},
                      {"creator", ev.creator},
                      {"self_parent", ev.self_parent ? json(*ev.self_parent) : json(nullptr)},
                      {"other_parent", ev.other_parent ? json(*ev.other_parent) : json(nullptr)},
                      {"round", ev.round ? json(*ev.round) : json(nullptr)},
                      {"logical_time", ev.logical_time},
                      {"knows", std::move(knows)}});
  }
  return events;
}

inline json to_json(const ScoreFragment& s) {
  return {{"precision", s.precision},
          {"recall", s.recall},
          {"hallucination_rate", s.hallucination_rate},
          {"exact_match", s.exact_match},
          {"claim_count", s.claim_count}};
}

inline json to_json(const MetricsRecord& m) {
  return {{"exact_match", m.exact_match},
          {"precision", m.precision},
          {"recall_correct", m.recall_correct},
          {"hallucination_rate", m.hallucination_rate},
          {"rounds_to_convergence", m.rounds_to_convergence},
          {"converged", m.converged},
          {"fallback_used", m.fallback_used},
          {"calls_made", m.calls_made},
          {"claim_count", m.claim_count}};
}

inline json to_json(const ConsensusReport& r) {
  std::string stability = "skipped";
  if (r.stable) stability = *r.stable ? "stable" : "unstable";
  return {{"final_answer", to_json(r.final_answer)},
          {"converged", r.converged},
          {"rounds_used", r.rounds_used},
          {"fallback_used", r.fallback_used},
          {"per_round_changes", r.per_round_changes},
          {"gossip_steps", r.gossip_steps},
          {"seed", r.seed},
          {"calls_made", r.calls_made},
          {"participants", r.participants},
          {"final_support", r.final_support},
          {"excluded", r.excluded},
          {"stability", stability},
          {"summary", r.summary}};
}

// Self-contained run report: the scenario (with the effective config) is
// embedded so the run can be replayed from this document alone.
inline json run_report(const Scenario& scenario, const ConsensusResult& result, bool dump_dag) {
  json j = {{"kind", "run"},
            {"format_version", kFormatVersion},
            {"seed", scenario.config.seed},
            {"dump_dag", dump_dag},
            {"scenario", to_json(scenario)},
            {"report", to_json(result.report)},
            {"rounds", to_json(result.ledger)}};

  json metrics = nullptr;
  json baselines = nullptr;
  const auto& round0 = result.ledger.outputs(0);
  const bool scorable = !result.report.final_answer.is_free_text() &&
                        std::none_of(round0.begin(), round0.end(), [](const auto& kv) { return kv.second.is_free_text(); });
  if (scorable) {
    try {
      metrics = to_json(evaluate(result, scenario.truth));
      const auto reference = ensemble_truth(round0, scenario.truth);
      const Answer majority = majority_vote_baseline(round0, scenario.config.equivalence);
      const BestIndividual best = best_individual_baseline(round0, scenario.truth);
      baselines = {{"majority_vote", {{"answer", to_json(majority)}, {"score", to_json(score_answer(majority, scenario.truth, reference))}}},
                   {"best_individual", {{"agent", best.agent}, {"score", to_json(best.score)}}}};
    } catch (const Error& e) {
      if (e.code() != ErrorCode::UnclassifiedClaim) throw;
      metrics = nullptr;
      baselines = nullptr;
    }
  }
  j["metrics"] = std::move(metrics);
  j["baselines"] = std::move(baselines);
  if (scenario.expected) j["expected_match"] = result.report.final_answer.claim_ids() == *scenario.expected;
  j["dag"] = (dump_dag && result.dag) ? to_json(*result.dag) : json(nullptr);
  return j;
}

inline json sweep_report(const Scenario& base, const SweepTable& table) {
  json rows = json::array();
  for (const auto& r : table.rows) {
    json row = to_json(r.metrics);
    row["f"] = r.f;
    row["seed"] = r.seed;
    rows.push_back(std::move(row));
  }
  json by_f = json::array();
  for (const auto f : table.f_range) {
    by_f.push_back({{"f", f}, {"accuracy", table.accuracy(f)}, {"within_bound", f <= table.tolerance_bound()}});
  }
  return {{"kind", "sweep"},
          {"format_version", kFormatVersion},
          {"scenario", to_json(base)},
          {"adversary", std::string(to_string(table.adversary))},
          {"n", table.n},
          {"f_range", table.f_range},
          {"seeds", table.seeds},
          {"tolerance_bound", table.tolerance_bound()},
          {"accuracy_by_f", std::move(by_f)},
          {"rows", std::move(rows)}};
}

inline std::string format_real(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

// Columns: f, seed, exact_match, precision, recall, hallucination_rate, rounds, fallback_used.
inline std::string sweep_csv(const SweepTable& table) {
  std::string out = "f,seed,exact_match,precision,recall,hallucination_rate,rounds,fallback_used\n";
  for (const auto& r : table.rows) {
    out += std::to_string(r.f) + "," + std::to_string(r.seed) + "," + (r.metrics.exact_match ? "1" : "0") + "," +
           format_real(r.metrics.precision) + "," + format_real(r.metrics.recall_correct) + "," +
           format_real(r.metrics.hallucination_rate) + "," + std::to_string(r.metrics.rounds_to_convergence) + "," +
           (r.metrics.fallback_used ? "1" : "0") + "\n";
  }
  return out;
}

inline json to_json(const GeneratorParams& p) {
  return {{"min_agents", p.min_agents},
          {"max_agents", p.max_agents},
          {"true_claims", p.true_claims},
          {"coverage", p.coverage},
          {"hallucination", p.hallucination},
          {"contradiction_density", p.contradiction_density},
          {"true_confidence", {p.true_confidence_lo, p.true_confidence_hi}},
          {"false_confidence", {p.false_confidence_lo, p.false_confidence_hi}},
          {"false_pool_size", p.false_pool_size},
          {"noise_pool_size", p.noise_pool_size}};
}

inline json suite_document(const GeneratorParams& params, std::uint64_t seed, const std::vector<Scenario>& scenarios) {
  json list = json::array();
  for (const auto& s : scenarios) list.push_back(to_json(s));
  return {{"kind", "suite"},
          {"format_version", kFormatVersion},
          {"generator", to_json(params)},
          {"seed", seed},
          {"scenarios", std::move(list)}};
}

// Stable textual form: two-space indent and a trailing newline.
inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace hgc::io
