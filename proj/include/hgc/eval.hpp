#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "hgc/agents.hpp"
#include "hgc/claims.hpp"
#include "hgc/consensus.hpp"
#include "hgc/error.hpp"
#include "hgc/rng.hpp"

namespace hgc {

// Ground truth for a scenario: every claim an agent can voice is either true
// or false (a hallucination).
struct WorldTruth {
  std::set<std::string> true_claims;
  std::set<std::string> false_claims;
  ContradictionTable contradictions;

  bool classifies(const std::string& id) const { return true_claims.count(id) || false_claims.count(id); }
};

struct Scenario {
  std::string name;
  std::string query;
  std::vector<AgentSpec> agents;
  WorldTruth truth;
  std::vector<Claim> noise_pool;
  RunConfig config;
  std::optional<std::set<std::string>> expected;
};

inline AgentEnvironment environment_of(const Scenario& s) {
  return AgentEnvironment{s.truth.contradictions, s.noise_pool};
}

// Throws UnclassifiedClaim naming the first offending claim, MalformedScenario
// for structural problems.
inline void validate(const Scenario& s) {
  for (const auto& id : s.truth.true_claims) {
    if (s.truth.false_claims.count(id))
      throw Error(ErrorCode::MalformedScenario, "claim '" + id + "' is both true and false");
  }
  std::map<std::string, std::string> text_of;
  auto check = [&](const Claim& c, const std::string& where) {
    if (!s.truth.classifies(c.id))
      throw Error(ErrorCode::UnclassifiedClaim, "claim '" + c.id + "' in " + where + " is not classified");
    auto [it, inserted] = text_of.emplace(c.id, c.text);
    if (!inserted && it->second != c.text)
      throw Error(ErrorCode::MalformedScenario, "claim '" + c.id + "' has two different texts");
  };
  if (s.agents.size() < 2) throw Error(ErrorCode::MalformedScenario, "a scenario needs at least 2 agents");
  for (std::size_t i = 0; i < s.agents.size(); ++i) {
    const auto& a = s.agents[i];
    if (a.agent_id != i) throw Error(ErrorCode::MalformedScenario, "agent ids must be 0..N-1 in order");
    for (const auto& c : a.initial_claims) check(c, "agent " + std::to_string(i));
    if (a.policy == Policy::External && !a.endpoint)
      throw Error(ErrorCode::MalformedScenario, "external agent " + std::to_string(i) + " has no endpoint");
    if (a.policy != Policy::External) {
      try {
        Answer::from_claims(a.initial_claims);
      } catch (const Error& e) {
        throw Error(ErrorCode::MalformedScenario, "agent " + std::to_string(i) + ": " + e.what());
      }
    }
    if (a.policy == Policy::Honest) {
      try {
        validate(a.honest);
      } catch (const Error& e) {
        throw Error(ErrorCode::MalformedScenario, "agent " + std::to_string(i) + ": " + e.what());
      }
    }
  }
  for (const auto& c : s.noise_pool) check(c, "noise_pool");
  for (const auto& [a, b] : s.truth.contradictions.pairs()) {
    if (!s.truth.classifies(a)) throw Error(ErrorCode::UnclassifiedClaim, "claim '" + a + "' in contradictions is not classified");
    if (!s.truth.classifies(b)) throw Error(ErrorCode::UnclassifiedClaim, "claim '" + b + "' in contradictions is not classified");
  }
  if (s.expected) {
    for (const auto& id : *s.expected)
      if (!s.truth.classifies(id))
        throw Error(ErrorCode::UnclassifiedClaim, "claim '" + id + "' in expected is not classified");
  }
  try {
    validate(s.config);
  } catch (const Error& e) {
    throw Error(ErrorCode::MalformedScenario, e.what());
  }
}

struct ScoreFragment {
  double precision = 1.0;
  double recall = 0.0;
  double hallucination_rate = 0.0;
  bool exact_match = false;
  std::size_t claim_count = 0;  // crude informativeness proxy

  friend bool operator==(const ScoreFragment&, const ScoreFragment&) = default;
};

// Set arithmetic over claim ids. precision = 1 - hallucination_rate (1 for
// an empty answer); recall is measured against `reference` (1 when it is
// empty); exact_match means the answer's ids equal `reference`.
inline ScoreFragment score_answer(const Answer& answer, const WorldTruth& truth,
                                  const std::set<std::string>& reference) {
  ScoreFragment out;
  std::size_t hallucinated = 0;
  std::size_t recalled = 0;
  for (const auto& c : answer.claims()) {
    if (!truth.classifies(c.id)) throw Error(ErrorCode::UnclassifiedClaim, "claim '" + c.id + "'");
    if (truth.false_claims.count(c.id)) ++hallucinated;
    if (reference.count(c.id)) ++recalled;
  }
  const std::size_t total = answer.claims().size();
  out.claim_count = total;
  out.hallucination_rate = total == 0 ? 0.0 : static_cast<double>(hallucinated) / static_cast<double>(total);
  out.precision = 1.0 - out.hallucination_rate;
  out.recall = reference.empty() ? 1.0 : static_cast<double>(recalled) / static_cast<double>(reference.size());
  out.exact_match = answer.claim_ids() == reference;
  return out;
}

inline ScoreFragment score_answer(const Answer& answer, const WorldTruth& truth) {
  return score_answer(answer, truth, truth.true_claims);
}

// True claims voiced by at least one agent at round 0: the most any
// aggregation of these agents could recover.
inline std::set<std::string> ensemble_truth(const std::map<AgentIndex, Answer>& round0, const WorldTruth& truth) {
  std::set<std::string> out;
  for (const auto& [agent, a] : round0)
    for (const auto& c : a.claims())
      if (truth.true_claims.count(c.id)) out.insert(c.id);
  return out;
}

inline Answer majority_vote_baseline(const std::map<AgentIndex, Answer>& round0, const EquivalencePolicy& policy) {
  return fallback_decision(round0, policy);
}

struct BestIndividual {
  AgentIndex agent = 0;
  ScoreFragment score;
};

// Highest precision, then recall, then lowest index.
inline BestIndividual best_individual_baseline(const std::map<AgentIndex, Answer>& round0, const WorldTruth& truth) {
  if (round0.empty()) throw Error(ErrorCode::EmptyList, "no answers");
  const auto reference = ensemble_truth(round0, truth);
  std::optional<BestIndividual> best;
  for (const auto& [agent, a] : round0) {
    const ScoreFragment s = score_answer(a, truth, reference);
    if (!best || s.precision > best->score.precision ||
        (s.precision == best->score.precision && s.recall > best->score.recall)) {
      best = BestIndividual{agent, s};
    }
  }
  return *best;
}

struct MetricsRecord {
  bool exact_match = false;
  double precision = 1.0;
  double recall_correct = 0.0;
  double hallucination_rate = 0.0;
  int rounds_to_convergence = 0;
  bool converged = false;
  bool fallback_used = false;
  std::size_t calls_made = 0;
  std::size_t claim_count = 0;

  friend bool operator==(const MetricsRecord&, const MetricsRecord&) = default;
};

inline MetricsRecord evaluate(const ConsensusResult& result, const WorldTruth& truth) {
  const auto reference = ensemble_truth(result.ledger.outputs(0), truth);
  const ScoreFragment s = score_answer(result.report.final_answer, truth, reference);
  MetricsRecord m;
  m.exact_match = s.exact_match;
  m.precision = s.precision;
  m.recall_correct = s.recall;
  m.hallucination_rate = s.hallucination_rate;
  m.rounds_to_convergence = result.report.rounds_used;
  m.converged = result.report.converged;
  m.fallback_used = result.report.fallback_used;
  m.calls_made = result.report.calls_made;
  m.claim_count = s.claim_count;
  return m;
}

inline ConsensusResult run_scenario(const Scenario& s) {
  return run_consensus(s.query, s.agents, s.config, environment_of(s));
}

// Replaces the f highest-index honest agents with adversaries of `kind`.
// Each substitute opens with a seeded draw from the noise pool.
inline Scenario with_adversaries(const Scenario& base, Policy kind, std::size_t f, std::uint64_t seed) {
  if (!is_byzantine(kind)) throw Error(ErrorCode::InvalidArgument, "adversary kind must be Byzantine");
  const std::size_t n = base.agents.size();
  if (f >= n) throw Error(ErrorCode::InvalidF, "f = " + std::to_string(f) + " but N = " + std::to_string(n));
  std::vector<std::size_t> honest;
  for (std::size_t i = 0; i < n; ++i)
    if (base.agents[i].policy == Policy::Honest) honest.push_back(i);
  if (f > honest.size())
    throw Error(ErrorCode::InvalidF, "f = " + std::to_string(f) + " exceeds the " + std::to_string(honest.size()) +
                                         " honest agents");
  Scenario s = base;
  s.config.seed = seed;
  for (std::size_t k = 0; k < f; ++k) {
    auto& agent = s.agents[honest[honest.size() - 1 - k]];
    agent.policy = kind;
    Rng rng(mix_seed(seed, 0x5eed0000 + agent.agent_id));
    std::vector<Claim> pool = s.noise_pool;
    if (pool.empty()) {
      agent.initial_claims.clear();
      continue;
    }
    rng.shuffle(pool);
    pool.resize(1 + rng.uniform(std::min<std::size_t>(3, pool.size())));
    agent.initial_claims = std::move(pool);
  }
  return s;
}

struct SweepRow {
  std::size_t f = 0;
  std::uint64_t seed = 0;
  MetricsRecord metrics;
};

struct SweepTable {
  std::size_t n = 0;
  Policy adversary = Policy::RandomByzantine;
  std::vector<std::size_t> f_range;
  std::vector<std::uint64_t> seeds;
  std::vector<SweepRow> rows;  // f-major, then seed, in input order

  // Largest f with N >= 3f + 1.
  std::size_t tolerance_bound() const { return n == 0 ? 0 : (n - 1) / 3; }

  double accuracy(std::size_t f) const {
    std::size_t hits = 0;
    std::size_t total = 0;
    for (const auto& r : rows) {
      if (r.f != f) continue;
      ++total;
      hits += r.metrics.exact_match ? 1 : 0;
    }
    return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
  }
};

inline SweepTable byzantine_sweep(const Scenario& base, Policy kind, std::span<const std::size_t> f_range,
                                  std::span<const std::uint64_t> seeds, unsigned jobs = 1) {
  SweepTable table;
  table.n = base.agents.size();
  table.adversary = kind;
  table.f_range.assign(f_range.begin(), f_range.end());
  table.seeds.assign(seeds.begin(), seeds.end());

  std::vector<Scenario> runs;
  for (const std::size_t f : f_range)
    for (const std::uint64_t seed : seeds) runs.push_back(with_adversaries(base, kind, f, seed));

  table.rows.resize(runs.size());
  auto work = [&](std::size_t idx) {
    const auto result = run_scenario(runs[idx]);
    table.rows[idx] = SweepRow{f_range[idx / seeds.size()], seeds[idx % seeds.size()], evaluate(result, runs[idx].truth)};
  };
  const unsigned workers = std::max(1u, jobs);
  if (workers == 1) {
    for (std::size_t i = 0; i < runs.size(); ++i) work(i);
  } else {
    std::vector<std::future<void>> futures;
    for (unsigned w = 0; w < workers; ++w) {
      futures.push_back(std::async(std::launch::async, [&, w] {
        for (std::size_t i = w; i < runs.size(); i += workers) work(i);
      }));
    }
    for (auto& fut : futures) fut.get();
  }
  return table;
}

struct GeneratorParams {
  std::size_t min_agents = 3;
  std::size_t max_agents = 8;
  std::size_t true_claims = 5;
  double coverage = 0.6;
  double hallucination = 0.3;
  double contradiction_density = 0.5;
  double true_confidence_lo = 0.5;
  double true_confidence_hi = 1.0;
  double false_confidence_lo = 0.05;
  double false_confidence_hi = 0.45;
  std::size_t false_pool_size = 0;  // 0: every hallucination is a fresh claim
  std::size_t noise_pool_size = 6;

  friend bool operator==(const GeneratorParams&, const GeneratorParams&) = default;
};

inline void validate(const GeneratorParams& p) {
  auto unit = [](double x) { return x >= 0.0 && x <= 1.0; };
  if (p.min_agents < 2 || p.max_agents < p.min_agents)
    throw Error(ErrorCode::InvalidArgument, "agent range must satisfy 2 <= min <= max");
  if (p.true_claims < 1) throw Error(ErrorCode::InvalidArgument, "need at least one true claim");
  if (!unit(p.coverage) || !unit(p.hallucination) || !unit(p.contradiction_density))
    throw Error(ErrorCode::InvalidArgument, "probabilities must lie in [0,1]");
  if (!unit(p.true_confidence_lo) || !unit(p.true_confidence_hi) || p.true_confidence_lo > p.true_confidence_hi ||
      !unit(p.false_confidence_lo) || !unit(p.false_confidence_hi) || p.false_confidence_lo > p.false_confidence_hi)
    throw Error(ErrorCode::InvalidArgument, "confidence ranges must be ordered sub-intervals of [0,1]");
}

namespace detail {

inline double two_decimals(double x) { return std::round(x * 100.0) / 100.0; }

inline std::string numbered(const char* prefix, std::size_t k) {
  std::string digits = std::to_string(k);
  if (digits.size() < 2) digits.insert(0, 2 - digits.size(), '0');
  return prefix + digits;
}

}  // namespace detail

// All-honest synthetic scenarios. True claims are t01..tK; hallucinations are
// f01.. (fresh per hallucinating agent unless false_pool_size > 0); adversary
// noise n01.. each contradicts one true claim.
inline std::vector<Scenario> generate_scenarios(const GeneratorParams& params, Rng& rng, std::size_t count) {
  validate(params);
  if (count < 1) throw Error(ErrorCode::InvalidArgument, "count must be >= 1");
  std::vector<Scenario> out;
  for (std::size_t k = 0; k < count; ++k) {
    Scenario s;
    s.name = "generated-" + std::to_string(k);
    s.query = "Synthetic question " + std::to_string(k);
    const std::size_t n = params.min_agents + rng.uniform(params.max_agents - params.min_agents + 1);

    std::vector<std::string> true_ids;
    for (std::size_t t = 1; t <= params.true_claims; ++t) {
      true_ids.push_back(detail::numbered("t", t));
      s.truth.true_claims.insert(true_ids.back());
    }
    auto true_text = [](const std::string& id) { return "Fact " + id.substr(1) + " holds"; };
    auto false_text = [](const std::string& id) { return "Fabricated detail " + id.substr(1); };

    std::vector<std::string> shared_false;
    for (std::size_t f = 1; f <= params.false_pool_size; ++f) {
      shared_false.push_back(detail::numbered("f", f));
      s.truth.false_claims.insert(shared_false.back());
    }
    std::set<std::string> contradiction_checked;
    std::size_t fresh_false = 0;

    for (std::size_t i = 0; i < n; ++i) {
      AgentSpec agent;
      agent.agent_id = i;
      for (const auto& id : true_ids) {
        if (rng.bernoulli(params.coverage)) {
          agent.initial_claims.push_back(
              {id, true_text(id),
               detail::two_decimals(rng.uniform_real(params.true_confidence_lo, params.true_confidence_hi))});
        }
      }
      if (rng.bernoulli(params.hallucination)) {
        std::string id;
        if (shared_false.empty()) {
          id = detail::numbered("f", ++fresh_false);
          s.truth.false_claims.insert(id);
        } else {
          id = shared_false[rng.uniform(shared_false.size())];
        }
        agent.initial_claims.push_back(
            {id, false_text(id),
             detail::two_decimals(rng.uniform_real(params.false_confidence_lo, params.false_confidence_hi))});
        if (contradiction_checked.insert(id).second && rng.bernoulli(params.contradiction_density)) {
          s.truth.contradictions.add(id, true_ids[rng.uniform(true_ids.size())]);
        }
      }
      if (agent.initial_claims.empty()) {
        const auto& id = true_ids[rng.uniform(true_ids.size())];
        agent.initial_claims.push_back(
            {id, true_text(id),
             detail::two_decimals(rng.uniform_real(params.true_confidence_lo, params.true_confidence_hi))});
      }
      s.agents.push_back(std::move(agent));
    }

    for (std::size_t m = 1; m <= params.noise_pool_size; ++m) {
      const std::string id = detail::numbered("n", m);
      s.truth.false_claims.insert(id);
      s.noise_pool.push_back({id, "Injected claim " + id.substr(1), 0.9});
      s.truth.contradictions.add(id, true_ids[rng.uniform(true_ids.size())]);
    }
    s.config.seed = rng.next();
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace hgc
