#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <future>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hgc/agents.hpp"
#include "hgc/claims.hpp"
#include "hgc/dag.hpp"
#include "hgc/error.hpp"
#include "hgc/external.hpp"
#include "hgc/rng.hpp"

namespace hgc {

inline constexpr std::uint64_t kDefaultSeed = 20250101;

enum class GossipMode { FullSync, RandomPairwise };

constexpr std::string_view to_string(GossipMode m) {
  return m == GossipMode::FullSync ? "full" : "pairwise";
}

inline std::optional<GossipMode> parse_gossip_mode(std::string_view s) {
  if (s == "full") return GossipMode::FullSync;
  if (s == "pairwise") return GossipMode::RandomPairwise;
  return std::nullopt;
}

struct RunConfig {
  GossipMode gossip_mode = GossipMode::FullSync;
  unsigned max_rounds = 3;
  EquivalencePolicy equivalence;
  bool stability_confirmation = false;
  bool check_round_zero = false;
  std::uint64_t seed = kDefaultSeed;
  bool anonymize = false;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

inline void validate(const RunConfig& c) {
  if (c.max_rounds < 1) throw Error(ErrorCode::InvalidArgument, "max_rounds must be >= 1");
  validate(c.equivalence);
}

struct AgentSpec {
  AgentIndex agent_id = 0;
  Policy policy = Policy::Honest;
  std::vector<Claim> initial_claims;
  HonestPolicyParams honest;
  std::optional<ExternalEndpoint> endpoint;

  friend bool operator==(const AgentSpec&, const AgentSpec&) = default;
};

// Shared ground facts the simulated policies consult: which claims exclude each
// other, and which claims adversaries draw their noise from.
struct AgentEnvironment {
  ContradictionTable contradictions;
  std::vector<Claim> noise_pool;
};

struct RoundRecord {
  std::map<AgentIndex, Answer> outputs;
  KnowledgeMatrix knowledge;  // indexed by participant position
  std::set<AgentIndex> changed;
  std::set<AgentIndex> offline;
  std::size_t gossip_steps = 0;
};

// round_outputs[r][i] plus the bookkeeping gathered while producing it.
struct RoundLedger {
  std::vector<AgentIndex> participants;
  std::vector<RoundRecord> rounds;

  const std::map<AgentIndex, Answer>& outputs(int round) const {
    if (round < 0 || static_cast<std::size_t>(round) >= rounds.size())
      throw Error(ErrorCode::MissingRound, "round " + std::to_string(round));
    return rounds[static_cast<std::size_t>(round)].outputs;
  }

  int last_round() const { return static_cast<int>(rounds.size()) - 1; }
};

struct ConsensusReport {
  Answer final_answer;
  bool converged = false;
  int rounds_used = 0;
  bool fallback_used = false;
  std::vector<std::size_t> per_round_changes;  // rounds 1..rounds_used
  std::vector<std::size_t> gossip_steps;       // rounds 1..rounds_used
  std::uint64_t seed = 0;
  std::size_t calls_made = 0;
  std::size_t participants = 0;
  std::size_t final_support = 0;  // last-round answers equivalent to the final one
  std::vector<AgentIndex> excluded;
  std::optional<bool> stable;  // nullopt when no confirmation round ran
  std::string summary;
};

struct ConsensusResult {
  ConsensusReport report;
  RoundLedger ledger;
  std::optional<Dag> dag;  // present in pairwise mode
};

namespace detail {

inline std::vector<PeerAnswer> as_peer_list(const std::map<AgentIndex, Answer>& answers) {
  std::vector<PeerAnswer> out;
  for (const auto& [agent, answer] : answers) out.push_back({agent, answer});
  return out;
}

}  // namespace detail

// Lowest agent index stands for the whole (equivalent) set.
inline Answer choose_final_answer(const std::map<AgentIndex, Answer>& answers, const EquivalencePolicy& policy) {
  if (answers.empty()) throw Error(ErrorCode::EmptyList, "no answers");
  std::vector<Answer> list;
  for (const auto& [agent, a] : answers) list.push_back(a);
  if (!all_equivalent(list, policy)) throw Error(ErrorCode::NotEquivalent, "answers disagree");
  return answers.begin()->second;
}

// Plurality over equivalence classes; ties go to the smallest rendering.
inline Answer fallback_decision(const std::map<AgentIndex, Answer>& answers, const EquivalencePolicy& policy) {
  if (answers.empty()) throw Error(ErrorCode::EmptyList, "no answers");
  const auto list = detail::as_peer_list(answers);
  return plurality_answer(list, policy);
}

struct GossipOutcome {
  std::vector<std::vector<PeerAnswer>> peers;  // per participant position
  KnowledgeMatrix knowledge;
  std::size_t steps = 0;
};

// Everyone receives every other participant's previous-round answer in one step.
inline GossipOutcome gossip_full_sync(const RoundLedger& ledger, int round) {
  const auto& prev = ledger.outputs(round - 1);
  GossipOutcome out;
  const std::size_t n = ledger.participants.size();
  out.peers.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const AgentIndex agent = ledger.participants[j];
      out.peers[i].push_back({agent, prev.at(agent)});
    }
  }
  out.knowledge = KnowledgeMatrix::full(n);
  out.steps = 1;
  return out;
}

// Pairwise gossip over the event DAG. Initiators take turns (the cursor
// persists across rounds); each initiator syncs to a uniformly chosen peer
// that the knowledge matrix shows to be missing something the initiator
// holds. The receiver records a new event whose other parent is the
// initiator's latest event. Stops once the matrix saturates.
inline GossipOutcome gossip_random_pairwise(Dag& dag, const RoundLedger& ledger, int round, Rng& rng,
                                            std::size_t& initiator_cursor) {
  const auto& prev = ledger.outputs(round - 1);
  const auto& who = ledger.participants;
  const std::size_t n = who.size();

  for (const AgentIndex agent : who) {
    const auto latest = dag.latest(agent);
    const Answer& current = prev.at(agent);
    if (latest) {
      const auto& payload = dag.event(*latest).payload;
      auto it = payload.find(agent);
      if (it != payload.end() && it->second.round >= round - 1) continue;
    }
    const EventId id = dag.append_event(agent, std::nullopt, {{agent, Snapshot{round - 1, current}}});
    dag.assign_round(id, n);
  }

  auto holds = [&](std::size_t i, std::size_t j) {
    const auto& payload = dag.event(*dag.latest(who[i])).payload;
    auto it = payload.find(who[j]);
    return it != payload.end() && it->second.round >= round - 1;
  };

  KnowledgeMatrix knowledge(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (holds(i, j)) knowledge.learn(i, j);

  GossipOutcome out;
  std::vector<std::size_t> candidates;
  while (!saturated(knowledge)) {
    const std::size_t a = initiator_cursor++ % n;
    candidates.clear();
    for (std::size_t b = 0; b < n; ++b) {
      if (b == a) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (knowledge.knows(a, j) && !knowledge.knows(b, j)) {
          candidates.push_back(b);
          break;
        }
      }
    }
    if (candidates.empty()) continue;
    const std::size_t b = candidates[rng.uniform(candidates.size())];
    const EventId id = dag.append_event(who[b], dag.latest(who[a]), {});
    dag.assign_round(id, n);
    for (std::size_t j = 0; j < n; ++j)
      if (knowledge.knows(a, j)) knowledge.learn(b, j);
    ++out.steps;
  }

  out.peers.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& payload = dag.event(*dag.latest(who[i])).payload;
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      out.peers[i].push_back({who[j], payload.at(who[j]).answer});
    }
  }
  out.knowledge = std::move(knowledge);
  return out;
}

using ExternalCaller = std::function<ExternalReply(const ExternalEndpoint&, const ExternalRequest&)>;

// Runs the round loop for one query. Holds every piece of per-run state:
// policy memories, RNG streams, the DAG and the ledger.
class ConsensusSession {
 public:
  ConsensusSession(std::string query, std::vector<AgentSpec> agents, RunConfig config,
                   AgentEnvironment env = {}, ExternalCaller caller = external_answer)
      : query_(std::move(query)),
        agents_(std::move(agents)),
        config_(config),
        env_(std::move(env)),
        caller_(std::move(caller)),
        gossip_rng_(mix_seed(config.seed, 0)) {
    if (agents_.size() < 2)
      throw Error(ErrorCode::TooFewAgents, std::to_string(agents_.size()) + " agent(s), need at least 2");
    validate(config_);
    for (std::size_t i = 0; i < agents_.size(); ++i) {
      const auto& a = agents_[i];
      if (a.agent_id != i)
        throw Error(ErrorCode::InvalidArgument, "agent ids must equal their positions (" + std::to_string(i) + ")");
      if (a.policy == Policy::Honest) validate(a.honest);
      if (a.policy == Policy::External && !a.endpoint)
        throw Error(ErrorCode::InvalidArgument, "external agent " + std::to_string(i) + " has no endpoint");
      agent_rng_.emplace_back(mix_seed(config.seed, i + 1));
    }
    memory_.resize(agents_.size());
    byzantine_.resize(agents_.size());
    if (config_.gossip_mode == GossipMode::RandomPairwise) dag_.emplace(agents_.size());
  }

  const RoundLedger& ledger() const noexcept { return ledger_; }
  const RunConfig& config() const noexcept { return config_; }
  const std::optional<Dag>& dag() const noexcept { return dag_; }
  std::size_t calls_made() const noexcept { return calls_; }

  // Round 0: every agent answers the bare query.
  void start() {
    RoundRecord rec;
    std::vector<std::future<ExternalReply>> pending(agents_.size());
    for (std::size_t i = 0; i < agents_.size(); ++i) {
      if (agents_[i].policy == Policy::External) pending[i] = ask_external(i, 0, {}, std::nullopt);
    }
    for (std::size_t i = 0; i < agents_.size(); ++i) {
      ++calls_;
      if (agents_[i].policy != Policy::External) {
        rec.outputs[i] = Answer::from_claims(agents_[i].initial_claims);
        continue;
      }
      ExternalReply reply = pending[i].get();
      if (auto* a = std::get_if<Answer>(&reply)) {
        rec.outputs[i] = std::move(*a);
      } else {
        excluded_.push_back(i);
      }
    }
    if (rec.outputs.empty()) throw Error(ErrorCode::AllAgentsOffline, "no agent answered round 0");
    for (const auto& [agent, answer] : rec.outputs) ledger_.participants.push_back(agent);
    rec.knowledge = KnowledgeMatrix(ledger_.participants.size());
    ledger_.rounds.push_back(std::move(rec));
  }

  // Gossip, then every participant updates; returns the new round number.
  int run_round() {
    if (ledger_.rounds.empty()) start();
    const int round = ledger_.last_round() + 1;
    GossipOutcome gossip = config_.gossip_mode == GossipMode::FullSync
                               ? gossip_full_sync(ledger_, round)
                               : gossip_random_pairwise(*dag_, ledger_, round, gossip_rng_, cursor_);
    const auto& prev = ledger_.outputs(round - 1);
    const auto& who = ledger_.participants;

    std::vector<std::future<ExternalReply>> pending(who.size());
    for (std::size_t p = 0; p < who.size(); ++p) {
      const AgentIndex i = who[p];
      if (agents_[i].policy == Policy::External)
        pending[p] = ask_external(i, round, gossip.peers[p], prev.at(i).rendering());
    }

    RoundRecord rec;
    for (std::size_t p = 0; p < who.size(); ++p) {
      const AgentIndex i = who[p];
      const Answer& own = prev.at(i);
      const auto& peers = gossip.peers[p];
      ++calls_;
      switch (agents_[i].policy) {
        case Policy::Honest:
          rec.outputs[i] = honest_update(own, peers, agents_[i].honest, env_.contradictions, round, memory_[i]);
          break;
        case Policy::External: {
          ExternalReply reply = pending[p].get();
          if (auto* a = std::get_if<Answer>(&reply)) {
            rec.outputs[i] = std::move(*a);
          } else {
            rec.outputs[i] = own;
            rec.offline.insert(i);
          }
          break;
        }
        default:
          rec.outputs[i] = byzantine_update(agents_[i].policy, own, peers, agent_rng_[i], env_.noise_pool,
                                            round, i, byzantine_[i]);
      }
      if (!(rec.outputs[i] == own)) rec.changed.insert(i);
    }
    if (rec.offline.size() == who.size())
      throw Error(ErrorCode::AllAgentsOffline, "every agent failed in round " + std::to_string(round));
    rec.knowledge = std::move(gossip.knowledge);
    rec.gossip_steps = gossip.steps;
    ledger_.rounds.push_back(std::move(rec));
    return round;
  }

  bool round_converged(int round) const {
    const auto& outputs = ledger_.outputs(round);
    std::vector<Answer> list;
    for (const auto& [agent, a] : outputs) list.push_back(a);
    return all_equivalent(list, config_.equivalence);
  }

  // Runs one extra round; true iff every answer stays equivalent to the
  // answer the ensemble had converged on.
  bool check_stability() {
    const Answer agreed = ledger_.outputs(ledger_.last_round()).begin()->second;
    const int round = run_round();
    const auto& outputs = ledger_.outputs(round);
    return std::all_of(outputs.begin(), outputs.end(), [&](const auto& kv) {
      return answers_equivalent(agreed, kv.second, config_.equivalence);
    });
  }

  ConsensusResult run() {
    if (ledger_.rounds.empty()) start();
    ConsensusReport report;
    report.seed = config_.seed;

    bool done = config_.check_round_zero && round_converged(0) && try_finish(report, 0);
    while (!done) {
      const int round = run_round();
      if (round_converged(round)) {
        done = try_finish(report, round);
      } else if (round >= static_cast<int>(config_.max_rounds)) {
        finish_fallback(report, round);
        done = true;
      }
    }

    ConsensusResult result;
    report.calls_made = calls_;
    report.participants = ledger_.participants.size();
    report.excluded = excluded_;
    for (int r = 1; r <= report.rounds_used; ++r) {
      const auto& rec = ledger_.rounds[static_cast<std::size_t>(r)];
      report.per_round_changes.push_back(rec.changed.size());
      report.gossip_steps.push_back(rec.gossip_steps);
    }
    const auto& last = ledger_.outputs(report.rounds_used);
    report.final_support = static_cast<std::size_t>(std::count_if(last.begin(), last.end(), [&](const auto& kv) {
      return answers_equivalent(report.final_answer, kv.second, config_.equivalence);
    }));
    report.summary = summarize(report);
    result.report = std::move(report);
    result.ledger = ledger_;
    result.dag = dag_;
    return result;
  }

 private:
  // Called when `round` is unanimous. Without confirmation that ends the run;
  // with it, one more round must leave every answer unchanged.
  bool try_finish(ConsensusReport& report, int round) {
    if (!config_.stability_confirmation) {
      report.converged = true;
      report.rounds_used = round;
      report.final_answer = choose_final_answer(ledger_.outputs(round), config_.equivalence);
      return true;
    }
    const bool stable = check_stability();
    report.stable = stable;
    const int confirm_round = ledger_.last_round();
    if (stable) {
      report.converged = true;
      report.rounds_used = confirm_round;
      report.final_answer = choose_final_answer(ledger_.outputs(round), config_.equivalence);
      return true;
    }
    if (confirm_round >= static_cast<int>(config_.max_rounds)) {
      finish_fallback(report, confirm_round);
      return true;
    }
    // The confirmation round is an ordinary round from here on.
    return round_converged(confirm_round) && try_finish(report, confirm_round);
  }

  void finish_fallback(ConsensusReport& report, int round) {
    report.converged = false;
    report.fallback_used = true;
    report.rounds_used = round;
    report.final_answer = fallback_decision(ledger_.outputs(round), config_.equivalence);
  }

  static std::string summarize(const ConsensusReport& r) {
    const std::string rounds = std::to_string(r.rounds_used) + (r.rounds_used == 1 ? " round" : " rounds");
    if (r.converged)
      return "consensus: all " + std::to_string(r.participants) + " agents agreed after " + rounds;
    return "no consensus after " + rounds + "; fallback to the plurality answer held by " +
           std::to_string(r.final_support) + " of " + std::to_string(r.participants) + " agents";
  }

  std::future<ExternalReply> ask_external(AgentIndex i, int round, const std::vector<PeerAnswer>& peers,
                                          std::optional<std::string> own) {
    ExternalRequest req;
    req.query = query_;
    req.round = round;
    req.own_previous = std::move(own);
    req.peer_answers = prompt_peers(peers, config_.anonymize);
    return std::async(std::launch::async, [this, i, req = std::move(req)] {
      try {
        return caller_(*agents_[i].endpoint, req);
      } catch (const Error&) {
        return ExternalReply{ErrorCode::TransportFailure};
      }
    });
  }

  std::string query_;
  std::vector<AgentSpec> agents_;
  RunConfig config_;
  AgentEnvironment env_;
  ExternalCaller caller_;
  Rng gossip_rng_;
  std::vector<Rng> agent_rng_;
  std::vector<AgentMemory> memory_;
  std::vector<ByzantineState> byzantine_;
  std::optional<Dag> dag_;
  std::size_t cursor_ = 0;
  std::size_t calls_ = 0;
  std::vector<AgentIndex> excluded_;
  RoundLedger ledger_;
};

inline ConsensusResult run_consensus(const std::string& query, const std::vector<AgentSpec>& agents,
                                     const RunConfig& config, const AgentEnvironment& env = {},
                                     ExternalCaller caller = external_answer) {
  ConsensusSession session(query, agents, config, env, std::move(caller));
  return session.run();
}

}  // namespace hgc
