#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hgc/claims.hpp"
#include "hgc/dag.hpp"
#include "hgc/error.hpp"
#include "hgc/rng.hpp"

namespace hgc {

enum class Policy { Honest, RandomByzantine, Stubborn, Oscillator, External };

constexpr std::string_view to_string(Policy p) {
  switch (p) {
    case Policy::Honest: return "honest";
    case Policy::RandomByzantine: return "random_byzantine";
    case Policy::Stubborn: return "stubborn";
    case Policy::Oscillator: return "oscillator";
    case Policy::External: return "external";
  }
  return "honest";
}

inline std::optional<Policy> parse_policy(std::string_view s) {
  for (auto p : {Policy::Honest, Policy::RandomByzantine, Policy::Stubborn, Policy::Oscillator,
                 Policy::External}) {
    if (s == to_string(p)) return p;
  }
  if (s == "random") return Policy::RandomByzantine;
  return std::nullopt;
}

constexpr bool is_byzantine(Policy p) {
  return p == Policy::RandomByzantine || p == Policy::Stubborn || p == Policy::Oscillator;
}

struct HonestPolicyParams {
  double adopt_fraction = 2.0 / 3.0;
  double drop_confidence = 0.5;
  unsigned patience = 2;
  bool adopt_unopposed = true;
  // Consecutive rounds a minority claim must be seen among peers before the
  // unopposed-adoption path may pick it up.
  unsigned persistence_rounds = 2;

  friend bool operator==(const HonestPolicyParams&, const HonestPolicyParams&) = default;
};

inline void validate(const HonestPolicyParams& p) {
  if (!(p.adopt_fraction > 0.5 && p.adopt_fraction <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "adopt_fraction must lie in (1/2, 1]");
  if (!(p.drop_confidence >= 0.0 && p.drop_confidence <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "drop_confidence must lie in [0, 1]");
}

// Smallest support count that meets adopt_fraction out of n agents.
inline std::size_t adoption_threshold(double adopt_fraction, std::size_t n) {
  return static_cast<std::size_t>(std::ceil(adopt_fraction * static_cast<double>(n) - 1e-9));
}

// Unordered pairs of claim ids that cannot both hold.
class ContradictionTable {
 public:
  ContradictionTable() = default;

  void add(const std::string& a, const std::string& b) {
    if (a == b) throw Error(ErrorCode::InvalidArgument, "claim '" + a + "' cannot contradict itself");
    pairs_.insert(a < b ? std::pair{a, b} : std::pair{b, a});
  }

  bool contradicts(const std::string& a, const std::string& b) const {
    return pairs_.count(a < b ? std::pair{a, b} : std::pair{b, a}) > 0;
  }

  const std::set<std::pair<std::string, std::string>>& pairs() const noexcept { return pairs_; }
  bool empty() const noexcept { return pairs_.empty(); }

 private:
  std::set<std::pair<std::string, std::string>> pairs_;
};

// Per-agent state carried between rounds by the honest policy.
struct AgentMemory {
  std::map<std::string, unsigned> unique_streak;  // own claims nobody else held
  std::map<std::string, unsigned> peer_streak;    // claims seen among peer answers
  std::set<std::string> dropped;

  friend bool operator==(const AgentMemory&, const AgentMemory&) = default;
};

struct PeerAnswer {
  AgentIndex agent = 0;
  Answer answer;
};

namespace detail {

struct ClaimTally {
  Claim claim;  // text taken from the lowest-index holder
  std::size_t support = 0;
  double confidence_sum = 0.0;
  bool own = false;
};

}  // namespace detail

// The virtual-voting update: every honest agent applies the same arithmetic
// to the previous round's answers, so agreement follows from shared inputs
// rather than from exchanged vote messages.
//
// support(c) counts the agent itself plus every peer whose previous answer holds c.
// Rules, in order of effect:
//   1. adopt c when support(c) reaches adopt_fraction of N;
//   3. drop own unique claims below drop_confidence;
//   4. keep confident own unique claims for at most `patience` rounds;
//   5. optionally adopt a minority peer claim seen for persistence_rounds
//      consecutive rounds that contradicts nothing kept so far;
//   6. never re-adopt a dropped claim unless rule 1 applies;
//   2. finally, among contradictory claims keep the best ranked one
//      (support, then summed confidence, then smallest id).
inline Answer honest_update(const Answer& own_prev, std::span<const PeerAnswer> peers,
                            const HonestPolicyParams& params, const ContradictionTable& contradictions,
                            int round, AgentMemory& memory) {
  (void)round;
  const std::size_t n = peers.size() + 1;
  const std::size_t threshold = adoption_threshold(params.adopt_fraction, n);

  // Fold holders in agent-index order so floating sums do not depend on peer order.
  std::vector<const PeerAnswer*> ordered;
  ordered.reserve(peers.size());
  for (const auto& p : peers) ordered.push_back(&p);
  std::sort(ordered.begin(), ordered.end(),
            [](const PeerAnswer* a, const PeerAnswer* b) { return a->agent < b->agent; });

  std::map<std::string, detail::ClaimTally> tally;
  for (const auto& c : own_prev.claims()) {
    auto& t = tally[c.id];
    t.claim = c;
    t.support = 1;
    t.confidence_sum = c.confidence;
    t.own = true;
  }
  std::set<std::string> seen_in_peers;
  for (const PeerAnswer* p : ordered) {
    for (const auto& c : p->answer.claims()) {
      seen_in_peers.insert(c.id);
      auto& t = tally[c.id];
      if (t.support == 0) t.claim = c;
      t.support += 1;
      t.confidence_sum += c.confidence;
    }
  }

  for (const auto& id : seen_in_peers) memory.peer_streak[id] += 1;
  for (auto it = memory.peer_streak.begin(); it != memory.peer_streak.end();) {
    it = seen_in_peers.count(it->first) ? std::next(it) : memory.peer_streak.erase(it);
  }

  std::set<std::string> keep;
  for (const auto& [id, t] : tally) {
    if (t.support >= threshold) {
      keep.insert(id);
      memory.dropped.erase(id);
    }
  }

  for (const auto& [id, t] : tally) {
    if (!t.own || keep.count(id)) continue;
    if (t.support >= 2) {
      keep.insert(id);
      memory.unique_streak.erase(id);
      continue;
    }
    if (t.claim.confidence < params.drop_confidence) continue;
    const unsigned streak = ++memory.unique_streak[id];
    if (streak <= params.patience) keep.insert(id);
  }
  for (auto it = memory.unique_streak.begin(); it != memory.unique_streak.end();) {
    const auto t = tally.find(it->first);
    const bool still_unique = t != tally.end() && t->second.own && t->second.support == 1;
    it = still_unique ? std::next(it) : memory.unique_streak.erase(it);
  }

  if (params.adopt_unopposed) {
    const std::set<std::string> held = keep;
    for (const auto& [id, t] : tally) {
      if (t.own || keep.count(id) || memory.dropped.count(id)) continue;
      auto streak = memory.peer_streak.find(id);
      if (streak == memory.peer_streak.end() || streak->second < params.persistence_rounds) continue;
      const bool opposed = std::any_of(held.begin(), held.end(), [&](const std::string& h) {
        return contradictions.contradicts(id, h);
      });
      if (!opposed) keep.insert(id);
    }
  }

  std::vector<const detail::ClaimTally*> ranked;
  for (const auto& id : keep) ranked.push_back(&tally.at(id));
  std::sort(ranked.begin(), ranked.end(), [](const detail::ClaimTally* a, const detail::ClaimTally* b) {
    if (a->support != b->support) return a->support > b->support;
    if (a->confidence_sum != b->confidence_sum) return a->confidence_sum > b->confidence_sum;
    return a->claim.id < b->claim.id;
  });
  std::vector<Claim> out;
  for (const auto* t : ranked) {
    const bool clash = std::any_of(out.begin(), out.end(), [&](const Claim& c) {
      return contradictions.contradicts(c.id, t->claim.id);
    });
    if (clash) continue;
    Claim c = t->claim;
    if (!t->own) c.confidence = t->confidence_sum / static_cast<double>(t->support);
    out.push_back(std::move(c));
  }

  std::set<std::string> kept_ids;
  for (const auto& c : out) kept_ids.insert(c.id);
  for (const auto& c : own_prev.claims()) {
    if (!kept_ids.count(c.id)) memory.dropped.insert(c.id);
  }

  return Answer::from_claims(std::move(out));
}

// Mutable state for the adversarial policies; only the oscillator uses it.
struct ByzantineState {
  std::set<std::string> emitted;
};

// Most common answer among `answers` (claim-set classes, ties to the smallest
// rendering, representative is the lowest agent index).
inline Answer plurality_answer(std::span<const PeerAnswer> answers, const EquivalencePolicy& policy) {
  if (answers.empty()) return Answer::abstain();
  std::vector<const PeerAnswer*> ordered;
  for (const auto& a : answers) ordered.push_back(&a);
  std::sort(ordered.begin(), ordered.end(),
            [](const PeerAnswer* a, const PeerAnswer* b) { return a->agent < b->agent; });
  std::vector<std::pair<const PeerAnswer*, std::size_t>> classes;
  for (const PeerAnswer* a : ordered) {
    auto it = std::find_if(classes.begin(), classes.end(), [&](const auto& cls) {
      return answers_equivalent(cls.first->answer, a->answer, policy);
    });
    if (it == classes.end()) {
      classes.emplace_back(a, 1);
    } else {
      ++it->second;
    }
  }
  auto best = classes.begin();
  for (auto it = classes.begin(); it != classes.end(); ++it) {
    if (it->second > best->second ||
        (it->second == best->second &&
         it->first->answer.rendering() < best->first->answer.rendering()))
      best = it;
  }
  return best->first->answer;
}

inline Answer byzantine_update(Policy kind, const Answer& own_prev, std::span<const PeerAnswer> peers,
                               Rng& rng, std::span<const Claim> noise_pool, int round,
                               AgentIndex self, ByzantineState& state) {
  switch (kind) {
    case Policy::Stubborn:
      return own_prev;

    case Policy::RandomByzantine: {
      if (noise_pool.empty()) return Answer::abstain();
      std::vector<Claim> pool(noise_pool.begin(), noise_pool.end());
      const std::size_t k = 1 + rng.uniform(std::min<std::size_t>(3, pool.size()));
      for (std::size_t i = 0; i < k; ++i) std::swap(pool[i], pool[i + rng.uniform(pool.size() - i)]);
      pool.resize(k);
      return Answer::from_claims(std::move(pool));
    }

    case Policy::Oscillator: {
      const Answer plurality = plurality_answer(peers, EquivalencePolicy{});
      std::vector<Claim> claims = plurality.claims();
      std::vector<const Claim*> fresh;
      std::vector<const Claim*> outside;
      for (const auto& c : noise_pool) {
        if (plurality.contains(c.id)) continue;
        outside.push_back(&c);
        if (!state.emitted.count(c.id)) fresh.push_back(&c);
      }
      Claim noise;
      if (!fresh.empty()) {
        noise = *fresh[rng.uniform(fresh.size())];
      } else if (!outside.empty()) {
        noise = *outside[rng.uniform(outside.size())];
      } else {
        noise = Claim{"osc-" + std::to_string(self) + "-" + std::to_string(round),
                      "unsupported assertion " + std::to_string(round), 1.0};
      }
      state.emitted.insert(noise.id);
      claims.push_back(std::move(noise));
      return Answer::from_claims(std::move(claims));
    }

    case Policy::Honest:
    case Policy::External:
      break;
  }
  throw Error(ErrorCode::InvalidArgument, "byzantine_update called with a non-Byzantine policy");
}

struct PromptPeer {
  std::string label;
  std::string text;
};

inline std::string peer_label(AgentIndex agent, std::size_t position, bool anonymize) {
  return anonymize ? "Peer " + std::to_string(position + 1) : "RM_" + std::to_string(agent + 1);
}

inline std::vector<PromptPeer> prompt_peers(std::span<const PeerAnswer> peers, bool anonymize) {
  std::vector<const PeerAnswer*> ordered;
  for (const auto& p : peers) ordered.push_back(&p);
  std::sort(ordered.begin(), ordered.end(),
            [](const PeerAnswer* a, const PeerAnswer* b) { return a->agent < b->agent; });
  std::vector<PromptPeer> out;
  for (std::size_t i = 0; i < ordered.size(); ++i)
    out.push_back({peer_label(ordered[i]->agent, i, anonymize), ordered[i]->answer.rendering()});
  return out;
}

// Round 0 sends the bare query. Later rounds list the peers' answers (never the
// agent's own), the agent's previous answer when given, and the
// reconsideration instruction. Anonymized labels are positional.
inline std::string build_prompt(const std::string& query, std::span<const PeerAnswer> peers,
                                const std::optional<std::string>& own_prev, bool anonymize, int round) {
  if (round == 0) return query;
  if (peers.empty()) throw Error(ErrorCode::EmptyPeers, "round " + std::to_string(round) + " has no peers");
  std::string out = "You are one of several AI agents solving a problem. The problem is: " + query + "\n";
  out += "Here are answers from your peers:\n";
  for (const auto& p : prompt_peers(peers, anonymize)) out += "- " + p.label + ": " + p.text + "\n";
  if (own_prev) out += "Your previous answer: " + *own_prev + "\n";
  out +=
      "Some of the above may be incorrect. Only include what is correct in your answer.\n"
      "Compare the answers from your peers with yours and identify any conflicting information. "
      "If most of your peers agree on something you missed, consider if they might be correct. "
      "If you stated something no one else did and you are not confident it is correct, you may "
      "remove or verify it.\n"
      "Reconsider your answer in light of the above and provide a revised answer that you believe "
      "is most accurate and addresses the query faithfully.";
  return out;
}

}  // namespace hgc
