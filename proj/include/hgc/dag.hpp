#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hgc/claims.hpp"
#include "hgc/error.hpp"

namespace hgc {

using AgentIndex = std::size_t;
using EventId = std::uint64_t;

// What an event's creator knows about one agent: its latest answer and the round it belongs to.
struct Snapshot {
  int round = 0;
  Answer answer;

  friend bool operator==(const Snapshot&, const Snapshot&) = default;
};

using Payload = std::map<AgentIndex, Snapshot>;

// Later rounds win per agent.
inline void merge_into(Payload& into, const Payload& from) {
  for (const auto& [agent, snap] : from) {
    auto it = into.find(agent);
    if (it == into.end() || it->second.round < snap.round) into[agent] = snap;
  }
}

struct GossipEvent {
  EventId id = 0;
  AgentIndex creator = 0;
  std::optional<EventId> self_parent;
  std::optional<EventId> other_parent;
  Payload payload;
  std::optional<int> round;
  std::uint64_t logical_time = 0;
};

// Entry (i, j) is true once agent i holds agent j's output for the round in progress.
class KnowledgeMatrix {
 public:
  KnowledgeMatrix() = default;
  explicit KnowledgeMatrix(std::size_t n) : n_(n), cells_(n * n, false) {
    for (std::size_t i = 0; i < n; ++i) cells_[i * n + i] = true;
  }

  static KnowledgeMatrix full(std::size_t n) {
    KnowledgeMatrix m(n);
    m.cells_.assign(n * n, true);
    return m;
  }

  std::size_t size() const noexcept { return n_; }
  bool knows(std::size_t i, std::size_t j) const { return cells_.at(i * n_ + j); }

  // Entries only ever go from false to true.
  void learn(std::size_t i, std::size_t j) { cells_.at(i * n_ + j) = true; }

  std::size_t known_count() const {
    return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), true));
  }

  friend bool operator==(const KnowledgeMatrix&, const KnowledgeMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<bool> cells_;
};

inline bool saturated(const KnowledgeMatrix& m) { return m.known_count() == m.size() * m.size(); }

// Gossip-about-gossip event graph. Ids are dense and equal to the logical time
// at which the event was appended, so parents always precede children.
class Dag {
 public:
  explicit Dag(std::size_t num_agents) : num_agents_(num_agents), latest_(num_agents) {}

  std::size_t num_agents() const noexcept { return num_agents_; }
  std::size_t size() const noexcept { return events_.size(); }
  const std::vector<GossipEvent>& events() const noexcept { return events_; }

  const GossipEvent& event(EventId id) const {
    if (id >= events_.size()) throw Error(ErrorCode::UnknownEvent, "event " + std::to_string(id));
    return events_[id];
  }

  std::optional<EventId> latest(AgentIndex agent) const { return latest_.at(agent); }

  // The stored payload is the union of the creator's previous payload, the
  // other parent's payload and `contribution`.
  EventId append_event(AgentIndex creator, std::optional<EventId> other_parent, Payload contribution) {
    if (creator >= num_agents_)
      throw Error(ErrorCode::InvalidArgument, "creator " + std::to_string(creator) + " out of range");
    if (other_parent && *other_parent >= events_.size())
      throw Error(ErrorCode::UnknownParent, "event " + std::to_string(*other_parent));
    const auto self_parent = latest_[creator];
    if (!self_parent && other_parent)
      throw Error(ErrorCode::MissingGenesis, "agent " + std::to_string(creator) + " has no genesis event");
    if (other_parent && events_[*other_parent].creator == creator)
      throw Error(ErrorCode::InvalidArgument, "other parent must come from a different creator");

    GossipEvent ev;
    ev.id = events_.size();
    ev.creator = creator;
    ev.self_parent = self_parent;
    ev.other_parent = other_parent;
    ev.logical_time = ev.id;
    if (self_parent) ev.payload = events_[*self_parent].payload;
    if (other_parent) merge_into(ev.payload, events_[*other_parent].payload);
    merge_into(ev.payload, contribution);
    events_.push_back(std::move(ev));
    latest_[creator] = events_.back().id;
    return events_.back().id;
  }

  // True iff `ancestor` is reachable from `descendant` through parent links (reflexive).
  bool is_ancestor(EventId ancestor, EventId descendant) const {
    event(ancestor);
    event(descendant);
    if (ancestor == descendant) return true;
    if (ancestor > descendant) return false;
    std::vector<bool> visited(descendant + 1, false);
    std::vector<EventId> stack{descendant};
    while (!stack.empty()) {
      const EventId cur = stack.back();
      stack.pop_back();
      if (cur == ancestor) return true;
      if (cur < ancestor || visited[cur]) continue;
      visited[cur] = true;
      const auto& ev = events_[cur];
      if (ev.self_parent) stack.push_back(*ev.self_parent);
      if (ev.other_parent) stack.push_back(*ev.other_parent);
    }
    return false;
  }

  // x strongly sees y when the events lying between them (both endpoints
  // included) were created by more than 2n/3 distinct agents.
  bool strongly_sees(EventId x, EventId y, std::size_t n) const {
    event(x);
    event(y);
    if (n == 0) throw Error(ErrorCode::InvalidArgument, "n must be >= 1");
    if (!is_ancestor(y, x)) return false;
    std::set<AgentIndex> creators;
    for (EventId z = y; z <= x; ++z) {
      if (is_ancestor(z, x) && is_ancestor(y, z)) creators.insert(events_[z].creator);
    }
    return 3 * creators.size() > 2 * n;
  }

  // Genesis events are round 0. Otherwise, with m the largest parent round, the
  // event advances to m + 1 iff its payload holds round >= m answers from all n agents.
  int assign_round(EventId id, std::size_t n) {
    auto& ev = events_.at(event(id).id);
    int m = 0;
    bool has_parent = false;
    for (const auto& parent : {ev.self_parent, ev.other_parent}) {
      if (!parent) continue;
      const auto& p = events_[*parent];
      if (!p.round)
        throw Error(ErrorCode::UnassignedParent, "parent " + std::to_string(p.id) + " has no round");
      m = has_parent ? std::max(m, *p.round) : *p.round;
      has_parent = true;
    }
    if (!has_parent) {
      ev.round = 0;
      return 0;
    }
    std::size_t complete = 0;
    for (const auto& entry : ev.payload) {
      if (entry.second.round >= m) ++complete;
    }
    ev.round = complete >= n ? m + 1 : m;
    return *ev.round;
  }

 private:
  std::size_t num_agents_;
  std::vector<GossipEvent> events_;
  std::vector<std::optional<EventId>> latest_;
};

}  // namespace hgc
