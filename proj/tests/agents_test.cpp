#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "hgc/agents.hpp"

using namespace hgc;

namespace {

Claim c(const std::string& id, double conf = 1.0) { return {id, "claim " + id, conf}; }

Answer ans(std::vector<Claim> cs) { return Answer::from_claims(std::move(cs)); }

std::vector<PeerAnswer> peers_of(std::vector<Answer> answers, AgentIndex first = 1) {
  std::vector<PeerAnswer> out;
  for (auto& a : answers) out.push_back({first++, std::move(a)});
  return out;
}

Answer update(const Answer& own, const std::vector<PeerAnswer>& peers, AgentMemory& mem, int round = 1,
              const ContradictionTable& table = {}, HonestPolicyParams params = {}) {
  return honest_update(own, peers, params, table, round, mem);
}

}  // namespace

TEST(Threshold, CeilingOfFraction) {
  EXPECT_EQ(adoption_threshold(2.0 / 3.0, 3), 2u);
  EXPECT_EQ(adoption_threshold(2.0 / 3.0, 4), 3u);
  EXPECT_EQ(adoption_threshold(2.0 / 3.0, 6), 4u);
  EXPECT_EQ(adoption_threshold(0.8, 5), 4u);
  EXPECT_EQ(adoption_threshold(1.0, 7), 7u);
}

TEST(HonestUpdate, AdoptsFactHeldByFourOfFive) {
  AgentMemory mem;
  const auto out = update(ans({c("a")}), peers_of({ans({c("f")}), ans({c("f")}), ans({c("f")}), ans({c("f")})}), mem);
  EXPECT_TRUE(out.contains("f"));
}

TEST(HonestUpdate, DropsUnsureUniqueClaim) {
  AgentMemory mem;
  const auto out = update(ans({c("a"), c("d", 0.2)}), peers_of({ans({c("a")}), ans({c("a")}), ans({c("a")})}), mem);
  EXPECT_EQ(out.claim_ids(), (std::set<std::string>{"a"}));
  EXPECT_TRUE(mem.dropped.count("d"));
}

TEST(HonestUpdate, KeepsConfidentUniqueClaimWithinPatience) {
  AgentMemory mem;
  const Answer own = ans({c("a"), c("e", 0.9)});
  const auto peers = peers_of({ans({c("a")}), ans({c("a")}), ans({c("a")})});
  EXPECT_TRUE(update(own, peers, mem, 1).contains("e"));
  EXPECT_TRUE(update(own, peers, mem, 2).contains("e"));
  EXPECT_FALSE(update(own, peers, mem, 3).contains("e"));
  EXPECT_TRUE(mem.dropped.count("e"));
}

TEST(HonestUpdate, ZeroPatienceDropsImmediately) {
  AgentMemory mem;
  HonestPolicyParams p;
  p.patience = 0;
  const auto out = update(ans({c("a"), c("e", 0.9)}), peers_of({ans({c("a")})}), mem, 1, {}, p);
  EXPECT_FALSE(out.contains("e"));
}

TEST(HonestUpdate, FixedPointWhenEveryoneAgrees) {
  AgentMemory mem;
  const Answer own = ans({c("a", 0.7), c("b", 0.4)});
  const auto out = update(own, peers_of({own, own, own}), mem);
  EXPECT_EQ(out, own);
}

TEST(HonestUpdate, SwitchesToMajorityOverContradiction) {
  ContradictionTable t;
  t.add("canberra", "sydney");
  AgentMemory mem;
  const auto out = update(ans({c("sydney", 0.6)}),
                          peers_of({ans({c("canberra")}), ans({c("canberra")}), ans({c("canberra")})}), mem, 1, t);
  EXPECT_EQ(out.claim_ids(), (std::set<std::string>{"canberra"}));
}

TEST(HonestUpdate, ContradictionTieBreaks) {
  ContradictionTable t;
  t.add("x", "y");
  // Both sides held by both agents; y carries more summed confidence.
  AgentMemory m1;
  const Answer split = ans({c("x", 0.5), c("y", 0.9)});
  EXPECT_EQ(update(split, peers_of({split}), m1, 1, t).claim_ids(), (std::set<std::string>{"y"}));
  // Equal support and confidence; smaller id wins.
  AgentMemory m2;
  const Answer even = ans({c("x", 0.7), c("y", 0.7)});
  EXPECT_EQ(update(even, peers_of({even}), m2, 1, t).claim_ids(), (std::set<std::string>{"x"}));
}

TEST(HonestUpdate, AdoptsPersistentUnopposedClaim) {
  AgentMemory mem;
  const Answer own = ans({c("a"), c("b")});
  const auto peers = peers_of({ans({c("a"), c("b"), c("e", 0.9)}), ans({c("a"), c("b")}), ans({c("a"), c("b")})});
  EXPECT_FALSE(update(own, peers, mem, 1).contains("e"));
  const auto second = update(own, peers, mem, 2);
  ASSERT_TRUE(second.contains("e"));
  EXPECT_DOUBLE_EQ(second.find("e")->confidence, 0.9);
}

TEST(HonestUpdate, PersistentClaimBlockedByContradiction) {
  ContradictionTable t;
  t.add("a", "z");
  AgentMemory mem;
  const Answer own = ans({c("a")});
  const auto peers = peers_of({ans({c("a")}), ans({c("a"), c("z", 0.9)}), ans({c("a")})});
  update(own, peers, mem, 1, t);
  EXPECT_FALSE(update(own, peers, mem, 2, t).contains("z"));
}

TEST(HonestUpdate, AdoptUnopposedCanBeDisabled) {
  HonestPolicyParams p;
  p.adopt_unopposed = false;
  AgentMemory mem;
  const Answer own = ans({c("a")});
  const auto peers = peers_of({ans({c("a"), c("e", 0.9)}), ans({c("a")}), ans({c("a")})});
  for (int r = 1; r <= 3; ++r) EXPECT_FALSE(update(own, peers, mem, r, {}, p).contains("e"));
}

TEST(HonestUpdate, DroppedClaimReturnsOnlyWithSupermajority) {
  AgentMemory mem;
  mem.dropped.insert("q");
  mem.peer_streak["q"] = 5;
  const Answer own = ans({c("a")});
  EXPECT_FALSE(update(own, peers_of({ans({c("a"), c("q")}), ans({c("a")}), ans({c("a")})}), mem).contains("q"));
  EXPECT_TRUE(update(own, peers_of({ans({c("a"), c("q")}), ans({c("q")}), ans({c("q")})}), mem).contains("q"));
  EXPECT_FALSE(mem.dropped.count("q"));
}

TEST(HonestUpdate, NeverOutputsContradictoryPair) {
  std::mt19937_64 gen(5);
  const std::vector<std::string> ids = {"a", "b", "c", "d", "e"};
  ContradictionTable t;
  t.add("a", "b");
  t.add("c", "d");
  t.add("b", "e");
  for (int trial = 0; trial < 500; ++trial) {
    auto random_answer = [&] {
      std::vector<Claim> cs;
      for (const auto& id : ids)
        if (gen() % 2) cs.push_back(c(id, static_cast<double>(gen() % 101) / 100.0));
      return ans(cs);
    };
    AgentMemory mem;
    std::vector<Answer> ps;
    for (int k = 0; k < 4; ++k) ps.push_back(random_answer());
    const auto out = update(random_answer(), peers_of(ps), mem, 1, t);
    for (const auto& [x, y] : t.pairs()) ASSERT_FALSE(out.contains(x) && out.contains(y));
  }
}

TEST(HonestUpdate, PeerOrderDoesNotMatter) {
  std::mt19937_64 gen(17);
  ContradictionTable t;
  t.add("a", "c");
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<PeerAnswer> peers;
    for (AgentIndex i = 1; i <= 5; ++i) {
      std::vector<Claim> cs;
      for (const char* id : {"a", "b", "c", "d"})
        if (gen() % 2) cs.push_back(c(id, static_cast<double>(gen() % 100) / 100.0));
      peers.push_back({i, ans(cs)});
    }
    const Answer own = ans({c("b", 0.8), c("d", 0.3)});
    AgentMemory m1;
    const auto ref = update(own, peers, m1, 1, t);
    std::shuffle(peers.begin(), peers.end(), gen);
    AgentMemory m2;
    ASSERT_EQ(update(own, peers, m2, 1, t), ref);
    ASSERT_EQ(m1, m2);
  }
}

TEST(HonestUpdate, NoClaimsGivesAbstain) {
  AgentMemory mem;
  EXPECT_TRUE(update(Answer::abstain(), peers_of({Answer::abstain()}), mem).is_abstain());
}

TEST(Byzantine, StubbornIsFixedPoint) {
  Rng rng(1);
  ByzantineState st;
  const Answer own = ans({c("s")});
  EXPECT_EQ(byzantine_update(Policy::Stubborn, own, peers_of({ans({c("t")})}), rng, {}, 1, 0, st), own);
}

TEST(Byzantine, RandomIsReproducibleAndDrawsFromPool) {
  const std::vector<Claim> pool = {c("n1"), c("n2"), c("n3"), c("n4"), c("n5")};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng r1(seed), r2(seed);
    ByzantineState s1, s2;
    const auto a = byzantine_update(Policy::RandomByzantine, Answer::abstain(), {}, r1, pool, 1, 0, s1);
    const auto b = byzantine_update(Policy::RandomByzantine, Answer::abstain(), {}, r2, pool, 1, 0, s2);
    EXPECT_EQ(a, b);
    EXPECT_GE(a.claims().size(), 1u);
    EXPECT_LE(a.claims().size(), 3u);
    for (const auto& cl : a.claims()) EXPECT_EQ(cl.id.front(), 'n');
  }
}

TEST(Byzantine, OscillatorDiffersFromPlurality) {
  const std::vector<Claim> pool = {c("n1"), c("n2")};
  Rng rng(3);
  ByzantineState st;
  const auto peers = peers_of({ans({c("a"), c("b")}), ans({c("a"), c("b")}), ans({c("z")})});
  std::set<std::string> noise_seen;
  for (int r = 1; r <= 4; ++r) {
    const auto out = byzantine_update(Policy::Oscillator, Answer::abstain(), peers, rng, pool, r, 4, st);
    EXPECT_TRUE(out.contains("a") && out.contains("b"));
    EXPECT_EQ(out.claims().size(), 3u);
    for (const auto& cl : out.claims())
      if (cl.id != "a" && cl.id != "b") noise_seen.insert(cl.id);
  }
  // Two pool claims, then repeats from the pool once they are used up.
  EXPECT_EQ(noise_seen, (std::set<std::string>{"n1", "n2"}));
}

TEST(Byzantine, OscillatorWithoutPoolSynthesizesNoise) {
  Rng rng(3);
  ByzantineState st;
  const auto out = byzantine_update(Policy::Oscillator, Answer::abstain(), peers_of({ans({c("a")})}), rng, {}, 2, 4, st);
  EXPECT_TRUE(out.contains("osc-4-2"));
}

TEST(Byzantine, RejectsHonestKind) {
  Rng rng(1);
  ByzantineState st;
  EXPECT_THROW(byzantine_update(Policy::Honest, Answer::abstain(), {}, rng, {}, 1, 0, st), Error);
}

TEST(Plurality, LargestClassThenSmallestRendering) {
  const auto p = EquivalencePolicy{};
  auto alpha = Answer::from_claims({{"x", "Alpha", 1.0}});
  auto beta = Answer::from_claims({{"y", "Beta", 1.0}});
  EXPECT_EQ(plurality_answer(peers_of({beta, beta, alpha, alpha}), p), alpha);
  EXPECT_EQ(plurality_answer(peers_of({alpha, beta, beta}), p), beta);
}

TEST(Prompt, RoundZeroIsQuery) { EXPECT_EQ(build_prompt("Q?", {}, std::nullopt, false, 0), "Q?"); }

TEST(Prompt, ListsPeersWithoutSelf) {
  const auto peers = peers_of({Answer::free_text("Canberra"), Answer::free_text("Sydney"), Answer::free_text("Perth")});
  const auto text = build_prompt("Capital?", peers, std::string("Hobart"), false, 1);
  EXPECT_NE(text.find("The problem is: Capital?"), std::string::npos);
  EXPECT_NE(text.find("- RM_2: Canberra"), std::string::npos);
  EXPECT_NE(text.find("- RM_3: Sydney"), std::string::npos);
  EXPECT_NE(text.find("- RM_4: Perth"), std::string::npos);
  EXPECT_EQ(text.find("RM_1"), std::string::npos);
  EXPECT_NE(text.find("Your previous answer: Hobart"), std::string::npos);
  EXPECT_NE(text.find("Some of the above may be incorrect"), std::string::npos);
  EXPECT_NE(text.find("Reconsider your answer in light of the above"), std::string::npos);
}

TEST(Prompt, AnonymizedHidesIdentities) {
  const auto peers = peers_of({Answer::free_text("x"), Answer::free_text("y")}, 3);
  const auto text = build_prompt("Q", peers, std::nullopt, true, 2);
  EXPECT_EQ(text.find("RM_"), std::string::npos);
  EXPECT_NE(text.find("- Peer 1: x"), std::string::npos);
  EXPECT_NE(text.find("- Peer 2: y"), std::string::npos);
}

TEST(Prompt, LaterRoundNeedsPeers) {
  try {
    build_prompt("Q", {}, std::nullopt, false, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyPeers);
  }
}

TEST(PolicyNames, RoundTrip) {
  for (auto p : {Policy::Honest, Policy::RandomByzantine, Policy::Stubborn, Policy::Oscillator, Policy::External})
    EXPECT_EQ(parse_policy(to_string(p)), p);
  EXPECT_EQ(parse_policy("random"), Policy::RandomByzantine);
  EXPECT_FALSE(parse_policy("evil"));
}

TEST(Params, Validation) {
  HonestPolicyParams p;
  p.adopt_fraction = 0.5;
  EXPECT_THROW(validate(p), Error);
  p.adopt_fraction = 0.8;
  p.drop_confidence = 1.2;
  EXPECT_THROW(validate(p), Error);
  EXPECT_THROW(ContradictionTable().add("a", "a"), Error);
}
