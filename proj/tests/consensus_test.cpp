#include <random>

#include <gtest/gtest.h>

#include "hgc/commands.hpp"
#include "hgc/consensus.hpp"
#include "oracles.hpp"

using namespace hgc;

namespace {

Scenario bundled(const std::string& name) {
  return io::parse_scenario(cli::read_file(std::string(HGC_SCENARIO_DIR) + "/" + name));
}

Claim c(const std::string& id, double conf = 1.0) { return {id, "claim " + id, conf}; }

AgentSpec agent(AgentIndex id, std::vector<Claim> claims, Policy policy = Policy::Honest) {
  AgentSpec a;
  a.agent_id = id;
  a.policy = policy;
  a.initial_claims = std::move(claims);
  return a;
}

RoundLedger ledger_with(std::vector<Answer> round0) {
  RoundLedger ledger;
  RoundRecord rec;
  for (std::size_t i = 0; i < round0.size(); ++i) {
    ledger.participants.push_back(i);
    rec.outputs[i] = round0[i];
  }
  rec.knowledge = KnowledgeMatrix(round0.size());
  ledger.rounds.push_back(rec);
  return ledger;
}

std::vector<Answer> distinct_answers(std::size_t n) {
  std::vector<Answer> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(Answer::from_claims({c("x" + std::to_string(i))}));
  return out;
}

// Random all-honest ensemble without contradictions.
Scenario random_honest(std::mt19937_64& gen) {
  Scenario s;
  s.query = "q";
  const std::size_t n = 2 + gen() % 5;
  const std::vector<std::string> ids = {"a", "b", "c", "d", "e"};
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Claim> cs;
    for (const auto& id : ids)
      if (gen() % 3 == 0) cs.push_back(c(id, static_cast<double>(gen() % 101) / 100.0));
    if (cs.empty()) cs.push_back(c("a", 0.9));
    s.agents.push_back(agent(i, cs));
  }
  return s;
}

}  // namespace

TEST(RunConsensus, AustraliaConvergesInOneRound) {
  const Scenario s = bundled("australia.json");
  const auto r = run_scenario(s);
  EXPECT_TRUE(r.report.converged);
  EXPECT_FALSE(r.report.fallback_used);
  EXPECT_EQ(r.report.rounds_used, 1);
  EXPECT_EQ(r.report.final_answer.claim_ids(), (std::set<std::string>{"canberra"}));
  EXPECT_EQ(r.report.final_answer.rendering(), "The capital of Australia is Canberra");
  EXPECT_EQ(r.report.per_round_changes, std::vector<std::size_t>{1});
  EXPECT_EQ(r.report.summary, "consensus: all 4 agents agreed after 1 round");
}

TEST(RunConsensus, DetailMergeKeepsConfidentMinority) {
  const Scenario s = bundled("detail_merge.json");
  const auto r = run_scenario(s);
  EXPECT_TRUE(r.report.converged);
  EXPECT_EQ(r.report.final_answer.claim_ids(), (std::set<std::string>{"A", "B", "E"}));
  EXPECT_EQ(r.report.rounds_used, 2);
}

TEST(RunConsensus, IdenticalAnswersConvergeImmediately) {
  std::vector<AgentSpec> agents;
  for (AgentIndex i = 0; i < 3; ++i) agents.push_back(agent(i, {c("a"), c("b", 0.3)}));
  RunConfig config;
  auto r = run_consensus("q", agents, config);
  EXPECT_TRUE(r.report.converged);
  EXPECT_EQ(r.report.rounds_used, 1);
  EXPECT_EQ(r.report.per_round_changes, std::vector<std::size_t>{0});

  config.check_round_zero = true;
  r = run_consensus("q", agents, config);
  EXPECT_TRUE(r.report.converged);
  EXPECT_EQ(r.report.rounds_used, 0);
  EXPECT_EQ(r.report.calls_made, 3u);
  EXPECT_TRUE(r.report.per_round_changes.empty());
}

TEST(RunConsensus, StubbornPairFallsBack) {
  const std::vector<AgentSpec> agents = {agent(0, {c("x")}, Policy::Stubborn), agent(1, {c("y")}, Policy::Stubborn)};
  const auto r = run_consensus("q", agents, RunConfig{});
  EXPECT_FALSE(r.report.converged);
  EXPECT_TRUE(r.report.fallback_used);
  EXPECT_EQ(r.report.rounds_used, 3);
  EXPECT_EQ(r.report.final_answer.claim_ids(), (std::set<std::string>{"x"}));
  EXPECT_EQ(r.report.calls_made, 8u);
}

TEST(RunConsensus, TwoStubbornScenarioFallsBackToHonestPlurality) {
  Scenario s = bundled("two_stubborn.json");
  s.config.max_rounds = 1;
  const auto r = run_scenario(s);
  EXPECT_TRUE(r.report.fallback_used);
  EXPECT_EQ(r.report.rounds_used, 1);
  EXPECT_EQ(r.report.final_answer.claim_ids(), (std::set<std::string>{"jupiter"}));
  EXPECT_EQ(r.report.final_support, 3u);
  EXPECT_EQ(r.report.summary, "no consensus after 1 round; fallback to the plurality answer held by 3 of 5 agents");
}

TEST(RunConsensus, TooFewAgents) {
  try {
    run_consensus("q", {agent(0, {c("a")})}, RunConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooFewAgents);
  }
}

TEST(RunConsensus, RejectsBadConfig) {
  RunConfig config;
  config.max_rounds = 0;
  EXPECT_THROW(run_consensus("q", {agent(0, {c("a")}), agent(1, {c("a")})}, config), Error);
  EXPECT_THROW(run_consensus("q", {agent(0, {c("a")}), agent(2, {c("a")})}, RunConfig{}), Error);
}

TEST(RunConsensus, MatchesArithmeticOracle) {
  std::mt19937_64 gen(31);
  for (int trial = 0; trial < 300; ++trial) {
    const Scenario s = random_honest(gen);
    const auto r = run_scenario(s);
    ASSERT_EQ(r.report.final_answer.claim_ids(), oracle::honest_final_claims(s, 0.5)) << "trial " << trial;
    ASSERT_TRUE(r.report.converged);
  }
}

TEST(RunConsensus, GossipModesAgreeForHonestAgents) {
  std::mt19937_64 gen(8);
  for (int trial = 0; trial < 100; ++trial) {
    Scenario s = random_honest(gen);
    s.config.seed = gen();
    const auto full = run_scenario(s);
    s.config.gossip_mode = GossipMode::RandomPairwise;
    const auto pairwise = run_scenario(s);
    ASSERT_EQ(full.report.final_answer, pairwise.report.final_answer);
    ASSERT_EQ(full.report.rounds_used, pairwise.report.rounds_used);
    ASSERT_TRUE(pairwise.dag.has_value());
  }
}

TEST(RunConsensus, TerminatesAndReportsConsistently) {
  std::mt19937_64 gen(12);
  const std::vector<Policy> kinds = {Policy::Honest, Policy::Honest, Policy::RandomByzantine, Policy::Stubborn,
                                     Policy::Oscillator};
  for (int trial = 0; trial < 200; ++trial) {
    Scenario s = random_honest(gen);
    for (auto& a : s.agents) a.policy = kinds[gen() % kinds.size()];
    s.noise_pool = {c("n1"), c("n2"), c("n3")};
    s.config.max_rounds = 1 + static_cast<unsigned>(gen() % 4);
    s.config.stability_confirmation = gen() % 2;
    s.config.gossip_mode = gen() % 2 ? GossipMode::FullSync : GossipMode::RandomPairwise;
    s.config.seed = gen();
    const auto r = run_scenario(s);
    const auto& rep = r.report;
    ASSERT_LE(rep.rounds_used, static_cast<int>(s.config.max_rounds) + 1);
    ASSERT_NE(rep.converged, rep.fallback_used);
    ASSERT_EQ(r.ledger.last_round(), rep.rounds_used);
    const auto& last = r.ledger.outputs(rep.rounds_used);
    if (rep.converged) {
      std::vector<Answer> answers;
      for (const auto& [i, a] : last) answers.push_back(a);
      ASSERT_TRUE(all_equivalent(answers, s.config.equivalence));
    }
    const bool present = std::any_of(last.begin(), last.end(), [&](const auto& kv) {
      return answers_equivalent(kv.second, rep.final_answer, s.config.equivalence);
    });
    ASSERT_TRUE(present);
    ASSERT_EQ(rep.per_round_changes.size(), static_cast<std::size_t>(rep.rounds_used));
  }
}

TEST(RunConsensus, SameSeedSameLedger) {
  std::mt19937_64 gen(4);
  Scenario s = random_honest(gen);
  s.agents[0].policy = Policy::RandomByzantine;
  s.noise_pool = {c("n1"), c("n2"), c("n3"), c("n4")};
  s.config.gossip_mode = GossipMode::RandomPairwise;
  s.config.seed = 77;
  const auto a = run_scenario(s);
  const auto b = run_scenario(s);
  EXPECT_EQ(io::to_json(a.ledger), io::to_json(b.ledger));
  EXPECT_EQ(io::to_json(*a.dag), io::to_json(*b.dag));
  EXPECT_EQ(a.report.gossip_steps, b.report.gossip_steps);
}

TEST(StabilityConfirmation, HonestFixedPointIsStable) {
  Scenario s = bundled("australia.json");
  s.config.stability_confirmation = true;
  const auto r = run_scenario(s);
  EXPECT_TRUE(r.report.converged);
  EXPECT_EQ(r.report.stable, std::optional<bool>(true));
  EXPECT_EQ(r.report.rounds_used, 2);
  EXPECT_EQ(r.report.final_answer.claim_ids(), (std::set<std::string>{"canberra"}));
}

TEST(StabilityConfirmation, OscillatorBreaksAgreement) {
  // Everyone starts in agreement; the confirmation round exposes the oscillator.
  std::vector<AgentSpec> agents;
  for (AgentIndex i = 0; i < 4; ++i) agents.push_back(agent(i, {c("a")}));
  agents[3].policy = Policy::Oscillator;
  RunConfig config;
  config.check_round_zero = true;
  config.stability_confirmation = true;
  config.max_rounds = 1;
  AgentEnvironment env;
  env.noise_pool = {c("n1")};
  ConsensusSession session("q", agents, config, env);
  session.start();
  ASSERT_TRUE(session.round_converged(0));
  EXPECT_FALSE(session.check_stability());

  const auto r = run_consensus("q", agents, config, env);
  EXPECT_EQ(r.report.stable, std::optional<bool>(false));
  EXPECT_TRUE(r.report.fallback_used);
  EXPECT_EQ(r.report.final_answer.claim_ids(), (std::set<std::string>{"a"}));
}

TEST(StabilityConfirmation, SkippedByDefault) {
  const auto r = run_scenario(bundled("australia.json"));
  EXPECT_FALSE(r.report.stable.has_value());
}

TEST(GossipFullSync, EveryoneGetsEveryoneElse) {
  for (std::size_t n : {2u, 4u}) {
    const auto ledger = ledger_with(distinct_answers(n));
    const auto g = gossip_full_sync(ledger, 1);
    ASSERT_EQ(g.peers.size(), n);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_EQ(g.peers[i].size(), n - 1);
      for (const auto& p : g.peers[i]) EXPECT_NE(p.agent, i);
    }
    EXPECT_TRUE(saturated(g.knowledge));
    EXPECT_EQ(g.steps, 1u);
  }
}

TEST(GossipFullSync, MissingRound) {
  const auto ledger = ledger_with(distinct_answers(2));
  try {
    gossip_full_sync(ledger, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingRound);
  }
}

TEST(GossipPairwise, TwoAgentsNeedTwoExchanges) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto ledger = ledger_with(distinct_answers(2));
    Dag dag(2);
    Rng rng(seed);
    std::size_t cursor = 0;
    const auto g = gossip_random_pairwise(dag, ledger, 1, rng, cursor);
    EXPECT_EQ(g.steps, 2u);
    EXPECT_TRUE(saturated(g.knowledge));
  }
}

TEST(GossipPairwise, ReproducibleForFixedSeed) {
  const auto ledger = ledger_with(distinct_answers(4));
  auto run = [&] {
    Dag dag(4);
    Rng rng(123);
    std::size_t cursor = 0;
    const auto g = gossip_random_pairwise(dag, ledger, 1, rng, cursor);
    return std::pair{g.steps, io::to_json(dag)};
  };
  EXPECT_EQ(run(), run());
}

TEST(GossipPairwise, PeersMatchPreviousRoundAndDagPayloads) {
  const auto answers = distinct_answers(8);
  const auto ledger = ledger_with(answers);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Dag dag(8);
    Rng rng(seed);
    std::size_t cursor = seed;
    const auto g = gossip_random_pairwise(dag, ledger, 1, rng, cursor);
    ASSERT_TRUE(saturated(g.knowledge));
    for (std::size_t i = 0; i < 8; ++i) {
      ASSERT_EQ(g.peers[i].size(), 7u);
      for (const auto& p : g.peers[i]) ASSERT_EQ(p.answer, answers[p.agent]);
      // The matrix only claims what the DAG payload actually holds.
      ASSERT_EQ(dag.event(*dag.latest(i)).payload.size(), 8u);
    }
    ASSERT_EQ(dag.size(), 8u + g.steps);
  }
}

TEST(FinalAnswer, LowestIndexRepresentative) {
  const std::map<AgentIndex, Answer> m = {{2, Answer::free_text("Canberra")}, {5, Answer::free_text("canberra.")}};
  EXPECT_EQ(choose_final_answer(m, {EquivalenceMode::Normalized, 0.9}).rendering(), "Canberra");
  try {
    choose_final_answer({{0, Answer::free_text("a")}, {1, Answer::free_text("b")}}, {EquivalenceMode::Exact, 0.9});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotEquivalent);
  }
}

TEST(FallbackDecision, PluralityAndTies) {
  const EquivalencePolicy exact{EquivalenceMode::Exact, 0.9};
  std::map<AgentIndex, Answer> m = {{0, Answer::free_text("Beta")},
                                    {1, Answer::free_text("Alpha")},
                                    {2, Answer::free_text("Beta")},
                                    {3, Answer::free_text("Alpha")}};
  EXPECT_EQ(fallback_decision(m, exact).rendering(), "Alpha");
  m[4] = Answer::free_text("Beta");
  EXPECT_EQ(fallback_decision(m, exact).rendering(), "Beta");
  EXPECT_EQ(fallback_decision({{0, Answer::free_text("x")}}, exact).rendering(), "x");
}
