// hgc: run, sweep, generate and replay consensus scenarios from the shell.
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "hgc/commands.hpp"

namespace {

void add_config_flags(CLI::App& cmd, hgc::cli::ConfigOverrides& o) {
  cmd.add_option("--seed", o.seed, "RNG seed (unsigned 64-bit) or 'random'");
  cmd.add_option("--gossip", o.gossip, "Gossip mode")->check(CLI::IsMember({"full", "pairwise"}));
  cmd.add_option("--max-rounds", o.max_rounds, "Update rounds before the fallback decision");
  cmd.add_option("--equivalence", o.equivalence, "Answer equivalence")
      ->check(CLI::IsMember({"exact", "normalized", "jaccard", "claims"}));
  cmd.add_option("--jaccard-threshold", o.jaccard_threshold, "Token Jaccard threshold in [0,1]");
  cmd.add_flag("--anonymize", o.anonymize, "Label peers positionally in prompts");
  cmd.add_flag("--confirm-stability", o.confirm_stability, "Require one unchanged round after agreement");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gossip-based consensus among black-box reasoning agents"};
  app.require_subcommand(1);

  hgc::cli::RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "Run one scenario and write its report");
  run_cmd->add_option("--scenario", run.scenario_path, "Scenario or suite JSON")->required();
  run_cmd->add_option("--index", run.index, "Scenario index within a suite file");
  run_cmd->add_option("--out", run.out_path, "Report JSON path");
  run_cmd->add_flag("--dump-dag", run.dump_dag, "Include the gossip DAG in the report");
  add_config_flags(*run_cmd, run.overrides);

  hgc::cli::SweepOptions sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Replace f honest agents with adversaries and tabulate accuracy");
  sweep_cmd->add_option("--scenario", sweep.scenario_path, "Base scenario or suite JSON")->required();
  sweep_cmd->add_option("--index", sweep.index, "Scenario index within a suite file");
  sweep_cmd->add_option("--adversary", sweep.adversary, "random, stubborn or oscillator")->capture_default_str();
  sweep_cmd->add_option("--f", sweep.f_range, "Adversary counts: a..b or a,b,c")->capture_default_str();
  sweep_cmd->add_option("--seeds", sweep.seeds, "Seeds: a..b or a,b,c")->capture_default_str();
  sweep_cmd->add_option("--out", sweep.out_path, "Sweep JSON path");
  sweep_cmd->add_option("--csv", sweep.csv_path, "Sweep CSV path");
  sweep_cmd->add_option("--jobs", sweep.jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  add_config_flags(*sweep_cmd, sweep.overrides);

  hgc::cli::GenerateOptions gen;
  auto& gp = gen.params;
  auto* gen_cmd = app.add_subcommand("generate", "Write a suite of synthetic all-honest scenarios");
  gen_cmd->add_option("--count", gen.count, "Number of scenarios")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "RNG seed (unsigned 64-bit) or 'random'");
  gen_cmd->add_option("--out", gen.out_path, "Suite JSON path")->required();
  gen_cmd->add_option("--min-agents", gp.min_agents, "Smallest ensemble size")->capture_default_str();
  gen_cmd->add_option("--max-agents", gp.max_agents, "Largest ensemble size")->capture_default_str();
  gen_cmd->add_option("--true-claims", gp.true_claims, "True claims per scenario")->capture_default_str();
  gen_cmd->add_option("--coverage", gp.coverage, "Per-agent probability of holding each true claim")->capture_default_str();
  gen_cmd->add_option("--hallucination", gp.hallucination, "Per-agent probability of one false claim")->capture_default_str();
  gen_cmd->add_option("--contradiction-density", gp.contradiction_density, "Probability a false claim contradicts a true one")->capture_default_str();
  gen_cmd->add_option("--false-pool", gp.false_pool_size, "Shared false claims (0: fresh per agent)")->capture_default_str();
  gen_cmd->add_option("--noise-pool", gp.noise_pool_size, "Adversary noise claims")->capture_default_str();

  std::string report_path;
  auto* replay_cmd = app.add_subcommand("replay", "Rerun a report and check it is byte-identical");
  replay_cmd->add_option("report", report_path, "Run or sweep report JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return hgc::cli::kBadInput;
  }

  if (run_cmd->parsed()) return hgc::cli::cmd_run(run, std::cout, std::cerr);
  if (sweep_cmd->parsed()) return hgc::cli::cmd_sweep(sweep, std::cout, std::cerr);
  if (gen_cmd->parsed()) return hgc::cli::cmd_generate(gen, std::cout, std::cerr);
  return hgc::cli::cmd_replay(report_path, std::cout, std::cerr);
}
