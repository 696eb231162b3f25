#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "hgc/serialize.hpp"

// The run / sweep / generate / replay commands, callable in-process. Each
// returns the process exit status and writes only summary lines to `out`.
namespace hgc::cli {

enum ExitStatus : int {
  kOk = 0,
  kFailure = 1,
  kBadInput = 2,
  kAllOffline = 3,
  kReplayMismatch = 4,
};

// Optional overrides applied on top of the scenario's own config.
struct ConfigOverrides {
  std::optional<std::string> seed;  // decimal u64 or "random"
  std::optional<std::string> gossip;
  std::optional<unsigned> max_rounds;
  std::optional<std::string> equivalence;
  std::optional<double> jaccard_threshold;
  bool anonymize = false;
  bool confirm_stability = false;
};

struct RunOptions {
  std::string scenario_path;
  std::size_t index = 0;  // position within a generated suite file
  std::optional<std::string> out_path;
  bool dump_dag = false;
  ConfigOverrides overrides;
};

struct SweepOptions {
  std::string scenario_path;
  std::size_t index = 0;
  std::string adversary = "random";
  std::string f_range = "0..2";
  std::string seeds = "1..20";
  std::optional<std::string> out_path;
  std::optional<std::string> csv_path;
  unsigned jobs = 1;
  ConfigOverrides overrides;
};

struct GenerateOptions {
  std::size_t count = 10;
  std::optional<std::string> seed;
  std::string out_path;
  GeneratorParams params;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MalformedScenario, "cannot read " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorCode::InvalidArgument, "write failed for " + path);
}

inline std::uint64_t parse_u64(const std::string& text, const char* what) {
  if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos)
    throw Error(ErrorCode::InvalidArgument, std::string(what) + " must be an unsigned integer: '" + text + "'");
  try {
    return std::stoull(text);
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidArgument, std::string(what) + " out of range: '" + text + "'");
  }
}

inline std::uint64_t resolve_seed(const std::string& text) {
  if (text == "random") {
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  }
  return parse_u64(text, "seed");
}

// Accepts "a..b" (inclusive) or a comma-separated list.
inline std::vector<std::uint64_t> parse_list(const std::string& text, const char* what) {
  std::vector<std::uint64_t> out;
  const auto dots = text.find("..");
  if (dots != std::string::npos) {
    const auto lo = parse_u64(text.substr(0, dots), what);
    const auto hi = parse_u64(text.substr(dots + 2), what);
    if (hi < lo) throw Error(ErrorCode::InvalidArgument, std::string(what) + " range is empty: " + text);
    for (auto v = lo; v <= hi; ++v) out.push_back(v);
    return out;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_u64(item, what));
  if (out.empty()) throw Error(ErrorCode::InvalidArgument, std::string(what) + " list is empty");
  return out;
}

inline void apply(const ConfigOverrides& o, RunConfig& c) {
  if (o.seed) c.seed = resolve_seed(*o.seed);
  if (o.gossip) {
    const auto m = parse_gossip_mode(*o.gossip);
    if (!m) throw Error(ErrorCode::InvalidArgument, "unknown gossip mode '" + *o.gossip + "'");
    c.gossip_mode = *m;
  }
  if (o.max_rounds) c.max_rounds = *o.max_rounds;
  if (o.equivalence) {
    const auto m = parse_equivalence_mode(*o.equivalence);
    if (!m) throw Error(ErrorCode::InvalidArgument, "unknown equivalence mode '" + *o.equivalence + "'");
    c.equivalence.mode = *m;
  }
  if (o.jaccard_threshold) c.equivalence.jaccard_threshold = *o.jaccard_threshold;
  if (o.anonymize) c.anonymize = true;
  if (o.confirm_stability) c.stability_confirmation = true;
  validate(c);
}

// A scenario file holds either one scenario or a generated suite.
inline Scenario load_scenario(const std::string& path, std::size_t index) {
  const auto doc = io::json::parse(read_file(path), nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorCode::MalformedScenario, path + " is not valid JSON");
  if (doc.is_object() && doc.value("kind", "") == "suite") {
    const auto& list = doc.at("scenarios");
    if (!list.is_array() || index >= list.size())
      throw Error(ErrorCode::MalformedScenario, "suite has no scenario at index " + std::to_string(index));
    return io::scenario_from_json(list[index]);
  }
  if (index != 0) throw Error(ErrorCode::InvalidArgument, "--index applies only to suite files");
  return io::scenario_from_json(doc);
}

inline int exit_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::AllAgentsOffline:
      return kAllOffline;
    case ErrorCode::MalformedScenario:
    case ErrorCode::UnclassifiedClaim:
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidF:
    case ErrorCode::TooFewAgents:
    case ErrorCode::EmptyList:
      return kBadInput;
    default:
      return kFailure;
  }
}

// Runs `body`, mapping library errors to exit statuses with a diagnostic.
template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_status(e.code());
  } catch (const io::json::exception& e) {
    err << "error: MALFORMED_SCENARIO: " << e.what() << "\n";
    return kBadInput;
  }
}

inline std::string run_document(const Scenario& scenario, bool dump_dag, std::string* summary = nullptr) {
  const auto result = run_scenario(scenario);
  if (summary) *summary = result.report.summary;
  return io::dump(io::run_report(scenario, result, dump_dag));
}

inline int cmd_run(const RunOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    Scenario s = load_scenario(opt.scenario_path, opt.index);
    apply(opt.overrides, s.config);
    std::string summary;
    const std::string doc = run_document(s, opt.dump_dag, &summary);
    if (opt.out_path) write_file(*opt.out_path, doc);
    out << summary << " (seed " << s.config.seed << ")\n";
    return static_cast<int>(kOk);
  });
}

inline Policy parse_adversary(const std::string& name) {
  const auto p = parse_policy(name);
  if (!p || !is_byzantine(*p)) throw Error(ErrorCode::InvalidArgument, "unknown adversary kind '" + name + "'");
  return *p;
}

inline SweepTable sweep_from(const Scenario& base, Policy kind, const std::vector<std::size_t>& fs,
                             const std::vector<std::uint64_t>& seeds, unsigned jobs) {
  for (const auto f : fs) {
    if (f >= base.agents.size())
      throw Error(ErrorCode::InvalidF, "f = " + std::to_string(f) + " but N = " + std::to_string(base.agents.size()));
  }
  return byzantine_sweep(base, kind, fs, seeds, jobs);
}

inline std::string sweep_summary(const SweepTable& t) {
  std::ostringstream os;
  os << "sweep: N=" << t.n << " adversary=" << to_string(t.adversary) << " tolerance bound f<=" << t.tolerance_bound()
     << ";";
  for (const auto f : t.f_range) os << " f=" << f << " accuracy " << io::format_real(t.accuracy(f));
  return os.str();
}

inline int cmd_sweep(const SweepOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    Scenario base = load_scenario(opt.scenario_path, opt.index);
    apply(opt.overrides, base.config);
    const Policy kind = parse_adversary(opt.adversary);
    std::vector<std::size_t> fs;
    for (const auto f : parse_list(opt.f_range, "f")) fs.push_back(static_cast<std::size_t>(f));
    const auto seeds = parse_list(opt.seeds, "seeds");
    const SweepTable table = sweep_from(base, kind, fs, seeds, opt.jobs);
    if (opt.out_path) write_file(*opt.out_path, io::dump(io::sweep_report(base, table)));
    if (opt.csv_path) write_file(*opt.csv_path, io::sweep_csv(table));
    out << sweep_summary(table) << "\n";
    return static_cast<int>(kOk);
  });
}

inline int cmd_generate(const GenerateOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const std::uint64_t seed = resolve_seed(opt.seed.value_or(std::to_string(kDefaultSeed)));
    Rng rng(seed);
    const auto suite = generate_scenarios(opt.params, rng, opt.count);
    write_file(opt.out_path, io::dump(io::suite_document(opt.params, seed, suite)));
    out << "generated " << suite.size() << " scenarios (seed " << seed << ")\n";
    return static_cast<int>(kOk);
  });
}

// Reruns whatever produced the report and compares bytes.
inline std::string regenerate(const io::json& doc) {
  const std::string kind = doc.value("kind", "");
  if (kind == "run") {
    const Scenario s = io::scenario_from_json(doc.at("scenario"));
    return run_document(s, doc.value("dump_dag", false));
  }
  if (kind == "sweep") {
    const Scenario base = io::scenario_from_json(doc.at("scenario"));
    const Policy kind_p = parse_adversary(doc.at("adversary").get<std::string>());
    const auto fs = doc.at("f_range").get<std::vector<std::size_t>>();
    const auto seeds = doc.at("seeds").get<std::vector<std::uint64_t>>();
    const unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
    return io::dump(io::sweep_report(base, sweep_from(base, kind_p, fs, seeds, jobs)));
  }
  throw Error(ErrorCode::MalformedScenario, "not a run or sweep report");
}

inline int cmd_replay(const std::string& report_path, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const std::string original = read_file(report_path);
    const auto doc = io::json::parse(original, nullptr, false);
    if (doc.is_discarded()) throw Error(ErrorCode::MalformedScenario, report_path + " is not valid JSON");
    const std::string again = regenerate(doc);
    if (again != original) {
      std::size_t at = 0;
      while (at < again.size() && at < original.size() && again[at] == original[at]) ++at;
      out << "replay mismatch: " << report_path << " differs at byte " << at << "\n";
      return static_cast<int>(kReplayMismatch);
    }
    out << "replay ok: " << report_path << "\n";
    return static_cast<int>(kOk);
  });
}

}  // namespace hgc::cli
