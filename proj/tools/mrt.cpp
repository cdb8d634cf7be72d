// mrt: command-line front end for protocol validation, simulation,
// analysis and log checking.
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "mrt/case_studies.hpp"
#include "mrt/engine.hpp"
#include "mrt/error.hpp"
#include "mrt/estimator.hpp"
#include "mrt/event_log.hpp"
#include "mrt/outcomes.hpp"
#include "mrt/protocol_io.hpp"

namespace fs = std::filesystem;
using namespace mrt;

namespace {

constexpr int kOk = 0;
constexpr int kDomain = 1;
constexpr int kUsage = 2;

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::io_error:
    case ErrorCode::config_error:
      return kUsage;
    default:
      return kDomain;
  }
}

std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string join(const std::vector<std::string>& v, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + v[i];
  return out;
}

// ---------------------------------------------------------------------------

int cmd_validate(const std::string& path) {
  const TrialProtocol p = load_protocol(path);
  const auto violations = validate_protocol(p);
  for (const auto& v : violations) std::cout << v.code << ": " << v.message << "\n";
  if (!violations.empty()) return kDomain;
  std::size_t micro = 0;
  for (const auto& f : p.factors) micro += f.is_micro();
  std::cout << "ok: " << p.protocol_id << " (" << p.factors.size() << " factors, " << micro
            << " micro-randomized, " << p.study_length_days << " days)\n";
  return kOk;
}

struct SimulateOptions {
  std::string protocol;
  std::string behavior;
  int population = 100;
  std::uint64_t seed = 1;
  int reps = 1;
  int jobs = 1;
  std::string out;
};

std::string rep_name(int r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "rep_%03d", r);
  return buf;
}

int cmd_simulate(const SimulateOptions& o) {
  const TrialProtocol protocol = load_protocol(o.protocol);
  const ParticipantConfig behavior = o.behavior.empty() ? ParticipantConfig{} : load_behavior(o.behavior);
  if (auto v = validate_protocol(protocol); !v.empty()) {
    for (const auto& x : v) std::cerr << x.code << ": " << x.message << "\n";
    return kDomain;
  }
  if (o.population < 1) {
    std::cerr << "INVALID_ARGUMENT: --population must be at least 1\n";
    return kDomain;
  }
  if (o.reps < 1) {
    std::cerr << "INVALID_ARGUMENT: --reps must be at least 1\n";
    return kDomain;
  }

  const fs::path out_dir = o.out;
  std::vector<DeliverySummary> summaries(static_cast<std::size_t>(o.reps));
  std::vector<fs::path> written;
  std::mutex mu;
  std::optional<Error> failure;
  std::atomic<int> next{0};

  auto worker = [&] {
    for (int r = next++; r < o.reps; r = next++) {
      {
        std::lock_guard lock(mu);
        if (failure) return;
      }
      try {
        SimulationRun run{protocol, o.population, derive_seed(o.seed, static_cast<std::uint64_t>(r)), behavior,
                          o.seed, static_cast<std::uint64_t>(r)};
        TrialLog log = run_trial(run);
        enrich_outcomes(log);
        const fs::path dir = out_dir / rep_name(r);
        {
          std::lock_guard lock(mu);
          written.push_back(dir);
        }
        write_trial_log(log, dir);
        summaries[static_cast<std::size_t>(r)] = summarize_deliveries(log);
      } catch (const Error& e) {
        std::lock_guard lock(mu);
        if (!failure) failure = e;
        return;
      }
    }
  };
  const int jobs = std::clamp(o.jobs, 1, o.reps);
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  if (failure) {
    for (const auto& d : written) fs::remove_all(d);
    std::cerr << failure->what() << "\n";
    return exit_code_for(*failure);
  }

  // Mean over replications; the spread is the pooled across-participant SE.
  auto combine = [&](auto pick) {
    double mean = 0, var = 0;
    for (const auto& s : summaries) {
      const auto [m, se] = pick(s);
      mean += m;
      var += se * se;
    }
    const double n = static_cast<double>(summaries.size());
    return std::pair{mean / n, std::sqrt(var) / n};
  };
  std::ostringstream report;
  report << protocol.protocol_id << ": " << o.reps << " replication(s) x " << o.population
         << " participants x " << protocol.study_length_days << " days, seed " << o.seed << "\n";
  for (std::size_t i = 0; i < summaries.front().factors.size(); ++i) {
    const std::string& id = summaries.front().factors[i].factor_id;
    auto [d, dse] = combine([&](const DeliverySummary& s) {
      return std::pair{s.factors[i].delivered_per_day, s.factors[i].delivered_se};
    });
    auto [s, sse] = combine([&](const DeliverySummary& x) {
      return std::pair{x.factors[i].seen_per_day, x.factors[i].seen_se};
    });
    report << id << " delivered/day: " << fixed2(d) << " ± " << fixed2(dse) << "\n";
    report << id << " seen/day: " << fixed2(s) << " ± " << fixed2(sse) << "\n";
  }
  auto [t, tse] = combine([](const DeliverySummary& s) { return std::pair{s.pushes_per_day, s.pushes_se}; });
  report << "total pushes/day: " << fixed2(t) << " ± " << fixed2(tse) << "\n";
  std::cout << report.str();

  std::ofstream summary(out_dir / "summary.txt");
  summary << report.str();
  Json manifest{{"protocol", fs::absolute(o.protocol).string()},
                {"behavior", o.behavior.empty() ? Json(nullptr) : Json(fs::absolute(o.behavior).string())},
                {"population", o.population},
                {"seed", o.seed},
                {"reps", o.reps}};
  std::ofstream(out_dir / "manifest.json") << manifest.dump(2) << "\n";
  return kOk;
}

std::vector<fs::path> replication_dirs(const fs::path& dir) {
  if (fs::exists(dir / kEventsFile)) return {dir};
  std::vector<fs::path> out;
  if (fs::is_directory(dir))
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_directory() && fs::exists(e.path() / kEventsFile)) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  if (out.empty()) throw Error(ErrorCode::io_error, "no " + std::string(kEventsFile) + " under " + dir.string());
  return out;
}

std::string contrast_text(const Contrast& c) {
  return join(c.level_a, "+") + " vs " + join(c.level_b, "+");
}

int cmd_analyze(const std::string& log_dir, const std::string& questions_path, int replicates) {
  std::optional<std::vector<ResearchQuestion>> questions;
  if (!questions_path.empty()) questions = parse_questions(read_text_file(questions_path));

  std::ostringstream table, report;
  table << "replication\tquestion\tpriority\tkind\tfactor\tcontrast\tstratum\testimate\tstd_error\t"
           "ci_low\tci_high\tn_available\tn_a\tn_b\tflags\terror\n";
  for (const auto& dir : replication_dirs(log_dir)) {
    const TrialLog log = load_trial_log(dir);
    const auto& qs = questions ? *questions : log.protocol.questions;
    report << "== " << dir.filename().string() << " (" << log.protocol.protocol_id << ", "
           << log.participants.size() << " participants) ==\n";
    if (qs.empty()) report << "no research questions declared\n";
    BootstrapOptions options;
    options.replicates = replicates;
    for (const auto& q : qs) {
      const QuestionResult r = answer_question(log, q, options);
      const std::string prefix = dir.filename().string() + "\t" + q.id + "\t" +
                                 (q.primary ? "primary" : "secondary") + "\t" +
                                 std::string(to_string(q.kind)) + "\t" + q.factor_id + "\t";
      report << "\n[" << (q.primary ? "primary" : "secondary") << "] " << q.id << ": " << q.text << "\n";
      if (r.error) {
        table << prefix << "\t\t\t\t\t\t\t\t\t\t" << *r.error << "\n";
        report << "  error: " << *r.error << "\n";
        continue;
      }
      if (r.trend) {
        const TrendEstimate& t = *r.trend;
        table << prefix << contrast_text(t.contrast) << "\tslope\t" << num(t.slope) << "\t" << num(t.std_error)
              << "\t" << num(t.ci_low) << "\t" << num(t.ci_high) << "\t" << t.n_available_points << "\t\t\t\t\n";
        report << "  " << contrast_text(t.contrast) << ": slope " << num(t.slope) << "/day (SE "
               << num(t.std_error) << ", 95% CI " << num(t.ci_low) << " to " << num(t.ci_high) << ") over "
               << t.n_days << " days\n";
      }
      for (const auto& e : r.estimates) {
        std::vector<std::string> flags;
        if (e.empty) flags.push_back("empty");
        if (e.low_confidence) flags.push_back("low_confidence");
        table << prefix << contrast_text(e.contrast) << "\t" << e.stratum.value_or("") << "\t"
              << (e.empty ? "" : num(e.estimate)) << "\t" << (e.empty ? "" : num(e.std_error)) << "\t"
              << (e.empty ? "" : num(e.ci_low)) << "\t" << (e.empty ? "" : num(e.ci_high)) << "\t"
              << e.n_available_points << "\t" << e.n_a << "\t" << e.n_b << "\t" << join(flags, ",") << "\t\n";
        report << "  " << contrast_text(e.contrast);
        if (e.stratum) report << " [" << q.moderator << " = " << *e.stratum << "]";
        if (e.empty) {
          report << ": no available points in both arms (" << e.n_available_points << " points)\n";
          continue;
        }
        report << ": " << num(e.estimate) << " (SE " << num(e.std_error) << ", 95% CI " << num(e.ci_low)
               << " to " << num(e.ci_high) << ", n = " << e.n_available_points << ")"
               << (e.low_confidence ? " low confidence" : "") << "\n";
      }
    }
    report << "\n";
  }
  std::cout << table.str() << "\n" << report.str();
  std::ofstream(fs::path(log_dir) / "estimates.tsv") << table.str();
  std::ofstream(fs::path(log_dir) / "report.txt") << report.str();
  return kOk;
}

int cmd_scaffold(const std::string& name, const std::string& out_dir) {
  const CaseStudy& c = find_case_study(name);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::io_error, "cannot create " + out_dir + ": " + ec.message());
  for (const auto& [suffix, text] : {std::pair{".protocol.ini", c.protocol_text}, std::pair{".behavior.ini", c.behavior_text}}) {
    const fs::path path = fs::path(out_dir) / (std::string(c.name) + suffix);
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
    std::cout << path.string() << "\n";
  }
  return kOk;
}

int cmd_verify(const std::string& target, const std::string& protocol_path) {
  int status = kOk;
  for (const auto& dir : replication_dirs(target)) {
    TrialProtocol protocol;
    if (!protocol_path.empty()) {
      protocol = load_protocol(protocol_path);
    } else {
      const auto records = read_all(dir / kEventsFile);
      protocol = parse_protocol(records.front().body.value("protocol", std::string()));
    }
    const auto violations = verify_log(dir / kEventsFile, protocol);
    for (const auto& v : violations) std::cout << dir.filename().string() << ": " << v.code << ": " << v.message << "\n";
    if (violations.empty()) std::cout << dir.filename().string() << ": ok\n";
    else status = kDomain;
  }
  return status;
}

int cmd_replay(const std::string& target) {
  int status = kOk;
  for (const auto& dir : replication_dirs(target)) {
    const auto records = read_all(dir / kEventsFile);
    const Json& h = records.front().body;
    SimulationRun run{parse_protocol(h.at("protocol").get<std::string>()),
                      h.at("population_size").get<int>(),
                      h.at("trial_seed").get<std::uint64_t>(),
                      parse_behavior(h.at("behavior").get<std::string>()),
                      h.at("base_seed").get<std::uint64_t>(),
                      h.at("replication").get<std::uint64_t>()};
    TrialLog log = run_trial(run);
    enrich_outcomes(log);
    const std::string original = read_text_file(dir / kEventsFile);
    const std::string replayed = events_text(log);
    if (original == replayed) {
      std::cout << dir.filename().string() << ": identical (" << records.size() << " records)\n";
      continue;
    }
    std::size_t line = 1, i = 0;
    for (; i < std::min(original.size(), replayed.size()) && original[i] == replayed[i]; ++i)
      if (original[i] == '\n') ++line;
    std::cout << dir.filename().string() << ": differs at line " << line << "\n";
    status = kDomain;
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulate and analyze micro-randomized trials"};
  app.set_version_flag("--version", "mrt 0.1.0");
  app.require_subcommand(1);

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a protocol file; exit 1 on rule violations");
  validate->add_option("protocol", validate_path, "Protocol file")->required();

  SimulateOptions sim;
  const char* env_out = std::getenv("MRT_OUT_DIR");
  sim.out = env_out && *env_out ? env_out : "mrt-out";
  auto* simulate = app.add_subcommand("simulate", "Run replications and write event logs");
  simulate->add_option("--protocol", sim.protocol, "Protocol file")->required();
  simulate->add_option("--behavior", sim.behavior, "Behavior config file (default: built-in defaults)");
  simulate->add_option("--population", sim.population, "Participants per replication")->capture_default_str();
  simulate->add_option("--seed", sim.seed, "Trial seed")->capture_default_str();
  simulate->add_option("--reps", sim.reps, "Replications")->capture_default_str();
  simulate->add_option("--jobs", sim.jobs, "Replications run in parallel")->capture_default_str();
  simulate->add_option("--out", sim.out, "Output directory (default: $MRT_OUT_DIR or mrt-out)");

  std::string analyze_dir, questions_path;
  int replicates = 1000;
  auto* analyze = app.add_subcommand("analyze", "Answer research questions from enriched logs");
  analyze->add_option("log_dir", analyze_dir, "Replication directory or simulate output directory")->required();
  analyze->add_option("--questions", questions_path, "File of [question.<id>] sections (default: the protocol's)");
  analyze->add_option("--replicates", replicates, "Bootstrap replicates")->capture_default_str();

  std::string scaffold_name, scaffold_out;
  auto* scaffold = app.add_subcommand("scaffold", "Write a bundled case study (heartsteps, sara, barifit)");
  scaffold->add_option("case_study", scaffold_name, "Case study name")->required();
  scaffold->add_option("out_dir", scaffold_out, "Directory to write into")->required();

  std::string verify_dir, verify_protocol;
  auto* verify = app.add_subcommand("verify", "Re-check logs against their protocol");
  verify->add_option("log_dir", verify_dir, "Replication directory or simulate output directory")->required();
  verify->add_option("--protocol", verify_protocol, "Protocol file (default: the one embedded in the log)");

  std::string replay_dir;
  auto* replay = app.add_subcommand("replay", "Re-run logs from their headers and compare byte-for-byte");
  replay->add_option("log_dir", replay_dir, "Replication directory or simulate output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*validate) return cmd_validate(validate_path);
    if (*simulate) return cmd_simulate(sim);
    if (*analyze) return cmd_analyze(analyze_dir, questions_path, replicates);
    if (*scaffold) return cmd_scaffold(scaffold_name, scaffold_out);
    if (*verify) return cmd_verify(verify_dir, verify_protocol);
    if (*replay) return cmd_replay(replay_dir);
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
