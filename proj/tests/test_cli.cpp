#include <doctest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <regex>
#include <sstream>

#include "mrt/event_log.hpp"
#include "support.hpp"

using namespace mrt;
using namespace mrt::test;
namespace fs = std::filesystem;

namespace {

struct Result {
  int status = -1;
  std::string output;
};

Result run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + "\"" MRT_CLI_PATH "\" " + args + " 2>&1";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) r.output.append(buf.data(), n);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

// Parses "<label>: X ± Y" from simulate output.
double summary_value(const std::string& out, const std::string& label) {
  std::smatch m;
  const std::regex re(label + R"(: ([0-9.]+) ± ([0-9.]+))");
  REQUIRE_MESSAGE(std::regex_search(out, m, re), "no '" << label << "' line in:\n" << out);
  return std::stod(m[1]);
}

fs::path scaffolded(const std::string& name) {
  const auto dir = scratch_dir("cli_scaffold_" + name);
  const Result r = run("scaffold " + name + " " + q(dir));
  REQUIRE(r.status == 0);
  return dir;
}

}  // namespace

TEST_CASE("validate") {
  const auto dir = scaffolded("heartsteps");
  const Result ok = run("validate " + q(dir / "heartsteps.protocol.ini"));
  CHECK(ok.status == 0);
  CHECK(ok.output.find("ok: heartsteps") != std::string::npos);

  std::string text = read_text_file(dir / "heartsteps.protocol.ini");
  text.replace(text.find("probability = 0.4"), 17, "probability = 0.5");
  write_file(dir / "bad.protocol.ini", text);
  const Result bad = run("validate " + q(dir / "bad.protocol.ini"));
  CHECK(bad.status == 1);
  CHECK(bad.output.find("PROB_SUM_NOT_ONE") != std::string::npos);

  CHECK(run("validate " + q(dir / "missing.ini")).status == 2);
  write_file(dir / "garbage.ini", "[trial\nthis is not a protocol\n");
  CHECK(run("validate " + q(dir / "garbage.ini")).status == 2);
  CHECK(run("").status == 2);
  CHECK(run("frobnicate").status == 2);
}

TEST_CASE("scaffold writes the bundled designs") {
  const auto bf = scaffolded("barifit");
  const TrialProtocol barifit = load_protocol(bf / "barifit.protocol.ini");
  CHECK(barifit.factors.size() == 4);
  int baseline = 0;
  for (const auto& f : barifit.factors) baseline += !f.is_micro();
  CHECK(baseline == 2);
  CHECK(read_text_file(bf / "barifit.behavior.ini") == find_case_study("barifit").behavior_text);

  const TrialProtocol sara = load_protocol(scaffolded("sara") / "sara.protocol.ini");
  CHECK(sara.factors.size() == 4);
  for (const auto& f : sara.factors) {
    CHECK(f.is_micro());
    for (const auto& p : f.probabilities) CHECK(p == Probability::parse("0.5"));
  }

  const Result nope = run("scaffold nope " + q(scratch_dir("cli_nope")));
  CHECK(nope.status == 1);
  CHECK(nope.output.find("UNKNOWN_CASE_STUDY") != std::string::npos);
}

TEST_CASE("simulate reports delivery rates") {
  const auto dir = scaffolded("heartsteps");
  write_file(dir / "always.behavior.ini", serialize_behavior(no_context(bundled_behavior("heartsteps"))));
  const auto out = scratch_dir("cli_sim_hs");
  const Result r = run("simulate --protocol " + q(dir / "heartsteps.protocol.ini") + " --behavior " +
                       q(dir / "always.behavior.ini") + " --population 100 --seed 3 --out " + q(out));
  REQUIRE(r.status == 0);
  CHECK(std::abs(summary_value(r.output, "activity_suggestions delivered/day") - 3.0) < 0.1);
  CHECK(std::abs(summary_value(r.output, "activity_suggestions seen/day") - 2.0) < 0.1);
  CHECK(fs::exists(out / "rep_000" / kEventsFile));
  CHECK(fs::exists(out / "rep_000" / kOutcomesFile));
  CHECK(fs::exists(out / "summary.txt"));
  CHECK(fs::exists(out / "manifest.json"));
  CHECK(run("verify " + q(out)).status == 0);

  const auto bf = scaffolded("barifit");
  const auto bf_out = scratch_dir("cli_sim_bf");
  const Result b = run("simulate --protocol " + q(bf / "barifit.protocol.ini") + " --behavior " +
                       q(bf / "barifit.behavior.ini") + " --population 30 --seed 5 --out " + q(bf_out));
  REQUIRE(b.status == 0);
  CHECK(std::abs(summary_value(b.output, "total pushes/day") - 2.0) < 0.1);
}

TEST_CASE("simulate rejects bad manifests") {
  const auto dir = scaffolded("sara");
  const auto out = scratch_dir("cli_bad");
  const std::string proto = " --protocol " + q(dir / "sara.protocol.ini") + " --out " + q(out / "x");
  const Result zero = run("simulate" + proto + " --population 0");
  CHECK(zero.status == 1);
  CHECK(zero.output.find("INVALID_ARGUMENT") != std::string::npos);
  CHECK(run("simulate" + proto + " --reps 0").status == 1);
  CHECK(run("simulate --protocol " + q(dir / "none.ini")).status == 2);
  CHECK(run("simulate" + proto + " --behavior " + q(dir / "none.ini")).status == 2);
  CHECK_FALSE(fs::exists(out / "x" / "rep_000"));
}

TEST_CASE("replications, replay and verify") {
  const auto dir = scaffolded("sara");
  const auto out = scratch_dir("cli_reps");
  const Result r = run("simulate --protocol " + q(dir / "sara.protocol.ini") + " --behavior " +
                       q(dir / "sara.behavior.ini") + " --population 10 --seed 9 --reps 3 --jobs 2 --out " + q(out));
  REQUIRE(r.status == 0);
  for (const char* rep : {"rep_000", "rep_001", "rep_002"}) CHECK(fs::exists(out / rep / kEventsFile));
  CHECK(read_text_file(out / "rep_000" / kEventsFile) != read_text_file(out / "rep_001" / kEventsFile));

  const Result replay = run("replay " + q(out));
  CHECK(replay.status == 0);
  CHECK(replay.output.find("rep_002: identical") != std::string::npos);

  // Same manifest again: byte-identical logs.
  const auto again = scratch_dir("cli_reps_again");
  REQUIRE(run("simulate --protocol " + q(dir / "sara.protocol.ini") + " --behavior " +
              q(dir / "sara.behavior.ini") + " --population 10 --seed 9 --reps 3 --out " + q(again)).status == 0);
  for (const char* rep : {"rep_000", "rep_001", "rep_002"})
    CHECK(read_text_file(out / rep / kEventsFile) == read_text_file(again / rep / kEventsFile));

  const Result verify = run("verify " + q(out));
  CHECK(verify.status == 0);
  CHECK(verify.output.find("rep_001: ok") != std::string::npos);

  // Corrupt one probability.
  std::string text = read_text_file(out / "rep_001" / kEventsFile);
  const auto at = text.find("\"probability_used\":\"0.5\"");
  REQUIRE(at != std::string::npos);
  text.replace(at, 24, "\"probability_used\":\"0.4\"");
  write_file(out / "rep_001" / kEventsFile, text);
  const Result bad = run("verify " + q(out / "rep_001"));
  CHECK(bad.status == 1);
  CHECK(bad.output.find("PROBABILITY_MISMATCH") != std::string::npos);
  CHECK(run("replay " + q(out / "rep_001")).status == 1);
  CHECK(run("verify " + q(scratch_dir("cli_empty"))).status == 2);
}

TEST_CASE("output directory defaults to the environment") {
  const auto dir = scaffolded("sara");
  const auto out = scratch_dir("cli_env");
  const Result r = run("simulate --protocol " + q(dir / "sara.protocol.ini") + " --population 2",
                       "MRT_OUT_DIR=" + q(out / "env"));
  CHECK(r.status == 0);
  CHECK(fs::exists(out / "env" / "rep_000" / kEventsFile));
}

TEST_CASE("analyze answers questions and isolates failures") {
  const auto dir = scaffolded("heartsteps");
  const auto out = scratch_dir("cli_analyze");
  REQUIRE(run("simulate --protocol " + q(dir / "heartsteps.protocol.ini") + " --behavior " +
              q(dir / "heartsteps.behavior.ini") + " --population 20 --seed 4 --out " + q(out)).status == 0);
  const Result a = run("analyze " + q(out) + " --replicates 100");
  CHECK(a.status == 0);
  const std::string table = read_text_file(out / "estimates.tsv");
  CHECK(table.find("rep_000\tq1\tprimary\toverall\tactivity_suggestions\twalking+antisedentary vs none") !=
        std::string::npos);
  CHECK(table.find("\tq1a\tprimary\ttime-trend\t") != std::string::npos);
  CHECK(table.find("\tx1\tsecondary\tmoderation\t") != std::string::npos);
  const std::string report = read_text_file(out / "report.txt");
  CHECK(report.find("[primary] q1:") != std::string::npos);
  CHECK(report.find("[secondary] q2:") != std::string::npos);

  write_file(dir / "questions.ini",
             "[question.ghost]\nkind = overall\nfactor = nope\n\n"
             "[question.ok]\nkind = overall\nfactor = activity_suggestions\n");
  const Result g = run("analyze " + q(out) + " --replicates 50 --questions " + q(dir / "questions.ini"));
  CHECK(g.status == 0);
  const std::string t2 = read_text_file(out / "estimates.tsv");
  CHECK(t2.find("\tghost\t") != std::string::npos);
  CHECK(t2.find("UNKNOWN_FACTOR") != std::string::npos);
  CHECK(t2.find("\tok\tprimary\toverall\tactivity_suggestions\t") != std::string::npos);

  CHECK(run("analyze " + q(scratch_dir("cli_nolog"))).status == 2);
}
