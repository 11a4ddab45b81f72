#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include <sys/wait.h>

#include "veritas/agent.hpp"

using namespace veritas;
using namespace veritas::agent;
using logic::parse;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "veritas-agent-XXXXXX").string();
    path = ::mkdtemp(tmpl.data());
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const char* name) const { return (path / name).string(); }
};

EngineConfig config_in(const TempDir& dir) {
  EngineConfig cfg;
  cfg.ledger_path = dir.file("test.vlog");
  cfg.fixed_clock = true;
  return cfg;
}

plan::Domain domain(const char* name) {
  return plan::load_domain(std::string(VERITAS_TEST_DATA) + "/fixtures/domains/" + name + ".dom");
}

std::string replayed(Engine& e) {
  return belief::export_base(ledger::replay(e.ledger().blocks(), std::nullopt, e.store(), e.context().replay));
}

std::vector<std::string> active(const belief::BeliefBase& b) {
  std::vector<std::string> out;
  for (const auto& f : b.active_formulas()) out.push_back(logic::render_canonical(f));
  return out;
}

// Entries without their epochs, which differ between a base and its rollback copy.
std::vector<std::string> content(const belief::BeliefBase& b) {
  std::vector<std::string> out;
  std::istringstream in(belief::export_base(b));
  std::string line;
  while (std::getline(in, line)) out.push_back(line.substr(line.find('\t') + 1));
  return out;
}

struct Cli {
  int status;
  std::string out;
};

Cli run_cli(const std::string& args) {
  std::string cmd = std::string(VERITAS_CLI) + " " + args + " 2>/dev/null";
  FILE* p = ::popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::string out;
  char buf[512];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, p)) out.append(buf, n);
  int rc = ::pclose(p);
  return {WIFEXITED(rc) ? WEXITSTATUS(rc) : -1, out};
}

}  // namespace

TEST_CASE("config text and environment overrides") {
  EngineConfig cfg;
  apply_config_text(cfg, "# thresholds\ntheta = 0.97\n\ntau_risk=0.4\nremainder_cap=8\nledger = a.vlog\nfixed_clock=yes\n");
  CHECK(cfg.belief.theta == 0.97);
  CHECK(cfg.guard.tau_risk == 0.4);
  CHECK(cfg.belief.remainder_cap == 8);
  CHECK(cfg.ledger_path == "a.vlog");
  CHECK(cfg.fixed_clock);
  CHECK(validate(cfg).empty());

  std::map<std::string, std::string> env{{"VERITAS_DELTA", "0.25"}, {"VERITAS_LEDGER", "b.vlog"}};
  apply_env(cfg, [&](const char* k) -> const char* {
    auto it = env.find(k);
    return it == env.end() ? nullptr : it->second.c_str();
  });
  CHECK(cfg.guard.delta == 0.25);
  CHECK(cfg.ledger_path == "b.vlog");
  CHECK(cfg.belief.theta == 0.97);

  CHECK_THROWS_AS(apply_config_text(cfg, "colour=blue"), ConfigError);
  CHECK_THROWS_AS(apply_config_text(cfg, "theta=high"), ConfigError);
  CHECK_THROWS_AS(apply_config_text(cfg, "theta"), ConfigError);
  CHECK_THROWS_AS(apply_config_text(cfg, "remainder_cap=0"), ConfigError);
  CHECK_THROWS_AS(apply_config_text(cfg, "remainder_cap=2.5"), ConfigError);
  CHECK_THROWS_AS(apply_config_text(cfg, "fixed_clock=maybe"), ConfigError);

  EngineConfig bad;
  bad.belief.theta = 1.5;
  CHECK_THROWS_AS(validate(bad), ConfigError);
  bad = {};
  bad.ledger_path = "";
  CHECK_THROWS_AS(validate(bad), ConfigError);
  // Default theta sits on the edge of the recommended interval.
  CHECK(validate(EngineConfig{}).size() == 1);
}

TEST_CASE("session start writes one meta block and reopening replays") {
  TempDir dir;
  std::string exported;
  {
    Engine e(config_in(dir));
    CHECK(e.ledger().size() == 1);
    CHECK(e.ledger().blocks()[0].op == ledger::Op::meta);
    e.observe(parse("p"), 0.99, "s1");
    e.observe(parse("p -> q"), 0.99, "s1");
    exported = belief::export_base(e.base());
    CHECK_THROWS_AS(Engine{config_in(dir)}, ledger::LedgerError);
  }
  Engine again(config_in(dir));
  CHECK(again.ledger().size() == 3);
  CHECK(belief::export_base(again.base()) == exported);
}

TEST_CASE("modus ponens session") {
  TempDir dir;
  Engine e(config_in(dir));
  CHECK(e.observe(parse("p"), 0.99, "s1").outcome == "admitted");
  CHECK(e.observe(parse("p -> q"), 0.99, "s1").outcome == "admitted");

  auto q = e.query(parse("q"));
  CHECK(q.entailed);
  REQUIRE(q.probability);
  CHECK(*q.probability == 0.99);
  CHECK(format_query(parse("q"), q) == "entailed\tq\tprobability=0.99\ttier=5:Committed\tstate=Committed");
  CHECK_FALSE(e.query(parse("r")).entailed);
  CHECK(format_query(parse("r"), e.query(parse("r"))) == "not-entailed\tr");

  auto chain = e.justify(parse("q"));
  REQUIRE(chain.size() == 3);
  CHECK(chain.back().rule == justify::rules::deduction);
  CHECK(chain.back().premises.size() == 2);
  CHECK(e.base().find(parse("q")) != nullptr);
  std::size_t size = e.ledger().size();
  CHECK_FALSE(e.derive(parse("q")));
  CHECK(e.ledger().size() == size);
  CHECK_THROWS_AS(e.derive(parse("r")), justify::JustifyError);
  CHECK(replayed(e) == belief::export_base(e.base()));
}

TEST_CASE("refused observations write nothing") {
  TempDir dir;
  Engine e(config_in(dir));
  std::size_t size = e.ledger().size();
  CHECK_THROWS_AS(e.observe(parse("p & !p"), 0.99, "s1"), belief::ConsistencyError);
  CHECK_THROWS_AS(e.observe(parse("p"), 0.99, "s1", 0.2), GateRefusal);
  CHECK_THROWS_AS(e.observe(parse("p"), 1.5, "s1"), std::exception);
  CHECK_THROWS_AS(e.observe(parse("p"), 0.99, "not an id"), std::exception);
  CHECK(e.ledger().size() == size);
  CHECK(e.observe(parse("p"), 0.99, "s1", 0.05).outcome == "admitted");
  CHECK(e.store().get(*e.base().find(parse("p"))->justification)->rule == justify::rules::approximate);
  CHECK(e.observe(parse("r"), 0.5, "s1").outcome == "stored-non-assertable");
}

TEST_CASE("public proofs anchor in the ledger") {
  TempDir dir;
  Engine e(config_in(dir));
  e.observe(parse("a"), 0.99, "s1");
  e.observe(parse("a -> b"), 0.99, "s1");
  auto proof = e.prove(parse("b"));
  CHECK(e.ledger().anchors(proof.digest));
  std::string text = justify::serialize_proof(proof);
  CHECK(e.verify_proof(text).accepted());
  CHECK(e.verify_proof("garbage").status == justify::ProofStatus::malformed);
  std::size_t size = e.ledger().size();
  e.prove(parse("b"));
  CHECK(e.ledger().size() == size);

  TempDir other;
  Engine fresh(config_in(other));
  CHECK(fresh.verify_proof(text).status == justify::ProofStatus::not_anchored);
}

TEST_CASE("contradictory observation stream resolves") {
  TempDir dir;
  Engine e(config_in(dir));
  std::istringstream in("p\t0.99\ts1\n!p\t0.99\ts1\n");
  std::ostringstream out, diag;
  CHECK(run_loop(e, in, std::nullopt, out, diag) == kOk);
  CHECK(out.str().find("observe\t(! p)\trevised") != std::string::npos);
  CHECK(out.str().find("retracted (dominated by (! p))") != std::string::npos);
  CHECK(logic::is_consistent(e.base().active_formulas()));
  CHECK(active(e.base()) == std::vector<std::string>{"(! p)"});
  bool recovery = false;
  for (const auto& b : e.ledger().blocks()) recovery = recovery || b.op == ledger::Op::recovery;
  CHECK(recovery);
  CHECK(replayed(e) == belief::export_base(e.base()));
}

TEST_CASE("empty stream leaves only the session block") {
  TempDir dir;
  Engine e(config_in(dir));
  std::istringstream in("");
  std::ostringstream out, diag;
  CHECK(run_loop(e, in, domain("navigation"), out, diag) == kOk);
  CHECK(e.ledger().size() == 1);
  CHECK(out.str().empty());
  CHECK(diag.str().empty());
}

TEST_CASE("navigation session executes Move") {
  TempDir dir;
  Engine e(config_in(dir));
  std::istringstream in("At(Agent1,LocationA)\t0.99\tcamera\nConnected(LocationA,LocationB)\t0.99\tmap\n");
  std::ostringstream out, diag;
  CHECK(run_loop(e, in, domain("navigation"), out, diag) == kOk);
  CHECK(diag.str().empty());
  CHECK(out.str().find("t1\tMove(Agent1, LocationA, LocationB)\t") != std::string::npos);
  CHECK(out.str().find("Happens(Move(Agent1, LocationA, LocationB), t0)") != std::string::npos);
  // Session meta, two inserts, sweeps, and the seal.
  CHECK(e.ledger().size() >= 4);
  std::vector<std::string> seals;
  for (const auto& b : e.ledger().blocks()) {
    if (b.op == ledger::Op::trace_seal) seals.push_back(b.formula);
  }
  CHECK(seals == std::vector<std::string>{"At(Agent1,LocationB)"});
  CHECK(replayed(e) == belief::export_base(e.base()));
}

TEST_CASE("loop reports plan failures and bad lines") {
  TempDir dir;
  Engine e(config_in(dir));
  std::istringstream in("!Connected(LocationA,LocationB)\t0.99\tmap\n");
  std::ostringstream out, diag;
  CHECK(run_loop(e, in, domain("navigation"), out, diag) == kOk);
  CHECK(diag.str().find("EpistemicWarning\tplan\tAt(Agent1, LocationB)\t") == 0);

  std::istringstream bad("p 0.9 s1\n");
  CHECK_THROWS_AS(run_loop(e, bad, std::nullopt, out, diag), std::invalid_argument);
}

TEST_CASE("plan safety gate refuses weakly believed preconditions") {
  TempDir dir;
  Engine e(config_in(dir));
  e.observe(parse("Connected(LocationA,LocationB)"), 0.9, "map");
  std::size_t size = e.ledger().size();
  auto r = e.plan(plan::parse_literals("At(Agent1,LocationB)"), domain("navigation"));
  REQUIRE(r.warnings.size() == 1);
  CHECK(r.warnings[0].rfind("risk\tConnected(LocationA,LocationB)\t", 0) == 0);
  CHECK(e.ledger().size() == size);

  e.observe(parse("Connected(LocationA,LocationB)"), 0.99, "map");
  r = e.plan(plan::parse_literals("At(Agent1,LocationB)"), domain("navigation"));
  CHECK(r.warnings.empty());
  CHECK(r.trace.seal.has_value());
}

TEST_CASE("world state follows the base") {
  TempDir dir;
  Engine e(config_in(dir));
  auto d = domain("navigation");
  e.observe(parse("!At(Agent1,LocationA)"), 0.99, "camera");
  e.observe(parse("At(Agent1,LocationB)"), 0.99, "camera");
  auto s = e.world_state(d);
  CHECK(s.count(logic::Atom{"At", {"Agent1", "LocationB"}}) == 1);
  CHECK(s.count(logic::Atom{"At", {"Agent1", "LocationA"}}) == 0);
  CHECK(e.plan(d.goal, d).plan.empty());
}

TEST_CASE("injected policies") {
  TempDir dir;
  Engine e(config_in(dir));

  SUBCASE("a valid policy is simulated and sealed") {
    auto p = parse_policy("policy Go\nstep Move(Agent1,LocationA,LocationB)\n");
    auto r = e.inject_policy(p, domain("navigation"));
    CHECK_FALSE(r.escalated);
    REQUIRE(r.trace);
    CHECK(r.trace->seal.has_value());
    CHECK(e.ledger().blocks().back().op == ledger::Op::trace_seal);
  }
  SUBCASE("a utility gap without alternatives escalates") {
    auto p = parse_policy("policy Risky\nexpected 0.9\nactual 0.2\n");
    auto r = e.inject_policy(p, domain("navigation"));
    CHECK(r.escalated);
    CHECK_FALSE(r.trace);
    CHECK(e.ledger().blocks().back().op == ledger::Op::recovery);
    CHECK(e.ledger().blocks().back().formula == "Escalated(Risky)");
  }
  SUBCASE("a utility gap selects a coherent alternative") {
    auto p = parse_policy("policy Risky\nexpected 0.9\nactual 0.2\nalternative Safe 0.7 0.65\nalternative Wild 0.9 0.1\n");
    auto r = e.inject_policy(p, domain("navigation"));
    CHECK_FALSE(r.escalated);
    CHECK(r.report.selected_policy == std::optional<std::string>("Safe"));
  }
  SUBCASE("a failing step is sealed, then replanned") {
    auto p = parse_policy("policy Direct\nstep Fly(Drone1,Base,SiteAlpha)\n");
    auto r = e.inject_policy(p, domain("drone"));
    CHECK_FALSE(r.escalated);
    CHECK(r.report.selected_policy == std::optional<std::string>("Replan"));
    REQUIRE(r.trace);
    std::ifstream golden(std::string(VERITAS_TEST_DATA) + "/golden/drone.trace");
    std::stringstream g;
    g << golden.rdbuf();
    CHECK(plan::serialize_trace(*r.trace) == g.str());
    std::size_t seals = 0;
    for (const auto& b : e.ledger().blocks()) seals += b.op == ledger::Op::trace_seal;
    CHECK(seals == 2);
  }
  SUBCASE("bad policies") {
    CHECK_THROWS_AS(parse_policy("step X\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_policy("policy P\nwhatever 1\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_policy("policy P\nexpected lots\n"), std::invalid_argument);
    CHECK_THROWS_AS(e.inject_policy(parse_policy("policy P\nstep Teleport(Agent1)\n"), domain("navigation")),
                    plan::PlanFailure);
    CHECK_THROWS_AS(e.inject_policy(parse_policy("policy P\nstep Move(LocationA,Agent1,LocationB)\n"),
                                    domain("navigation")),
                    plan::PlanFailure);
  }
  CHECK(replayed(e) == belief::export_base(e.base()));
}

TEST_CASE("rollback appends and restores") {
  TempDir dir;
  Engine e(config_in(dir));
  e.observe(parse("p"), 0.99, "s1");
  e.observe(parse("p -> q"), 0.99, "s1");
  auto mark = e.ledger().size() - 1;
  auto at_mark = content(ledger::replay(e.ledger().blocks(), mark, e.store(), e.context().replay));
  e.observe(parse("!p"), 0.99, "s2");
  e.observe(parse("r"), 0.99, "s2");

  std::size_t before = e.ledger().size();
  e.rollback(mark);
  CHECK(e.ledger().size() > before);
  CHECK(content(e.base()) == at_mark);
  CHECK(replayed(e) == belief::export_base(e.base()));

  before = e.ledger().size();
  e.rollback(0);
  CHECK(belief::export_base(e.base()).empty());
  CHECK(e.ledger().size() > before);
  CHECK(replayed(e) == belief::export_base(e.base()));
  CHECK_THROWS_AS(e.rollback(e.ledger().size() + 5), std::out_of_range);
}

TEST_CASE("replay matches the live base after every command") {
  TempDir dir;
  Engine e(config_in(dir));
  std::mt19937 rng(77);
  const char* atoms[] = {"a", "b", "c"};
  auto lit = [&] { return std::string(rng() % 2 == 0 ? "!" : "") + atoms[rng() % 3]; };
  const double probs[] = {0.5, 0.96, 0.99, 0.99, 1.0};
  std::size_t rollbacks = 0, revisions = 0;  // revisions counts both Protocol I outcomes
  for (int step = 0; step < 80; ++step) {
    INFO("step " << step);
    switch (rng() % 6) {
      case 0:
      case 1:
      case 2: {
        std::string text = rng() % 3 == 0 ? lit() + " -> " + lit() : lit();
        auto f = parse(text);
        if (!logic::is_satisfiable(f)) break;
        auto r = e.observe(f, probs[rng() % 5], rng() % 2 ? "s1" : "s2");
        revisions += r.outcome == "revised" || r.outcome == "rejected";
        break;
      }
      case 3: {
        auto f = parse(lit());
        if (e.base().holds(f) && !e.base().find(f)) e.derive(f);
        break;
      }
      case 4:
        e.audit(true);
        break;
      case 5:
        e.rollback(rng() % e.ledger().size());
        ++rollbacks;
        break;
    }
    REQUIRE(replayed(e) == belief::export_base(e.base()));
    CHECK(logic::is_consistent(e.base().active_formulas()));
  }
  CHECK(rollbacks > 3);
  CHECK(revisions > 0);
}

TEST_CASE("tampered ledger is refused at the first bad block") {
  TempDir dir;
  auto cfg = config_in(dir);
  {
    Engine e(cfg);
    for (const char* f : {"p", "q", "r", "s"}) e.observe(parse(f), 0.99, "s1");
  }
  std::string text;
  {
    std::ifstream f(cfg.ledger_path, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    text = ss.str();
  }
  auto pos = text.find("\x1finsert\x1fr\x1f");
  REQUIRE(pos != std::string::npos);
  text[pos + 8] = 't';
  std::ofstream(cfg.ledger_path, std::ios::binary | std::ios::trunc) << text;

  try {
    Engine e(cfg);
    FAIL("opened a tampered ledger");
  } catch (const ledger::CorruptLedger& err) {
    CHECK(err.index() == 3);
  }

  auto v = run_cli("--ledger " + cfg.ledger_path + " ledger verify");
  CHECK(v.status == kLedgerCorrupt);
  CHECK(v.out.rfind("corrupt\t3\t", 0) == 0);
}

TEST_CASE("command line surface") {
  TempDir dir;
  std::string base = "--fixed-clock --ledger " + dir.file("cli.vlog") + " ";
  CHECK(run_cli(base + "observe p --p 0.99 --source s1").out == "admitted\n");
  CHECK(run_cli(base + "observe 'p -> q' --p 0.99 --source s1").status == kOk);
  auto q = run_cli(base + "query q");
  CHECK(q.out.rfind("entailed\tq\t", 0) == 0);
  CHECK(run_cli(base + "observe 'p & !p' --p 0.99").status == kConsistency);
  CHECK(run_cli(base + "observe p").status == kUsage);
  CHECK(run_cli(base + "bogus").status == kUsage);

  std::string proof = dir.file("q.proof");
  CHECK(run_cli(base + "prove q --out " + proof).status == kOk);
  CHECK(run_cli(base + "verify-proof " + proof).out == "accept\n");

  auto verify = run_cli(base + "ledger verify");
  CHECK(verify.status == kOk);
  CHECK(verify.out.rfind("ok\t5\troot=", 0) == 0);

  std::string dom = std::string(VERITAS_TEST_DATA) + "/fixtures/domains/";
  auto planned = run_cli(base + "plan --domain " + dom + "navigation.dom");
  CHECK(planned.status == kOk);
  CHECK(planned.out.rfind("plan\tMove(Agent1, LocationA, LocationB)\n", 0) == 0);
  CHECK(run_cli(base + "plan --domain " + dom + "locked_room.dom --goal 'Inside(Agent1,Room202)'").status ==
        kPlanFailure);
  CHECK(run_cli(base + "plan --domain " + dom + "navigation.dom --goal 'At(Agent1,LocationC)'").status ==
        kPlanFailure);

  std::string policy = dir.file("risky.policy");
  std::ofstream(policy) << "policy Risky\nexpected 0.9\nactual 0.1\n";
  CHECK(run_cli(base + "inject-policy " + policy + " --domain " + dom + "navigation.dom").status == kEscalation);

  CHECK(run_cli(base + "rollback --to 0").out.empty());
  CHECK(run_cli(base + "query p").out == "not-entailed\tp\n");
  CHECK(run_cli(base + "ledger replay --to 2").out.find("(p -> q)") != std::string::npos);
}
