#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "veritas/agent.hpp"

namespace {

using namespace veritas;
using agent::ExitCode;

std::string read_file(const std::string& path) {
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int fail(std::string_view kind, const std::string& msg, int code) {
  std::cerr << "error\t" << kind << '\t' << msg << '\n';
  return code;
}

struct Options {
  std::string config_path;
  std::string ledger_path;
  bool fixed_clock = false;

  std::string formula;
  double p = 1.0;
  std::string source = "user";
  std::optional<double> epsilon;
  std::string out_path;
  std::string file;
  std::string goal;
  std::string domain_path;
  std::uint64_t to = 0;
  bool repair = false;
  std::string observations = "-";
};

agent::EngineConfig load_config(const Options& o) {
  agent::EngineConfig cfg;
  if (!o.config_path.empty()) agent::apply_config_text(cfg, read_file(o.config_path));
  agent::apply_env(cfg, [](const char* name) { return std::getenv(name); });
  if (!o.ledger_path.empty()) cfg.ledger_path = o.ledger_path;
  if (o.fixed_clock) cfg.fixed_clock = true;
  if (!o.domain_path.empty()) cfg.domain_path = o.domain_path;
  for (const auto& w : agent::validate(cfg)) std::cerr << "warning\tconfig\t" << w << '\n';
  return cfg;
}

plan::Domain domain_of(const agent::EngineConfig& cfg) {
  if (cfg.domain_path.empty()) throw std::invalid_argument("no planning domain (use --domain or domain=)");
  return plan::load_domain(cfg.domain_path);
}

void print_plan(const plan::Plan& p) {
  for (const auto& a : p) std::cout << "plan\t" << plan::display(a) << '\n';
}

int cmd_observe(agent::Engine& e, const Options& o) {
  auto r = e.observe(logic::parse(o.formula), o.p, o.source, o.epsilon);
  std::cout << r.outcome << '\n';
  if (!r.report.lines.empty()) std::cout << guard::format_report(r.report);
  return agent::kOk;
}

int cmd_justify(agent::Engine& e, const Options& o) {
  auto chain = e.justify(logic::parse(o.formula));
  for (const auto& n : chain) {
    std::cout << to_hex(n.id) << '\t' << n.rule << '\t' << logic::render_canonical(n.conclusion) << '\t'
              << n.provenance.source << '\t' << belief::format_probability(n.provenance.confidence);
    for (const auto& p : n.premises) std::cout << '\t' << to_hex(p);
    std::cout << '\n';
  }
  std::cout << "digest\t" << to_hex(justify::hash_chain(chain)) << '\n';
  return agent::kOk;
}

int cmd_prove(agent::Engine& e, const Options& o) {
  auto proof = e.prove(logic::parse(o.formula));
  std::string text = justify::serialize_proof(proof);
  if (o.out_path.empty() || o.out_path == "-") {
    std::cout << text;
  } else {
    std::ofstream(o.out_path, std::ios::binary) << text;
    std::cout << "digest\t" << to_hex(proof.digest) << '\n';
  }
  return agent::kOk;
}

int cmd_verify_proof(agent::Engine& e, const Options& o) {
  auto v = e.verify_proof(read_file(o.file));
  std::cout << justify::proof_status_name(v.status);
  if (v.step) std::cout << "\tstep " << *v.step;
  if (!v.detail.empty()) std::cout << '\t' << v.detail;
  std::cout << '\n';
  return v.accepted() ? agent::kOk : agent::kConsistency;
}

int cmd_plan(agent::Engine& e, const Options& o) {
  plan::Domain d = domain_of(e.config());
  auto goal = o.goal.empty() ? d.goal : plan::parse_literals(o.goal);
  auto r = e.plan(goal, d);
  if (!r.warnings.empty()) {
    for (const auto& w : r.warnings) std::cerr << "EpistemicWarning\t" << w << '\n';
    return agent::kConsistency;
  }
  print_plan(r.plan);
  std::cout << agent::format_trace(r.trace);
  return agent::kOk;
}

int cmd_inject(agent::Engine& e, const Options& o) {
  plan::Domain d = domain_of(e.config());
  auto r = e.inject_policy(agent::parse_policy(read_file(o.file)), d);
  if (!r.report.lines.empty()) std::cout << guard::format_report(r.report);
  if (r.trace) std::cout << agent::format_trace(*r.trace);
  return r.escalated ? agent::kEscalation : agent::kOk;
}

int cmd_audit(agent::Engine& e, const Options& o) {
  std::vector<guard::RecoveryReport> reports;
  auto log = e.audit(o.repair, &reports);
  std::cout << guard::format_meta_log(log);
  for (const auto& r : reports) std::cout << guard::format_report(r);
  return agent::kOk;
}

int cmd_run(agent::Engine& e, const Options& o) {
  std::optional<plan::Domain> d;
  if (!e.config().domain_path.empty()) d = domain_of(e.config());
  if (o.observations == "-") return agent::run_loop(e, std::cin, d, std::cout, std::cerr);
  std::ifstream in(o.observations);
  if (!in) throw std::runtime_error("cannot read " + o.observations);
  return agent::run_loop(e, in, d, std::cout, std::cerr);
}

// Verification reads the raw file so that a corrupt ledger is reported, not refused.
int cmd_ledger_verify(const agent::EngineConfig& cfg) {
  std::string text = read_file(cfg.ledger_path);
  auto r = ledger::verify_text(text);
  if (!r.ok) {
    std::cout << "corrupt\t" << *r.first_bad << '\t' << r.reason << '\n';
    return agent::kLedgerCorrupt;
  }
  auto l = ledger::Ledger::from_text(text);
  std::cout << "ok\t" << l.size() << "\troot=" << to_hex(ledger::merkle_root(l.blocks())) << '\n';
  return agent::kOk;
}

int cmd_ledger_replay(agent::Engine& e, const Options& o) {
  auto base = ledger::replay(e.ledger().blocks(), o.to, e.store(), e.context().replay);
  std::cout << belief::export_base(base);
  return agent::kOk;
}

int cmd_attest(agent::Engine& e, const Options& o) {
  if (e.config().key_path.empty()) throw std::invalid_argument("no signing key (use key= in the config)");
  std::string hex = read_file(e.config().key_path);
  while (!hex.empty() && (hex.back() == '\n' || hex.back() == '\r' || hex.back() == ' ')) hex.pop_back();
  auto seed = digest_from_hex(hex);
  if (!seed) throw std::invalid_argument("key file must hold a 64-digit lowercase hex seed");
  auto kp = ed25519::keypair_from_seed(*seed);
  std::string canon = logic::render_canonical(logic::parse(o.formula));
  auto rec = ledger::sign_truth_record(e.ledger().blocks(), canon, e.now(), kp.secret_key);
  std::cout << "formula\t" << rec.formula << "\ntimestamp\t" << rec.timestamp << "\nsignature\t"
            << to_hex(std::span<const std::uint8_t>(rec.signature)) << "\npublic_key\t"
            << to_hex(std::span<const std::uint8_t>(kp.public_key)) << "\nroot\t" << to_hex(rec.inclusion.root) << '\n';
  auto verdict = ledger::verify_truth_record(rec, kp.public_key, ledger::merkle_root(e.ledger().blocks()));
  std::cout << "verdict\t" << ledger::truth_verdict_name(verdict) << '\n';
  return agent::kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Belief-base engine with a hash-chained ledger and an abductive planner"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--config", o.config_path, "key=value config file");
  app.add_option("--ledger", o.ledger_path, "ledger file (default veritas.vlog)");
  app.add_flag("--fixed-clock", o.fixed_clock, "timestamps are block indices");

  auto* observe = app.add_subcommand("observe", "submit an observation");
  observe->add_option("formula", o.formula)->required();
  observe->add_option("--p", o.p, "probability")->required()->check(CLI::Range(0.0, 1.0));
  observe->add_option("--source", o.source, "source identifier");
  observe->add_option("--epsilon", o.epsilon, "approximation divergence");

  auto* query = app.add_subcommand("query", "entailment, probability, tier and four-state value");
  query->add_option("formula", o.formula)->required();

  auto* justify_cmd = app.add_subcommand("justify", "print the justification chain and its digest");
  justify_cmd->add_option("formula", o.formula)->required();

  auto* prove = app.add_subcommand("prove", "write a public proof and anchor it");
  prove->add_option("formula", o.formula)->required();
  prove->add_option("--out", o.out_path, "proof file (default stdout)");

  auto* verify = app.add_subcommand("verify-proof", "check a public proof against the ledger");
  verify->add_option("file", o.file)->required();

  auto* plan_cmd = app.add_subcommand("plan", "plan for a goal, simulate and seal the trace");
  plan_cmd->add_option("--goal", o.goal, "comma-separated literals (default: domain goal)");
  plan_cmd->add_option("--domain", o.domain_path, "domain file");

  auto* inject = app.add_subcommand("inject-policy", "gate and simulate a policy file");
  inject->add_option("file", o.file)->required();
  inject->add_option("--domain", o.domain_path, "domain file");

  auto* ledger_cmd = app.add_subcommand("ledger", "ledger maintenance");
  ledger_cmd->require_subcommand(1);
  auto* lverify = ledger_cmd->add_subcommand("verify", "verify the hash chain");
  auto* lreplay = ledger_cmd->add_subcommand("replay", "print the base after block n");
  lreplay->add_option("--to", o.to)->required();

  auto* rollback = app.add_subcommand("rollback", "append blocks restoring the base after block n");
  rollback->add_option("--to", o.to)->required();

  auto* audit = app.add_subcommand("audit", "self-evaluation sweep");
  audit->add_flag("--repair", o.repair, "rederive entries marked reevaluate");

  auto* run = app.add_subcommand("run", "main loop over an observation stream");
  run->add_option("--observations", o.observations, "file of formula TAB probability TAB source lines (- for stdin)");
  run->add_option("--domain", o.domain_path, "domain file");

  auto* attest = app.add_subcommand("attest", "sign a ledgered formula with the configured key");
  attest->add_option("formula", o.formula)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : agent::kUsage;
  }

  try {
    agent::EngineConfig cfg = load_config(o);
    if (lverify->parsed()) return cmd_ledger_verify(cfg);

    agent::Engine engine(cfg);
    if (observe->parsed()) return cmd_observe(engine, o);
    if (query->parsed()) {
      auto f = logic::parse(o.formula);
      std::cout << agent::format_query(f, engine.query(f)) << '\n';
      return agent::kOk;
    }
    if (justify_cmd->parsed()) return cmd_justify(engine, o);
    if (prove->parsed()) return cmd_prove(engine, o);
    if (verify->parsed()) return cmd_verify_proof(engine, o);
    if (plan_cmd->parsed()) return cmd_plan(engine, o);
    if (inject->parsed()) return cmd_inject(engine, o);
    if (lreplay->parsed()) return cmd_ledger_replay(engine, o);
    if (rollback->parsed()) {
      engine.rollback(o.to);
      std::cout << belief::export_base(engine.base());
      return agent::kOk;
    }
    if (audit->parsed()) return cmd_audit(engine, o);
    if (run->parsed()) return cmd_run(engine, o);
    if (attest->parsed()) return cmd_attest(engine, o);
    return agent::kUsage;
  } catch (const agent::ConfigError& e) {
    return fail("config", e.what(), agent::kUsage);
  } catch (const ledger::CorruptLedger& e) {
    std::cerr << "corrupt\t" << e.index() << '\n';
    return fail("ledger", e.what(), agent::kLedgerCorrupt);
  } catch (const ledger::LedgerError& e) {
    return fail("ledger", e.what(), agent::kLedgerCorrupt);
  } catch (const belief::ConsistencyError& e) {
    return fail("consistency", e.what(), agent::kConsistency);
  } catch (const agent::GateRefusal& e) {
    return fail("gate", e.what(), agent::kConsistency);
  } catch (const plan::PlanFailure& e) {
    return fail("plan", e.what(), agent::kPlanFailure);
  } catch (const plan::DomainError& e) {
    return fail("domain", e.what(), agent::kUsage);
  } catch (const justify::JustifyError& e) {
    return fail("justify", e.what(), agent::kConsistency);
  } catch (const logic::ParseError& e) {
    return fail("parse", e.what(), agent::kUsage);
  } catch (const std::out_of_range& e) {
    return fail("range", e.what(), agent::kUsage);
  } catch (const std::exception& e) {
    return fail("usage", e.what(), agent::kUsage);
  }
}
