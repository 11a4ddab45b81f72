#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "../support/planning_oracle.hpp"
#include "veritas/plan.hpp"

using namespace veritas;
using namespace veritas::plan;

namespace {

std::string data(const std::string& rel) {
  std::ifstream f(std::string(VERITAS_TEST_DATA) + "/" + rel, std::ios::binary);
  REQUIRE(f);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Domain domain(const std::string& name) { return parse_domain(data("fixtures/domains/" + name + ".dom")); }

GroundAction act(const Domain& d, const std::string& name, std::vector<std::string> args) {
  return ground(*find_schema(d.schemas, name), args);
}

std::vector<std::string> names(const Plan& p) {
  std::vector<std::string> out;
  for (const auto& a : p) out.push_back(display(a));
  return out;
}

Atom A(const char* text) { return logic::parse(text).atom(); }

// The drone episode: the bare flight fails, then the recovery plan runs on.
Simulation drone_episode(const Domain& d) {
  auto attempt = simulate_trace({act(d, "Fly", {"Drone1", "Base", "SiteAlpha"})}, d.init);
  REQUIRE(attempt.failure);
  Plan recovery = abduce_policy(d.goal, attempt.final_state, d.schemas, d.ontology);
  return extend_trace(attempt.trace, recovery, attempt.final_state);
}

}  // namespace

TEST_CASE("domain files parse") {
  Domain d = domain("navigation");
  CHECK(d.schemas.size() == 1);
  CHECK(d.init.size() == 2);
  REQUIRE(d.goal.size() == 1);
  CHECK(display(d.goal[0]) == "At(Agent1, LocationB)");
  Domain dr = domain("drone");
  CHECK(dr.ontology.subsumes("Drone", "Vehicle"));
  CHECK_FALSE(dr.ontology.subsumes("Vehicle", "Drone"));

  auto line_of = [](const char* text) {
    try {
      parse_domain(text);
    } catch (const DomainError& e) {
      return e.line();
    }
    return std::size_t{0};
  };
  CHECK(line_of("concept A\nfrobnicate x\n") == 2);
  CHECK(line_of("concept A B\n") == 1);
  CHECK(line_of("concept A\naction X(a:A) pre: P(a) & Q(a)\n") == 2);
  CHECK(line_of("concept A\naction X(a:A) add: P(a) del: P(a)\n") == 2);
  CHECK(line_of("concept A\naction X(a:A) add: P(b)\n") == 2);
  CHECK(line_of("concept A\naction X(a:B)\n") == 2);
  CHECK(line_of("concept A\nentity e : B\n") == 2);
  CHECK(line_of("init: !P\n") == 1);
  CHECK(line_of("# comment\n\nconcept A\n") == 0);
}

TEST_CASE("type_check") {
  Domain d = parse_domain(
      "concept Organism\nconcept Place\nconcept Person Organism\n"
      "entity Vaccine : Organism\nentity Building : Place\nentity Ada : Person\n"
      "action Administer(x:Organism, y:Organism)\n");
  const ActionSchema& s = d.schemas[0];
  auto v = type_check(ground(s, {"Vaccine", "Building"}), s, d.ontology);
  REQUIRE(v);
  CHECK(v->reason.find("Building") != std::string::npos);
  CHECK_FALSE(type_check(ground(s, {"Vaccine", "Vaccine"}), s, d.ontology));
  CHECK_FALSE(type_check(ground(s, {"Vaccine", "Ada"}), s, d.ontology));
  auto untyped = type_check(ground(s, {"Vaccine", "Ghost"}), s, d.ontology);
  REQUIRE(untyped);
  CHECK(untyped->reason == "untyped entity Ghost");

  Domain nav = domain("navigation");
  auto mv = act(nav, "Move", {"Agent1", "LocationA", "LocationB"});
  CHECK_FALSE(type_check(mv, nav.schemas[0], nav.ontology));
  CHECK(type_check(act(nav, "Move", {"LocationA", "Agent1", "LocationB"}), nav.schemas[0], nav.ontology));

  auto gs = groundings(nav.schemas[0], nav.ontology);
  REQUIRE(gs.size() == 4);
  CHECK(display(gs[0]) == "Move(Agent1, LocationA, LocationA)");
  CHECK(display(gs[1]) == "Move(Agent1, LocationA, LocationB)");
  for (const auto& g : gs) CHECK_FALSE(type_check(g, nav.schemas[0], nav.ontology));
}

TEST_CASE("preconditions and effects") {
  Domain room = domain("locked_room");
  auto unlock = act(room, "Unlock", {"Agent2", "Room101"});
  CHECK(preconditions_met(unlock, room.init));
  WorldState after = apply_effects(unlock, room.init);
  CHECK_FALSE(after.contains(A("Locked(Room101)")));
  CHECK(after.contains(A("HasKey(Agent2,Room101)")));

  Domain dr = domain("drone");
  auto fly = act(dr, "Fly", {"Drone1", "Base", "SiteAlpha"});
  CHECK_FALSE(preconditions_met(fly, dr.init));
  CHECK_THROWS_AS(apply_effects(fly, dr.init), PreconditionError);
  REQUIRE(missing_preconditions(fly, dr.init).size() == 1);
  CHECK(display(missing_preconditions(fly, dr.init)[0]) == "¬LowBattery(Drone1)");

  Domain nav = domain("navigation");
  WorldState moved = apply_effects(act(nav, "Move", {"Agent1", "LocationA", "LocationB"}), nav.init);
  CHECK(moved == WorldState{A("At(Agent1,LocationB)"), A("Connected(LocationA,LocationB)")});

  GroundAction noop{"Wait", {}, {}, {}, {}};
  CHECK(preconditions_met(noop, nav.init));
  CHECK(apply_effects(noop, nav.init) == nav.init);
}

TEST_CASE("abduce_policy on the three example domains") {
  Domain nav = domain("navigation");
  CHECK(names(abduce_policy(nav.goal, nav.init, nav.schemas, nav.ontology)) ==
        std::vector<std::string>{"Move(Agent1, LocationA, LocationB)"});
  Domain room = domain("locked_room");
  CHECK(names(abduce_policy(room.goal, room.init, room.schemas, room.ontology)) ==
        std::vector<std::string>{"Unlock(Agent2, Room101)", "Enter(Agent2, Room101)"});
  Domain dr = domain("drone");
  CHECK(names(abduce_policy(dr.goal, dr.init, dr.schemas, dr.ontology)) ==
        std::vector<std::string>{"Recharge(Drone1)", "Fly(Drone1, Base, SiteAlpha)"});
  CHECK(abduce_policy(nav.goal, apply_effects(abduce_policy(nav.goal, nav.init, nav.schemas, nav.ontology)[0], nav.init),
                      nav.schemas, nav.ontology)
            .empty());
}

TEST_CASE("abduce_policy failures carry the subgoal") {
  Domain room = domain("locked_room");
  room.init.erase(A("HasKey(Agent2,Room101)"));
  try {
    abduce_policy(room.goal, room.init, room.schemas, room.ontology);
    FAIL("expected failure");
  } catch (const PlanFailure& e) {
    REQUIRE(e.subgoal().size() == 1);
    CHECK(display(e.subgoal()[0]) == "Inside(Agent2, Room101)");
    CHECK(std::string(e.what()).starts_with("no action sequence achieves"));
  }
  Domain fresh = domain("locked_room");
  try {
    abduce_policy(fresh.goal, fresh.init, fresh.schemas, fresh.ontology, 1);
    FAIL("expected failure");
  } catch (const PlanFailure& e) {
    CHECK(std::string(e.what()).starts_with("depth budget exhausted"));
  }
  CHECK_THROWS_AS(abduce_policy(fresh.goal, fresh.init, fresh.schemas, fresh.ontology, 0), std::invalid_argument);
}

TEST_CASE("golden traces") {
  for (const char* name : {"navigation", "locked_room"}) {
    Domain d = domain(name);
    auto sim = simulate_trace(abduce_policy(d.goal, d.init, d.schemas, d.ontology), d.init);
    CHECK_FALSE(sim.failure);
    CHECK(format_facts(fact_sequence(sim.trace)) == data(std::string("golden/") + name + ".facts"));
    CHECK(serialize_trace(sim.trace) == data(std::string("golden/") + name + ".trace"));
  }
  Domain dr = domain("drone");
  auto sim = drone_episode(dr);
  CHECK_FALSE(sim.failure);
  CHECK(sim.final_state.contains(A("At(Drone1,SiteAlpha)")));
  CHECK(format_facts(fact_sequence(sim.trace)) == data("golden/drone.facts"));
  CHECK(serialize_trace(sim.trace) == data("golden/drone.trace"));
}

TEST_CASE("simulate_trace") {
  Domain nav = domain("navigation");
  auto empty = simulate_trace({}, nav.init);
  CHECK(empty.trace.entries.size() == 1);
  CHECK(empty.trace.entries[0].kind == EntryKind::init);
  CHECK(empty.final_state == nav.init);
  CHECK_FALSE(empty.failure);

  Domain dr = domain("drone");
  auto bare = simulate_trace({act(dr, "Fly", {"Drone1", "Base", "SiteAlpha"})}, dr.init);
  REQUIRE(bare.failure);
  CHECK(bare.failure->step == 0);
  REQUIRE(bare.trace.entries.size() == 2);
  CHECK(bare.trace.entries[1].t == 1);
  CHECK(bare.trace.entries[1].action == "PreconditionFailure(Fly(Drone1, Base, SiteAlpha), ¬LowBattery(Drone1))");
  CHECK(bare.final_state == dr.init);

  CHECK_THROWS_AS(extend_trace(bare.trace, {}, WorldState{}), std::invalid_argument);
}

TEST_CASE("trace round trip and sealing") {
  Domain dr = domain("drone");
  auto sim = drone_episode(dr);
  std::string text = serialize_trace(sim.trace);
  PlanTrace back = parse_trace(text);
  CHECK(back.entries == sim.trace.entries);
  auto states = replay_trace(back);
  CHECK(states.back() == sim.final_state);
  auto again = simulate_trace(plan_of(back, dr.schemas), dr.init);
  CHECK(replay_trace(again.trace).back() == states.back());

  CHECK_THROWS_AS(parse_trace(text + "junk\n"), DomainError);
  std::string spaced = text;
  spaced.replace(spaced.find("pre={"), 5, "pre={ ");
  CHECK_THROWS_AS(parse_trace(spaced), DomainError);

  ledger::Ledger lg = ledger::Ledger::from_text("");
  sim.trace.goal = dr.goal;
  auto i1 = seal_trace(sim.trace, lg, 10);
  auto i2 = seal_trace(sim.trace, lg, 11);
  CHECK(i1 == 0);
  CHECK(i2 == 1);
  CHECK(sim.trace.seal == std::optional<std::uint64_t>(1));
  CHECK(lg.blocks()[0].justification == lg.blocks()[1].justification);
  CHECK(lg.blocks()[0].justification == sha256(text));
  CHECK(lg.blocks()[0].op == ledger::Op::trace_seal);
  CHECK(lg.blocks()[0].formula == "At(Drone1,SiteAlpha)");

  // Any single entry change moves the digest.
  for (std::size_t i = 0; i < sim.trace.entries.size(); ++i) {
    PlanTrace m = sim.trace;
    m.entries[i].action += "X";
    CHECK(trace_digest(m) != trace_digest(sim.trace));
  }

  auto bare = simulate_trace({act(dr, "Fly", {"Drone1", "Base", "SiteAlpha"})}, dr.init);
  bare.trace.goal = dr.goal;
  seal_trace(bare.trace, lg, 12);
  CHECK(lg.blocks().back().formula == "PlanFailure");
  CHECK(ledger::verify_chain(lg.blocks()).ok);
}

TEST_CASE("repair_ontology") {
  Domain d = parse_domain(
      "concept Goal\nconcept Tool\nconcept Gadget\n"
      "entity Hammer : Tool\nentity Widget : Gadget\nentity Target : Goal\n");
  std::vector<std::string> log;
  BlockSink sink = [&](ledger::Op op, const std::string& f, const Digest&) {
    CHECK(op == ledger::Op::meta);
    log.push_back(f);
    return static_cast<std::uint64_t>(log.size() - 1);
  };
  CHECK_THROWS_AS(repair_ontology("Hammer", "Widget", "Tool", d.ontology, sink), OntologyError);
  CHECK(repair_ontology("Hammer", "Widget", "Goal", d.ontology, sink));
  CHECK(d.ontology.subsumes("Gadget", "Goal"));
  CHECK(log == std::vector<std::string>{"Subsumption(Gadget,Goal)"});
  CHECK(repair_ontology("Hammer", "Widget", "Goal", d.ontology, sink) == false);
  CHECK(log.size() == 1);
  CHECK_THROWS_AS(repair_ontology("Widget", "Hammer", "Goal", d.ontology, sink), OntologyError);
  CHECK_THROWS_AS(repair_ontology("Ghost", "Widget", "Goal", d.ontology, sink), OntologyError);
  // Goal -> Gadget would close a cycle with Gadget -> Goal.
  CHECK_THROWS_AS(repair_ontology("Hammer", "Target", "Gadget", d.ontology, sink), OntologyError);
  CHECK(log.size() == 1);
  CHECK_THROWS_AS(d.ontology.add_subsumption("Goal", "Gadget"), OntologyError);
  CHECK_FALSE(d.ontology.add_subsumption("Gadget", "Goal"));
}

TEST_CASE("random domains: sound, typed, and complete against breadth-first search") {
  std::mt19937 rng(2024);
  int solvable = 0;
  for (int i = 0; i < 100; ++i) {
    std::string text = oracle::random_domain(rng);
    CAPTURE(text);
    Domain d = parse_domain(text);
    auto shortest = oracle::bfs_plan_length(d, 8);
    std::optional<Plan> plan;
    try {
      plan = abduce_policy(d.goal, d.init, d.schemas, d.ontology, 8);
    } catch (const PlanFailure&) {
    }
    CHECK(plan.has_value() == shortest.has_value());
    if (!plan) continue;
    ++solvable;
    CHECK(plan->size() <= 8);
    for (const auto& a : *plan) CHECK_FALSE(type_check(a, *find_schema(d.schemas, a.name), d.ontology));
    auto sim = simulate_trace(*plan, d.init);
    CHECK_FALSE(sim.failure);
    CHECK(oracle::satisfied(d.goal, sim.final_state));
    auto back = parse_trace(serialize_trace(sim.trace));
    CHECK(replay_trace(back) == replay_trace(simulate_trace(plan_of(back, d.schemas), d.init).trace));
  }
  CHECK(solvable > 20);
  CHECK(solvable < 100);
}
