#include <istream>
#include <ostream>

#include "veritas/agent.hpp"

namespace veritas::agent {

namespace {

void warn(std::ostream& diag, std::string_view kind, std::string_view subject, std::string_view detail) {
  diag << "EpistemicWarning\t" << kind << '\t' << subject << '\t' << detail << '\n';
}

struct Observation {
  logic::Formula formula;
  double probability;
  std::string source;
};

Observation parse_observation(const std::string& line, std::size_t n) {
  auto a = line.find('\t');
  auto b = a == std::string::npos ? a : line.find('\t', a + 1);
  if (b == std::string::npos || line.find('\t', b + 1) != std::string::npos) {
    throw std::invalid_argument("observation line " + std::to_string(n) + ": expected formula TAB probability TAB source");
  }
  std::string p = line.substr(a + 1, b - a - 1);
  std::size_t used = 0;
  double prob = std::stod(p, &used);
  if (used != p.size()) throw std::invalid_argument("observation line " + std::to_string(n) + ": bad probability");
  return {logic::parse(line.substr(0, a)), prob, line.substr(b + 1)};
}

}  // namespace

int run_loop(Engine& engine, std::istream& observations, const std::optional<plan::Domain>& domain, std::ostream& out,
             std::ostream& diag) {
  bool executed = false;
  std::string line;
  std::size_t n = 0;
  while (std::getline(observations, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    Observation obs = parse_observation(line, n);
    std::string canon = logic::render_canonical(obs.formula);

    try {
      auto r = engine.observe(obs.formula, obs.probability, obs.source);
      out << "observe\t" << canon << '\t' << r.outcome << '\n';
      if (!r.report.lines.empty()) out << guard::format_report(r.report);
    } catch (const belief::ConsistencyError& e) {
      warn(diag, "consistency", canon, e.what());
    }

    std::vector<guard::RecoveryReport> repairs;
    for (const auto& m : engine.audit(true, &repairs)) {
      if (m.action == guard::MetaAction::none) continue;
      warn(diag, "self-evaluation", logic::render_canonical(m.formula),
           std::string(guard::meta_action_name(m.action)) + " (" + m.health + ")");
    }
    for (const auto& r : repairs) out << guard::format_report(r);

    if (!domain || executed || domain->goal.empty()) continue;
    try {
      auto p = engine.plan(domain->goal, *domain);
      if (!p.warnings.empty()) {
        for (const auto& w : p.warnings) {
          auto t1 = w.find('\t'), t2 = w.find('\t', t1 + 1);
          warn(diag, w.substr(0, t1), w.substr(t1 + 1, t2 - t1 - 1), w.substr(t2 + 1));
        }
        continue;
      }
      out << format_trace(p.trace);
      executed = true;
    } catch (const plan::PlanFailure& e) {
      std::string subject;
      for (const auto& l : e.subgoal()) subject += (subject.empty() ? "" : ", ") + plan::display(l);
      warn(diag, "plan", subject, e.what());
    }
  }
  return kOk;
}

}  // namespace veritas::agent
