#include <cctype>
#include <charconv>
#include <sstream>

#include "veritas/agent.hpp"

namespace veritas::agent {

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double number(const std::string& key, const std::string& v) {
  double out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw ConfigError(key + ": not a number: '" + v + "'");
  return out;
}

bool flag(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

const char* const kKeys[] = {"theta",         "tau_risk", "epsilon_max", "delta",  "decay",      "theta_meta",
                             "remainder_cap", "ledger",   "key",         "domain", "fixed_clock"};

void set(EngineConfig& cfg, const std::string& key, const std::string& v) {
  if (key == "theta") {
    cfg.belief.theta = number(key, v);
  } else if (key == "tau_risk") {
    cfg.guard.tau_risk = number(key, v);
  } else if (key == "epsilon_max") {
    cfg.guard.epsilon_max = number(key, v);
  } else if (key == "delta") {
    cfg.guard.delta = number(key, v);
  } else if (key == "decay") {
    cfg.guard.decay = number(key, v);
  } else if (key == "theta_meta") {
    cfg.guard.theta_meta = number(key, v);
  } else if (key == "remainder_cap") {
    double n = number(key, v);
    if (n < 1 || n > 24 || n != static_cast<double>(static_cast<std::size_t>(n))) {
      throw ConfigError("remainder_cap must be an integer in [1,24]");
    }
    cfg.belief.remainder_cap = static_cast<std::size_t>(n);
  } else if (key == "ledger") {
    cfg.ledger_path = v;
  } else if (key == "key") {
    cfg.key_path = v;
  } else if (key == "domain") {
    cfg.domain_path = v;
  } else if (key == "fixed_clock") {
    cfg.fixed_clock = flag(key, v);
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

}  // namespace

void apply_config_text(EngineConfig& cfg, std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(n) + ": expected key=value");
    set(cfg, trim(std::string_view(t).substr(0, eq)), trim(std::string_view(t).substr(eq + 1)));
  }
}

void apply_env(EngineConfig& cfg, const std::function<const char*(const char*)>& getenv) {
  for (const char* key : kKeys) {
    std::string name = "VERITAS_";
    for (const char* c = key; *c; ++c) name += static_cast<char>(std::toupper(static_cast<unsigned char>(*c)));
    if (const char* v = getenv(name.c_str())) set(cfg, key, trim(v));
  }
}

std::vector<std::string> validate(const EngineConfig& cfg) {
  try {
    guard::validate(cfg.guard);
    auto warnings = belief::validate(cfg.belief);
    if (cfg.ledger_path.empty()) throw ConfigError("ledger path is empty");
    return warnings;
  } catch (const std::domain_error& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace veritas::agent
