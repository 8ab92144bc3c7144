#include "ouvol/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <stdexcept>

#include "ouvol/levy.hpp"

namespace ouvol {

namespace {

std::string trim(const std::string& s) {
  std::size_t lo = 0;
  std::size_t hi = s.size();
  while (lo < hi && std::isspace(static_cast<unsigned char>(s[lo]))) ++lo;
  while (hi > lo && std::isspace(static_cast<unsigned char>(s[hi - 1]))) --hi;
  return s.substr(lo, hi - lo);
}

std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

bool valid_key(const std::string& key) {
  if (key.empty()) return false;
  for (char ch : key) {
    if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '_' && ch != '.') return false;
  }
  return true;
}

/// Parses a full double, rejecting trailing garbage.
bool parse_double(const std::string& text, double& out) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last;
}

bool parse_long(const std::string& text, long& out) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last;
}

}  // namespace

CoeffFn AffineCoeff::to_coeff() const {
  const double ca = a;
  const double cb = b;
  return CoeffFn{[ca, cb](double y) { return ca + cb * y; }, [cb](double) { return cb; }};
}

std::string AffineCoeff::format() const {
  if (b == 0.0) return g17(a);
  if (a == 0.0) return g17(b) + "*y";
  if (b > 0.0) return g17(a) + " + " + g17(b) + "*y";
  return g17(a) + " - " + g17(-b) + "*y";
}

AffineCoeff AffineCoeff::parse(const std::string& text) {
  std::string s;
  s.reserve(text.size());
  for (char ch : text) {
    if (!std::isspace(static_cast<unsigned char>(ch))) s.push_back(ch);
  }
  const auto fail = [&]() -> AffineCoeff {
    throw std::invalid_argument("affine coefficient must look like 'a', 'b*y', or 'a + b*y', got '" +
                                text + "'");
  };
  if (s.empty()) return fail();

  std::size_t pos = 0;
  // Leading term: a number, 'y', or '-y'.
  double first = 0.0;
  bool first_is_y = false;
  if (s[0] == 'y') {
    first = 1.0;
    first_is_y = true;
    pos = 1;
  } else if (s.compare(0, 2, "-y") == 0) {
    first = -1.0;
    first_is_y = true;
    pos = 2;
  } else {
    auto res = std::from_chars(s.data(), s.data() + s.size(), first);
    if (res.ec != std::errc()) return fail();
    pos = static_cast<std::size_t>(res.ptr - s.data());
  }

  if (pos == s.size()) {
    return first_is_y ? AffineCoeff{0.0, first} : AffineCoeff{first, 0.0};
  }

  // "b*y" with the number already consumed.
  if (!first_is_y && s.compare(pos, 2, "*y") == 0 && pos + 2 == s.size()) {
    return AffineCoeff{0.0, first};
  }

  // "a + b*y" / "a - b*y" / "a + y" / "a - y".
  if (first_is_y) return fail();
  if (s[pos] != '+' && s[pos] != '-') return fail();
  const double sign = s[pos] == '-' ? -1.0 : 1.0;
  ++pos;
  if (s.compare(pos, 1, "y") == 0 && pos + 1 == s.size()) {
    return AffineCoeff{first, sign};
  }
  double slope = 0.0;
  auto res = std::from_chars(s.data() + pos, s.data() + s.size(), slope);
  if (res.ec != std::errc()) return fail();
  pos = static_cast<std::size_t>(res.ptr - s.data());
  if (s.compare(pos, 2, "*y") != 0 || pos + 2 != s.size()) return fail();
  return AffineCoeff{first, sign * slope};
}

ConfigMap parse_config(const std::string& text, std::vector<ConfigIssue>& issues) {
  ConfigMap map;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      issues.push_back({"<file>", "line " + std::to_string(line_no) + ": expected 'key = value'"});
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (!valid_key(key)) {
      issues.push_back({"<file>", "line " + std::to_string(line_no) + ": bad key '" + key + "'"});
      continue;
    }
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    if (!map.emplace(key, value).second) {
      issues.push_back({key, "duplicate key (first binding kept)"});
    }
  }
  return map;
}

std::string serialize_config(const ConfigMap& map) {
  std::string out;
  for (const auto& [key, value] : map) {
    out += key;
    out += " = ";
    out += value;
    out += '\n';
  }
  return out;
}

namespace {

/// Key-by-key reader that records which keys were consumed so the caller can
/// flag leftovers as unknown.
struct Reader {
  const ConfigMap& map;
  std::vector<ConfigIssue>& issues;
  std::set<std::string> seen;

  const std::string* raw(const std::string& key) {
    auto it = map.find(key);
    if (it == map.end()) return nullptr;
    seen.insert(key);
    return &it->second;
  }

  bool has(const std::string& key) { return raw(key) != nullptr; }

  double num(const std::string& key, double fallback) {
    const std::string* s = raw(key);
    if (!s) return fallback;
    double v = 0.0;
    if (!parse_double(*s, v)) {
      issues.push_back({key, "not a number: '" + *s + "'"});
      return fallback;
    }
    return v;
  }

  double required_num(const std::string& key) {
    if (!map.count(key)) {
      issues.push_back({key, "required key is missing"});
      return 0.0;
    }
    return num(key, 0.0);
  }

  long integer(const std::string& key, long fallback) {
    const std::string* s = raw(key);
    if (!s) return fallback;
    long v = 0;
    if (!parse_long(*s, v)) {
      issues.push_back({key, "not an integer: '" + *s + "'"});
      return fallback;
    }
    return v;
  }

  std::string text(const std::string& key, const std::string& fallback) {
    const std::string* s = raw(key);
    return s ? *s : fallback;
  }

  bool affine(const std::string& key, AffineCoeff& out) {
    const std::string* s = raw(key);
    if (!s) {
      issues.push_back({key, "required key is missing"});
      return false;
    }
    try {
      out = AffineCoeff::parse(*s);
      return true;
    } catch (const std::exception& e) {
      issues.push_back({key, e.what()});
      return false;
    }
  }
};

}  // namespace

RunConfig resolve_config(const ConfigMap& map, std::vector<ConfigIssue>& issues) {
  RunConfig cfg;
  Reader rd{map, issues, {}};

  const std::string* preset = rd.raw("market.preset");
  if (preset) {
    if (*preset == "bns-example") {
      ModelPreset p = bns_example();
      cfg.preset = p.name;
      cfg.market = p.market;
      cfg.ou = p.ou;
    } else if (*preset == "merton-constant") {
      ModelPreset p = merton_constant();
      cfg.preset = p.name;
      cfg.market = p.market;
      cfg.ou = p.ou;
    } else {
      issues.push_back({"market.preset",
                        "unknown preset '" + *preset + "' (have: bns-example, merton-constant)"});
    }
    for (const char* key : {"market.r", "market.mu", "market.sigma2"}) {
      if (rd.has(key)) {
        issues.push_back({key, "conflicts with market.preset; drop the preset to set coefficients"});
      }
    }
    cfg.market.gamma = rd.num("market.gamma", cfg.market.gamma);
    cfg.market.horizon = rd.num("market.T", cfg.market.horizon);
  } else {
    AffineCoeff r, mu, sigma2;
    const bool ok_r = rd.affine("market.r", r);
    const bool ok_mu = rd.affine("market.mu", mu);
    const bool ok_s2 = rd.affine("market.sigma2", sigma2);
    if (ok_r) cfg.market.r = r.to_coeff();
    if (ok_mu) cfg.market.mu = mu.to_coeff();
    if (ok_s2) cfg.market.sigma2 = sigma2.to_coeff();
    cfg.market.gamma = rd.required_num("market.gamma");
    cfg.market.horizon = rd.required_num("market.T");

    // Per-coefficient growth bounds default to the affine coefficients; the
    // bounds on Q and dQ/dy cannot be read off the inputs and are required.
    GrowthConstants& gw = cfg.market.growth;
    gw.A_r = rd.num("growth.A_r", ok_r ? std::max(r.a, 0.0) : 0.0);
    gw.B_r = rd.num("growth.B_r", ok_r ? std::max(r.b, 0.0) : 0.0);
    gw.A_mu = rd.num("growth.A_mu", ok_mu ? std::max(mu.a, 0.0) : 0.0);
    gw.B_mu = rd.num("growth.B_mu", ok_mu ? std::max(mu.b, 0.0) : 0.0);
    gw.A_sigma = rd.num("growth.A_sigma", ok_s2 ? std::max(sigma2.a, 0.0) : 0.0);
    gw.B_sigma = rd.num("growth.B_sigma", ok_s2 ? std::max(sigma2.b, 0.0) : 0.0);
    gw.A = rd.required_num("growth.A");
    gw.B = rd.required_num("growth.B");
    gw.C = rd.required_num("growth.C");
    gw.D = rd.required_num("growth.D");

    const std::string family = rd.text("subordinator.family", "");
    if (family == "null") {
      cfg.ou.subordinator.family = SubordinatorFamily::Null;
      cfg.ou.subordinator.intensity = 0.0;
      cfg.ou.subordinator.jump_rate = 1.0;
    } else if (family == "compound-poisson-exp") {
      cfg.ou.subordinator.family = SubordinatorFamily::CompoundPoissonExp;
      cfg.ou.subordinator.intensity = rd.required_num("subordinator.intensity");
      cfg.ou.subordinator.jump_rate = rd.required_num("subordinator.jump_rate");
    } else {
      issues.push_back({"subordinator.family",
                        "must be 'null' or 'compound-poisson-exp', got '" + family + "'"});
    }
    cfg.ou.lambda = rd.required_num("ou.lambda");
    cfg.ou.y0 = rd.required_num("ou.y0");
  }

  if (preset) {
    // Presets accept dynamics overrides; the sampled growth validation
    // catches combinations that break the preset's stated bounds.
    cfg.ou.lambda = rd.num("ou.lambda", cfg.ou.lambda);
    cfg.ou.y0 = rd.num("ou.y0", cfg.ou.y0);
    const std::string family = rd.text("subordinator.family", "");
    if (family == "null") {
      cfg.ou.subordinator = {SubordinatorFamily::Null, 0.0, 1.0};
    } else if (family == "compound-poisson-exp") {
      cfg.ou.subordinator.family = SubordinatorFamily::CompoundPoissonExp;
    } else if (!family.empty()) {
      issues.push_back({"subordinator.family",
                        "must be 'null' or 'compound-poisson-exp', got '" + family + "'"});
    }
    cfg.ou.subordinator.intensity = rd.num("subordinator.intensity", cfg.ou.subordinator.intensity);
    cfg.ou.subordinator.jump_rate = rd.num("subordinator.jump_rate", cfg.ou.subordinator.jump_rate);
    GrowthConstants& gw = cfg.market.growth;
    gw.A_r = rd.num("growth.A_r", gw.A_r);
    gw.B_r = rd.num("growth.B_r", gw.B_r);
    gw.A_mu = rd.num("growth.A_mu", gw.A_mu);
    gw.B_mu = rd.num("growth.B_mu", gw.B_mu);
    gw.A_sigma = rd.num("growth.A_sigma", gw.A_sigma);
    gw.B_sigma = rd.num("growth.B_sigma", gw.B_sigma);
    gw.A = rd.num("growth.A", gw.A);
    gw.B = rd.num("growth.B", gw.B);
    gw.C = rd.num("growth.C", gw.C);
    gw.D = rd.num("growth.D", gw.D);
  }

  cfg.grid.m_steps = static_cast<int>(rd.integer("grid.M", cfg.grid.m_steps));
  cfg.grid.j_nodes = static_cast<int>(rd.integer("grid.J", cfg.grid.j_nodes));
  cfg.grid.y_max = rd.num("grid.y_max", cfg.grid.y_max);
  cfg.grid.kappa = rd.num("grid.kappa", cfg.grid.kappa);
  cfg.grid.quad_nodes = static_cast<int>(rd.integer("grid.quad_nodes", cfg.grid.quad_nodes));
  cfg.grid.horizon = cfg.market.horizon;

  cfg.mc_paths = rd.integer("mc.n_paths", cfg.mc_paths);
  cfg.seed = static_cast<std::uint64_t>(rd.integer("mc.seed", static_cast<long>(cfg.seed)));
  cfg.mc_substep = rd.num("mc.substep", cfg.mc_substep);
  cfg.sim_steps = static_cast<int>(rd.integer("sim.n_steps", cfg.sim_steps));
  cfg.sim_x0 = rd.num("sim.x0", cfg.sim_x0);
  cfg.alpha_margin = rd.num("market.alpha_margin", cfg.alpha_margin);
  cfg.condition_b_eps = rd.num("subordinator.condition_b_eps", cfg.condition_b_eps);
  cfg.out_dir = rd.text("out.dir", cfg.out_dir);

  for (const auto& [key, value] : map) {
    if (!rd.seen.count(key)) issues.push_back({key, "unknown key"});
  }
  return cfg;
}

std::vector<ConfigIssue> validate_preconditions(const RunConfig& cfg) {
  std::vector<ConfigIssue> out;
  bool model_ok = true;
  try {
    validate(cfg.market);
  } catch (const std::exception& e) {
    out.push_back({"market", e.what()});
    model_ok = false;
  }
  try {
    validate(cfg.ou);
  } catch (const std::exception& e) {
    out.push_back({"ou", e.what()});
    model_ok = false;
  }
  if (cfg.grid.m_steps < 1) out.push_back({"grid.M", "need at least one time step"});
  if (cfg.grid.j_nodes < 2) out.push_back({"grid.J", "need at least two factor nodes"});
  if (!(cfg.grid.y_max > 0.0)) out.push_back({"grid.y_max", "must be positive"});
  if (cfg.grid.quad_nodes < 2 || cfg.grid.quad_nodes > 256) {
    out.push_back({"grid.quad_nodes", "must lie in [2, 256]"});
  }
  if (cfg.mc_paths < 100) out.push_back({"mc.n_paths", "need at least 100 paths"});
  if (cfg.mc_substep < 0.0) out.push_back({"mc.substep", "must be nonnegative"});
  if (cfg.sim_steps < 2) out.push_back({"sim.n_steps", "need at least two steps"});
  if (!(cfg.sim_x0 > 0.0)) out.push_back({"sim.x0", "initial wealth must be positive"});
  if (!(cfg.condition_b_eps > 0.0)) {
    out.push_back({"subordinator.condition_b_eps", "margin must be positive"});
  }
  if (!model_ok || cfg.grid.m_steps < 1 || cfg.grid.j_nodes < 2 || !(cfg.grid.y_max > 0.0)) {
    return out;  // derived checks would read junk
  }

  DerivedConstants dc;
  bool derived_ok = true;
  try {
    dc = derive_constants(cfg.market, cfg.ou, cfg.alpha_margin, cfg.condition_b_eps);
  } catch (const std::exception& e) {
    out.push_back({"subordinator.jump_rate", e.what()});
    derived_ok = false;
  }
  if (derived_ok) {
    const double kappa = cfg.grid.kappa <= 0.0 ? dc.b_dprime + 1.0 : cfg.grid.kappa;
    if (!(kappa > dc.b_dprime)) {
      out.push_back({"grid.kappa", "must exceed the derivative growth rate " + std::to_string(dc.b_dprime)});
    }
    try {
      PideStepper stepper(cfg.market, cfg.ou, cfg.grid, dc.b_prime);
      const double cfl = stepper.cfl_value();
      if (cfl > 0.9) {
        out.push_back({"grid.M", "CFL value " + std::to_string(cfl) +
                                      " exceeds 0.9; increase grid.M or lower grid.J"});
      }
    } catch (const std::exception& e) {
      out.push_back({"grid.M", e.what()});
    }
    const auto violations = validate_growth(cfg.market, 4.0 * cfg.grid.y_max, 10000);
    for (std::size_t i = 0; i < violations.size() && i < 3; ++i) {
      out.push_back({"growth", violations[i].what + " at y = " + std::to_string(violations[i].y)});
    }
    if (violations.size() > 3) {
      out.push_back({"growth", std::to_string(violations.size() - 3) + " further growth violations"});
    }
  }
  return out;
}

}  // namespace ouvol
