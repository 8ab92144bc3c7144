#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ouvol/market.hpp"
#include "ouvol/pide.hpp"

namespace ouvol {

/**
 * Affine coefficient a + b*y, the only coefficient family expressible in a
 * config file.  Arbitrary coefficient callables remain available through the
 * library API.
 */
struct AffineCoeff {
  double a = 0.0;
  double b = 0.0;

  CoeffFn to_coeff() const;

  /// Canonical text form: "a", "b*y", or "a + b*y" / "a - b*y".
  std::string format() const;

  /// Accepts the same forms as format() plus "y" and "-y".  Whitespace is
  /// ignored.  Throws std::invalid_argument on anything else.
  static AffineCoeff parse(const std::string& text);
};

/// Flat key = value store; std::map keeps serialization canonically sorted.
using ConfigMap = std::map<std::string, std::string>;

/// A problem found while parsing or validating, tagged with the config key
/// that caused it ("<file>" for line-level syntax errors).
struct ConfigIssue {
  std::string key;
  std::string message;
};

/**
 * Parses the flat key=value grammar: one binding per line, '#' starts a
 * comment, blank lines are skipped, values may be wrapped in double quotes.
 * Duplicate keys are reported as issues; the first binding wins.
 */
ConfigMap parse_config(const std::string& text, std::vector<ConfigIssue>& issues);

/// Canonical form: sorted keys, one "key = value" per line.  Parsing the
/// result reproduces the map exactly.
std::string serialize_config(const ConfigMap& map);

/**
 * Fully resolved run description.  Either a named preset (with optional
 * overrides) or an explicit affine model.  The growth constants for Q and
 * its derivative (growth.A/B/C/D) must be supplied with explicit models;
 * the per-coefficient bounds default to the affine coefficients themselves.
 */
struct RunConfig {
  std::string preset;  // empty when the model was given explicitly
  MarketModel market;
  OuParams ou;
  SolverGrid grid;
  long mc_paths = 20000;       // mc.n_paths
  std::uint64_t seed = 1;      // mc.seed
  double mc_substep = 0.0;     // mc.substep, <= 0 requests the default
  int sim_steps = 2000;        // sim.n_steps
  double sim_x0 = 1.0;         // sim.x0
  double alpha_margin = 1.0;   // market.alpha_margin
  double condition_b_eps = 0.1;  // subordinator.condition_b_eps
  std::string out_dir = "out";   // out.dir
};

/**
 * Builds a RunConfig from a parsed map.  Unknown keys, malformed numbers,
 * missing required keys, and preset/explicit conflicts are all collected
 * into issues rather than thrown, so a bad file reports every problem at
 * once.  The returned config is meaningful only when issues stays empty.
 */
RunConfig resolve_config(const ConfigMap& map, std::vector<ConfigIssue>& issues);

/**
 * Cross-module preconditions checked before any solve: model and factor
 * validity, the exponential-moment condition on the subordinator, the
 * scaling rate kappa exceeding the derivative growth rate, the explicit
 * scheme's CFL bound, the sampled coefficient growth bounds on
 * (0, 4 y_max], and the Monte Carlo path floor.  Every failure carries the
 * config key to fix.
 */
std::vector<ConfigIssue> validate_preconditions(const RunConfig& cfg);

}  // namespace ouvol
