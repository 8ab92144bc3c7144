#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ouvol/factor.hpp"
#include "ouvol/oracle.hpp"
#include "ouvol/pide.hpp"
#include "ouvol/strategy.hpp"

namespace ouvol {

/// %.17g rendering, enough digits to round-trip a double exactly.
std::string format_g17(double v);

/// Writes via a temp file in the same directory plus rename, so readers
/// never observe a partial file.  Creates parent directories.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

/// Header t,y,f,consumption_rate; row-major over (t, y).  Both surfaces must
/// share a grid.
std::string surface_csv(const ValueSurface& f, const ValueSurface& consumption);

/// Header t,y,consumption_rate.
std::string consumption_csv(const ValueSurface& consumption);

/// Header t,y,estimate,std_error,lower_bound,upper_bound,envelope with 3
/// standard-error bands and the admissible upper envelope per probe.
std::string probes_csv(const std::vector<ProbeEstimate>& probes, const DerivedConstants& dc);

/// Header t,Y,X,c,pi,c_over_X, one row per simulation node.
std::string path_csv(const StrategyPath& path);

/// Header u,Y sampled at the supplied times.
std::string factor_csv(const FactorPath& path, const std::vector<double>& times);

/// Header tau,z, one row per jump.
std::string jumps_csv(const std::vector<JumpEvent>& jumps);

/// Named check with its value, the bound it is compared against, and the
/// verdict; rendered with header check,value,bound,passed.
struct CheckRow {
  std::string name;
  double value = 0.0;
  double bound = 0.0;
  bool passed = false;
};

std::string checks_csv(const std::vector<CheckRow>& rows);

/// Parses "tau,z" lines (optional header, '#' comments).  Throws
/// std::invalid_argument on malformed rows.
std::vector<JumpEvent> read_scenario_csv(const std::string& text);

/// Self-contained SVG heatmap of a surface over (t, y), downsampled to at
/// most ~120 x 100 cells.
std::string svg_heatmap(const ValueSurface& surface, const std::string& title);

struct SvgSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Self-contained SVG line chart overlaying the given series.
std::string svg_lines(const std::vector<SvgSeries>& series, const std::string& title,
                      const std::string& x_label, const std::string& y_label);

}  // namespace ouvol
