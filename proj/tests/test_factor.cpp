#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "ouvol/factor.hpp"
#include "ouvol/market.hpp"
#include "ouvol/quad.hpp"
#include "ouvol/rng.hpp"

using namespace ouvol;

namespace {

const OuParams kPresetOu{1.0 / 6.0, 0.2,
                         {SubordinatorFamily::CompoundPoissonExp, 0.5, 15.0}};
const OuParams kNullOu{1.0 / 6.0, 0.2, {SubordinatorFamily::Null, 0.0, 1.0}};

double total_mass(const FactorPath& path, double up_to) {
  double m = 0.0;
  for (const auto& j : path.jumps)
    if (j.time <= up_to) m += j.size;
  return m;
}

}  // namespace

TEST_CASE("pure decay without jumps") {
  Rng rng = make_stream(1, 0);
  const FactorPath path = evolve(kNullOu, 0.0, 1.0, rng);
  CHECK(path.jumps.empty());
  CHECK(path.value(1.0) == doctest::Approx(0.2 * std::exp(-1.0 / 6.0)).epsilon(1e-15));
  CHECK(path.value(0.0) == 0.2);
}

TEST_CASE("forced jump evaluates by superposed decay") {
  const FactorPath path =
      make_path(kPresetOu, 0.0, 1.0, {{0.05, 0.12}, {0.65, 0.07}});
  const double pre = 0.2 * std::exp(-0.05 / 6.0);
  CHECK(path.left_value(0.05) == doctest::Approx(pre).epsilon(1e-15));
  CHECK(path.value(0.05) == doctest::Approx(pre + 0.12).epsilon(1e-15));
  const double at_half = 0.2 * std::exp(-0.5 / 6.0) + 0.12 * std::exp(-0.45 / 6.0);
  CHECK(path.value(0.5) == doctest::Approx(at_half).epsilon(1e-15));
}

TEST_CASE("initial-level sensitivity is the decay factor") {
  const std::vector<JumpEvent> jumps{{0.3, 0.05}, {0.8, 0.02}};
  const double delta = 1e-3;
  OuParams bumped = kPresetOu;
  bumped.y0 += delta;
  const FactorPath base = make_path(kPresetOu, 0.0, 1.0, jumps);
  const FactorPath up = make_path(bumped, 0.0, 1.0, jumps);
  for (double s : {0.1, 0.4, 0.9, 1.0}) {
    const double want = delta * std::exp(-s / 6.0);
    CHECK(up.value(s) - base.value(s) == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("closed-form integral of a pure decay path") {
  Rng rng = make_stream(1, 1);
  const FactorPath path = evolve(kNullOu, 0.0, 1.0, rng);
  const double want = 0.2 * 6.0 * (1.0 - std::exp(-1.0 / 6.0));
  CHECK(integrated_level(path, 0.0, 1.0) == doctest::Approx(want).epsilon(1e-14));
  CHECK(integrated_level(path, 0.3, 0.3) == 0.0);
}

TEST_CASE("integral identity against the driving noise") {
  // lambda Int Y du + Y(s) - y - (mass of jumps) vanishes pathwise; the
  // closed-form integral must reproduce it to near machine precision.
  Rng rng = make_stream(99, 0);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const FactorPath path = evolve(kPresetOu, 0.0, 1.0, rng);
    const double lhs = kPresetOu.lambda * integrated_level(path, 0.0, 1.0) +
                       path.value(1.0) - path.y0 - total_mass(path, 1.0);
    worst = std::max(worst, std::abs(lhs));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("paths stay positive and below the jump-mass bound") {
  Rng rng = make_stream(123, 0);
  for (int i = 0; i < 200; ++i) {
    const FactorPath path = evolve(kPresetOu, 0.0, 2.0, rng);
    const double floor = path.y0 * std::exp(-path.lambda * 2.0);
    for (int k = 0; k <= 50; ++k) {
      const double u = 2.0 * k / 50.0;
      const double v = path.value(u);
      CHECK(v >= floor - 1e-15);
      CHECK(v <= path.y0 + total_mass(path, u) + 1e-15);
    }
  }
}

TEST_CASE("restarting at an intermediate time reproduces the path") {
  const std::vector<JumpEvent> jumps{{0.2, 0.04}, {0.7, 0.09}, {1.6, 0.01}};
  const FactorPath whole = make_path(kPresetOu, 0.0, 2.0, jumps);

  OuParams restart = kPresetOu;
  restart.y0 = whole.value(1.0);
  const FactorPath tail = make_path(restart, 1.0, 2.0, {{1.6, 0.01}});
  for (double s : {1.0, 1.3, 1.6, 1.9, 2.0}) {
    CHECK(tail.value(s) == doctest::Approx(whole.value(s)).epsilon(1e-14));
  }
}

TEST_CASE("quadrature of an affine functional reduces to the closed form") {
  const MarketModel model = bns_example().market;
  Rng rng = make_stream(5, 0);
  for (int i = 0; i < 50; ++i) {
    const FactorPath path = evolve(kPresetOu, 0.0, 1.0, rng);
    const double quad = integrated_q(path, model, 0.0, 1.0, 0.01);
    const double closed = 0.1 * 1.0 + 0.375 * integrated_level(path, 0.0, 1.0);
    CHECK(std::abs(quad - closed) <= 1e-10);
  }
}

TEST_CASE("constant functional integrates exactly") {
  Rng rng = make_stream(6, 0);
  const FactorPath path = evolve(kNullOu, 0.0, 1.0, rng);
  const auto q = [](double) { return 0.04; };
  CHECK(integrated_q(path, q, 0.2, 0.9, 0.01) == doctest::Approx(0.04 * 0.7).epsilon(1e-14));
  CHECK(integrated_q(path, q, 0.5, 0.5, 0.01) == 0.0);
}

TEST_CASE("sampling is reproducible for a fixed stream") {
  Rng a = make_stream(11, 4);
  Rng b = make_stream(11, 4);
  const FactorPath pa = evolve(kPresetOu, 0.0, 3.0, a);
  const FactorPath pb = evolve(kPresetOu, 0.0, 3.0, b);
  REQUIRE(pa.jumps.size() == pb.jumps.size());
  for (std::size_t i = 0; i < pa.jumps.size(); ++i) {
    CHECK(pa.jumps[i].time == pb.jumps[i].time);
    CHECK(pa.jumps[i].size == pb.jumps[i].size);
  }
}

TEST_CASE("window and parameter validation") {
  Rng rng = make_stream(1, 2);
  CHECK_THROWS_AS(evolve(kPresetOu, 1.0, 0.0, rng), std::invalid_argument);
  OuParams bad = kPresetOu;
  bad.lambda = 0.0;
  CHECK_THROWS_AS(evolve(bad, 0.0, 1.0, rng), std::invalid_argument);
  bad = kPresetOu;
  bad.y0 = -0.1;
  CHECK_THROWS_AS(evolve(bad, 0.0, 1.0, rng), std::invalid_argument);

  CHECK_THROWS_AS(make_path(kPresetOu, 0.0, 1.0, {{0.5, 0.1}, {0.4, 0.1}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_path(kPresetOu, 0.0, 1.0, {{1.5, 0.1}}), std::invalid_argument);
  CHECK_THROWS_AS(make_path(kPresetOu, 0.0, 1.0, {{0.5, -0.1}}), std::invalid_argument);
  CHECK_THROWS_AS(make_path(kPresetOu, 0.0, 1.0, {{0.0, 0.1}}), std::invalid_argument);

  const FactorPath path = make_path(kPresetOu, 0.0, 1.0, {});
  CHECK_THROWS_AS(integrated_level(path, -0.1, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(integrated_level(path, 0.0, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(integrated_q(path, [](double) { return 1.0; }, 0.0, 1.0, 0.0),
                  std::invalid_argument);
}

TEST_CASE("frozen benchmark path with zero reversion stays flat") {
  // make_path admits lambda = 0 for the constant-coefficient comparison.
  const OuParams frozen{0.0, 0.2, {SubordinatorFamily::Null, 0.0, 1.0}};
  const FactorPath path = make_path(frozen, 0.0, 1.0, {});
  CHECK(path.value(0.0) == 0.2);
  CHECK(path.value(0.7) == 0.2);
  CHECK(integrated_level(path, 0.0, 1.0) == doctest::Approx(0.2).epsilon(1e-15));
}
