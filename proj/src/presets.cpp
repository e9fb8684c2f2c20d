#include <cmath>
#include <string>

#include "mlp/error.hpp"
#include "mlp/netgen.hpp"

namespace mlp::gen {
namespace {

bool on_grid(double knob, const std::vector<double>& grid) {
  for (double g : grid) {
    if (std::abs(knob - g) < 1e-9) return true;
  }
  return false;
}

// Baseline shared by most examples: N = 100, M = 20, K = 5, balanced
// communities, v = 0.5 means, first off-diagonal correlations U(-0.2, 0.2),
// edge correlations U[-0.5, 0.5] at density 0.2.
GenConfig baseline(std::uint64_t seed) {
  GenConfig c;
  c.N = 100;
  c.M = 20;
  c.K = 5;
  c.community_probs.assign(5, 0.2);
  c.mu = {-0.5, -0.8, 0.01};
  c.sigma.kind = SigmaScheme::Kind::kFirstOffDiagonalUniform;
  c.sigma.scale = 0.2;
  c.tau = 0.2;
  c.corr_range = {-0.5, 0.5};
  c.seed = seed;
  return c;
}

}  // namespace

std::vector<double> preset_grid(int id) {
  switch (id) {
    case 1: return {0.0, 0.2, 0.4, 0.6};
    case 2: return {0.5, 0.8, 1.2};
    case 3: return {1, 2, 3, 4};
    case 4: return {80, 120, 160, 180};
    case 5: return {10, 20, 30, 40};
    case 6: return {0.05, 0.1, 0.15};
    case 7: return {0.0, 0.3, 0.6};
    case 8: return {-5.0, -5.5, -6.0};
    case 9: return {20, 25, 30};
    default: throw ConfigError("unknown example id " + std::to_string(id) + " (expected 1..9)");
  }
}

std::string preset_knob_name(int id) {
  static const char* names[] = {"sigma", "v", "a", "N", "M", "gamma", "tau", "u", "M"};
  if (id < 1 || id > 9) throw ConfigError("unknown example id " + std::to_string(id) + " (expected 1..9)");
  return names[id - 1];
}

GenConfig preset(int id, double knob, std::uint64_t seed) {
  const auto grid = preset_grid(id);
  if (!on_grid(knob, grid)) {
    throw ConfigError("knob " + preset_knob_name(id) + "=" + std::to_string(knob) +
                      " is not on the grid of example " + std::to_string(id));
  }
  GenConfig c = baseline(seed);
  c.label = "example" + std::to_string(id) + ":" + preset_knob_name(id) + "=" + std::to_string(knob);
  switch (id) {
    case 1:
      c.sigma.scale = knob;
      if (knob == 0.0) c.sigma.kind = SigmaScheme::Kind::kIdentity;
      break;
    case 2:
      c.mu = {-knob, -knob - 0.3, 0.01};
      break;
    case 3:
      c.sigma.kind = SigmaScheme::Kind::kBandNormal;
      c.sigma.band = static_cast<int>(std::lround(knob));
      c.sigma.scale = 0.25;
      c.sigma.slope = 0.05;
      c.sigma.variance = 0.01;
      break;
    case 4:
      c.N = static_cast<int>(std::lround(knob));
      break;
    case 5:
      c.M = static_cast<int>(std::lround(knob));
      break;
    case 6:
      c.community_probs = {knob, knob, knob, 0.4 - knob, 0.6 - 2.0 * knob};
      break;
    case 7:
      c.tau = knob;
      c.corr_range = {-0.2, 0.2};
      break;
    case 8: {
      c.N = 200;
      c.M = 8;
      IsingScheme s;
      s.u = knob;
      c.ising = s;
      c.tau = 0.0;
      c.sigma.kind = SigmaScheme::Kind::kIdentity;
      break;
    }
    case 9:
      c.M = static_cast<int>(std::lround(knob));
      c.sigma.kind = SigmaScheme::Kind::kRandomPositions;
      c.sigma.positions = c.M / 2;
      c.sigma.lo = 0.2;
      c.sigma.hi = 0.6;
      c.corr_range = {-0.3, 0.3};
      c.tau = 0.2;
      break;
  }
  return c;
}

}  // namespace mlp::gen
