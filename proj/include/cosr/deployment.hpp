#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "cosr/params.hpp"
#include "cosr/rng.hpp"

namespace cosr {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(const Vec2& a, const Vec2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

inline double magnitude(const Vec2& v) { return std::hypot(v.x, v.y); }

// AP and STA placement plus the association map. STAs are numbered grouped
// by AP: STA s belongs to AP s / stas_per_bss.
struct Deployment {
  std::vector<Vec2> ap_positions;
  std::vector<Vec2> sta_positions;
  std::vector<int> association;  // sta index -> ap index
  std::uint64_t rng_seed = 0;

  int num_aps() const { return static_cast<int>(ap_positions.size()); }
  int num_stas() const { return static_cast<int>(sta_positions.size()); }

  std::vector<int> stas_of(int ap) const {
    std::vector<int> out;
    for (int s = 0; s < num_stas(); ++s)
      if (association[s] == ap) out.push_back(s);
    return out;
  }

  double sta_ap_distance(int sta) const {
    return distance(sta_positions[sta], ap_positions[association[sta]]);
  }
};

namespace detail {

// Corners of the axis-aligned square, in AP index order.
inline std::vector<Vec2> square_corners(double side) {
  return {{0.0, 0.0}, {side, 0.0}, {0.0, side}, {side, side}};
}

// Number of 90-degree rotations about the square centre that carries
// corner 0 onto corner k, for the ordering above.
inline constexpr int kRotationSteps[4] = {0, 1, 3, 2};

inline Vec2 rotate90(const Vec2& v, int steps) {
  Vec2 r = v;
  for (int i = 0; i < (steps & 3); ++i) r = Vec2{-r.y, r.x};
  return r;
}

}  // namespace detail

// Random deployment: APs on the corners of a square of side d_AP-AP, each
// STA placed at a uniformly drawn distance in the d_AP-STA range and a
// uniform angle around its AP. Pure function of (params, seed).
inline Deployment generate_deployment(const SimParams& params, std::uint64_t seed) {
  params.validate();
  if (params.num_bss != 4)
    throw ConfigError("only the 4-AP square scenario is supported");
  Deployment d;
  d.rng_seed = seed;
  d.ap_positions = detail::square_corners(params.inter_ap_distance_m);
  Rng rng(derive_seed(seed, seed_tag::kDeployment));
  for (int ap = 0; ap < params.num_bss; ++ap) {
    for (int s = 0; s < params.stas_per_bss; ++s) {
      double r = rng.uniform(params.ap_sta_distance_min_m, params.ap_sta_distance_max_m);
      double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
      d.sta_positions.push_back(Vec2{d.ap_positions[ap].x + r * std::cos(theta),
                                    d.ap_positions[ap].y + r * std::sin(theta)});
      d.association.push_back(ap);
    }
  }
  return d;
}

// Deterministic deployment used for controlled experiments: every AP gets
// STAs at the given offsets, rotated per quadrant so the whole layout is
// invariant under 90-degree rotation about the scenario centre.
inline Deployment make_symmetric_deployment(const SimParams& params,
                                            const std::vector<Vec2>& offsets) {
  params.validate();
  if (params.num_bss != 4)
    throw ConfigError("only the 4-AP square scenario is supported");
  if (static_cast<int>(offsets.size()) != params.stas_per_bss)
    throw ConfigError("offset count must equal stas_per_bss");
  constexpr double kEps = 1e-9;
  for (const Vec2& o : offsets) {
    double r = magnitude(o);
    if (r + kEps < params.ap_sta_distance_min_m ||
        r - kEps > params.ap_sta_distance_max_m)
      throw ConfigError("offset magnitude outside the AP-STA distance range");
  }
  Deployment d;
  d.rng_seed = 0;
  d.ap_positions = detail::square_corners(params.inter_ap_distance_m);
  for (int ap = 0; ap < 4; ++ap) {
    for (const Vec2& o : offsets) {
      Vec2 ro = detail::rotate90(o, detail::kRotationSteps[ap]);
      d.sta_positions.push_back(
          Vec2{d.ap_positions[ap].x + ro.x, d.ap_positions[ap].y + ro.y});
      d.association.push_back(ap);
    }
  }
  return d;
}

}  // namespace cosr
