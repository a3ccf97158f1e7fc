#ifndef CBOPT_SAMPLING_HPP
#define CBOPT_SAMPLING_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "cbopt/problems.hpp"
#include "cbopt/rng.hpp"

namespace cbopt {

/// Standard normal c.d.f.
inline double normal_cdf(double t) { return 0.5 * std::erfc(-t / 1.4142135623730950488); }

/// One-sided second-point density anchored at the current iterate.
/// pdf vanishes outside [lo, hi]; every draw lies in [lo, hi].
struct SamplingDensity {
  Side side = Side::Below;
  double anchor = 0.0;
  double lo = 0.0, hi = 0.0;  // support; hi may be +inf (above-side exponential)
  std::function<double(double)> pdf;
  std::function<double(RngStream&)> draw;
};

/// Uniform band between the feasible bound and the anchor. A degenerate
/// anchor (x == bound) falls back to the unit-width band outside the bound.
inline SamplingDensity make_uniform_band(double x, double lo_bound, double hi_bound, Side side) {
  SamplingDensity d;
  d.side = side;
  d.anchor = x;
  if (side == Side::Below) {
    double a = lo_bound, b = x;
    if (a >= b) {  // x == lo: uniform on [lo - 1, lo]
      a = lo_bound - 1.0;
      b = lo_bound;
    }
    d.lo = a;
    d.hi = b;
  } else {
    double a = x, b = hi_bound;
    if (a >= b) {  // x == hi: uniform on [hi, hi + 1]
      a = hi_bound;
      b = hi_bound + 1.0;
    }
    d.lo = a;
    d.hi = b;
  }
  double a = d.lo, b = d.hi, w = b - a;
  d.pdf = [a, b, w](double z) { return (z >= a && z <= b) ? 1.0 / w : 0.0; };
  d.draw = [a, b](RngStream& rng) { return rng.uniform(a, b); };
  return d;
}

/// One-sided exponential band with rate lambda, anchored at x.
inline SamplingDensity make_exponential_band(double x, double lambda, Side side) {
  if (!(lambda > 0.0)) throw std::invalid_argument("exponential band: lambda must be positive");
  SamplingDensity d;
  d.side = side;
  d.anchor = x;
  if (side == Side::Below) {
    d.lo = -kInf;
    d.hi = x;
    d.pdf = [x, lambda](double z) { return z <= x ? lambda * std::exp(-lambda * (x - z)) : 0.0; };
    d.draw = [x, lambda](RngStream& rng) { return x - rng.exponential(lambda); };
  } else {
    d.lo = x;
    d.hi = kInf;
    d.pdf = [x, lambda](double z) { return z >= x ? lambda * std::exp(-lambda * (z - x)) : 0.0; };
    d.draw = [x, lambda](RngStream& rng) { return x + rng.exponential(lambda); };
  }
  return d;
}

struct OptimalDensityUndefined : std::runtime_error {
  OptimalDensityUndefined()
      : std::runtime_error("optimal density undefined: side weight integrates to zero") {}
};

/// Variance-optimal band, tabulated: weight sqrt(F(z))|h''| below the anchor
/// and sqrt(1-F(z))|h''| above it, normalized on a 4096-point grid over the
/// side's effective support. Draws use inverse-CDF lookup with linear
/// interpolation.
inline SamplingDensity make_optimal_band(const DistributionSpec& dist, const Objective1D& obj,
                                         double x, Side side, int grid_points = 4096) {
  auto [wlo, whi] = integration_window(dist);
  double a, b;
  if (side == Side::Below) {
    a = std::min(wlo, x - 1.0);
    b = x;
  } else {
    a = x;
    b = std::max(whi, x + 1.0);
  }
  auto weight = [&](double z) {
    double F = dist.cdf(z);
    double w = (side == Side::Below) ? std::sqrt(F) : std::sqrt(1.0 - F);
    return w * std::abs(obj.cross(x, z, side));
  };

  int n = grid_points;
  std::vector<double> grid(n), cdf(n);
  double step = (b - a) / double(n - 1);
  for (int i = 0; i < n; ++i) grid[i] = a + step * double(i);
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = weight(grid[i]);
  cdf[0] = 0.0;
  for (int i = 1; i < n; ++i) cdf[i] = cdf[i - 1] + 0.5 * (w[i - 1] + w[i]) * step;
  double total = cdf[n - 1];
  if (!(total > 1e-12)) throw OptimalDensityUndefined();
  for (int i = 0; i < n; ++i) cdf[i] /= total;

  auto gridp = std::make_shared<std::vector<double>>(std::move(grid));
  auto cdfp = std::make_shared<std::vector<double>>(std::move(cdf));
  auto wp = std::make_shared<std::vector<double>>(std::move(w));

  SamplingDensity d;
  d.side = side;
  d.anchor = x;
  d.lo = a;
  d.hi = b;
  d.pdf = [a, b, step, total, gridp, wp](double z) {
    if (z < a || z > b) return 0.0;
    double pos = (z - a) / step;
    int i = std::min(int(pos), int(wp->size()) - 2);
    double frac = pos - double(i);
    return ((*wp)[i] * (1.0 - frac) + (*wp)[i + 1] * frac) / total;
  };
  d.draw = [gridp, cdfp](RngStream& rng) {
    double u = rng.uniform();
    const auto& c = *cdfp;
    auto it = std::lower_bound(c.begin(), c.end(), u);
    if (it == c.begin()) return (*gridp)[0];
    if (it == c.end()) return gridp->back();
    std::size_t i = std::size_t(it - c.begin());
    double c0 = c[i - 1], c1 = c[i];
    double frac = (c1 > c0) ? (u - c0) / (c1 - c0) : 0.0;
    return (*gridp)[i - 1] + frac * ((*gridp)[i] - (*gridp)[i - 1]);
  };
  return d;
}

inline double draw(const SamplingDensity& density, RngStream& rng) { return density.draw(rng); }

/// Density of the random step length z in the quadratic scheme.
struct RadialDensity {
  enum class Kind { Uniform, Exponential };
  Kind kind = Kind::Uniform;
  double R = 1.0;
  double lambda = 1.0;
  std::function<double(double)> pdf;
  std::function<double(RngStream&)> draw;
};

inline RadialDensity make_radial_uniform(double R) {
  if (!(R > 0.0)) throw std::invalid_argument("radial uniform: R must be positive");
  RadialDensity d;
  d.kind = RadialDensity::Kind::Uniform;
  d.R = R;
  d.pdf = [R](double z) { return (z >= 0.0 && z <= R) ? 1.0 / R : 0.0; };
  d.draw = [R](RngStream& rng) { return rng.uniform(0.0, R); };
  return d;
}

/// Exponential radial density. When a strict cap c = sqrt(d) lambda_min(Q) /
/// lambda_max(Q) is supplied, rates at or above it are rejected.
inline RadialDensity make_radial_exponential(double lambda, double strict_cap = kInf) {
  if (!(lambda > 0.0)) throw std::invalid_argument("radial exponential: lambda must be positive");
  if (lambda >= strict_cap)
    throw std::invalid_argument("radial exponential: lambda must be below the C4 cap");
  RadialDensity d;
  d.kind = RadialDensity::Kind::Exponential;
  d.lambda = lambda;
  d.pdf = [lambda](double z) { return z >= 0.0 ? lambda * std::exp(-lambda * z) : 0.0; };
  d.draw = [lambda](RngStream& rng) { return rng.exponential(lambda); };
  return d;
}

/// Uniform direction on the sphere of radius sqrt(d); normalize-then-scale,
/// so |u|^2 == d up to rounding.
inline std::vector<double> sphere_sample(int d, RngStream& rng) {
  if (d < 1) throw std::invalid_argument("sphere_sample: d must be >= 1");
  std::vector<double> u(std::size_t(d), 0.0);
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (auto& v : u) {
      v = rng.normal();
      norm2 += v * v;
    }
  } while (norm2 == 0.0);
  double scale = std::sqrt(double(d) / norm2);
  for (auto& v : u) v *= scale;
  return u;
}

/// Family of second-point densities, instantiated per iterate and side.
struct BandFamily {
  enum class Kind { Uniform, Exponential, Optimal };
  Kind kind = Kind::Uniform;
  double lambda = 0.0625;  // exponential rate
  // uniform and optimal bands need problem context
  double lo = 50.0, hi = 150.0;
  const Objective1D* obj = nullptr;
  const DistributionSpec* dist = nullptr;

  SamplingDensity make(double x, Side side) const {
    switch (kind) {
      case Kind::Uniform: return make_uniform_band(x, lo, hi, side);
      case Kind::Exponential: return make_exponential_band(x, lambda, side);
      case Kind::Optimal: return make_optimal_band(*dist, *obj, x, side);
    }
    throw std::logic_error("unreachable");
  }
};

}  // namespace cbopt

#endif  // CBOPT_SAMPLING_HPP
