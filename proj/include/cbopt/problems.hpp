#ifndef CBOPT_PROBLEMS_HPP
#define CBOPT_PROBLEMS_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cbopt/rng.hpp"

namespace cbopt {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Which side of the current iterate a sample point lies on.
enum class Side { Below, Above };

/// One-dimensional objective h(x, xi) together with the partial derivative
/// h'_x(x, z) and the cross partial h''_{x,z}(x, z). The side flag
/// disambiguates the two one-sided limits at z == x.
struct Objective1D {
  std::string name;
  std::function<double(double, double)> h;            // h(x, xi)
  std::function<double(double, double, Side)> dx;     // h'_x(x, z)
  std::function<double(double, double, Side)> cross;  // h''_{x,z}(x, z)
  double mu = 0.0;                                    // strong-convexity modulus of H
  std::optional<double> lip;                          // Lipschitz constant of H', if smooth
  double lo = 50.0;
  double hi = 150.0;

  double dleft(double x) const { return dx(x, x, Side::Below); }
  double dright(double x) const { return dx(x, x, Side::Above); }
};

struct NewsvendorParams {
  double holding;    // cost per unit overage
  double backorder;  // cost per unit underage
};

/// Law of the hidden sample xi. The two-component uniform mixture exists for
/// test scenarios only and is not reachable from the config grammar.
struct DistributionSpec {
  enum class Kind { Uniform, Normal, MixtureUniform };
  Kind kind = Kind::Uniform;
  double a = 0.0, b = 1.0;  // Uniform: [a, b]; Normal: mean a, variance b
  // MixtureUniform: U[c0a,c0b] w.p. 1/2, U[c1a,c1b] w.p. 1/2
  double c0a = 0.0, c0b = 0.0, c1a = 0.0, c1b = 0.0;

  static DistributionSpec uniform(double a, double b) {
    if (!(a < b)) throw std::invalid_argument("uniform: requires a < b");
    DistributionSpec d;
    d.kind = Kind::Uniform;
    d.a = a;
    d.b = b;
    return d;
  }
  static DistributionSpec normal(double mean, double variance) {
    if (!(variance > 0)) throw std::invalid_argument("normal: requires variance > 0");
    DistributionSpec d;
    d.kind = Kind::Normal;
    d.a = mean;
    d.b = variance;
    return d;
  }
  static DistributionSpec mixture_uniform(double a0, double b0, double a1, double b1) {
    DistributionSpec d;
    d.kind = Kind::MixtureUniform;
    d.c0a = a0;
    d.c0b = b0;
    d.c1a = a1;
    d.c1b = b1;
    return d;
  }

  double mean() const {
    switch (kind) {
      case Kind::Uniform: return 0.5 * (a + b);
      case Kind::Normal: return a;
      case Kind::MixtureUniform: return 0.25 * (c0a + c0b + c1a + c1b);
    }
    return 0.0;
  }

  double variance() const {
    switch (kind) {
      case Kind::Uniform: return (b - a) * (b - a) / 12.0;
      case Kind::Normal: return b;
      case Kind::MixtureUniform: {
        double m = mean();
        auto comp = [m](double lo, double hi) {
          double cm = 0.5 * (lo + hi);
          return (hi - lo) * (hi - lo) / 12.0 + (cm - m) * (cm - m);
        };
        return 0.5 * comp(c0a, c0b) + 0.5 * comp(c1a, c1b);
      }
    }
    return 0.0;
  }

  double support_lo() const {
    switch (kind) {
      case Kind::Uniform: return a;
      case Kind::Normal: return -kInf;
      case Kind::MixtureUniform: return std::min(c0a, c1a);
    }
    return -kInf;
  }

  double support_hi() const {
    switch (kind) {
      case Kind::Uniform: return b;
      case Kind::Normal: return kInf;
      case Kind::MixtureUniform: return std::max(c0b, c1b);
    }
    return kInf;
  }

  double cdf(double t) const {
    switch (kind) {
      case Kind::Uniform:
        return std::clamp((t - a) / (b - a), 0.0, 1.0);
      case Kind::Normal:
        return 0.5 * std::erfc(-(t - a) / std::sqrt(2.0 * b));
      case Kind::MixtureUniform: {
        auto comp = [t](double lo, double hi) { return std::clamp((t - lo) / (hi - lo), 0.0, 1.0); };
        return 0.5 * comp(c0a, c0b) + 0.5 * comp(c1a, c1b);
      }
    }
    return 0.0;
  }

  double sample(RngStream& rng) const {
    switch (kind) {
      case Kind::Uniform: return rng.uniform(a, b);
      case Kind::Normal: return rng.normal(a, std::sqrt(b));
      case Kind::MixtureUniform:
        return rng.uniform() < 0.5 ? rng.uniform(c0a, c0b) : rng.uniform(c1a, c1b);
    }
    return 0.0;
  }
};

namespace detail {

// Adaptive Gauss-Kronrod (G7, K15) quadrature on a finite interval.
inline void gk15(const std::function<double(double)>& f, double a, double b, double& value,
                 double& err) {
  static const double xg[4] = {0.0, 0.4058451513773972, 0.7415311855993945, 0.9491079123427585};
  static const double wg[4] = {0.4179591836734694, 0.3818300505051189, 0.2797053914892767,
                               0.1294849661688697};
  static const double xk[8] = {0.0,
                               0.2077849550078985,
                               0.4058451513773972,
                               0.5860872354676911,
                               0.7415311855993945,
                               0.8648644233597691,
                               0.9491079123427585,
                               0.9914553711208126};
  static const double wk[8] = {0.2094821410847278, 0.2044329400752989, 0.1903505780647854,
                               0.1690047266392679, 0.1406532597155259, 0.1047900103222502,
                               0.0630920926299786, 0.0229353220105292};
  double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double resg = 0.0, resk = 0.0;
  for (int i = 0; i < 8; ++i) {
    double fv = (i == 0) ? f(c) : f(c - h * xk[i]) + f(c + h * xk[i]);
    resk += wk[i] * fv;
    if (i % 2 == 0) {
      int j = i / 2;
      double gv = (i == 0) ? f(c) : fv;
      resg += wg[j] * gv;
    }
  }
  value = resk * h;
  err = std::abs((resk - resg) * h);
}

inline double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                 double tol, int depth = 0) {
  double v, e;
  gk15(f, a, b, v, e);
  if (e <= tol || depth >= 50) {
    if (depth >= 50 && e > tol * 1e3)
      throw std::runtime_error("quadrature failed to converge");
    return v;
  }
  double m = 0.5 * (a + b);
  return integrate_adaptive(f, a, m, 0.5 * tol, depth + 1) +
         integrate_adaptive(f, m, b, 0.5 * tol, depth + 1);
}

}  // namespace detail

/// Adaptive quadrature to absolute tolerance tol, splitting at the optional
/// interior kink points.
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-10, const std::vector<double>& kinks = {}) {
  std::vector<double> pts = {a, b};
  for (double k : kinks)
    if (k > a && k < b) pts.push_back(k);
  std::sort(pts.begin(), pts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i)
    total += detail::integrate_adaptive(f, pts[i], pts[i + 1], tol / double(pts.size()));
  return total;
}

/// Finite integration window for a distribution; normal tails truncated at
/// ten standard deviations.
inline std::pair<double, double> integration_window(const DistributionSpec& dist) {
  if (dist.kind == DistributionSpec::Kind::Normal) {
    double sd = std::sqrt(dist.b);
    return {dist.a - 10.0 * sd, dist.a + 10.0 * sd};
  }
  return {dist.support_lo(), dist.support_hi()};
}

inline double pdf_of(const DistributionSpec& dist, double t) {
  switch (dist.kind) {
    case DistributionSpec::Kind::Uniform:
      return (t >= dist.a && t <= dist.b) ? 1.0 / (dist.b - dist.a) : 0.0;
    case DistributionSpec::Kind::Normal: {
      double sd = std::sqrt(dist.b);
      double u = (t - dist.a) / sd;
      return std::exp(-0.5 * u * u) / (sd * 2.5066282746310005024);
    }
    case DistributionSpec::Kind::MixtureUniform: {
      auto comp = [t](double lo, double hi) {
        return (t >= lo && t <= hi) ? 1.0 / (hi - lo) : 0.0;
      };
      return 0.5 * comp(dist.c0a, dist.c0b) + 0.5 * comp(dist.c1a, dist.c1b);
    }
  }
  return 0.0;
}

/// Ground truth for gap evaluation: H, H', the minimizer over [lo, hi] and
/// the optimal value.
struct GroundTruth {
  std::function<double(double)> H;
  std::function<double(double)> Hprime;
  double xstar = 0.0;
  double Hstar = 0.0;
  enum class Method { ClosedForm, Quadrature } method = Method::Quadrature;
};

// ---- operations -----------------------------------------------------------

inline double h_value(const Objective1D& obj, double x, double xi) { return obj.h(x, xi); }

inline std::pair<double, double> one_sided_derivatives(const Objective1D& obj, double x) {
  return {obj.dleft(x), obj.dright(x)};
}

inline double cross_partial(const Objective1D& obj, double x, double z) {
  if (z == x) throw std::invalid_argument("cross_partial: z must differ from x");
  return obj.cross(x, z, z < x ? Side::Below : Side::Above);
}

inline GroundTruth ground_truth(const Objective1D& obj, const DistributionSpec& dist) {
  GroundTruth gt;
  if (obj.name == "h1") {
    // H(x) = (x - E xi)^2 + Var xi
    double m = dist.mean(), v = dist.variance();
    gt.H = [m, v](double x) { return (x - m) * (x - m) + v; };
    gt.Hprime = [m](double x) { return 2.0 * (x - m); };
    gt.xstar = std::clamp(m, obj.lo, obj.hi);
    gt.Hstar = gt.H(gt.xstar);
    gt.method = GroundTruth::Method::ClosedForm;
    return gt;
  }
  auto [wa, wb] = integration_window(dist);
  auto H = [obj, dist, wa = wa, wb = wb](double x) {
    return integrate([&](double xi) { return obj.h(x, xi) * pdf_of(dist, xi); }, wa, wb, 1e-10,
                     {x});
  };
  auto Hp = [obj, dist, wa = wa, wb = wb](double x) {
    return integrate(
        [&](double xi) {
          return obj.dx(x, xi, xi < x ? Side::Below : Side::Above) * pdf_of(dist, xi);
        },
        wa, wb, 1e-10, {x});
  };
  gt.H = H;
  gt.Hprime = Hp;
  // bisection on H' to bracket width 1e-8, then clamp to [lo, hi]
  double a = obj.lo, b = obj.hi;
  double fa = Hp(a), fb = Hp(b);
  if (fa >= 0.0) {
    gt.xstar = a;
  } else if (fb <= 0.0) {
    gt.xstar = b;
  } else {
    while (b - a > 1e-8) {
      double m = 0.5 * (a + b);
      if (Hp(m) < 0.0)
        a = m;
      else
        b = m;
    }
    gt.xstar = std::clamp(0.5 * (a + b), obj.lo, obj.hi);
  }
  gt.Hstar = H(gt.xstar);
  gt.method = GroundTruth::Method::Quadrature;
  return gt;
}

struct GapUndefined : std::runtime_error {
  GapUndefined() : std::runtime_error("relative gap undefined: H(x*) = 0") {}
};

inline double relative_gap(const GroundTruth& gt, double x) {
  if (gt.Hstar == 0.0) throw GapUndefined();
  return (gt.H(x) - gt.Hstar) / gt.Hstar;
}

/// Second-moment bound constants, bounded numerically on a grid of anchors.
/// Reporting aid only; never used for correctness gating.
struct AssumptionConstants {
  double K1 = 0.0, K2 = 0.0, K3 = 0.0;
  double G2 = 0.0;      // K1^2 + 2 K3
  double sigma2 = 0.0;  // K2^2 + 2 K3
};

// ---- built-in objectives --------------------------------------------------

inline Objective1D make_h1(double lo = 50.0, double hi = 150.0) {
  Objective1D o;
  o.name = "h1";
  o.h = [](double x, double xi) { return (x - xi) * (x - xi); };
  o.dx = [](double x, double z, Side) { return 2.0 * (x - z); };
  o.cross = [](double, double, Side) { return -2.0; };
  o.mu = 2.0;
  o.lip = 2.0;
  o.lo = lo;
  o.hi = hi;
  return o;
}

inline Objective1D make_h2(double lo = 50.0, double hi = 150.0) {
  Objective1D o;
  o.name = "h2";
  o.h = [](double x, double xi) {
    double d = x - xi;
    return xi < x ? d * d + d : 2.0 * d * d - 2.0 * d;
  };
  o.dx = [](double x, double z, Side side) {
    bool below = (z < x) || (z == x && side == Side::Below);
    double d = x - z;
    return below ? 2.0 * d + 1.0 : 4.0 * d - 2.0;
  };
  o.cross = [](double x, double z, Side side) {
    bool below = (z < x) || (z == x && side == Side::Below);
    return below ? -2.0 : -4.0;
  };
  o.mu = 2.0;
  o.lo = lo;
  o.hi = hi;
  return o;
}

inline Objective1D make_newsvendor(NewsvendorParams p, double lo = 50.0, double hi = 150.0) {
  if (!(p.holding > 0.0) || !(p.backorder > 0.0))
    throw std::invalid_argument("newsvendor: costs must be positive");
  Objective1D o;
  o.name = "newsvendor";
  o.h = [p](double x, double xi) {
    return p.holding * std::max(x - xi, 0.0) + p.backorder * std::max(xi - x, 0.0);
  };
  o.dx = [p](double x, double z, Side side) {
    bool below = (z < x) || (z == x && side == Side::Below);
    return below ? p.holding : -p.backorder;
  };
  o.cross = [](double, double, Side) { return 0.0; };
  o.mu = 0.0;
  o.lo = lo;
  o.hi = hi;
  return o;
}

// ---- string ids (config / CSV surface) ------------------------------------

inline Objective1D parse_objective(const std::string& id) {
  if (id == "h1") return make_h1();
  if (id == "h2") return make_h2();
  if (id.rfind("newsvendor:", 0) == 0) {
    double H = 0, B = 0;
    if (std::sscanf(id.c_str(), "newsvendor:H=%lf,B=%lf", &H, &B) != 2)
      throw std::invalid_argument("bad newsvendor id: " + id);
    return make_newsvendor({H, B});
  }
  throw std::invalid_argument("unknown objective id: " + id);
}

inline DistributionSpec parse_distribution(const std::string& id) {
  double a = 0, b = 0;
  if (std::sscanf(id.c_str(), "uniform:%lf,%lf", &a, &b) == 2)
    return DistributionSpec::uniform(a, b);
  if (std::sscanf(id.c_str(), "normal:%lf,%lf", &a, &b) == 2)
    return DistributionSpec::normal(a, b);
  throw std::invalid_argument("unknown distribution id: " + id);
}

}  // namespace cbopt

#endif  // CBOPT_PROBLEMS_HPP
