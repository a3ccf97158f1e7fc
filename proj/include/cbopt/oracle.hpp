#ifndef CBOPT_ORACLE_HPP
#define CBOPT_ORACLE_HPP

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "cbopt/linalg.hpp"
#include "cbopt/problems.hpp"
#include "cbopt/rng.hpp"
#include "cbopt/sampling.hpp"

namespace cbopt {

struct BudgetExceeded : std::runtime_error {
  BudgetExceeded() : std::runtime_error("comparison budget exhausted for this round") {}
};

struct DegenerateDistribution : std::runtime_error {
  DegenerateDistribution()
      : std::runtime_error("resampling cap hit: distribution appears to be a point mass") {}
};

struct RevealViolation : std::runtime_error {
  RevealViolation() : std::runtime_error("reveal requested on a comparison-only round") {}
};

enum class BinaryOutcome { SampleBelow, SampleAbove };

struct CategoricalOutcome {
  Side side = Side::Below;
  int band = 0;
};

enum class PairOutcome { PlusSmaller, MinusSmallerOrEqual };

/// Band thresholds 0 = theta_0 < theta_1 < ... < theta_m = inf, plus the
/// per-band second-point densities: uniform on bounded bands, one-sided
/// exponential on the unbounded tail band.
struct CategoricalScheme {
  std::vector<double> thresholds;
  double tail_lambda = 0.0625;

  static CategoricalScheme make(std::vector<double> theta, double tail_lambda = 0.0625) {
    if (theta.size() < 2 || theta.front() != 0.0 || theta.back() != kInf)
      throw std::invalid_argument("thresholds must run from 0 to inf");
    for (std::size_t i = 0; i + 1 < theta.size(); ++i)
      if (!(theta[i] < theta[i + 1]))
        throw std::invalid_argument("thresholds must be strictly increasing");
    if (!(tail_lambda > 0.0)) throw std::invalid_argument("tail rate must be positive");
    CategoricalScheme s;
    s.thresholds = std::move(theta);
    s.tail_lambda = tail_lambda;
    return s;
  }

  int bands() const { return int(thresholds.size()) - 1; }

  /// Density of the second point inside band i on the given side of x.
  SamplingDensity band_density(double x, Side side, int band) const {
    double t0 = thresholds[std::size_t(band)];
    double t1 = thresholds[std::size_t(band) + 1];
    SamplingDensity d;
    d.side = side;
    d.anchor = x;
    double sgn = (side == Side::Below) ? -1.0 : 1.0;
    double edge = x + sgn * t0;  // band end nearest the anchor
    if (t1 < kInf) {
      double far = x + sgn * t1;
      double a = std::min(edge, far), b = std::max(edge, far);
      double w = t1 - t0;
      d.lo = a;
      d.hi = b;
      d.pdf = [a, b, w](double z) { return (z >= a && z <= b) ? 1.0 / w : 0.0; };
      d.draw = [a, b](RngStream& rng) { return rng.uniform(a, b); };
    } else {
      double lam = tail_lambda;
      if (side == Side::Below) {
        d.lo = -kInf;
        d.hi = edge;
        d.pdf = [edge, lam](double z) {
          return z < edge ? lam * std::exp(-lam * (edge - z)) : 0.0;
        };
        d.draw = [edge, lam](RngStream& rng) { return edge - rng.exponential(lam); };
      } else {
        d.lo = edge;
        d.hi = kInf;
        d.pdf = [edge, lam](double z) {
          return z > edge ? lam * std::exp(-lam * (z - edge)) : 0.0;
        };
        d.draw = [edge, lam](RngStream& rng) { return edge + rng.exponential(lam); };
      }
    }
    return d;
  }
};

/// One optimization round: holds the hidden sample and answers a limited
/// number of comparison queries. The sample itself is reachable only through
/// reveal_for_baseline, and only when the round was built baseline-allowed.
class Round {
 public:
  enum class Mode { Binary1D, QP };

  Mode mode() const { return mode_; }
  int budget() const { return budget_; }
  bool baseline_allowed() const { return baseline_allowed_; }
  bool revealed() const { return revealed_; }
  std::uint64_t queries() const { return queries_; }

 private:
  Mode mode_ = Mode::Binary1D;
  double xi_ = 0.0;
  Vec xi_vec_;
  const Mat* Q_ = nullptr;
  int budget_ = 2;
  bool baseline_allowed_ = false;
  bool revealed_ = false;
  std::uint64_t queries_ = 0;

  void spend() {
    if (budget_ <= 0) throw BudgetExceeded();
    --budget_;
    ++queries_;
  }

  double qp_cost(const Vec& y) const {
    Vec diff(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) diff[i] = y[i] - xi_vec_[i];
    return 0.5 * quad_form(*Q_, diff);
  }

  friend Round begin_round(const DistributionSpec&, double, RngStream&, int, bool);
  friend Round begin_round_qp(const DistributionSpec&, int, const Mat&, RngStream&, int);
  friend BinaryOutcome compare(Round&, double);
  friend CategoricalOutcome compare_categorical(Round&, double, const CategoricalScheme&);
  friend PairOutcome qp_compare_pair(Round&, const Vec&, const Vec&, double);
  friend bool qp_compare_winner_vs_center(Round&, const Vec&, const Vec&);
  friend double reveal_for_baseline(Round&);
};

/// Draw the hidden sample for one round, resampling until it differs from
/// the query point. Budget is 2 for the plain protocol, 1 + S for mini-batch.
inline Round begin_round(const DistributionSpec& dist, double x_t, RngStream& rng, int budget = 2,
                         bool baseline_allowed = false) {
  Round r;
  r.mode_ = Round::Mode::Binary1D;
  r.budget_ = budget;
  r.baseline_allowed_ = baseline_allowed;
  for (int attempt = 0; attempt < 100; ++attempt) {
    r.xi_ = dist.sample(rng);
    if (r.xi_ != x_t) return r;
  }
  throw DegenerateDistribution();
}

/// Round for the quadratic protocol: coordinates of the hidden sample are
/// i.i.d. from coord_dist; queries compare costs under the true Q.
inline Round begin_round_qp(const DistributionSpec& coord_dist, int d, const Mat& Q,
                            RngStream& rng, int budget = 2) {
  Round r;
  r.mode_ = Round::Mode::QP;
  r.budget_ = budget;
  r.Q_ = &Q;
  r.xi_vec_.resize(std::size_t(d));
  for (auto& v : r.xi_vec_) v = coord_dist.sample(rng);
  return r;
}

/// SampleBelow iff the hidden sample is <= the queried point. Ties at the
/// current iterate never occur (resampling); ties at a second point resolve
/// to SampleBelow, which routes the estimator to the correction branch.
inline BinaryOutcome compare(Round& r, double point) {
  if (r.mode_ != Round::Mode::Binary1D)
    throw std::logic_error("compare: round is not one-dimensional");
  r.spend();
  return r.xi_ <= point ? BinaryOutcome::SampleBelow : BinaryOutcome::SampleAbove;
}

/// Reports the side of x the hidden sample fell on and which threshold band
/// its distance lies in: band i covers distance in (theta_i, theta_{i+1}].
inline CategoricalOutcome compare_categorical(Round& r, double x, const CategoricalScheme& s) {
  if (r.mode_ != Round::Mode::Binary1D)
    throw std::logic_error("compare_categorical: round is not one-dimensional");
  r.spend();
  CategoricalOutcome out;
  out.side = r.xi_ <= x ? Side::Below : Side::Above;
  double dist = std::abs(x - r.xi_);
  out.band = s.bands() - 1;
  for (int i = 0; i < s.bands(); ++i) {
    if (dist <= s.thresholds[std::size_t(i) + 1]) {
      out.band = i;
      break;
    }
  }
  return out;
}

/// Which of x + z u and x - z u has the smaller cost on the hidden sample;
/// equality counts as MinusSmallerOrEqual.
inline PairOutcome qp_compare_pair(Round& r, const Vec& x, const Vec& u, double z) {
  if (r.mode_ != Round::Mode::QP) throw std::logic_error("qp_compare_pair: not a qp round");
  r.spend();
  Vec plus(x.size()), minus(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    plus[i] = x[i] + z * u[i];
    minus[i] = x[i] - z * u[i];
  }
  return r.qp_cost(plus) < r.qp_cost(minus) ? PairOutcome::PlusSmaller
                                            : PairOutcome::MinusSmallerOrEqual;
}

/// Whether the pair winner is at least as good as the center point.
inline bool qp_compare_winner_vs_center(Round& r, const Vec& winner, const Vec& x) {
  if (r.mode_ != Round::Mode::QP)
    throw std::logic_error("qp_compare_winner_vs_center: not a qp round");
  r.spend();
  return r.qp_cost(winner) <= r.qp_cost(x);
}

/// Escape hatch for the full-information baseline only.
inline double reveal_for_baseline(Round& r) {
  if (!r.baseline_allowed_) throw RevealViolation();
  r.revealed_ = true;
  return r.xi_;
}

}  // namespace cbopt

#endif  // CBOPT_ORACLE_HPP
