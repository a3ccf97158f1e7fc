#ifndef CBOPT_ESTIMATORS_HPP
#define CBOPT_ESTIMATORS_HPP

#include <stdexcept>
#include <utility>
#include <vector>

#include "cbopt/linalg.hpp"
#include "cbopt/oracle.hpp"
#include "cbopt/problems.hpp"
#include "cbopt/sampling.hpp"

namespace cbopt {

struct DensityInconsistency : std::runtime_error {
  DensityInconsistency()
      : std::runtime_error("second point has zero density under its own sampler") {}
};

struct GradSample1D {
  double value = 0.0;
  enum class Branch { Plain, Corrected } branch = Branch::Plain;
  double z = 0.0;
};

/// Gradient estimate from one round of the binary protocol. The side of the
/// hidden sample picks the one-sided derivative; the second comparison picks
/// between that plain value and the importance-weighted correction.
inline GradSample1D grad_cba(double x, BinaryOutcome first, double z, BinaryOutcome second,
                             const Objective1D& obj, const SamplingDensity& band) {
  GradSample1D g;
  g.z = z;
  if (first == BinaryOutcome::SampleBelow) {
    if (band.side != Side::Below)
      throw std::invalid_argument("band side must match the first comparison");
    // sample <= z means z landed between the sample and x: apply correction
    if (second == BinaryOutcome::SampleBelow) {
      double p = band.pdf(z);
      if (!(p > 0.0)) throw DensityInconsistency();
      g.value = obj.dx(x, x, Side::Below) - obj.cross(x, z, Side::Below) / p;
      g.branch = GradSample1D::Branch::Corrected;
    } else {
      g.value = obj.dx(x, x, Side::Below);
      g.branch = GradSample1D::Branch::Plain;
    }
  } else {
    if (band.side != Side::Above)
      throw std::invalid_argument("band side must match the first comparison");
    if (second == BinaryOutcome::SampleAbove) {
      double p = band.pdf(z);
      if (!(p > 0.0)) throw DensityInconsistency();
      g.value = obj.dx(x, x, Side::Above) + obj.cross(x, z, Side::Above) / p;
      g.branch = GradSample1D::Branch::Corrected;
    } else {
      g.value = obj.dx(x, x, Side::Above);
      g.branch = GradSample1D::Branch::Plain;
    }
  }
  return g;
}

/// Categorical variant: the plain value is the derivative limit at the inner
/// band edge rather than at x itself; correction uses the band's density.
inline GradSample1D grad_cba_categorical(double x, const CategoricalOutcome& out, double z,
                                         BinaryOutcome second, const Objective1D& obj,
                                         const CategoricalScheme& scheme) {
  double theta = scheme.thresholds[std::size_t(out.band)];
  SamplingDensity band = scheme.band_density(x, out.side, out.band);
  GradSample1D g;
  g.z = z;
  if (out.side == Side::Below) {
    double edge_deriv = obj.dx(x, x - theta, Side::Below);
    if (second == BinaryOutcome::SampleBelow) {
      double p = band.pdf(z);
      if (!(p > 0.0)) throw DensityInconsistency();
      g.value = edge_deriv - obj.cross(x, z, Side::Below) / p;
      g.branch = GradSample1D::Branch::Corrected;
    } else {
      g.value = edge_deriv;
      g.branch = GradSample1D::Branch::Plain;
    }
  } else {
    double edge_deriv = obj.dx(x, x + theta, Side::Above);
    if (second == BinaryOutcome::SampleAbove) {
      double p = band.pdf(z);
      if (!(p > 0.0)) throw DensityInconsistency();
      g.value = edge_deriv + obj.cross(x, z, Side::Above) / p;
      g.branch = GradSample1D::Branch::Corrected;
    } else {
      g.value = edge_deriv;
      g.branch = GradSample1D::Branch::Plain;
    }
  }
  return g;
}

struct GradSampleQP {
  Vec value;
  double magnitude = 0.0;  // 0 or +-(1/2) u'Qu / f(z)
  Vec direction;
};

/// Quadratic-protocol estimate from the two value comparisons: zero unless
/// the pair winner beats the center, otherwise +-(1/2)(u'Qu/f(z)) u with the
/// sign pointing away from the winner.
inline GradSampleQP grad_qp(const Vec& x, const Vec& u, double z, PairOutcome pair,
                            bool winner_le_center, const std::function<double(const Vec&)>& quad,
                            const RadialDensity& radial) {
  (void)x;
  GradSampleQP g;
  g.direction = u;
  g.value.assign(u.size(), 0.0);
  if (!winner_le_center) return g;
  double f = radial.pdf(z);
  if (!(f > 0.0)) throw DensityInconsistency();
  double mag = 0.5 * quad(u) / f;
  g.magnitude = (pair == PairOutcome::PlusSmaller) ? -mag : mag;
  for (std::size_t i = 0; i < u.size(); ++i) g.value[i] = g.magnitude * u[i];
  return g;
}

/// Mean of S single-z estimates sharing one hidden sample and one band.
inline double minibatch_grad(double x, BinaryOutcome first,
                             const std::vector<std::pair<double, BinaryOutcome>>& seconds,
                             const Objective1D& obj, const SamplingDensity& band) {
  if (seconds.empty()) throw std::invalid_argument("mini-batch needs at least one second point");
  double sum = 0.0;
  for (const auto& [z, outcome] : seconds) sum += grad_cba(x, first, z, outcome, obj, band).value;
  return sum / double(seconds.size());
}

}  // namespace cbopt

#endif  // CBOPT_ESTIMATORS_HPP
