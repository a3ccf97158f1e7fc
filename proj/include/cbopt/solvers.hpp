#ifndef CBOPT_SOLVERS_HPP
#define CBOPT_SOLVERS_HPP

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "cbopt/estimators.hpp"
#include "cbopt/linalg.hpp"
#include "cbopt/oracle.hpp"
#include "cbopt/problems.hpp"
#include "cbopt/rng.hpp"
#include "cbopt/sampling.hpp"

namespace cbopt {

struct StepSchedule {
  enum class Kind {
    ConstOverSqrtT,  // 1/sqrt(T)
    InvSqrtT,        // 1/sqrt(t)
    SmoothConst,     // 1/(L + sqrt(T))
    SmoothDecay,     // 1/(L + sqrt(t))
    Strong,          // 1/(mu t)
    StrongSmooth,    // 1/(mu t + L)
    Stage,           // 1/(2^{k+1} mu)
    StageSmooth      // 1/(2^{k+1} mu + L)
  };
  Kind kind = Kind::InvSqrtT;
  double T = 0.0;
  double mu = 0.0;
  double L = 0.0;
  int k = 1;

  static StepSchedule const_over_sqrt_T(double T) { return {Kind::ConstOverSqrtT, T}; }
  static StepSchedule inv_sqrt_t() { return {Kind::InvSqrtT}; }
  static StepSchedule smooth_const(double L, double T) { return {Kind::SmoothConst, T, 0.0, L}; }
  static StepSchedule smooth_decay(double L) { return {Kind::SmoothDecay, 0.0, 0.0, L}; }
  static StepSchedule strong(double mu) {
    if (!(mu > 0.0)) throw std::invalid_argument("schedule: mu must be positive");
    return {Kind::Strong, 0.0, mu};
  }
  static StepSchedule strong_smooth(double mu, double L) {
    if (!(mu > 0.0)) throw std::invalid_argument("schedule: mu must be positive");
    return {Kind::StrongSmooth, 0.0, mu, L};
  }
  static StepSchedule stage(int k, double mu) {
    if (!(mu > 0.0)) throw std::invalid_argument("schedule: mu must be positive");
    return {Kind::Stage, 0.0, mu, 0.0, k};
  }
  static StepSchedule stage_smooth(int k, double mu, double L) {
    if (!(mu > 0.0)) throw std::invalid_argument("schedule: mu must be positive");
    return {Kind::StageSmooth, 0.0, mu, L, k};
  }
};

inline double step_size(const StepSchedule& s, int t) {
  if (t < 1) throw std::invalid_argument("step_size: t must be >= 1");
  switch (s.kind) {
    case StepSchedule::Kind::ConstOverSqrtT: return 1.0 / std::sqrt(s.T);
    case StepSchedule::Kind::InvSqrtT: return 1.0 / std::sqrt(double(t));
    case StepSchedule::Kind::SmoothConst: return 1.0 / (s.L + std::sqrt(s.T));
    case StepSchedule::Kind::SmoothDecay: return 1.0 / (s.L + std::sqrt(double(t)));
    case StepSchedule::Kind::Strong: return 1.0 / (s.mu * double(t));
    case StepSchedule::Kind::StrongSmooth: return 1.0 / (s.mu * double(t) + s.L);
    case StepSchedule::Kind::Stage: return 1.0 / (std::ldexp(s.mu, s.k + 1));
    case StepSchedule::Kind::StageSmooth: return 1.0 / (std::ldexp(s.mu, s.k + 1) + s.L);
  }
  throw std::logic_error("unreachable");
}

inline double project_interval(double v, double lo, double hi) {
  return std::max(lo, std::min(hi, v));
}

inline Vec project_box(Vec v, double lo, double hi) {
  for (auto& c : v) c = project_interval(c, lo, hi);
  return v;
}

enum class OutputMode { Average, RandomIndex };

struct SolverConfig {
  double x1 = 100.0;
  int T = 500;
  StepSchedule schedule;
  double lo = 50.0;
  double hi = 150.0;
  int S = 1;  // second points per round
  OutputMode output = OutputMode::Average;
};

/// Independent random streams for one (trial, algorithm) pair. xi drives the
/// hidden samples, z the second points, u the sphere directions, out the
/// random-index draw; separating them keeps trajectories reproducible when
/// unrelated pieces change their consumption.
struct SolverStreams {
  RngStream xi;
  RngStream z;
  RngStream u;
  RngStream out;

  SolverStreams(std::uint64_t base_seed, std::uint64_t trial, std::uint64_t algo_tag)
      : xi(base_seed, trial, algo_tag * 8 + 1),
        z(base_seed, trial, algo_tag * 8 + 2),
        u(base_seed, trial, algo_tag * 8 + 3),
        out(base_seed, trial, algo_tag * 8 + 4) {}
};

struct RunRecord {
  std::vector<double> xs;    // x_t, t = 1..T (pre-update iterates)
  std::vector<double> xbar;  // running averages
  std::vector<double> gaps;  // relative gap of xbar_t, when ground truth given
  double output = 0.0;
  std::uint64_t comparisons = 0;
  std::uint64_t samples = 0;
  std::uint64_t reveals = 0;
  double wall_seconds = 0.0;
};

inline double random_index_output(const std::vector<double>& xs, const StepSchedule& schedule,
                                  RngStream& rng) {
  if (xs.empty()) throw std::invalid_argument("random_index_output: empty trajectory");
  double total = 0.0;
  for (std::size_t t = 0; t < xs.size(); ++t) total += step_size(schedule, int(t) + 1);
  double u = rng.uniform() * total;
  double acc = 0.0;
  for (std::size_t t = 0; t < xs.size(); ++t) {
    acc += step_size(schedule, int(t) + 1);
    if (u < acc) return xs[t];
  }
  return xs.back();
}

namespace detail {

class StopWatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline void finish_record(RunRecord& rec, const SolverConfig& cfg, SolverStreams& st,
                          const StopWatch& sw) {
  rec.output = (cfg.output == OutputMode::Average)
                   ? rec.xbar.back()
                   : random_index_output(rec.xs, cfg.schedule, st.out);
  rec.wall_seconds = sw.seconds();
}

}  // namespace detail

/// Projected comparison-based descent, two comparisons per round (1 + S with
/// mini-batching). Records the pre-update iterate each round; the reported
/// average runs over x_1..x_T.
inline RunRecord run_cba(const SolverConfig& cfg, const DistributionSpec& dist,
                         const Objective1D& obj, const BandFamily& band, const GroundTruth* gt,
                         SolverStreams& st) {
  if (cfg.T < 1) throw std::invalid_argument("run_cba: T must be >= 1");
  if (cfg.S < 1) throw std::invalid_argument("run_cba: S must be >= 1");
  detail::StopWatch sw;
  RunRecord rec;
  rec.xs.reserve(std::size_t(cfg.T));
  double x = project_interval(cfg.x1, cfg.lo, cfg.hi);
  double sum = 0.0;
  for (int t = 1; t <= cfg.T; ++t) {
    rec.xs.push_back(x);
    sum += x;
    rec.xbar.push_back(sum / double(t));
    if (gt) rec.gaps.push_back(relative_gap(*gt, rec.xbar.back()));

    Round round = begin_round(dist, x, st.xi, 1 + cfg.S);
    ++rec.samples;
    BinaryOutcome first = compare(round, x);
    Side side = (first == BinaryOutcome::SampleBelow) ? Side::Below : Side::Above;
    SamplingDensity density = band.make(x, side);
    double g;
    if (cfg.S == 1) {
      double z = density.draw(st.z);
      BinaryOutcome second = compare(round, z);
      g = grad_cba(x, first, z, second, obj, density).value;
    } else {
      std::vector<std::pair<double, BinaryOutcome>> seconds;
      seconds.reserve(std::size_t(cfg.S));
      for (int s = 0; s < cfg.S; ++s) {
        double z = density.draw(st.z);
        seconds.emplace_back(z, compare(round, z));
      }
      g = minibatch_grad(x, first, seconds, obj, density);
    }
    rec.comparisons += round.queries();
    x = project_interval(x - step_size(cfg.schedule, t) * g, cfg.lo, cfg.hi);
  }
  detail::finish_record(rec, cfg, st, sw);
  return rec;
}

/// Categorical-outcome variant: the first query reports side and band, the
/// second point comes from that band's own density.
inline RunRecord run_cba_c(const SolverConfig& cfg, const DistributionSpec& dist,
                           const Objective1D& obj, const CategoricalScheme& scheme,
                           const GroundTruth* gt, SolverStreams& st) {
  if (cfg.T < 1) throw std::invalid_argument("run_cba_c: T must be >= 1");
  detail::StopWatch sw;
  RunRecord rec;
  rec.xs.reserve(std::size_t(cfg.T));
  double x = project_interval(cfg.x1, cfg.lo, cfg.hi);
  double sum = 0.0;
  for (int t = 1; t <= cfg.T; ++t) {
    rec.xs.push_back(x);
    sum += x;
    rec.xbar.push_back(sum / double(t));
    if (gt) rec.gaps.push_back(relative_gap(*gt, rec.xbar.back()));

    Round round = begin_round(dist, x, st.xi, 2);
    ++rec.samples;
    CategoricalOutcome out = compare_categorical(round, x, scheme);
    SamplingDensity density = scheme.band_density(x, out.side, out.band);
    double z = density.draw(st.z);
    BinaryOutcome second = compare(round, z);
    double g = grad_cba_categorical(x, out, z, second, obj, scheme).value;
    rec.comparisons += round.queries();
    x = project_interval(x - step_size(cfg.schedule, t) * g, cfg.lo, cfg.hi);
  }
  detail::finish_record(rec, cfg, st, sw);
  return rec;
}

/// Full-information baseline: observes the sample directly and steps along
/// the analytic derivative. Consumes one sample and zero comparisons per
/// round.
inline RunRecord run_sgd(const SolverConfig& cfg, const DistributionSpec& dist,
                         const Objective1D& obj, const GroundTruth* gt, SolverStreams& st) {
  if (cfg.T < 1) throw std::invalid_argument("run_sgd: T must be >= 1");
  detail::StopWatch sw;
  RunRecord rec;
  rec.xs.reserve(std::size_t(cfg.T));
  double x = project_interval(cfg.x1, cfg.lo, cfg.hi);
  double sum = 0.0;
  for (int t = 1; t <= cfg.T; ++t) {
    rec.xs.push_back(x);
    sum += x;
    rec.xbar.push_back(sum / double(t));
    if (gt) rec.gaps.push_back(relative_gap(*gt, rec.xbar.back()));

    Round round = begin_round(dist, x, st.xi, 0, /*baseline_allowed=*/true);
    ++rec.samples;
    double xi = reveal_for_baseline(round);
    ++rec.reveals;
    double g = obj.dx(x, xi, xi <= x ? Side::Below : Side::Above);
    x = project_interval(x - step_size(cfg.schedule, t) * g, cfg.lo, cfg.hi);
  }
  detail::finish_record(rec, cfg, st, sw);
  return rec;
}

/// Stage lengths for the restart scheme: variant A doubles from 16, variant B
/// adds 4 warmup rounds per stage.
struct StagePlan {
  enum class Variant { A, B };
  Variant variant = Variant::A;
  int K = 3;

  int stage_length(int k) const {
    int base = 1 << (k + 3);
    return variant == Variant::B ? base + 4 : base;
  }
  int total() const {
    int sum = 0;
    for (int k = 1; k <= K; ++k) sum += stage_length(k);
    return sum;
  }
};

/// Restarted descent: each stage runs the base solver from the previous
/// stage's averaged output with a stage-constant step size. When total_cap >
/// 0 the plan is extended (or truncated) so exactly total_cap global rounds
/// execute; gaps are recorded against the stage-local running average.
inline RunRecord run_mcba(double x1, const StagePlan& plan, double mu, std::optional<double> L,
                          const DistributionSpec& dist, const Objective1D& obj,
                          const BandFamily& band, const GroundTruth* gt, SolverStreams& st,
                          double lo = 50.0, double hi = 150.0, int S = 1, int total_cap = 0) {
  if (!(mu > 0.0)) throw std::invalid_argument("run_mcba: mu must be positive");
  detail::StopWatch sw;
  RunRecord rec;
  double xhat = project_interval(x1, lo, hi);
  int done = 0;
  for (int k = 1;; ++k) {
    if (total_cap <= 0 && k > plan.K) break;
    int Tk = plan.stage_length(k);
    if (total_cap > 0) {
      if (done >= total_cap) break;
      Tk = std::min(Tk, total_cap - done);
    }
    SolverConfig cfg;
    cfg.x1 = xhat;
    cfg.T = Tk;
    cfg.lo = lo;
    cfg.hi = hi;
    cfg.S = S;
    cfg.schedule = L ? StepSchedule::stage_smooth(k, mu, *L) : StepSchedule::stage(k, mu);
    RunRecord stage = run_cba(cfg, dist, obj, band, gt, st);
    rec.xs.insert(rec.xs.end(), stage.xs.begin(), stage.xs.end());
    rec.xbar.insert(rec.xbar.end(), stage.xbar.begin(), stage.xbar.end());
    rec.gaps.insert(rec.gaps.end(), stage.gaps.begin(), stage.gaps.end());
    rec.comparisons += stage.comparisons;
    rec.samples += stage.samples;
    xhat = stage.output;
    done += Tk;
  }
  rec.output = xhat;
  rec.wall_seconds = sw.seconds();
  return rec;
}

/// Box-constrained quadratic ground truth: the expected cost separates into
/// the deterministic quadratic around the sample mean plus a noise floor.
struct GroundTruthQP {
  Mat Q;
  Vec mean;        // per-coordinate sample mean
  double sigma2;   // per-coordinate sample variance
  double Hstar;    // 0.5 sigma^2 tr(Q)
  double H(const Vec& x) const {
    Vec diff(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) diff[i] = x[i] - mean[i];
    return 0.5 * quad_form(Q, diff) + Hstar;
  }
  double gap(const Vec& x) const { return (H(x) - Hstar) / Hstar; }
};

inline GroundTruthQP make_ground_truth_qp(const Mat& Q, const DistributionSpec& coord_dist) {
  GroundTruthQP gt;
  gt.Q = Q;
  gt.mean.assign(std::size_t(Q.d), coord_dist.mean());
  gt.sigma2 = coord_dist.variance();
  double tr = 0.0;
  for (int i = 0; i < Q.d; ++i) tr += Q(i, i);
  gt.Hstar = 0.5 * gt.sigma2 * tr;
  return gt;
}

struct QPConfig {
  Vec x1;
  int T = 2000;
  double lo = 50.0;
  double hi = 150.0;
};

struct RunRecordQP {
  std::vector<Vec> xs;
  std::vector<double> gaps;  // gap of the running average
  Vec output;
  std::uint64_t comparisons = 0;
  std::uint64_t samples = 0;
  double wall_seconds = 0.0;
};

namespace detail {

/// One quadratic-protocol round at iterate x; returns the gradient estimate.
inline Vec qp_round(const Vec& x, const Mat& Q, const DistributionSpec& coord_dist,
                    const RadialDensity& radial, SolverStreams& st, std::uint64_t& comparisons) {
  int d = Q.d;
  Round round = begin_round_qp(coord_dist, d, Q, st.xi);
  Vec u = sphere_sample(d, st.u);
  double z = radial.draw(st.z);
  PairOutcome pair = qp_compare_pair(round, x, u, z);
  Vec winner(x.size());
  double sgn = (pair == PairOutcome::PlusSmaller) ? 1.0 : -1.0;
  for (std::size_t i = 0; i < x.size(); ++i) winner[i] = x[i] + sgn * z * u[i];
  bool wle = qp_compare_winner_vs_center(round, winner, x);
  comparisons += round.queries();
  auto quad = [&Q](const Vec& v) { return quad_form(Q, v); };
  return grad_qp(x, u, z, pair, wle, quad, radial).value;
}

}  // namespace detail

/// Quadratic-protocol descent with step 1/(mu t + L), mu and L the extreme
/// eigenvalues of Q. Output is the iterate average.
inline RunRecordQP run_cba_qp(const QPConfig& cfg, const Mat& Q,
                              const DistributionSpec& coord_dist, const RadialDensity& radial,
                              const GroundTruthQP* gt, SolverStreams& st) {
  require_positive_definite(Q);
  if (int(cfg.x1.size()) != Q.d) throw std::invalid_argument("run_cba_qp: x1 dimension mismatch");
  detail::StopWatch sw;
  auto [mu, L] = eigen_extremes(Q);
  StepSchedule sched = StepSchedule::strong_smooth(mu, L);
  RunRecordQP rec;
  Vec x = project_box(cfg.x1, cfg.lo, cfg.hi);
  Vec sum(x.size(), 0.0);
  for (int t = 1; t <= cfg.T; ++t) {
    rec.xs.push_back(x);
    for (std::size_t i = 0; i < x.size(); ++i) sum[i] += x[i];
    if (gt) {
      Vec avg(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) avg[i] = sum[i] / double(t);
      rec.gaps.push_back(gt->gap(avg));
    }
    ++rec.samples;
    Vec g = detail::qp_round(x, Q, coord_dist, radial, st, rec.comparisons);
    double eta = step_size(sched, t);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] -= eta * g[i];
    x = project_box(std::move(x), cfg.lo, cfg.hi);
  }
  rec.output.assign(x.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) rec.output[i] = sum[i] / double(cfg.T);
  rec.wall_seconds = sw.seconds();
  return rec;
}

/// Restarted quadratic-protocol descent (variant B stage lengths, step
/// 1/(2^{k+1} mu + L)). total_cap as in run_mcba.
inline RunRecordQP run_mcba_qp(const QPConfig& cfg, int K, const Mat& Q,
                               const DistributionSpec& coord_dist, const RadialDensity& radial,
                               const GroundTruthQP* gt, SolverStreams& st, int total_cap = 0) {
  require_positive_definite(Q);
  detail::StopWatch sw;
  auto [mu, L] = eigen_extremes(Q);
  StagePlan plan{StagePlan::Variant::B, K};
  RunRecordQP rec;
  Vec xhat = project_box(cfg.x1, cfg.lo, cfg.hi);
  int done = 0;
  for (int k = 1;; ++k) {
    if (total_cap <= 0 && k > K) break;
    int Tk = plan.stage_length(k);
    if (total_cap > 0) {
      if (done >= total_cap) break;
      Tk = std::min(Tk, total_cap - done);
    }
    StepSchedule sched = StepSchedule::stage_smooth(k, mu, L);
    Vec x = xhat;
    Vec sum(x.size(), 0.0);
    for (int t = 1; t <= Tk; ++t) {
      rec.xs.push_back(x);
      for (std::size_t i = 0; i < x.size(); ++i) sum[i] += x[i];
      if (gt) {
        Vec avg(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) avg[i] = sum[i] / double(t);
        rec.gaps.push_back(gt->gap(avg));
      }
      ++rec.samples;
      Vec g = detail::qp_round(x, Q, coord_dist, radial, st, rec.comparisons);
      double eta = step_size(sched, t);
      for (std::size_t i = 0; i < x.size(); ++i) x[i] -= eta * g[i];
      x = project_box(std::move(x), cfg.lo, cfg.hi);
    }
    for (std::size_t i = 0; i < x.size(); ++i) xhat[i] = sum[i] / double(Tk);
    done += Tk;
  }
  rec.output = xhat;
  rec.wall_seconds = sw.seconds();
  return rec;
}

struct MoreauParams {
  double lambda;
  double rho;

  MoreauParams(double lambda_, double rho_) : lambda(lambda_), rho(rho_) {
    if (!(lambda > 0.0) || !(rho > 0.0))
      throw std::invalid_argument("envelope parameters must be positive");
    if (!(lambda < 1.0 / rho))
      throw std::invalid_argument("envelope requires lambda < 1/rho");
  }
};

/// Proximal-point stationarity measure |x - yhat| / lambda, with yhat the
/// minimizer of H(y) + (x - y)^2 / (2 lambda) over [lo, hi]. Coarse 256-point
/// grid scan, then golden-section refinement to 1e-8.
inline double moreau_stationarity(const std::function<double(double)>& H, double x,
                                  const MoreauParams& p, double lo, double hi) {
  auto phi = [&](double y) { return H(y) + (x - y) * (x - y) / (2.0 * p.lambda); };
  int n = 256;
  double best = lo, bestv = phi(lo);
  for (int i = 1; i <= n; ++i) {
    double y = lo + (hi - lo) * double(i) / double(n);
    double v = phi(y);
    if (v < bestv) {
      bestv = v;
      best = y;
    }
  }
  double step = (hi - lo) / double(n);
  double a = std::max(lo, best - step), b = std::min(hi, best + step);
  const double gr = 0.6180339887498949;
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = phi(c), fd = phi(d);
  while (b - a > 1e-8) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = phi(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = phi(d);
    }
  }
  double yhat = 0.5 * (a + b);
  return std::abs(x - yhat) / p.lambda;
}

}  // namespace cbopt

#endif  // CBOPT_SOLVERS_HPP
