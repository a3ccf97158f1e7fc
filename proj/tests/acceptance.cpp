// End-to-end acceptance checks. Each criterion prints exactly one
// "pass"/"FAIL" line; the exit status is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "cbopt/labkit.hpp"

using namespace cbopt;

namespace {

int failures = 0;

void report(int number, bool pass, const std::string& what, double seconds) {
  if (!pass) ++failures;
  std::printf("criterion %2d [%s] (%.1fs): %s\n", number, pass ? "pass" : "FAIL", seconds,
              what.c_str());
  std::fflush(stdout);
}

double now_seconds() {
  using clock = std::chrono::steady_clock;
  static clock::time_point t0 = clock::now();
  return std::chrono::duration<double>(clock::now() - t0).count();
}

double slope(const std::vector<double>& mean, int t_lo, int t_hi) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (int t = t_lo; t <= t_hi; ++t) {
    double lx = std::log10(double(t));
    double ly = std::log10(std::max(mean[std::size_t(t) - 1], 1e-300));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  return (double(n) * sxy - sx * sy) / (double(n) * sxx - sx * sx);
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

int main() {
  char buf[512];

  {  // 1. estimator mean equals the expected-cost derivative
    double t0 = now_seconds();
    struct Case {
      const char* label;
      Objective1D obj;
      DistributionSpec dist;
      const char* band;
      double x;
    };
    std::vector<Case> cases = {
        {"h1/uniform/uniform-band@120", make_h1(), DistributionSpec::uniform(50, 150), "uniform",
         120.0},
        {"h1/normal/exp-band@110", make_h1(), DistributionSpec::normal(100, 100), "exp:0.0625",
         110.0},
        {"h2/uniform/uniform-band@105", make_h2(), DistributionSpec::uniform(50, 150), "uniform",
         105.0},
        {"h2/normal/exp-band@105", make_h2(), DistributionSpec::normal(100, 100), "exp:0.0625",
         105.0},
    };
    bool pass = true;
    std::string detail;
    for (auto& c : cases) {
      GroundTruth gt = ground_truth(c.obj, c.dist);
      double target = gt.Hprime(c.x);
      BandFamily band = cbopt::detail::parse_band(c.band, c.obj, c.dist);
      auto [mean, se] = cbopt::detail::estimator_mc(c.obj, c.dist, band, c.x, 1000000, 424201);
      bool okc = std::abs(mean - target) <= 3.0 * se;
      pass = pass && okc;
      std::snprintf(buf, sizeof(buf), "%s%s mean %.3f target %.3f se %.4f;", okc ? "" : " OFF ",
                    c.label, mean, target, se);
      detail += buf;
    }
    report(1, pass, "estimator unbiasedness over sample and second point:" + detail,
           now_seconds() - t0);
  }

  {  // 2. empirical second moment under the computed bound
    double t0 = now_seconds();
    Objective1D h1 = make_h1();
    DistributionSpec U = DistributionSpec::uniform(50, 150);
    BandFamily band = cbopt::detail::parse_band("uniform", h1, U);
    AssumptionConstants c = compute_constants(h1, U, band);
    bool pass = true;
    std::string detail;
    for (double x : {100.0, 120.0, 150.0}) {
      RngStream sxi(77, 0, 1), sz(77, 0, 2);
      double sum2 = 0.0;
      const long n = 1000000;
      for (long i = 0; i < n; ++i) {
        Round r = begin_round(U, x, sxi);
        BinaryOutcome first = compare(r, x);
        Side side = first == BinaryOutcome::SampleBelow ? Side::Below : Side::Above;
        SamplingDensity f = band.make(x, side);
        double z = f.draw(sz);
        double g = grad_cba(x, first, z, compare(r, z), h1, f).value;
        sum2 += g * g;
      }
      double m2 = sum2 / double(n);
      pass = pass && (m2 <= 1.05 * c.G2);
      std::snprintf(buf, sizeof(buf), " E g^2 at x=%g: %.0f;", x, m2);
      detail += buf;
    }
    std::snprintf(buf, sizeof(buf), " bound 1.05*G2 = %.0f", 1.05 * c.G2);
    report(2, pass, "second-moment bound:" + detail + buf, now_seconds() - t0);
  }

  {  // 3. quadratic estimator unbiasedness at a fixed sample
    double t0 = now_seconds();
    bool pass = true;
    std::string detail;
    RadialDensity radial = make_radial_exponential(0.0625);
    for (int d : {1, 2, 5}) {
      RngStream qrng(31337, std::uint64_t(d), kQRecipeTag);
      Mat Qp(d);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) Qp(i, j) = qrng.normal();
      Mat Q(d);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          double v = 0.0;
          for (int k = 0; k < d; ++k) v += Qp(k, i) * Qp(k, j);
          Q(i, j) = v / double(d) + (i == j ? 1.0 : 0.0);
        }
      Vec x(std::size_t(d), 0.0), xi(std::size_t(d), 0.0);
      for (int i = 0; i < d; ++i) {
        x[std::size_t(i)] = 100.0 + 3.0 * i;
        xi[std::size_t(i)] = 95.0 - 2.0 * i;
      }
      Vec diff(std::size_t(d), 0.0);
      for (int i = 0; i < d; ++i) diff[std::size_t(i)] = x[std::size_t(i)] - xi[std::size_t(i)];
      Vec want = mat_vec(Q, diff);
      auto cost = [&](const Vec& y) {
        Vec dd(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) dd[i] = y[i] - xi[i];
        return 0.5 * quad_form(Q, dd);
      };
      auto quad = [&Q](const Vec& v) { return quad_form(Q, v); };
      RngStream su(31337, std::uint64_t(d), 3), sz(31337, std::uint64_t(d), 2);
      const long n = 1000000;
      Vec mean(std::size_t(d), 0.0), m2(std::size_t(d), 0.0);
      for (long i = 1; i <= n; ++i) {
        Vec u = sphere_sample(d, su);
        double z = radial.draw(sz);
        Vec plus(x.size()), minus(x.size());
        for (std::size_t k = 0; k < x.size(); ++k) {
          plus[k] = x[k] + z * u[k];
          minus[k] = x[k] - z * u[k];
        }
        PairOutcome pair = cost(plus) < cost(minus) ? PairOutcome::PlusSmaller
                                                    : PairOutcome::MinusSmallerOrEqual;
        const Vec& winner = pair == PairOutcome::PlusSmaller ? plus : minus;
        bool wle = cost(winner) <= cost(x);
        Vec g = grad_qp(x, u, z, pair, wle, quad, radial).value;
        for (std::size_t k = 0; k < x.size(); ++k) {
          double delta = g[k] - mean[k];
          mean[k] += delta / double(i);
          m2[k] += delta * (g[k] - mean[k]);
        }
      }
      double worst = 0.0;
      bool okd = true;
      for (std::size_t k = 0; k < x.size(); ++k) {
        double se = std::sqrt(m2[k] / double(n - 1) / double(n));
        double dev = std::abs(mean[k] - want[k]) / (3.0 * se);
        worst = std::max(worst, dev);
        okd = okd && dev <= 1.0;
      }
      pass = pass && okd;
      std::snprintf(buf, sizeof(buf), " d=%d worst |dev|/3se = %.2f;", d, worst);
      detail += buf;
    }
    report(3, pass, "quadratic estimator unbiasedness:" + detail, now_seconds() - t0);
  }

  Results fig1a_desk;  // reused by criterion 11's reference semantics? no; by 4 only
  {  // 4. desk-scale convergence: comparison solver within 2x the baseline's pace
    double t0 = now_seconds();
    ExperimentSpec s = preset("fig1a");
    s.trials = 200;
    s.seed = 7;
    fig1a_desk = run_experiment(s, 2);
    double cbastc500 = 0.0, sgdstc125 = 0.0;
    for (const auto& [alg, st] : fig1a_desk) {
      if (alg == "cbastc") cbastc500 = st.mean[499];
      if (alg == "sgdstc") sgdstc125 = st.mean[124];
    }
    bool pass = cbastc500 <= sgdstc125;
    std::snprintf(buf, sizeof(buf),
                  "gap(comparison, t=500) = %.5f vs gap(baseline, t=125) = %.5f", cbastc500,
                  sgdstc125);
    report(4, pass, buf, now_seconds() - t0);
  }

  {  // 5. log-log rate slopes
    double t0 = now_seconds();
    ExperimentSpec s = preset("fig1a");
    s.algorithms = {"cba", "cbastc"};
    s.trials = 1000;
    s.seed = 7;
    Results r = run_experiment(s, 2);
    double s_cba = slope(r[0].second.mean, 50, 500);
    double s_stc = slope(r[1].second.mean, 50, 500);
    bool pass = (s_stc >= -1.6 && s_stc <= -0.5) && (s_cba >= -1.2 && s_cba <= -0.3);
    std::snprintf(buf, sizeof(buf),
                  "slope 1/(mu t) = %.3f (want [-1.6,-0.5]); slope 1/sqrt(t) = %.3f (want "
                  "[-1.2,-0.3])",
                  s_stc, s_cba);
    report(5, pass, buf, now_seconds() - t0);
  }

  {  // 6. restart schedule totals
    double t0 = now_seconds();
    int a = StagePlan{StagePlan::Variant::A, 3}.total();
    int b = StagePlan{StagePlan::Variant::B, 2}.total();
    bool pass = (a == 112) && (b == 56);
    std::snprintf(buf, sizeof(buf), "variant A K=3 total %d (want 112); variant B K=2 total %d "
                  "(want 56)", a, b);
    report(6, pass, buf, now_seconds() - t0);
  }

  {  // 7. one comparison per round cannot separate the two mixture laws
    double t0 = now_seconds();
    DistributionSpec F1 = DistributionSpec::mixture_uniform(-3, -2, 2, 3);
    DistributionSpec F2 = DistributionSpec::mixture_uniform(-3, -2, 3, 4);
    const long n = 100000;
    double bound = 3.0 * std::sqrt(0.25 / double(n));
    bool pass = true;
    double worst = 0.0;
    int which = 0;
    for (const auto* law : {&F1, &F2}) {
      ++which;
      for (double x : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
        RngStream rng(5150, std::uint64_t(which), std::uint64_t((x + 2.0) * 8));
        long below = 0;
        for (long i = 0; i < n; ++i) {
          Round r = begin_round(*law, x, rng);
          if (compare(r, x) == BinaryOutcome::SampleBelow) ++below;
        }
        double dev = std::abs(double(below) / double(n) - 0.5);
        worst = std::max(worst, dev);
        pass = pass && dev <= bound;
      }
    }
    std::snprintf(buf, sizeof(buf), "worst |freq - 0.5| = %.5f, 3 sigma bound %.5f", worst,
                  bound);
    report(7, pass, buf, now_seconds() - t0);
  }

  {  // 8. quadratic-protocol convergence ordering
    double t0 = now_seconds();
    ExperimentSpec s = preset("fig5");
    s.trials = 200;
    s.seed = 7;
    Results r = run_experiment(s, 2);
    const SeriesStats& cba = r[0].second;   // cba-qp
    const SeriesStats& mcba = r[1].second;  // mcba-qp
    double c2000 = cba.mean[1999], m2000 = mcba.mean[1999];
    double c200 = cba.mean[199], m200 = mcba.mean[199];
    // decay factor 0.30: the exponential importance weight is heavy-tailed at
    // d=5 (rare e^{lambda z} spikes set the late floor), which caps the
    // achievable decade-over-decade decay of the averaged iterate near 3.5x
    bool pass = (m2000 <= 1.2 * c2000) && (c2000 <= 0.30 * c200) && (m2000 <= 0.30 * m200);
    std::snprintf(buf, sizeof(buf),
                  "restarted gap(2000) %.5f vs 1.2x plain %.5f; decay plain %.3f, restarted "
                  "%.3f (want <= 0.30)",
                  m2000, 1.2 * c2000, c2000 / c200, m2000 / m200);
    report(8, pass, buf, now_seconds() - t0);
  }

  {  // 9. categorical outcomes converge at least as fast as binary ones
    double t0 = now_seconds();
    ExperimentSpec s = preset("fig1a");
    s.algorithms = {"cbastc", "cba-c:5"};
    s.trials = 1000;
    s.seed = 7;
    Results r = run_experiment(s, 2);
    double bin = r[0].second.mean[499], cat = r[1].second.mean[499];
    bool pass = cat <= bin;
    std::snprintf(buf, sizeof(buf), "gap(categorical m=5, t=500) = %.5f vs gap(binary) = %.5f",
                  cat, bin);
    report(9, pass, buf, now_seconds() - t0);
  }

  {  // 10. proximal-envelope diagnostic and the non-convex output rule
    double t0 = now_seconds();
    MoreauParams quad_p(0.25, 1.0);
    double v = moreau_stationarity([](double y) { return y * y; }, 1.0, quad_p, -2, 2);
    bool pass_cf = std::abs(v - 4.0 / 3.0) <= 1e-6;

    // weakly convex instance: cost |x - s| - 0.1 (x - s)^2, s tiny
    const double eps = 0.01, rho = 0.2;
    Objective1D wc;
    wc.name = "weakly-convex";
    wc.h = [](double x, double xi) {
      double d = x - xi;
      return std::abs(d) - 0.1 * d * d;
    };
    wc.dx = [](double x, double z, Side side) {
      bool below = (z < x) || (z == x && side == Side::Below);
      double d = x - z;
      return below ? 1.0 - 0.2 * d : -1.0 - 0.2 * d;
    };
    wc.cross = [](double, double, Side) { return 0.2; };
    wc.lo = -2.0;
    wc.hi = 2.0;
    DistributionSpec tight = DistributionSpec::uniform(-eps, eps);
    auto H = [eps](double x) {
      double eabs = std::abs(x) >= eps ? std::abs(x) : (x * x + eps * eps) / (2.0 * eps);
      return eabs - 0.1 * (x * x + eps * eps / 3.0);
    };
    double minH = H(0.0);
    for (int i = 0; i <= 4000; ++i) minH = std::min(minH, H(-2.0 + 4.0 * i / 4000.0));

    const int T = 5000;
    SolverConfig cfg;
    cfg.x1 = 1.0;
    cfg.T = T;
    cfg.lo = -2.0;
    cfg.hi = 2.0;
    cfg.schedule = StepSchedule::const_over_sqrt_T(T);
    BandFamily band;
    band.kind = BandFamily::Kind::Uniform;
    band.lo = -2.0;
    band.hi = 2.0;
    SolverStreams st(7, 0, 0);
    RunRecord rec = run_cba(cfg, tight, wc, band, nullptr, st);

    MoreauParams p(1.0 / (2.0 * rho), rho);
    double lambda = p.lambda;
    double mean_sq = 0.0;
    const int draws = 200;
    for (int i = 0; i < draws; ++i) {
      double xt = random_index_output(rec.xs, cfg.schedule, st.out);
      double m = moreau_stationarity(H, xt, p, -2.0, 2.0);
      mean_sq += m * m;
    }
    mean_sq /= draws;
    // envelope at the start point
    double Hl_x1 = H(1.0);
    {
      double best = 1e300;
      for (int i = 0; i <= 4000; ++i) {
        double y = -2.0 + 4.0 * i / 4000.0;
        best = std::min(best, H(y) + (1.0 - y) * (1.0 - y) / (2.0 * lambda));
      }
      Hl_x1 = best;
    }
    double G2 = 1.0;  // |estimate| <= 1 for this instance by construction
    double bound = 2.0 * ((Hl_x1 - minH) + rho * G2) / std::sqrt(double(T));
    bool pass_nc = mean_sq <= 10.0 * bound;
    std::snprintf(buf, sizeof(buf),
                  "closed form %.8f (want 4/3); mean squared stationarity %.5f vs 10x bound "
                  "%.5f",
                  v, mean_sq, 10.0 * bound);
    report(10, pass_cf && pass_nc, buf, now_seconds() - t0);
  }

  {  // 11. CLI determinism across worker counts
    double t0 = now_seconds();
    std::string cli = CBOPT_CLI_PATH;
    std::string out1 = "acceptance_t1.csv", out8 = "acceptance_t8.csv";
    std::string base = "\"" + cli + "\" run --preset fig1a --trials 50 --seed 7 --out ";
    int rc1 = std::system((base + out1 + " --threads 1 > /dev/null").c_str());
    int rc8 = std::system((base + out8 + " --threads 8 > /dev/null").c_str());
    std::string a = read_file(out1), b = read_file(out8);
    bool pass = (rc1 == 0) && (rc8 == 0) && !a.empty() && a == b;
    std::snprintf(buf, sizeof(buf), "threads 1 vs 8: %zu bytes, %s", a.size(),
                  pass ? "byte-identical" : "MISMATCH");
    std::remove(out1.c_str());
    std::remove(out8.c_str());
    report(11, pass, buf, now_seconds() - t0);
  }

  if (failures == 0) std::printf("all 11 criteria passed\n");
  return failures;
}
