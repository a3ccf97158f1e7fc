#ifndef CBOPT_LABKIT_HPP
#define CBOPT_LABKIT_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "cbopt/estimators.hpp"
#include "cbopt/oracle.hpp"
#include "cbopt/problems.hpp"
#include "cbopt/rng.hpp"
#include "cbopt/sampling.hpp"
#include "cbopt/solvers.hpp"

namespace cbopt {

// Sub-stream tags: SolverStreams uses algo*8 + {1..4}; tag 5 is the shared
// initial-point stream, tag 6 seeds the quadratic-matrix recipe. Neither can
// collide with a solver stream.
inline constexpr std::uint64_t kInitTag = 5;
inline constexpr std::uint64_t kQRecipeTag = 6;

struct RunFailure : std::runtime_error {
  explicit RunFailure(const std::string& what) : std::runtime_error(what) {}
};

// ---- experiment description ------------------------------------------------

struct ExperimentSpec {
  std::string name = "custom";
  std::string objective = "h1";
  std::string distribution = "uniform:50,150";
  std::vector<std::string> algorithms;
  std::string band = "uniform";  // "uniform" | "exp:<lambda>" | "optimal"
  double mu = 0.5;
  int T = 500;
  int trials = 200;        // desk-scale default
  int paper_trials = 2000; // scale used by the source experiments
  std::uint64_t seed = 1;
  int S = 1;
  double tail_lambda = 0.0625;  // categorical tail-band rate
  bool qp = false;
  int d = 5;
  std::string radial = "rexp:0.0625";
  std::vector<std::string> notes;  // declared defaults, emitted as CSV comments
};

inline std::vector<std::string> preset_names() {
  return {"fig1a", "fig1b", "fig1c", "fig1d", "fig2", "fig3",
          "fig4",  "fig5",  "fig5d20", "figE"};
}

inline ExperimentSpec preset(const std::string& name) {
  ExperimentSpec s;
  s.name = name;
  auto declared = [&s](const std::string& line) { s.notes.push_back("declared: " + line); };
  if (name == "fig1a" || name == "fig1c") {
    s.objective = (name == "fig1a") ? "h1" : "h2";
    s.distribution = "uniform:50,150";
    s.band = "uniform";
    s.algorithms = {"cba", "cbastc", "mcba", "sgd", "sgdstc"};
  } else if (name == "fig1b" || name == "fig1d") {
    s.objective = (name == "fig1b") ? "h1" : "h2";
    s.distribution = "normal:100,100";
    s.band = "exp:0.0625";
    s.algorithms = {"cba", "cbastc", "mcba", "sgd", "sgdstc"};
  } else if (name == "fig2") {
    s.objective = "h1";
    s.distribution = "normal:100,100";
    s.band = "exp:0.0625";
    for (int k = -8; k <= 1; ++k) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "cbastc:lam=%.12g", std::ldexp(1.0, k));
      s.algorithms.push_back(buf);
    }
    declared("lambda sweep 2^-8..2^1; source states only the best value 2^-4");
  } else if (name == "fig3") {
    s.objective = "h1";
    s.distribution = "uniform:50,150";
    s.band = "exp:0.0625";
    s.algorithms = {"cbastc:band=exp", "cbastc:band=optimal"};
    declared("uniform law chosen for the exponential-vs-optimal band comparison");
  } else if (name == "fig4") {
    s.objective = "h1";
    s.distribution = "uniform:50,150";
    s.band = "uniform";
    for (int S : {1, 2, 5, 10, 100}) s.algorithms.push_back("cbastc:S=" + std::to_string(S));
    declared("mini-batch sweep runs the 1/(mu t) schedule");
  } else if (name == "fig5" || name == "fig5d20") {
    s.qp = true;
    s.d = (name == "fig5") ? 5 : 20;
    s.T = 2000;
    s.distribution = "normal:100,2500";
    s.radial = "rexp:0.0625";
    s.algorithms = {"cba-qp", "mcba-qp"};
  } else if (name == "figE") {
    s.objective = "h1";
    s.distribution = "uniform:50,150";
    s.band = "uniform";
    s.algorithms = {"cbastc", "cba-c:3", "cba-c:5"};
    declared("categorical thresholds 0,3,7 (m=3) and 0,2,4,7,12 (m=5), tail rate 0.0625");
    declared("categorical runs use the 1/(mu t) schedule");
  } else {
    throw std::invalid_argument("unknown preset: " + name);
  }
  s.notes.push_back("declared: desk-scale trials=" + std::to_string(s.trials) +
                    " (source uses " + std::to_string(s.paper_trials) + ")");
  return s;
}

// ---- algorithm selectors ---------------------------------------------------

struct AlgorithmSpec {
  std::string id;    // verbatim selector, used as the CSV label
  std::string base;  // cba | cbastc | mcba | cba-c | cba-qp | mcba-qp | sgd | sgdstc
  int m = 0;         // categorical band count
  int S = 1;
  std::optional<double> lam;         // exponential band rate override
  std::optional<std::string> band;   // band family override
};

inline AlgorithmSpec parse_algorithm(const std::string& id, int default_S) {
  AlgorithmSpec a;
  a.id = id;
  a.S = default_S;
  std::vector<std::string> tokens;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = id.find(':', start);
    tokens.push_back(id.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  a.base = tokens[0];
  static const std::vector<std::string> known = {"cba",    "cbastc", "mcba", "cba-c",
                                                 "cba-qp", "mcba-qp", "sgd",  "sgdstc"};
  if (std::find(known.begin(), known.end(), a.base) == known.end())
    throw std::invalid_argument("unknown algorithm: " + id);
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    const std::string& t = tokens[i];
    if (t.find('=') == std::string::npos) {
      if (a.base != "cba-c") throw std::invalid_argument("bad algorithm option: " + id);
      a.m = std::stoi(t);
    } else if (t.rfind("S=", 0) == 0) {
      a.S = std::stoi(t.substr(2));
    } else if (t.rfind("lam=", 0) == 0) {
      a.lam = std::stod(t.substr(4));
    } else if (t.rfind("band=", 0) == 0) {
      a.band = t.substr(5);
    } else {
      throw std::invalid_argument("bad algorithm option: " + id);
    }
  }
  if (a.base == "cba-c" && a.m == 0)
    throw std::invalid_argument("categorical selector needs a band count, e.g. cba-c:3");
  return a;
}

inline CategoricalScheme default_scheme(int m, double tail_lambda) {
  if (m == 1) return CategoricalScheme::make({0.0, kInf}, tail_lambda);
  if (m == 3) return CategoricalScheme::make({0.0, 3.0, 7.0, kInf}, tail_lambda);
  if (m == 5) return CategoricalScheme::make({0.0, 2.0, 4.0, 7.0, 12.0, kInf}, tail_lambda);
  throw std::invalid_argument("no default thresholds for m=" + std::to_string(m));
}

// ---- results ---------------------------------------------------------------

struct SeriesStats {
  std::vector<double> mean;
  std::vector<double> se;  // sample sd / sqrt(trials); 0 for a single trial
  int trials = 0;
  double wall_seconds = 0.0;
};

using Results = std::vector<std::pair<std::string, SeriesStats>>;

/// Per-trial gap series before aggregation.
struct RawResults {
  std::vector<std::string> algorithms;
  // gaps[algo][trial][t]; aborted trials hold an empty vector
  std::vector<std::vector<std::vector<double>>> gaps;
  std::vector<std::vector<double>> wall;
  int requested_trials = 0;
  int aborted = 0;
};

inline Results aggregate(const RawResults& raw) {
  Results out;
  for (std::size_t ai = 0; ai < raw.algorithms.size(); ++ai) {
    SeriesStats st;
    std::size_t T = 0;
    for (const auto& trial : raw.gaps[ai])
      if (!trial.empty()) T = trial.size();
    st.mean.assign(T, 0.0);
    st.se.assign(T, 0.0);
    std::vector<double> m2(T, 0.0);
    int n = 0;
    for (const auto& trial : raw.gaps[ai]) {
      if (trial.empty()) continue;
      ++n;
      for (std::size_t t = 0; t < T; ++t) {
        double delta = trial[t] - st.mean[t];
        st.mean[t] += delta / double(n);
        m2[t] += delta * (trial[t] - st.mean[t]);
      }
    }
    st.trials = n;
    if (n > 1)
      for (std::size_t t = 0; t < T; ++t) st.se[t] = std::sqrt(m2[t] / double(n - 1) / double(n));
    for (double w : raw.wall[ai]) st.wall_seconds += w;
    out.emplace_back(raw.algorithms[ai], std::move(st));
  }
  return out;
}

// ---- experiment context ----------------------------------------------------

namespace detail {

/// Replaces a quadrature-backed expected cost with a tabulated interpolant so
/// per-iteration gap evaluation stays cheap. Chords of a convex function lie
/// above it, so interpolated gaps stay nonnegative.
inline GroundTruth tabulate_ground_truth(const GroundTruth& gt, double lo, double hi,
                                         int n = 1025) {
  if (gt.method == GroundTruth::Method::ClosedForm) return gt;
  auto table = std::make_shared<std::vector<double>>();
  table->reserve(std::size_t(n));
  for (int i = 0; i < n; ++i) table->push_back(gt.H(lo + (hi - lo) * double(i) / double(n - 1)));
  GroundTruth fast = gt;
  double step = (hi - lo) / double(n - 1);
  fast.H = [table, lo, hi, step](double x) {
    double pos = std::clamp((x - lo) / step, 0.0, double(table->size() - 1));
    std::size_t i = std::min(std::size_t(pos), table->size() - 2);
    double frac = pos - double(i);
    return (*table)[i] * (1.0 - frac) + (*table)[i + 1] * frac;
  };
  return fast;
}

inline RadialDensity parse_radial(const std::string& id) {
  double v = 0.0;
  if (std::sscanf(id.c_str(), "rexp:%lf", &v) == 1) return make_radial_exponential(v);
  if (std::sscanf(id.c_str(), "runiform:%lf", &v) == 1) return make_radial_uniform(v);
  throw std::invalid_argument("unknown radial selector: " + id);
}

inline BandFamily parse_band(const std::string& id, const Objective1D& obj,
                             const DistributionSpec& dist) {
  BandFamily b;
  b.lo = obj.lo;
  b.hi = obj.hi;
  b.obj = &obj;
  b.dist = &dist;
  double v = 0.0;
  if (id == "uniform") {
    b.kind = BandFamily::Kind::Uniform;
  } else if (std::sscanf(id.c_str(), "exp:%lf", &v) == 1) {
    b.kind = BandFamily::Kind::Exponential;
    b.lambda = v;
  } else if (id == "optimal") {
    b.kind = BandFamily::Kind::Optimal;
  } else {
    throw std::invalid_argument("unknown band selector: " + id);
  }
  return b;
}

/// Immutable shared state for one experiment; safe for concurrent trials.
struct ExperimentContext {
  ExperimentSpec spec;
  std::vector<AlgorithmSpec> algs;
  // one-dimensional pieces
  Objective1D obj;
  DistributionSpec dist;
  GroundTruth gt;
  // quadratic pieces
  Mat Q;
  DistributionSpec coord_dist;
  RadialDensity radial;
  GroundTruthQP gtqp;

  explicit ExperimentContext(const ExperimentSpec& s) : spec(s) {
    for (const auto& id : s.algorithms) algs.push_back(parse_algorithm(id, s.S));
    if (s.qp) {
      coord_dist = parse_distribution(s.distribution);
      radial = parse_radial(s.radial);
      RngStream qrng(s.seed, 0, kQRecipeTag);
      Mat Qp(s.d);
      for (int i = 0; i < s.d; ++i)
        for (int j = 0; j < s.d; ++j) Qp(i, j) = qrng.normal();
      Q = Mat(s.d);
      for (int i = 0; i < s.d; ++i)
        for (int j = 0; j < s.d; ++j) {
          double v = 0.0;
          for (int k = 0; k < s.d; ++k) v += Qp(k, i) * Qp(k, j);
          Q(i, j) = v / double(s.d) + (i == j ? 1.0 : 0.0);
        }
      gtqp = make_ground_truth_qp(Q, coord_dist);
    } else {
      obj = parse_objective(s.objective);
      dist = parse_distribution(s.distribution);
      gt = tabulate_ground_truth(ground_truth(obj, dist), obj.lo, obj.hi);
    }
  }

  BandFamily band_for(const AlgorithmSpec& a) const {
    std::string sel = spec.band;
    if (a.band) {
      if (*a.band == "exp")
        sel = "exp:" + std::to_string(a.lam.value_or(0.0625));
      else
        sel = *a.band;
    }
    BandFamily b = parse_band(sel, obj, dist);
    if (a.lam) {
      b.kind = BandFamily::Kind::Exponential;
      b.lambda = *a.lam;
    }
    return b;
  }

  /// Runs one (algorithm, trial) cell; returns the T gap values.
  std::vector<double> run_trial(std::size_t ai, int trial, double* wall) const {
    const AlgorithmSpec& a = algs[ai];
    RngStream init(spec.seed, std::uint64_t(trial), kInitTag);
    SolverStreams st(spec.seed, std::uint64_t(trial), std::uint64_t(ai));
    if (spec.qp) {
      QPConfig cfg;
      cfg.T = spec.T;
      cfg.x1.resize(std::size_t(spec.d));
      for (auto& v : cfg.x1) v = init.uniform(cfg.lo, cfg.hi);
      RunRecordQP rec;
      if (a.base == "cba-qp")
        rec = run_cba_qp(cfg, Q, coord_dist, radial, &gtqp, st);
      else if (a.base == "mcba-qp")
        rec = run_mcba_qp(cfg, /*K=*/16, Q, coord_dist, radial, &gtqp, st, /*total_cap=*/spec.T);
      else
        throw std::invalid_argument("algorithm " + a.id + " needs a one-dimensional preset");
      *wall = rec.wall_seconds;
      return rec.gaps;
    }
    SolverConfig cfg;
    cfg.x1 = init.uniform(obj.lo, obj.hi);
    cfg.T = spec.T;
    cfg.lo = obj.lo;
    cfg.hi = obj.hi;
    cfg.S = a.S;
    RunRecord rec;
    if (a.base == "cba" || a.base == "cbastc") {
      cfg.schedule =
          (a.base == "cba") ? StepSchedule::inv_sqrt_t() : StepSchedule::strong(spec.mu);
      rec = run_cba(cfg, dist, obj, band_for(a), &gt, st);
    } else if (a.base == "sgd" || a.base == "sgdstc") {
      cfg.schedule =
          (a.base == "sgd") ? StepSchedule::inv_sqrt_t() : StepSchedule::strong(spec.mu);
      rec = run_sgd(cfg, dist, obj, &gt, st);
    } else if (a.base == "mcba") {
      StagePlan plan{StagePlan::Variant::A, 16};
      rec = run_mcba(cfg.x1, plan, spec.mu, std::nullopt, dist, obj, band_for(a), &gt, st,
                     cfg.lo, cfg.hi, a.S, /*total_cap=*/spec.T);
    } else if (a.base == "cba-c") {
      cfg.schedule = StepSchedule::strong(spec.mu);
      rec = run_cba_c(cfg, dist, obj, default_scheme(a.m, spec.tail_lambda), &gt, st);
    } else {
      throw std::invalid_argument("algorithm " + a.id + " needs a quadratic preset");
    }
    *wall = rec.wall_seconds;
    return rec.gaps;
  }
};

}  // namespace detail

inline RawResults run_experiment_raw(const ExperimentSpec& spec, int threads = 1) {
  if (spec.trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (spec.algorithms.empty()) throw std::invalid_argument("no algorithms in experiment");
  detail::ExperimentContext ctx(spec);
  std::size_t nalg = ctx.algs.size();
  RawResults raw;
  raw.algorithms = spec.algorithms;
  raw.requested_trials = spec.trials;
  raw.gaps.assign(nalg, std::vector<std::vector<double>>(std::size_t(spec.trials)));
  raw.wall.assign(nalg, std::vector<double>(std::size_t(spec.trials), 0.0));

  std::size_t ncells = nalg * std::size_t(spec.trials);
  std::atomic<std::size_t> next{0};
  std::atomic<int> aborted{0};
  auto worker = [&]() {
    while (true) {
      std::size_t cell = next.fetch_add(1);
      if (cell >= ncells) return;
      std::size_t ai = cell / std::size_t(spec.trials);
      int trial = int(cell % std::size_t(spec.trials));
      try {
        raw.gaps[ai][std::size_t(trial)] =
            ctx.run_trial(ai, trial, &raw.wall[ai][std::size_t(trial)]);
      } catch (const std::exception&) {
        aborted.fetch_add(1);
      }
    }
  };
  int nthreads = std::max(1, threads);
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  raw.aborted = aborted.load();
  if (double(raw.aborted) > 0.01 * double(ncells))
    throw RunFailure("more than 1% of trials aborted (" + std::to_string(raw.aborted) + "/" +
                     std::to_string(ncells) + ")");
  return raw;
}

inline Results run_experiment(const ExperimentSpec& spec, int threads = 1) {
  return aggregate(run_experiment_raw(spec, threads));
}

// ---- CSV / SVG -------------------------------------------------------------

namespace detail {

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace detail

inline void write_csv(const ExperimentSpec& spec, const Results& results, std::ostream& os) {
  if (results.empty()) throw std::invalid_argument("write_csv: empty results");
  os << "# preset=" << spec.name << "\n";
  if (spec.qp) {
    os << "# qp d=" << spec.d << " distribution=" << spec.distribution
       << " radial=" << spec.radial << " T=" << spec.T << "\n";
  } else {
    os << "# objective=" << spec.objective << " distribution=" << spec.distribution
       << " band=" << spec.band << " mu=" << detail::fmt(spec.mu) << " T=" << spec.T << "\n";
  }
  for (const auto& note : spec.notes) os << "# " << note << "\n";
  os << "preset,algorithm,t,mean_gap,stderr,trials,seed\n";
  for (const auto& [alg, st] : results) {
    for (std::size_t t = 0; t < st.mean.size(); ++t) {
      os << spec.name << ',' << alg << ',' << (t + 1) << ',' << detail::fmt(st.mean[t]) << ','
         << detail::fmt(st.se[t]) << ',' << st.trials << ',' << spec.seed << "\n";
    }
  }
}

inline void write_csv(const ExperimentSpec& spec, const Results& results,
                      const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  write_csv(spec, results, f);
  if (!f.good()) throw std::runtime_error("write failed: " + path);
}

/// Parses a CSV produced by write_csv back into per-algorithm series.
inline Results read_csv(std::istream& is) {
  Results out;
  std::string line;
  bool header_seen = false;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != "preset,algorithm,t,mean_gap,stderr,trials,seed")
        throw std::runtime_error("unexpected CSV header: " + line);
      header_seen = true;
      continue;
    }
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      std::size_t pos = line.find(',', start);
      cells.push_back(line.substr(start, pos - start));
      if (pos == std::string::npos) break;
      start = pos + 1;
    }
    if (cells.size() != 7) throw std::runtime_error("bad CSV row: " + line);
    const std::string& alg = cells[1];
    if (out.empty() || out.back().first != alg) out.emplace_back(alg, SeriesStats{});
    SeriesStats& st = out.back().second;
    st.mean.push_back(std::stod(cells[3]));
    st.se.push_back(std::stod(cells[4]));
    st.trials = std::stoi(cells[5]);
  }
  if (!header_seen) throw std::runtime_error("CSV header not found");
  return out;
}

inline Results read_csv_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open: " + path);
  return read_csv(f);
}

/// Log-gap convergence plot: one polyline per algorithm, error whiskers every
/// 50 iterations.
inline void plot_svg(const ExperimentSpec& spec, const Results& results, std::ostream& os) {
  if (results.empty()) throw std::invalid_argument("plot_svg: empty results");
  const double W = 860, H = 560, ml = 70, mr = 190, mt = 40, mb = 50;
  const double pw = W - ml - mr, ph = H - mt - mb;
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  double tmax = 1.0;
  double lo = 0.0, hi = -12.0;  // log10 range
  auto log_gap = [](double v) { return std::log10(std::max(v, 1e-12)); };
  for (const auto& [alg, st] : results) {
    tmax = std::max(tmax, double(st.mean.size()));
    for (double v : st.mean) {
      lo = std::min(lo, log_gap(v));
      hi = std::max(hi, log_gap(v));
    }
  }
  lo = std::floor(lo) - 0.2;
  hi = std::ceil(hi) + 0.2;
  auto X = [&](double t) { return ml + pw * (t - 1.0) / std::max(1.0, tmax - 1.0); };
  auto Y = [&](double lg) { return mt + ph * (hi - lg) / (hi - lo); };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  os << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
     << spec.name << ": mean relative optimality gap</text>\n";
  // axes
  os << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw << "\" y2=\""
     << mt + ph << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + ph
     << "\" stroke=\"black\"/>\n";
  for (int g = int(std::ceil(lo)); g <= int(std::floor(hi)); ++g) {
    os << "<line x1=\"" << ml << "\" y1=\"" << Y(g) << "\" x2=\"" << ml + pw << "\" y2=\""
       << Y(g) << "\" stroke=\"#dddddd\"/>\n";
    os << "<text x=\"" << ml - 8 << "\" y=\"" << Y(g) + 4
       << "\" text-anchor=\"end\" font-size=\"11\">1e" << g << "</text>\n";
  }
  for (double t : {1.0, tmax / 4, tmax / 2, 3 * tmax / 4, tmax}) {
    os << "<text x=\"" << X(t) << "\" y=\"" << mt + ph + 18
       << "\" text-anchor=\"middle\" font-size=\"11\">" << int(t) << "</text>\n";
  }
  os << "<text x=\"" << ml + pw / 2 << "\" y=\"" << H - 10
     << "\" text-anchor=\"middle\" font-size=\"12\">iteration t</text>\n";

  int ci = 0;
  for (const auto& [alg, st] : results) {
    const char* color = palette[ci % 10];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t t = 0; t < st.mean.size(); ++t)
      os << X(double(t + 1)) << ',' << Y(log_gap(st.mean[t])) << ' ';
    os << "\"/>\n";
    for (std::size_t t = 49; t < st.mean.size(); t += 50) {
      double m = st.mean[t], s = st.se[t];
      double y1 = Y(log_gap(m + s)), y2 = Y(log_gap(std::max(m - s, 1e-12)));
      os << "<line x1=\"" << X(double(t + 1)) << "\" y1=\"" << y1 << "\" x2=\""
         << X(double(t + 1)) << "\" y2=\"" << y2 << "\" stroke=\"" << color << "\"/>\n";
    }
    double ly = mt + 16 + 18 * ci;
    os << "<line x1=\"" << ml + pw + 12 << "\" y1=\"" << ly - 4 << "\" x2=\"" << ml + pw + 36
       << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << ml + pw + 42 << "\" y=\"" << ly << "\" font-size=\"11\">" << alg
       << "</text>\n";
    ++ci;
  }
  os << "</svg>\n";
}

inline void plot_svg(const ExperimentSpec& spec, const Results& results,
                     const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  plot_svg(spec, results, f);
}

// ---- second-moment constants -----------------------------------------------

/// Bounds the estimator constants on a grid of anchors by quadrature:
/// K1^2 = sup_x E (h'_x)^2, K2 = sup_x |H'(x)|, and K3 = sup over x and side
/// of the importance-weighted cross-partial integral. Reporting aid only.
inline AssumptionConstants compute_constants(const Objective1D& obj, const DistributionSpec& dist,
                                             const BandFamily& band, int grid_n = 101) {
  auto [wlo, whi] = integration_window(dist);
  AssumptionConstants c;
  double k1sq = 0.0, k2 = 0.0, k3 = 0.0;
  for (int i = 0; i < grid_n; ++i) {
    double x = obj.lo + (obj.hi - obj.lo) * double(i) / double(grid_n - 1);
    double m2 = integrate(
        [&](double xi) {
          double d = obj.dx(x, xi, xi < x ? Side::Below : Side::Above);
          return d * d * pdf_of(dist, xi);
        },
        wlo, whi, 1e-8, {x});
    k1sq = std::max(k1sq, m2);
    double hp = integrate(
        [&](double xi) {
          return obj.dx(x, xi, xi < x ? Side::Below : Side::Above) * pdf_of(dist, xi);
        },
        wlo, whi, 1e-8, {x});
    k2 = std::max(k2, std::abs(hp));
    for (Side side : {Side::Below, Side::Above}) {
      SamplingDensity f = band.make(x, side);
      double a = std::max(f.lo, wlo - 1.0);
      double b = std::min(f.hi, whi + 1.0);
      if (!(a < b)) continue;
      double integral = integrate(
          [&](double z) {
            double p = f.pdf(z);
            if (!(p > 1e-300)) return 0.0;
            double w = (side == Side::Below) ? dist.cdf(z) : 1.0 - dist.cdf(z);
            if (w <= 0.0) return 0.0;
            double cr = obj.cross(x, z, side);
            return w * cr * cr / p;
          },
          a, b, 1e-6);
      k3 = std::max(k3, integral);
    }
  }
  c.K1 = std::sqrt(k1sq);
  c.K2 = k2;
  c.K3 = k3;
  c.G2 = k1sq + 2.0 * k3;
  c.sigma2 = k2 * k2 + 2.0 * k3;
  return c;
}

// ---- verification suites ---------------------------------------------------

struct VerifyReport {
  struct Suite {
    std::string name;
    bool pass = false;
    std::string detail;
  };
  std::vector<Suite> suites;
  bool ok() const {
    for (const auto& s : suites)
      if (!s.pass) return false;
    return true;
  }
  std::string to_string() const {
    std::ostringstream os;
    for (const auto& s : suites)
      os << (s.pass ? "PASS " : "FAIL ") << s.name << ": " << s.detail << "\n";
    os << (ok() ? "all suites passed" : "some suites FAILED") << "\n";
    return os.str();
  }
};

namespace detail {

inline double trapezoid(const std::function<double(double)>& f, double a, double b, int n) {
  double sum = 0.5 * (f(a) + f(b));
  for (int i = 1; i < n; ++i) sum += f(a + (b - a) * double(i) / double(n));
  return sum * (b - a) / double(n);
}

/// Monte-Carlo mean of the binary-protocol estimator at fixed x; pdf_scale
/// deliberately corrupts the importance weight for fault-injection tests.
inline std::pair<double, double> estimator_mc(const Objective1D& obj, const DistributionSpec& dist,
                                              const BandFamily& band, double x, long n,
                                              std::uint64_t seed, double pdf_scale = 1.0) {
  RngStream sxi(seed, 0, 1), sz(seed, 0, 2);
  double mean = 0.0, m2 = 0.0;
  for (long i = 1; i <= n; ++i) {
    Round r = begin_round(dist, x, sxi);
    BinaryOutcome first = compare(r, x);
    Side side = (first == BinaryOutcome::SampleBelow) ? Side::Below : Side::Above;
    SamplingDensity f = band.make(x, side);
    if (pdf_scale != 1.0) {
      auto base = f.pdf;
      double sc = pdf_scale;
      f.pdf = [base, sc](double z) { return sc * base(z); };
    }
    double z = f.draw(sz);
    BinaryOutcome second = compare(r, z);
    double g = grad_cba(x, first, z, second, obj, f).value;
    double delta = g - mean;
    mean += delta / double(i);
    m2 += delta * (g - mean);
  }
  double se = std::sqrt(m2 / double(n - 1) / double(n));
  return {mean, se};
}

}  // namespace detail

/// Runs the cross-module property suites. quick shrinks sample counts and
/// skips the slope suite; pdf_scale is a fault-injection hook that corrupts
/// the estimator's importance weight.
inline VerifyReport verify(bool quick = false, double pdf_scale = 1.0) {
  VerifyReport rep;
  auto add = [&rep](const std::string& name, bool pass, const std::string& detail) {
    rep.suites.push_back({name, pass, detail});
  };
  char buf[256];

  {  // density normalization
    bool pass = true;
    std::ostringstream detail;
    auto check = [&](const SamplingDensity& f, double a, double b, const char* what) {
      double total = detail::trapezoid(f.pdf, a, b, 20000);
      if (std::abs(total - 1.0) > 1e-4) {  // trapezoid-limited, spot check
        pass = false;
        detail << what << " integrates to " << total << "; ";
      }
    };
    check(make_uniform_band(120.0, 50.0, 150.0, Side::Below), 50.0, 120.0, "uniform band");
    check(make_exponential_band(100.0, 0.0625, Side::Below), 100.0 - 400.0, 100.0, "exp band");
    Objective1D h1 = make_h1(0.0, 1.0);
    DistributionSpec u01 = DistributionSpec::uniform(0.0, 1.0);
    check(make_optimal_band(u01, h1, 1.0, Side::Below), 0.0, 1.0, "optimal band");
    CategoricalScheme sch = default_scheme(3, 0.0625);
    check(sch.band_density(100.0, Side::Below, 1), 93.0, 97.0, "categorical band");
    add("density-normalization", pass, pass ? "all built-in densities integrate to 1"
                                            : detail.str());
  }

  {  // estimator unbiasedness against analytic expected derivatives
    long n = quick ? 200000 : 1000000;
    bool pass = true;
    std::ostringstream detail;
    struct Case {
      const char* label;
      Objective1D obj;
      DistributionSpec dist;
      std::string band;
      double x, target;
    };
    std::vector<Case> cases;
    cases.push_back({"h1/uniform", make_h1(), DistributionSpec::uniform(50, 150), "uniform",
                     120.0, 40.0});
    cases.push_back({"h1/normal", make_h1(), DistributionSpec::normal(100, 100), "exp:0.0625",
                     110.0, 20.0});
    for (auto& c : cases) {
      BandFamily band = detail::parse_band(c.band, c.obj, c.dist);
      auto [mean, se] = detail::estimator_mc(c.obj, c.dist, band, c.x, n, 20240625, pdf_scale);
      double tol = 3.5 * se;
      if (std::abs(mean - c.target) > tol) {
        pass = false;
        std::snprintf(buf, sizeof(buf), "%s: mean %.4f vs %.4f (se %.4f); ", c.label, mean,
                      c.target, se);
        detail << buf;
      }
    }
    std::snprintf(buf, sizeof(buf), "%ld draws per case", n);
    add("estimator-unbiasedness", pass, pass ? buf : detail.str());
  }

  {  // one-comparison indistinguishability of the two mixture laws
    long n = quick ? 20000 : 100000;
    DistributionSpec F1 = DistributionSpec::mixture_uniform(-3, -2, 2, 3);
    DistributionSpec F2 = DistributionSpec::mixture_uniform(-3, -2, 3, 4);
    bool pass = true;
    std::ostringstream detail;
    double bound = 3.0 * std::sqrt(0.25 / double(n));
    int which = 0;
    for (const auto* law : {&F1, &F2}) {
      ++which;
      for (double x : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
        RngStream rng(987, std::uint64_t(which), std::uint64_t((x + 2.0) * 8));
        long below = 0;
        for (long i = 0; i < n; ++i) {
          Round r = begin_round(*law, x, rng);
          if (compare(r, x) == BinaryOutcome::SampleBelow) ++below;
        }
        double freq = double(below) / double(n);
        if (std::abs(freq - 0.5) > bound) {
          pass = false;
          std::snprintf(buf, sizeof(buf), "law %d, x=%.1f: freq %.4f; ", which, x, freq);
          detail << buf;
        }
      }
    }
    std::snprintf(buf, sizeof(buf), "10 (law, x) cells, %ld rounds each", n);
    add("one-comparison-indistinguishability", pass, pass ? buf : detail.str());
  }

  {  // schedules and stage totals
    bool pass = true;
    std::ostringstream detail;
    auto expect = [&](double got, double want, const char* what) {
      if (std::abs(got - want) > 1e-12) {
        pass = false;
        detail << what << ": " << got << " != " << want << "; ";
      }
    };
    expect(step_size(StepSchedule::inv_sqrt_t(), 4), 0.5, "1/sqrt(t)");
    expect(step_size(StepSchedule::strong(0.5), 10), 0.2, "1/(mu t)");
    expect(step_size(StepSchedule::strong_smooth(1, 3), 2), 0.2, "1/(mu t + L)");
    expect(step_size(StepSchedule::stage(2, 0.5), 1), 0.25, "stage step");
    expect(double(StagePlan{StagePlan::Variant::A, 3}.total()), 112.0, "variant A total");
    expect(double(StagePlan{StagePlan::Variant::B, 2}.total()), 56.0, "variant B total");
    add("schedules", pass, pass ? "closed forms integer-exact" : detail.str());
  }

  if (!quick) {  // convergence slopes on the flagship setting
    ExperimentSpec s = preset("fig1a");
    s.algorithms = {"cba", "cbastc"};
    s.trials = 200;
    s.seed = 11;
    Results res = run_experiment(s, int(std::thread::hardware_concurrency()));
    bool pass = true;
    std::ostringstream detail;
    auto slope_of = [](const std::vector<double>& mean) {
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      int n = 0;
      for (int t = 50; t <= 500; ++t) {
        double lx = std::log10(double(t)), ly = std::log10(std::max(mean[std::size_t(t) - 1], 1e-300));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
      }
      return (double(n) * sxy - sx * sy) / (double(n) * sxx - sx * sx);
    };
    double s_cba = slope_of(res[0].second.mean);
    double s_stc = slope_of(res[1].second.mean);
    if (!(s_stc >= -1.6 && s_stc <= -0.5)) pass = false;
    if (!(s_cba >= -1.2 && s_cba <= -0.3)) pass = false;
    std::snprintf(buf, sizeof(buf), "slopes: 1/sqrt(t) %.3f (want [-1.2,-0.3]), 1/(mu t) %.3f (want [-1.6,-0.5])",
                  s_cba, s_stc);
    add("convergence-slopes", pass, buf);
  }

  return rep;
}

}  // namespace cbopt

#endif  // CBOPT_LABKIT_HPP
