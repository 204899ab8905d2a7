#pragma once

// Config-driven experiments: the pointwise consistency sweep and its rate fit,
// concentration frequencies, the operator chain, and a spectrum probe.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "snnlap/continuum.hpp"
#include "snnlap/density.hpp"
#include "snnlap/errors.hpp"
#include "snnlap/evolution.hpp"
#include "snnlap/manifold.hpp"
#include "snnlap/neighbor_index.hpp"
#include "snnlap/operators.hpp"
#include "snnlap/quadrature.hpp"
#include "snnlap/sampling.hpp"
#include "snnlap/snn_graph.hpp"
#include "snnlap/spectral.hpp"
#include "snnlap/test_function.hpp"

namespace snnlap {

using json = nlohmann::json;

/// Which multiple of Delta^snn the graph Laplacian is compared against.
///   Theorem:   1/(m+2)
///   Corrected: alpha / 2^{m+1} / (m+2), the limit of h^{-(m+2)} (D - W) as computed
enum class LimitScale { Theorem, Corrected };

inline double limit_factor(int m, double alpha, LimitScale scale) {
  const double base = 1.0 / (m + 2.0);
  return scale == LimitScale::Theorem ? base : base * alpha / std::pow(2.0, m + 1.0);
}

enum class AssemblyChoice { Auto, Materialized, Factored };

/// k(n) = round(c_k (log n)^{m/(m+4)} n^{4/(m+4)}), or an explicit list aligned with n_grid.
struct KSchedule {
  double c_k = 0.75;
  std::vector<std::size_t> explicit_k;

  std::size_t k_for(std::size_t n, std::size_t position, int m) const {
    if (!explicit_k.empty()) {
      if (explicit_k.size() == 1) return explicit_k[0];
      return explicit_k.at(position);
    }
    const double nd = static_cast<double>(n);
    return static_cast<std::size_t>(std::llround(
        c_k * std::pow(std::log(nd), m / (m + 4.0)) * std::pow(nd, 4.0 / (m + 4.0))));
  }
};

struct ConcentrationSettings {
  std::size_t trials = 100;
  std::vector<double> deltas{0.25, 0.5};
};

struct ExperimentConfig {
  ModelId model = ModelId::Sphere2;
  DensityDescriptor density;
  std::string test_function = "x3";
  std::vector<std::size_t> n_grid{4000, 8000, 16000, 32000};
  KSchedule k_schedule;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::size_t eval_points = 0;  // 0 means every node
  std::string outputs = "out";
  LimitScale limit_scale = LimitScale::Theorem;
  AssemblyChoice assembly = AssemblyChoice::Auto;
  std::size_t chain_points = 20;
  ConcentrationSettings concentration;
  std::size_t spectrum_q = 4;

  int intrinsic_dim() const { return 2; }
  std::size_t k_at(std::size_t position) const {
    return k_schedule.k_for(n_grid.at(position), position, intrinsic_dim());
  }

  /// Throws ConfigError on an inconsistent configuration.
  void validate() const {
    if (n_grid.empty()) throw ConfigError("n_grid is empty");
    for (std::size_t i = 1; i < n_grid.size(); ++i)
      if (n_grid[i] <= n_grid[i - 1]) throw ConfigError("n_grid must be strictly increasing");
    if (seeds.empty()) throw ConfigError("seeds is empty");
    if (k_schedule.explicit_k.empty() && !(k_schedule.c_k > 0.0))
      throw ConfigError("c_k must be positive");
    if (k_schedule.explicit_k.size() > 1 && k_schedule.explicit_k.size() != n_grid.size())
      throw ConfigError("explicit k list must match n_grid");
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
      const std::size_t k = k_at(i);
      if (k < 1 || k + 1 > n_grid[i]) throw ConfigError("k(n) outside [1, n-1] at n=" + std::to_string(n_grid[i]));
    }
    const int d = model == ModelId::Sphere2 ? Sphere2::ambient_dim : FlatTorus2::ambient_dim;
    if (density.family == DensityFamily::SmoothBump) {
      if (density.center.size() != static_cast<std::size_t>(d))
        throw ConfigError("density center has the wrong dimension");
      if (!(density.concentration > 0.0)) throw ConfigError("density concentration must be positive");
    }
    try {
      if (model == ModelId::Sphere2)
        make_test_function<Sphere2>(test_function);
      else
        make_test_function<FlatTorus2>(test_function);
    } catch (const InvalidParams& e) {
      throw ConfigError(e.what());
    }
    if (concentration.trials < 1) throw ConfigError("concentration trials must be positive");
    if (spectrum_q < 1) throw ConfigError("spectrum q must be positive");
  }
};

inline json density_to_json(const DensityDescriptor& d) {
  if (d.family == DensityFamily::Uniform) return {{"family", "uniform"}};
  return {{"family", "smooth_bump"}, {"center", d.center}, {"concentration", d.concentration}};
}

inline DensityDescriptor density_from_json(const json& j) {
  const auto family = j.value("family", std::string("uniform"));
  if (family == "uniform") return DensityDescriptor::uniform();
  if (family == "smooth_bump")
    return DensityDescriptor::smooth_bump(j.at("center").get<std::vector<double>>(),
                                          j.at("concentration").get<double>());
  throw ConfigError("unknown density family '" + family + "'");
}

inline json to_json(const ExperimentConfig& c) {
  json j;
  j["model"] = std::string(to_string(c.model));
  j["density"] = density_to_json(c.density);
  j["test_function"] = c.test_function;
  j["n_grid"] = c.n_grid;
  if (c.k_schedule.explicit_k.empty())
    j["k_schedule"] = {{"c_k", c.k_schedule.c_k}};
  else
    j["k_schedule"] = {{"k", c.k_schedule.explicit_k}};
  j["seeds"] = c.seeds;
  if (c.eval_points == 0)
    j["eval_points"] = "all";
  else
    j["eval_points"] = c.eval_points;
  j["outputs"] = c.outputs;
  j["limit_scale"] = c.limit_scale == LimitScale::Theorem ? "theorem" : "corrected";
  j["assembly"] = c.assembly == AssemblyChoice::Auto           ? "auto"
                  : c.assembly == AssemblyChoice::Materialized ? "materialized"
                                                               : "factored";
  j["chain"] = {{"points", c.chain_points}};
  j["concentration"] = {{"trials", c.concentration.trials}, {"deltas", c.concentration.deltas}};
  j["spectrum"] = {{"q", c.spectrum_q}};
  return j;
}

/// Missing keys keep their defaults; malformed values raise ConfigError.
inline ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  try {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    if (j.contains("model")) c.model = model_id_from_string(j["model"].get<std::string>());
    if (j.contains("density")) c.density = density_from_json(j["density"]);
    if (j.contains("test_function")) c.test_function = j["test_function"].get<std::string>();
    if (j.contains("n_grid")) c.n_grid = j["n_grid"].get<std::vector<std::size_t>>();
    if (j.contains("k_schedule")) {
      const auto& s = j["k_schedule"];
      if (s.contains("k")) {
        c.k_schedule.explicit_k = s["k"].is_array() ? s["k"].get<std::vector<std::size_t>>()
                                                    : std::vector<std::size_t>{s["k"].get<std::size_t>()};
      }
      if (s.contains("c_k")) c.k_schedule.c_k = s["c_k"].get<double>();
    }
    if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    if (j.contains("eval_points")) {
      const auto& e = j["eval_points"];
      if (e.is_string()) {
        if (e.get<std::string>() != "all") throw ConfigError("eval_points must be \"all\" or a count");
        c.eval_points = 0;
      } else {
        c.eval_points = e.get<std::size_t>();
      }
    }
    if (j.contains("outputs")) c.outputs = j["outputs"].get<std::string>();
    if (j.contains("limit_scale")) {
      const auto s = j["limit_scale"].get<std::string>();
      if (s == "theorem")
        c.limit_scale = LimitScale::Theorem;
      else if (s == "corrected")
        c.limit_scale = LimitScale::Corrected;
      else
        throw ConfigError("limit_scale must be \"theorem\" or \"corrected\"");
    }
    if (j.contains("assembly")) {
      const auto s = j["assembly"].get<std::string>();
      if (s == "auto")
        c.assembly = AssemblyChoice::Auto;
      else if (s == "materialized")
        c.assembly = AssemblyChoice::Materialized;
      else if (s == "factored")
        c.assembly = AssemblyChoice::Factored;
      else
        throw ConfigError("assembly must be auto, materialized or factored");
    }
    if (j.contains("chain")) c.chain_points = j["chain"].value("points", c.chain_points);
    if (j.contains("concentration")) {
      const auto& s = j["concentration"];
      c.concentration.trials = s.value("trials", c.concentration.trials);
      if (s.contains("deltas")) c.concentration.deltas = s["deltas"].get<std::vector<double>>();
    }
    if (j.contains("spectrum")) c.spectrum_q = j["spectrum"].value("q", c.spectrum_q);
  } catch (const json::exception& e) {
    throw ConfigError(e.what());
  } catch (const InvalidParams& e) {
    throw ConfigError(e.what());
  }
  return c;
}

/// FNV-1a (64-bit) of the canonical JSON dump, as 16 hex digits.
inline std::string config_hash(const ExperimentConfig& c) {
  const std::string text = to_json(c).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Calls fn with a value of the model type named by id.
template <class Fn>
decltype(auto) with_model(ModelId id, Fn&& fn) {
  if (id == ModelId::Sphere2) return fn(Sphere2{});
  return fn(FlatTorus2{});
}

inline Assembly pick_assembly(AssemblyChoice choice, std::size_t n, std::size_t k) {
  if (choice == AssemblyChoice::Materialized) return Assembly::Materialized;
  if (choice == AssemblyChoice::Factored) return Assembly::Factored;
  const double work = static_cast<double>(n) * static_cast<double>(k) * static_cast<double>(k);
  return work <= 5e8 ? Assembly::Materialized : Assembly::Factored;
}

/// Distinct node indices for error evaluation, or all nodes when count is 0 or >= n.
inline std::vector<std::size_t> eval_subset(std::size_t n, std::size_t count, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (count == 0 || count >= n) return idx;
  RandomStream rng(seed, StreamPurpose::EvalPoints, n);
  for (std::size_t i = 0; i < count; ++i) std::swap(idx[i], idx[i + rng.below(n - i)]);
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

// ---------------------------------------------------------------------------
// Consistency sweep

struct SweepCell {
  std::size_t n = 0;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  double h = 0.0;
  double kn_ratio_pow = 0.0;  // (k/n)^{1/m}
  double max_err = 0.0;
  double median_err = 0.0;
  std::size_t eval_count = 0;
  double wall_ms = 0.0;
  AssumptionReport assumptions;
  std::string config_hash;
  bool ok = true;
  std::string error;
};

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double intercept_stderr = 0.0;
  std::size_t points = 0;
};

struct SweepResult {
  std::string config_hash;
  std::vector<SweepCell> cells;  // sorted by (n, k, seed)
  std::optional<RateFit> fit;
  std::size_t failed_cells() const {
    return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](const SweepCell& c) { return !c.ok; }));
  }
};

/// Least squares of log y on log x with standard errors; needs >= 3 points.
inline RateFit fit_rate(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw InvalidParams("fit inputs differ in length");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] > 0.0 && y[i] > 0.0 && std::isfinite(x[i]) && std::isfinite(y[i])) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  const std::size_t n = lx.size();
  if (n < 3) throw TooFewCells("rate fit needs at least 3 cells with positive error");
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw TooFewCells("rate fit needs at least two distinct abscissae");
  RateFit f;
  f.points = n;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ly[i] - f.intercept - f.slope * lx[i];
    rss += r * r;
  }
  const double s2 = n > 2 ? rss / static_cast<double>(n - 2) : 0.0;
  f.slope_stderr = std::sqrt(s2 / sxx);
  double sum_x2 = 0.0;
  for (double v : lx) sum_x2 += v * v;
  f.intercept_stderr = std::sqrt(s2 * sum_x2 / (static_cast<double>(n) * sxx));
  return f;
}

/// Fit of log max_err against log (k/n)^{1/m}, pooled over seeds.
inline RateFit fit_rate(const SweepResult& result) {
  std::vector<double> x, y;
  for (const auto& c : result.cells)
    if (c.ok) {
      x.push_back(c.kn_ratio_pow);
      y.push_back(c.max_err);
    }
  return fit_rate(x, y);
}

/// L^snn f at every node and the scaled continuum target at the same nodes.
struct PointwiseEvaluation {
  std::vector<double> graph;
  std::vector<double> target;
};

template <class M>
PointwiseEvaluation evaluate_pointwise(const SnnGraph& g, const PointCloud& cloud,
                                       const Density<M>& density, const TestFunction<M>& f,
                                       double factor) {
  const std::size_t n = cloud.size();
  std::vector<double> fv(n);
  PointwiseEvaluation out;
  out.target.resize(n);
  parallel_for(0, n, [&](std::size_t i) {
    const auto x = cloud.template point<M>(i);
    fv[i] = f(x);
    out.target[i] = factor * apply_delta_snn(density, f, x);
  });
  out.graph = apply_snn_laplacian(g, fv);
  return out;
}

inline double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

template <class M>
SweepCell run_sweep_cell(const ExperimentConfig& config, std::size_t n, std::size_t k,
                         std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  SweepCell cell;
  cell.n = n;
  cell.k = k;
  cell.seed = seed;
  cell.config_hash = config_hash(config);
  try {
    const auto density = Density<M>::from_descriptor(config.density);
    const auto f = make_test_function<M>(config.test_function);
    const auto mc = M::constants();
    cell.assumptions = check_assumptions(density, n, k);
    const auto cloud = sample_iid(density, n, seed);
    const NeighborIndex index(cloud, IndexBacking::SpatialTree);
    const auto g = build_snn_graph(index, k, {mc.intrinsic_dim, mc.unit_ball_volume},
                                   pick_assembly(config.assembly, n, k));
    cell.h = g.h();
    cell.kn_ratio_pow = std::pow(static_cast<double>(k) / static_cast<double>(n), 1.0 / mc.intrinsic_dim);
    const auto eval = evaluate_pointwise(g, cloud, density, f,
                                         limit_factor(mc.intrinsic_dim, mc.unit_ball_volume, config.limit_scale));
    const auto subset = eval_subset(n, config.eval_points, seed);
    std::vector<double> errs;
    errs.reserve(subset.size());
    for (auto i : subset) errs.push_back(std::abs(eval.graph[i] - eval.target[i]));
    cell.eval_count = errs.size();
    cell.max_err = *std::max_element(errs.begin(), errs.end());
    cell.median_err = median_of(errs);
  } catch (const std::exception& e) {
    cell.ok = false;
    cell.error = e.what();
  }
  cell.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return cell;
}

/// Runs every (n, k(n), seed) cell. Failed cells are recorded, not raised.
inline SweepResult run_consistency_sweep(const ExperimentConfig& config) {
  config.validate();
  SweepResult result;
  result.config_hash = config_hash(config);
  for (std::size_t p = 0; p < config.n_grid.size(); ++p)
    for (auto seed : config.seeds) {
      const std::size_t n = config.n_grid[p];
      const std::size_t k = config.k_at(p);
      result.cells.push_back(with_model(config.model, [&](auto model) {
        return run_sweep_cell<decltype(model)>(config, n, k, seed);
      }));
    }
  std::sort(result.cells.begin(), result.cells.end(), [](const SweepCell& a, const SweepCell& b) {
    return std::tie(a.n, a.k, a.seed) < std::tie(b.n, b.k, b.seed);
  });
  try {
    result.fit = fit_rate(result);
  } catch (const TooFewCells&) {
    result.fit.reset();
  }
  return result;
}

/// Number of adjacent increases in a sequence that should decrease.
inline std::size_t count_inversions(const std::vector<double>& v) {
  std::size_t inv = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) ++inv;
  return inv;
}

// ---------------------------------------------------------------------------
// Concentration

struct Proportion {
  std::size_t hits = 0;
  std::size_t trials = 0;
  double rate() const { return trials ? static_cast<double>(hits) / static_cast<double>(trials) : 0.0; }
  /// 95% Wilson score interval.
  std::pair<double, double> wilson(double z = 1.959963984540054) const {
    if (trials == 0) return {0.0, 1.0};
    const double nt = static_cast<double>(trials);
    const double p = rate();
    const double denom = 1.0 + z * z / nt;
    const double centre = (p + z * z / (2.0 * nt)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / nt + z * z / (4.0 * nt * nt)) / denom;
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
  }
};

struct ConcentrationEvent {
  std::string statement;  // "ball_count", "eps_k_mass", "k_ball_count"
  double delta = 0.0;
  Proportion exceedance;
};

struct ConcentrationReport {
  std::size_t n = 0;
  std::size_t k = 0;
  std::size_t trials = 0;
  double eps = 0.0;            // fixed radius for the ball-count statement
  double expected_count = 0.0; // alpha p n eps^m averaged over trials
  bool degenerate = false;     // n eps^m < 1
  std::vector<ConcentrationEvent> events;
};

/// Exceedance frequencies over independent clouds, each probed at a fresh
/// uniform point x of M:
///   ball_count   |N_eps(x) - alpha p(x) n eps^m| >= delta alpha p(x) n eps^m,  eps = (100/n)^{1/m}
///   eps_k_mass   |alpha p(x) eps_k(x)^m - k/n| >= delta k/n
///   k_ball_count |N_{eps_k(x)}(x) - k| >= delta k
template <class M>
ConcentrationReport validate_concentration(const Density<M>& density, std::size_t n, std::size_t k,
                                           const ConcentrationSettings& settings, std::uint64_t seed) {
  if (k < 1 || k >= n) throw InvalidParams("need 1 <= k < n");
  const auto mc = M::constants();
  const double m = mc.intrinsic_dim;
  const double alpha = mc.unit_ball_volume;
  const double nd = static_cast<double>(n);
  const double kd = static_cast<double>(k);

  ConcentrationReport rep;
  rep.n = n;
  rep.k = k;
  rep.trials = settings.trials;
  rep.eps = std::pow(100.0 / nd, 1.0 / m);
  rep.degenerate = nd * std::pow(rep.eps, m) < 1.0;
  for (const char* s : {"ball_count", "eps_k_mass", "k_ball_count"})
    for (double delta : settings.deltas) rep.events.push_back({s, delta, {0, settings.trials}});

  std::vector<std::array<double, 3>> rel(settings.trials);
  std::vector<double> expected(settings.trials);
  for (std::size_t t = 0; t < settings.trials; ++t) {
    const auto cloud = sample_iid(density, n, derive_seed(seed, t));
    const NeighborIndex index(cloud, IndexBacking::SpatialTree);
    RandomStream rng(seed, StreamPurpose::Trials, t);
    const double s = rng.uniform();
    const double u = rng.uniform();
    const auto x = M::from_unit_square(s, u);
    const std::span<const double> xs(x.data(), M::ambient_dim);
    const double p = density(x);
    const double mean_count = alpha * p * nd * std::pow(rep.eps, m);
    expected[t] = mean_count;
    const double count = static_cast<double>(index.count_within(xs, rep.eps));
    const double ek = index.eps_k(xs, k);
    const double kball = static_cast<double>(index.count_within(xs, ek));
    rel[t] = {std::abs(count - mean_count) / mean_count,
              std::abs(alpha * p * std::pow(ek, m) - kd / nd) / (kd / nd),
              std::abs(kball - kd) / kd};
  }
  rep.expected_count = std::accumulate(expected.begin(), expected.end(), 0.0) / static_cast<double>(settings.trials);
  for (auto& ev : rep.events) {
    const int which = ev.statement == "ball_count" ? 0 : ev.statement == "eps_k_mass" ? 1 : 2;
    for (const auto& r : rel)
      if (r[which] >= ev.delta) ++ev.exceedance.hits;
  }
  return rep;
}

inline ConcentrationReport validate_concentration(const ExperimentConfig& config) {
  config.validate();
  return with_model(config.model, [&](auto model) {
    using M = decltype(model);
    return validate_concentration(Density<M>::from_descriptor(config.density), config.n_grid.front(),
                                  config.k_at(0), config.concentration, config.seeds.front());
  });
}

// ---------------------------------------------------------------------------
// Operator chain

struct ChainPoint {
  std::size_t n = 0, k = 0;
  std::uint64_t seed = 0;
  std::size_t node = 0;
  double eps = 0.0;    // continuous radius eps(x)
  double eps_k = 0.0;  // geodesic k-NN radius
  double lsnn = 0.0, l1 = 0.0, lsharp = 0.0, l2 = 0.0;
  double delta_snn = 0.0;  // Delta^snn f(x) unscaled
  double target = 0.0;     // limit factor times delta_snn
  double omega_dev = 0.0;  // (alpha n / k) w(x, x) - alpha
};

struct ChainCell {
  std::size_t n = 0, k = 0;
  std::uint64_t seed = 0;
  double snn_l1 = 0.0;    // max |L^snn - L1|
  double l1_l2 = 0.0;     // max |L1 - L2|
  double l2_limit = 0.0;  // max |L2 - target|
  double sharp_l1 = 0.0;  // max |Lsharp - L1|
  double omega_dev = 0.0; // max |omega deviation|
  double eps_mean = 0.0;
};

struct ChainReport {
  std::vector<ChainCell> cells;
  std::vector<ChainPoint> points;
};

template <class M>
ChainReport run_chain_cell(const ExperimentConfig& config, std::size_t n, std::size_t k,
                           std::uint64_t seed) {
  const auto density = Density<M>::from_descriptor(config.density);
  const auto f = make_test_function<M>(config.test_function);
  const auto mc = M::constants();
  const double factor = limit_factor(mc.intrinsic_dim, mc.unit_ball_volume, config.limit_scale);
  const auto cloud = sample_iid(density, n, seed);
  const NeighborIndex index(cloud, IndexBacking::SpatialTree);
  const auto g = build_snn_graph(index, k, {mc.intrinsic_dim, mc.unit_ball_volume},
                                 pick_assembly(config.assembly, n, k));
  std::vector<double> fv(n);
  for (std::size_t i = 0; i < n; ++i) fv[i] = f(cloud.template point<M>(i));
  const auto lsnn = apply_snn_laplacian(g, fv);
  const auto ctx = make_evolution_context(index, density, k);

  const auto nodes = eval_subset(n, config.chain_points == 0 ? 20 : config.chain_points, seed);
  ChainReport rep;
  rep.points.resize(nodes.size());
  parallel_for(0, nodes.size(), [&](std::size_t p) {
    const std::size_t i = nodes[p];
    const auto x = cloud.template point<M>(i);
    ChainPoint& cp = rep.points[p];
    cp.n = n;
    cp.k = k;
    cp.seed = seed;
    cp.node = i;
    cp.eps = ctx.eps(x);
    cp.eps_k = ctx.sample_eps_k[i];
    cp.lsnn = lsnn[i];
    cp.l1 = op_L1(ctx, f, x);
    cp.lsharp = op_Lsharp(ctx, f, x);
    cp.l2 = op_L2(ctx, f, x);
    cp.delta_snn = apply_delta_snn(density, f, x);
    cp.target = factor * cp.delta_snn;
    cp.omega_dev = omega_diagonal_deviation(ctx, x);
  });
  ChainCell cell;
  cell.n = n;
  cell.k = k;
  cell.seed = seed;
  for (const auto& cp : rep.points) {
    cell.snn_l1 = std::max(cell.snn_l1, std::abs(cp.lsnn - cp.l1));
    cell.l1_l2 = std::max(cell.l1_l2, std::abs(cp.l1 - cp.l2));
    cell.l2_limit = std::max(cell.l2_limit, std::abs(cp.l2 - cp.target));
    cell.sharp_l1 = std::max(cell.sharp_l1, std::abs(cp.lsharp - cp.l1));
    cell.omega_dev = std::max(cell.omega_dev, std::abs(cp.omega_dev));
    cell.eps_mean += cp.eps / static_cast<double>(rep.points.size());
  }
  rep.cells.push_back(cell);
  return rep;
}

/// Stage errors of L^snn -> L1 -> L2 -> Delta^snn at sampled nodes, per (n, seed).
inline ChainReport run_chain_diagnostics(const ExperimentConfig& config) {
  config.validate();
  if (config.n_grid.back() > 16000) throw ConfigError("chain diagnostics are limited to n <= 16000");
  ChainReport out;
  for (std::size_t p = 0; p < config.n_grid.size(); ++p)
    for (auto seed : config.seeds) {
      const auto rep = with_model(config.model, [&](auto model) {
        return run_chain_cell<decltype(model)>(config, config.n_grid[p], config.k_at(p), seed);
      });
      out.cells.insert(out.cells.end(), rep.cells.begin(), rep.cells.end());
      out.points.insert(out.points.end(), rep.points.begin(), rep.points.end());
    }
  return out;
}

// ---------------------------------------------------------------------------
// Spectrum probe

struct SpectrumReference {
  std::string function;
  double value = 0.0;  // limit factor times the continuum Rayleigh quotient
};

struct SpectrumReport {
  std::size_t n = 0, k = 0;
  std::uint64_t seed = 0;
  std::size_t components = 0;
  std::vector<std::size_t> component_sizes;
  bool converged = false;
  std::size_t iterations = 0;
  std::vector<double> eigenvalues;
  std::vector<double> residuals;
  std::vector<SpectrumReference> references;
};

template <class M>
SpectrumReport run_spectrum_probe(const ExperimentConfig& config, std::size_t q) {
  const std::size_t n = config.n_grid.front();
  const std::size_t k = config.k_at(0);
  const std::uint64_t seed = config.seeds.front();
  const auto density = Density<M>::from_descriptor(config.density);
  const auto mc = M::constants();
  const double factor = limit_factor(mc.intrinsic_dim, mc.unit_ball_volume, config.limit_scale);

  SpectrumReport rep;
  rep.n = n;
  rep.k = k;
  rep.seed = seed;
  const auto cloud = sample_iid(density, n, seed);
  const NeighborIndex index(cloud, IndexBacking::SpatialTree);
  const auto g = build_snn_graph(index, k, {mc.intrinsic_dim, mc.unit_ball_volume},
                                 pick_assembly(config.assembly, n, k));
  const auto comps = connected_components(g);
  rep.components = comps.count;
  rep.component_sizes.assign(comps.count, 0);
  for (auto l : comps.labels) ++rep.component_sizes[l];
  EigenOptions opt;
  opt.seed = seed;
  const auto eig = smallest_eigenpairs(g, std::min(q, n), opt);
  rep.converged = eig.converged;
  rep.iterations = eig.iterations;
  rep.eigenvalues = eig.eigenvalues;
  rep.residuals = eig.residual_norms;

  const auto rule = product_grid<M>(256);
  for (const auto& name : registered_test_functions<M>()) {
    if (name == "constant") continue;
    const auto f = make_test_function<M>(name);
    rep.references.push_back({name, factor * continuum_rayleigh(density, f, rule)});
  }
  return rep;
}

inline SpectrumReport run_spectrum_probe(const ExperimentConfig& config, std::size_t q) {
  config.validate();
  return with_model(config.model, [&](auto model) { return run_spectrum_probe<decltype(model)>(config, q); });
}

}  // namespace snnlap
