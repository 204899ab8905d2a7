#pragma once

// File formats for clouds, graphs and experiment reports.

#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "snnlap/errors.hpp"
#include "snnlap/experiment.hpp"
#include "snnlap/sampling.hpp"
#include "snnlap/snn_graph.hpp"

namespace snnlap {

/// %.17g, enough digits to round-trip a double.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  return out;
}

inline void write_json(const std::filesystem::path& path, const json& j) {
  auto out = open_output(path);
  out << j.dump(2) << '\n';
}

inline json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(e.what());
  }
}

// Point clouds: header x1,...,xd then one row per point.

inline void write_cloud_csv(std::ostream& out, const PointCloud& cloud) {
  for (int c = 0; c < cloud.dim(); ++c) out << (c ? "," : "") << 'x' << c + 1;
  out << '\n';
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto row = cloud[i];
    for (int c = 0; c < cloud.dim(); ++c) out << (c ? "," : "") << format_double(row[c]);
    out << '\n';
  }
}

inline void write_cloud_csv(const std::filesystem::path& path, const PointCloud& cloud) {
  auto out = open_output(path);
  write_cloud_csv(out, cloud);
}

inline PointCloud read_cloud_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidParams("empty cloud file");
  const int dim = static_cast<int>(std::count(line.begin(), line.end(), ',')) + 1;
  std::vector<double> coords;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    int cols = 0;
    while (std::getline(ss, cell, ',')) {
      coords.push_back(std::stod(cell));
      ++cols;
    }
    if (cols != dim) throw InvalidParams("ragged row in cloud file");
  }
  return PointCloud(dim, std::move(coords));
}

inline PointCloud read_cloud_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidParams("cannot open '" + path.string() + "'");
  return read_cloud_csv(in);
}

// Graphs: i,j,weight triplets with i < j in lexicographic order.

inline void write_graph_csv(std::ostream& out, const SnnGraph& g) {
  out << "i,j,weight\n";
  const double kd = static_cast<double>(g.k());
  const auto emit = [&](std::size_t i, std::size_t j, std::uint32_t c) {
    out << i << ',' << j << ',' << format_double(static_cast<double>(c) / kd) << '\n';
  };
  if (g.materialized()) {
    const auto& c = g.shared_counts();
    for (std::size_t i = 0; i < g.n(); ++i)
      for (std::size_t e = c.offsets[i]; e < c.offsets[i + 1]; ++e)
        if (c.columns[e] > i) emit(i, c.columns[e], c.counts[e]);
    return;
  }
  std::vector<std::uint32_t> acc(g.n(), 0), touched;
  for (std::size_t i = 0; i < g.n(); ++i) {
    for (auto l : g.ball(i))
      for (auto j : g.reverse(l))
        if (j > i && acc[j]++ == 0) touched.push_back(j);
    std::sort(touched.begin(), touched.end());
    for (auto j : touched) {
      emit(i, j, acc[j]);
      acc[j] = 0;
    }
    touched.clear();
  }
}

inline json graph_metadata(const SnnGraph& g, const std::string& hash) {
  return {{"n", g.n()}, {"k", g.k()}, {"m", g.scale().m}, {"alpha", g.scale().alpha},
          {"h", g.h()}, {"config_hash", hash}};
}

inline void write_graph(const std::filesystem::path& csv_path, const SnnGraph& g,
                        const std::string& hash) {
  {
    auto out = open_output(csv_path);
    write_graph_csv(out, g);
  }
  auto meta = csv_path;
  meta.replace_extension(".json");
  write_json(meta, graph_metadata(g, hash));
}

// Reports.

inline json to_json(const AssumptionReport& r) {
  json j = {{"scale_ok", r.scale_ok},       {"scale_lhs", r.scale_lhs},   {"c_M", r.c_M},
            {"gradient_ok", r.gradient_ok}, {"gradient_lhs", r.gradient_lhs},
            {"band_ratio", r.band_ratio}};
  j["gradient_rhs"] = std::isfinite(r.gradient_rhs) ? json(r.gradient_rhs) : json(nullptr);
  return j;
}

inline json to_json(const SweepCell& c) {
  json j = {{"n", c.n},
            {"k", c.k},
            {"seed", c.seed},
            {"h", c.h},
            {"kn_ratio_pow", c.kn_ratio_pow},
            {"max_err", c.max_err},
            {"median_err", c.median_err},
            {"eval_count", c.eval_count},
            {"wall_ms", c.wall_ms},
            {"assumptions", to_json(c.assumptions)},
            {"config_hash", c.config_hash},
            {"ok", c.ok}};
  if (!c.ok) j["error"] = c.error;
  return j;
}

inline json to_json(const RateFit& f) {
  return {{"slope", f.slope},
          {"intercept", f.intercept},
          {"slope_stderr", f.slope_stderr},
          {"intercept_stderr", f.intercept_stderr},
          {"points", f.points}};
}

inline json sweep_summary(const SweepResult& r) {
  json j = {{"config_hash", r.config_hash},
            {"cells", r.cells.size()},
            {"failed_cells", r.failed_cells()}};
  j["fit"] = r.fit ? to_json(*r.fit) : json(nullptr);
  return j;
}

/// sweep.jsonl, sweep.csv and summary.json under dir.
inline void write_sweep(const std::filesystem::path& dir, const SweepResult& r) {
  {
    auto out = open_output(dir / "sweep.jsonl");
    for (const auto& c : r.cells) out << to_json(c).dump() << '\n';
  }
  {
    auto out = open_output(dir / "sweep.csv");
    out << "n,k,seed,kn_ratio_pow,max_err,median_err,wall_ms\n";
    for (const auto& c : r.cells)
      out << c.n << ',' << c.k << ',' << c.seed << ',' << format_double(c.kn_ratio_pow) << ','
          << format_double(c.max_err) << ',' << format_double(c.median_err) << ','
          << format_double(c.wall_ms) << '\n';
  }
  write_json(dir / "summary.json", sweep_summary(r));
}

inline json to_json(const ConcentrationReport& r) {
  json events = json::array();
  for (const auto& e : r.events) {
    const auto [lo, hi] = e.exceedance.wilson();
    events.push_back({{"statement", e.statement},
                      {"delta", e.delta},
                      {"exceedances", e.exceedance.hits},
                      {"trials", e.exceedance.trials},
                      {"frequency", e.exceedance.rate()},
                      {"wilson95", {lo, hi}}});
  }
  return {{"n", r.n},   {"k", r.k},         {"trials", r.trials}, {"eps", r.eps},
          {"expected_count", r.expected_count}, {"degenerate", r.degenerate}, {"events", events}};
}

inline json to_json(const ChainReport& r) {
  json cells = json::array(), points = json::array();
  for (const auto& c : r.cells)
    cells.push_back({{"n", c.n},           {"k", c.k},           {"seed", c.seed},
                     {"snn_l1", c.snn_l1}, {"l1_l2", c.l1_l2},   {"l2_limit", c.l2_limit},
                     {"sharp_l1", c.sharp_l1}, {"omega_dev", c.omega_dev}, {"eps_mean", c.eps_mean}});
  for (const auto& p : r.points)
    points.push_back({{"n", p.n},       {"k", p.k},         {"seed", p.seed},     {"node", p.node},
                      {"eps", p.eps},   {"eps_k", p.eps_k}, {"lsnn", p.lsnn},     {"l1", p.l1},
                      {"lsharp", p.lsharp}, {"l2", p.l2},   {"delta_snn", p.delta_snn},
                      {"target", p.target}, {"omega_dev", p.omega_dev}});
  return {{"cells", cells}, {"points", points}};
}

inline json to_json(const SpectrumReport& r) {
  json refs = json::array();
  for (const auto& ref : r.references) refs.push_back({{"function", ref.function}, {"value", ref.value}});
  return {{"n", r.n},
          {"k", r.k},
          {"seed", r.seed},
          {"components", r.components},
          {"component_sizes", r.component_sizes},
          {"converged", r.converged},
          {"iterations", r.iterations},
          {"eigenvalues", r.eigenvalues},
          {"residuals", r.residuals},
          {"references", refs}};
}

}  // namespace snnlap
