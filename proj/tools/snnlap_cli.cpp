// snnlap: sampling, SNN graphs and convergence experiments from a JSON config.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "snnlap/snnlap.hpp"

namespace fs = std::filesystem;
using namespace snnlap;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitCellFailures = 3;

struct CommonOptions {
  std::string config_path;
  std::optional<std::size_t> n;
  std::optional<std::size_t> k;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "experiment config (JSON)");
  cmd->add_option("--n", o.n, "replace n_grid with a single n");
  cmd->add_option("--k", o.k, "use this k for every n");
  cmd->add_option("--seed", o.seed, "replace seeds with a single seed");
  cmd->add_option("--out", o.out, "output directory");
}

ExperimentConfig load_config(const CommonOptions& o) {
  ExperimentConfig c = o.config_path.empty() ? ExperimentConfig{} : config_from_json(read_json(o.config_path));
  if (o.n) c.n_grid = {*o.n};
  if (o.k) c.k_schedule.explicit_k = {*o.k};
  if (o.seed) c.seeds = {*o.seed};
  if (o.out) c.outputs = *o.out;
  c.validate();
  return c;
}

template <class M>
struct CellData {
  PointCloud cloud;
  NeighborIndex index;
  SnnGraph graph;
};

template <class M>
CellData<M> build_cell(const ExperimentConfig& c) {
  const auto density = Density<M>::from_descriptor(c.density);
  auto cloud = sample_iid(density, c.n_grid.front(), c.seeds.front());
  NeighborIndex index(cloud, IndexBacking::SpatialTree);
  const auto mc = M::constants();
  auto graph = build_snn_graph(index, c.k_at(0), {mc.intrinsic_dim, mc.unit_ball_volume},
                               pick_assembly(c.assembly, c.n_grid.front(), c.k_at(0)));
  return {std::move(cloud), std::move(index), std::move(graph)};
}

int cmd_sample(const ExperimentConfig& c) {
  return with_model(c.model, [&](auto model) {
    using M = decltype(model);
    const auto cloud = sample_iid(Density<M>::from_descriptor(c.density), c.n_grid.front(), c.seeds.front());
    write_cloud_csv(fs::path(c.outputs) / "cloud.csv", cloud);
    std::printf("wrote %zu points to %s\n", cloud.size(), (fs::path(c.outputs) / "cloud.csv").c_str());
    return 0;
  });
}

int cmd_graph(const ExperimentConfig& c) {
  return with_model(c.model, [&](auto model) {
    using M = decltype(model);
    const auto cell = build_cell<M>(c);
    write_cloud_csv(fs::path(c.outputs) / "cloud.csv", cell.cloud);
    write_graph(fs::path(c.outputs) / "graph.csv", cell.graph, config_hash(c));
    std::printf("n=%zu k=%zu edges=%zu h=%.6g\n", cell.graph.n(), cell.graph.k(), cell.graph.edge_count(),
                cell.graph.h());
    return 0;
  });
}

int cmd_apply(const ExperimentConfig& c) {
  return with_model(c.model, [&](auto model) {
    using M = decltype(model);
    const auto cell = build_cell<M>(c);
    const auto density = Density<M>::from_descriptor(c.density);
    const auto f = make_test_function<M>(c.test_function);
    const auto mc = M::constants();
    const auto eval = evaluate_pointwise(cell.graph, cell.cloud, density, f,
                                         limit_factor(mc.intrinsic_dim, mc.unit_ball_volume, c.limit_scale));
    auto out = open_output(fs::path(c.outputs) / "apply.csv");
    out << "i,f,lsnn,target\n";
    double worst = 0.0;
    for (std::size_t i = 0; i < cell.cloud.size(); ++i) {
      const double fi = f(cell.cloud.template point<M>(i));
      out << i << ',' << format_double(fi) << ',' << format_double(eval.graph[i]) << ','
          << format_double(eval.target[i]) << '\n';
      worst = std::max(worst, std::abs(eval.graph[i] - eval.target[i]));
    }
    std::printf("n=%zu k=%zu max |L^snn f - target| = %.6g\n", cell.graph.n(), cell.graph.k(), worst);
    return 0;
  });
}

int cmd_converge(const ExperimentConfig& c) {
  const auto result = run_consistency_sweep(c);
  write_sweep(c.outputs, result);
  for (const auto& cell : result.cells) {
    if (cell.ok)
      std::printf("n=%-6zu k=%-5zu seed=%-3llu max_err=%.6g median_err=%.6g (%.0f ms)\n", cell.n, cell.k,
                  static_cast<unsigned long long>(cell.seed), cell.max_err, cell.median_err, cell.wall_ms);
    else
      std::printf("n=%-6zu k=%-5zu seed=%-3llu FAILED: %s\n", cell.n, cell.k,
                  static_cast<unsigned long long>(cell.seed), cell.error.c_str());
  }
  if (result.fit)
    std::printf("slope %.4f +- %.4f, intercept %.4f\n", result.fit->slope, result.fit->slope_stderr,
                result.fit->intercept);
  return result.failed_cells() > 0 ? kExitCellFailures : 0;
}

int cmd_chain(const ExperimentConfig& c) {
  const auto report = run_chain_diagnostics(c);
  write_json(fs::path(c.outputs) / "chain.json", to_json(report));
  for (const auto& cell : report.cells)
    std::printf("n=%-6zu k=%-5zu seed=%-3llu |Lsnn-L1|=%.4g |L1-L2|=%.4g |L2-lim|=%.4g omega=%.4g\n", cell.n,
                cell.k, static_cast<unsigned long long>(cell.seed), cell.snn_l1, cell.l1_l2, cell.l2_limit,
                cell.omega_dev);
  return 0;
}

int cmd_concentration(const ExperimentConfig& c) {
  const auto report = validate_concentration(c);
  write_json(fs::path(c.outputs) / "concentration.json", to_json(report));
  for (const auto& e : report.events) {
    const auto [lo, hi] = e.exceedance.wilson();
    std::printf("%-13s delta=%.2f exceedance %zu/%zu (95%% CI %.3f-%.3f)\n", e.statement.c_str(), e.delta,
                e.exceedance.hits, e.exceedance.trials, lo, hi);
  }
  return 0;
}

int cmd_spectrum(const ExperimentConfig& c) {
  const auto report = run_spectrum_probe(c, c.spectrum_q);
  write_json(fs::path(c.outputs) / "spectrum.json", to_json(report));
  std::printf("components=%zu converged=%s\n", report.components, report.converged ? "yes" : "no");
  for (std::size_t i = 0; i < report.eigenvalues.size(); ++i)
    std::printf("lambda_%zu = %.6g (residual %.2g)\n", i + 1, report.eigenvalues[i], report.residuals[i]);
  for (const auto& r : report.references) std::printf("reference %s: %.6g\n", r.function.c_str(), r.value);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shared-nearest-neighbor graph Laplacians on model manifolds"};
  app.require_subcommand(1);
  CommonOptions opts;
  struct Entry {
    const char* name;
    const char* help;
    int (*run)(const ExperimentConfig&);
  };
  const Entry entries[] = {
      {"sample", "draw an i.i.d. cloud and write cloud.csv", cmd_sample},
      {"graph", "build the SNN graph and write graph.csv + graph.json", cmd_graph},
      {"apply", "apply L^snn to the test function and write apply.csv", cmd_apply},
      {"converge", "run the consistency sweep", cmd_converge},
      {"chain", "tabulate the operator chain stage errors", cmd_chain},
      {"concentration", "measure concentration exceedance frequencies", cmd_concentration},
      {"spectrum", "smallest eigenvalues of L^snn", cmd_spectrum},
  };
  std::vector<std::pair<CLI::App*, const Entry*>> commands;
  for (const auto& e : entries) {
    auto* cmd = app.add_subcommand(e.name, e.help);
    add_common(cmd, opts);
    commands.emplace_back(cmd, &e);
  }
  CLI11_PARSE(app, argc, argv);

  ExperimentConfig config;
  try {
    config = load_config(opts);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kExitConfig;
  }
  try {
    for (const auto& [cmd, entry] : commands)
      if (cmd->parsed()) return entry->run(config);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return 1;
  }
  return 0;
}
