#include <CLI11.hpp>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "casper/bench.hpp"

using namespace casper;

namespace {

struct CliState {
  std::string graph = "er";
  int degree = 2;
  int nodes = 10;
  int samples = 2000;
  std::string mechanism = "linear";
  std::vector<std::string> methods;
  int trials = 10;
  uint64_t seed = 0;
  std::vector<double> noise_means;
  std::vector<int> degree_sweep;
  std::optional<double> omega;
  std::optional<double> lambda1;
  std::optional<int> k_inner;
  int jobs = 1;
  std::string out = "out";
  bool no_standardize = false;
  std::string dataset;
  std::string truth;
  std::string estimate;
};

void add_spec_flags(CLI::App* cmd, CliState& st, bool sweeps) {
  cmd->add_option("--graph", st.graph, "graph scheme")->check(CLI::IsMember({"er", "sf"}));
  cmd->add_option("--degree", st.degree, "expected node degree");
  cmd->add_option("--nodes", st.nodes, "number of variables");
  cmd->add_option("--samples", st.samples, "rows per dataset");
  cmd->add_option("--mechanism", st.mechanism, "data mechanism")
      ->check(CLI::IsMember({"linear", "gp"}));
  cmd->add_option("--trials", st.trials, "trials per cell");
  cmd->add_option("--seed", st.seed, "base seed");
  cmd->add_option("--noise-mean", st.noise_means, "noise mean sweep values")->delimiter(',');
  if (sweeps) cmd->add_option("--degree-sweep", st.degree_sweep, "degree sweep values")->delimiter(',');
  cmd->add_option("--out", st.out, "output directory");
}

void add_fit_flags(CLI::App* cmd, CliState& st) {
  cmd->add_option("--omega", st.omega, "prune threshold");
  cmd->add_option("--lambda1", st.lambda1, "l1 coefficient");
  cmd->add_option("--k-inner", st.k_inner, "critic steps per outer step");
}

ExperimentSpec build_spec(const CliState& st) {
  ExperimentSpec spec;
  spec.graph.scheme = st.graph == "sf" ? GraphModel::Scheme::Sf : GraphModel::Scheme::Er;
  spec.graph.degree = st.degree;
  spec.d = st.nodes;
  spec.n = st.samples;
  spec.mechanism = *parse_mechanism(st.mechanism);
  if (!st.noise_means.empty()) spec.noise_means = st.noise_means;
  spec.degree_sweep = st.degree_sweep;
  spec.trials = st.trials;
  spec.base_seed = st.seed;
  spec.overrides.omega = st.omega;
  spec.overrides.lambda1 = st.lambda1;
  spec.overrides.k_inner = st.k_inner;
  spec.jobs = st.jobs;
  spec.out_dir = st.out;
  if (!st.methods.empty()) {
    spec.methods.clear();
    for (const std::string& name : st.methods) spec.methods.push_back(*parse_method(name));
  }
  return spec;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dag structure learning bench harness"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);
  app.set_config("--config", "", "config file (key = value, [subcommand] sections)");

  CliState st;
  const std::vector<std::string> known_methods = {"casper", "notears", "notears-mlp", "random"};

  CLI::App* sim = app.add_subcommand("simulate", "write per-trial datasets and truths");
  add_spec_flags(sim, st, false);

  CLI::App* fit = app.add_subcommand("fit", "fit one dataset with one method");
  fit->add_option("dataset", st.dataset, "dataset csv")->required();
  fit->add_option("--method", st.methods, "method to run")
      ->required()
      ->check(CLI::IsMember(known_methods));
  fit->add_option("--mechanism", st.mechanism, "data mechanism")
      ->check(CLI::IsMember({"linear", "gp"}));
  fit->add_option("--seed", st.seed, "fit seed");
  fit->add_option("--out", st.out, "output directory");
  add_fit_flags(fit, st);

  CLI::App* ev = app.add_subcommand("eval", "compare an estimate against a truth");
  ev->add_option("truth", st.truth, "truth adjacency csv")->required();
  ev->add_option("estimate", st.estimate, "estimate adjacency csv")->required();
  ev->add_option("--out", st.out, "output directory (metrics.json)");

  CLI::App* bench = app.add_subcommand("bench", "simulate, fit, eval across a grid");
  add_spec_flags(bench, st, true);
  bench->add_option("--method", st.methods, "methods to run (repeat or comma separate)")
      ->delimiter(',')
      ->check(CLI::IsMember(known_methods));
  bench->add_option("--jobs", st.jobs, "worker pool size");
  add_fit_flags(bench, st);

  CLI::App* ing = app.add_subcommand("ingest-check", "parse and summarize a real dataset");
  ing->add_option("file", st.dataset, "csv with a header row")->required();
  ing->add_flag("--no-standardize", st.no_standardize, "keep raw column scales");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 3;
  }

  try {
    if (sim->parsed()) {
      return cmd_simulate(build_spec(st));
    }
    if (fit->parsed()) {
      Method method = *parse_method(st.methods.at(0));
      Mechanism mech = *parse_mechanism(st.mechanism);
      FitOverrides ov{st.lambda1, st.omega, st.k_inner};
      CasperConfig cfg = bench_fit_config(method, mech, ov, st.seed);
      return cmd_fit(st.dataset, method, cfg, st.out.empty() ? "out" : st.out);
    }
    if (ev->parsed()) {
      // eval prints to stdout and only writes a file when --out was given
      return cmd_eval(st.truth, st.estimate, ev->count("--out") ? st.out : std::string());
    }
    if (bench->parsed()) {
      return cmd_bench(build_spec(st));
    }
    if (ing->parsed()) {
      return cmd_ingest_check(st.dataset, !st.no_standardize);
    }
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 3;
}
