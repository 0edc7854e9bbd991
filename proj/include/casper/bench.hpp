#pragma once
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "casper/learner.hpp"
#include "casper/metrics.hpp"
#include "casper/sem.hpp"

namespace casper {

inline constexpr const char* kToolVersion = "0.1.0";

enum class Mechanism { Linear, NonlinearGp };
enum class Method { Casper, Notears, NotearsMlp, Random };

std::string method_name(Method m);
std::optional<Method> parse_method(const std::string& name);
std::string mechanism_name(Mechanism m);
std::optional<Mechanism> parse_mechanism(const std::string& name);

// partial fit-config overrides layered on top of the per-method defaults
struct FitOverrides {
  std::optional<double> lambda1;
  std::optional<double> omega;
  std::optional<int> k_inner;
};

struct ExperimentSpec {
  GraphModel graph;
  int d = 10;
  int n = 2000;
  Mechanism mechanism = Mechanism::Linear;
  std::vector<double> noise_means = {0.0};
  std::vector<int> degree_sweep;  // empty means just graph.degree
  std::vector<Method> methods = {Method::Casper};
  int trials = 10;
  uint64_t base_seed = 0;
  FitOverrides overrides;
  std::string out_dir = ".";
  int jobs = 1;
};

void validate_spec(const ExperimentSpec& spec);

// sweep-point degrees after defaulting (degree_sweep or the base degree)
std::vector<int> effective_degrees(const ExperimentSpec& spec);

// method defaults for a bench fit; overrides win where set
CasperConfig bench_fit_config(Method m, Mechanism mech, const FitOverrides& ov, uint64_t seed);

// canonical hex digest over the semantic fields only (out_dir and jobs are
// execution plumbing and excluded); insensitive to config-file key order by
// construction since it hashes the parsed spec, not the file text
std::string config_hash(const ExperimentSpec& spec);

struct TrialJob {
  Method method;
  int degree_index = 0;
  int noise_index = 0;
  int trial = 0;
  uint64_t fit_seed = 0;
  std::string setting;  // e.g. er2_d10_n2000_lin_noise0
};

struct TrialOutcome {
  TrialJob job;
  std::optional<MetricsReport> metrics;  // empty on failure
  std::string error;
  double wall_seconds = 0.0;
  bool flagged = false;  // fit finished without meeting the constraint tolerance
};

struct RunManifest {
  std::string config_hash;
  std::string tool_version = kToolVersion;
  std::string started_at;
  std::string finished_at;
  uint64_t base_seed = 0;
  std::vector<TrialOutcome> outcomes;  // wall times and per-cell failures live here
  std::vector<std::string> notes;
  std::string to_json() const;
};

int cmd_simulate(const ExperimentSpec& spec);
int cmd_fit(const std::string& dataset_path, Method method, const CasperConfig& cfg,
            const std::string& out_dir);
int cmd_eval(const std::string& truth_path, const std::string& estimate_path,
             const std::string& out_dir);
int cmd_bench(const ExperimentSpec& spec);
int cmd_ingest_check(const std::string& path, bool standardize);

// exposed for tests: one fully isolated (trial, method, sweep point) job
TrialOutcome run_trial(const ExperimentSpec& spec, const TrialJob& job);

std::string setting_label(const ExperimentSpec& spec, int degree, double noise_mean);

// aggregate rows in (method, setting, metric, mean, std) layout
struct AggregateRow {
  std::string method;
  std::string setting;
  std::string metric;
  MeanStd stat;
  int count = 0;  // successful trials behind the row
};
std::vector<AggregateRow> aggregate_outcomes(const std::vector<TrialOutcome>& outcomes);
std::string aggregate_csv(const std::vector<AggregateRow>& rows);
std::string long_csv(const std::vector<TrialOutcome>& outcomes);
std::string aggregate_table(const std::vector<AggregateRow>& rows);

}  // namespace casper
