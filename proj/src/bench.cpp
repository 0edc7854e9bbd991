#include "casper/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <nlohmann/json.hpp>
#include <sstream>
#include <thread>

#include "casper/io.hpp"
#include "casper/rng.hpp"

namespace casper {
namespace {

using nlohmann::json;

// seed stream purposes; trial and sweep indices are fed as the other lanes
constexpr uint64_t kSeedGraph = 0xA1;
constexpr uint64_t kSeedCoef = 0xA2;
constexpr uint64_t kSeedData = 0xA3;
constexpr uint64_t kSeedFit = 0xB0;  // +method index

std::string iso_now() {
  std::time_t tt = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

uint64_t fnv1a(const std::string& s) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_text(const std::string& path, const std::string& body) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << body;
  if (!out) throw std::runtime_error("write failed: " + path);
}

struct TrialData {
  GroundTruthDag dag;
  Dataset data;
};

TrialData make_trial_data(const ExperimentSpec& spec, int degree_index, int noise_index,
                          int trial) {
  int degree = effective_degrees(spec)[degree_index];
  uint64_t gseed = derive_seed(spec.base_seed, kSeedGraph, trial, degree_index);
  GroundTruthDag dag = spec.graph.scheme == GraphModel::Scheme::Er
                           ? generate_er(spec.d, degree, gseed)
                           : generate_sf(spec.d, degree, gseed);
  double noise_mean = spec.noise_means[noise_index];
  uint64_t dseed =
      derive_seed(spec.base_seed, kSeedData, trial, degree_index * 1000 + noise_index);
  if (spec.mechanism == Mechanism::Linear) {
    // coefficients are pinned per (trial, degree) so a noise sweep moves only noise
    LinearSemSpec lin =
        sample_linear_weights(dag, derive_seed(spec.base_seed, kSeedCoef, trial, degree_index));
    lin.noise_mean = noise_mean;
    return {dag, simulate_linear(lin, spec.n, dseed)};
  }
  NonlinearSemSpec gp;
  gp.dag = dag;
  gp.noise_mean = noise_mean;
  return {dag, simulate_nonlinear_gp(gp, spec.n, dseed)};
}

TrainResult fit_with(Method m, const Dataset& data, const CasperConfig& cfg) {
  switch (m) {
    case Method::Casper:
      return casper_fit(data, cfg);
    case Method::Notears:
      return notears_fit(data, cfg);
    case Method::NotearsMlp:
      return notears_mlp_fit(data, cfg);
    case Method::Random: {
      TrainResult res;
      res.pruned = random_baseline(data.d(), data.d(), cfg.seed);
      res.weighted = res.pruned.cast<double>();
      res.converged = true;
      return res;
    }
  }
  throw std::logic_error("unreachable method");
}

int method_index(Method m) { return static_cast<int>(m); }

std::vector<TrialJob> build_jobs(const ExperimentSpec& spec) {
  std::vector<TrialJob> jobs;
  std::vector<int> degrees = effective_degrees(spec);
  for (size_t di = 0; di < degrees.size(); ++di)
    for (size_t ni = 0; ni < spec.noise_means.size(); ++ni)
      for (Method m : spec.methods)
        for (int t = 0; t < spec.trials; ++t) {
          TrialJob job;
          job.method = m;
          job.degree_index = static_cast<int>(di);
          job.noise_index = static_cast<int>(ni);
          job.trial = t;
          job.fit_seed = derive_seed(spec.base_seed, kSeedFit + method_index(m), t,
                                     di * 1000 + ni);
          job.setting = setting_label(spec, degrees[di], spec.noise_means[ni]);
          jobs.push_back(std::move(job));
        }
  return jobs;
}

json metrics_json(const MetricsReport& m) {
  json j;
  j["tpr"] = m.tpr;
  j["fdr"] = m.fdr;
  j["shd"] = m.shd;
  if (m.sid)
    j["sid"] = *m.sid;
  else
    j["sid"] = nullptr;
  j["n_predicted_edges"] = m.n_predicted_edges;
  j["n_correct_edges"] = m.n_correct_edges;
  return j;
}

}  // namespace

std::string method_name(Method m) {
  switch (m) {
    case Method::Casper:
      return "casper";
    case Method::Notears:
      return "notears";
    case Method::NotearsMlp:
      return "notears-mlp";
    case Method::Random:
      return "random";
  }
  return "?";
}

std::optional<Method> parse_method(const std::string& name) {
  if (name == "casper") return Method::Casper;
  if (name == "notears") return Method::Notears;
  if (name == "notears-mlp") return Method::NotearsMlp;
  if (name == "random") return Method::Random;
  return std::nullopt;
}

std::string mechanism_name(Mechanism m) {
  return m == Mechanism::Linear ? "linear" : "gp";
}

std::optional<Mechanism> parse_mechanism(const std::string& name) {
  if (name == "linear") return Mechanism::Linear;
  if (name == "gp") return Mechanism::NonlinearGp;
  return std::nullopt;
}

void validate_spec(const ExperimentSpec& spec) {
  if (spec.trials < 1) throw std::invalid_argument("trials must be at least 1");
  if (spec.d < 2) throw std::invalid_argument("need at least 2 nodes");
  if (spec.n < 1) throw std::invalid_argument("need at least 1 sample");
  if (spec.methods.empty()) throw std::invalid_argument("methods list is empty");
  if (spec.noise_means.empty()) throw std::invalid_argument("noise mean list is empty");
  if (spec.graph.degree < 1) throw std::invalid_argument("degree must be positive");
  for (int k : spec.degree_sweep)
    if (k < 1) throw std::invalid_argument("swept degrees must be positive");
  if (spec.jobs < 1) throw std::invalid_argument("jobs must be at least 1");
  if (spec.overrides.lambda1 && *spec.overrides.lambda1 < 0)
    throw std::invalid_argument("lambda1 must be nonnegative");
  if (spec.overrides.omega && *spec.overrides.omega < 0)
    throw std::invalid_argument("omega must be nonnegative");
  if (spec.overrides.k_inner && *spec.overrides.k_inner < 1)
    throw std::invalid_argument("k_inner must be at least 1");
}

std::vector<int> effective_degrees(const ExperimentSpec& spec) {
  if (spec.degree_sweep.empty()) return {spec.graph.degree};
  return spec.degree_sweep;
}

CasperConfig bench_fit_config(Method m, Mechanism mech, const FitOverrides& ov, uint64_t seed) {
  CasperConfig cfg;
  switch (m) {
    case Method::Casper:
      cfg = mech == Mechanism::Linear ? default_linear_config(seed) : default_mlp_config(seed);
      cfg.linear_init_scale = 1.0;  // a near-dag start mutes the critic via the clip rule
      break;
    case Method::Notears:
      cfg = default_linear_config(seed);
      cfg.theta_lr = 0.03;  // least-squares descent tolerates (and needs) a hotter step
      cfg.lambda1 = 0.1;
      break;
    case Method::NotearsMlp:
      cfg = default_mlp_config(seed);
      cfg.theta_lr = 0.03;
      break;
    case Method::Random:
      cfg.seed = seed;
      break;
  }
  if (ov.lambda1) cfg.lambda1 = *ov.lambda1;
  if (ov.omega) cfg.omega = *ov.omega;
  if (ov.k_inner) cfg.k_inner = *ov.k_inner;
  return cfg;
}

std::string config_hash(const ExperimentSpec& spec) {
  json j;
  j["scheme"] = spec.graph.scheme == GraphModel::Scheme::Er ? "er" : "sf";
  j["degree"] = spec.graph.degree;
  j["d"] = spec.d;
  j["n"] = spec.n;
  j["mechanism"] = mechanism_name(spec.mechanism);
  j["noise_means"] = spec.noise_means;
  j["degree_sweep"] = spec.degree_sweep;
  std::vector<std::string> names;
  for (Method m : spec.methods) names.push_back(method_name(m));
  j["methods"] = names;
  j["trials"] = spec.trials;
  j["base_seed"] = spec.base_seed;
  j["lambda1"] = spec.overrides.lambda1 ? json(*spec.overrides.lambda1) : json();
  j["omega"] = spec.overrides.omega ? json(*spec.overrides.omega) : json();
  j["k_inner"] = spec.overrides.k_inner ? json(*spec.overrides.k_inner) : json();
  return hex64(fnv1a(j.dump()));
}

std::string setting_label(const ExperimentSpec& spec, int degree, double noise_mean) {
  std::ostringstream s;
  s << (spec.graph.scheme == GraphModel::Scheme::Er ? "er" : "sf") << degree << "_d" << spec.d
    << "_n" << spec.n << "_" << (spec.mechanism == Mechanism::Linear ? "lin" : "gp") << "_noise"
    << format_double(noise_mean);
  return s.str();
}

TrialOutcome run_trial(const ExperimentSpec& spec, const TrialJob& job) {
  TrialOutcome out;
  out.job = job;
  auto t0 = std::chrono::steady_clock::now();
  try {
    TrialData td = make_trial_data(spec, job.degree_index, job.noise_index, job.trial);
    CasperConfig cfg =
        bench_fit_config(job.method, spec.mechanism, spec.overrides, job.fit_seed);
    TrainResult res = fit_with(job.method, td.data, cfg);
    out.metrics = evaluate_graphs(td.dag.adjacency, res.pruned);
    out.flagged = !res.converged;
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

std::string RunManifest::to_json() const {
  json j;
  j["config_hash"] = config_hash;
  j["tool_version"] = tool_version;
  j["started_at"] = started_at;
  j["finished_at"] = finished_at;
  j["base_seed"] = base_seed;
  j["notes"] = notes;
  json arr = json::array();
  for (const TrialOutcome& o : outcomes) {
    json e;
    e["method"] = method_name(o.job.method);
    e["setting"] = o.job.setting;
    e["trial"] = o.job.trial;
    e["degree_index"] = o.job.degree_index;
    e["noise_index"] = o.job.noise_index;
    e["fit_seed"] = o.job.fit_seed;
    e["wall_seconds"] = o.wall_seconds;
    e["ok"] = o.metrics.has_value();
    e["flagged"] = o.flagged;
    if (!o.error.empty()) e["error"] = o.error;
    if (o.metrics) e["metrics"] = metrics_json(*o.metrics);
    arr.push_back(std::move(e));
  }
  j["outcomes"] = std::move(arr);
  return j.dump(2) + "\n";
}

std::vector<AggregateRow> aggregate_outcomes(const std::vector<TrialOutcome>& outcomes) {
  // group by (method, setting) in first-appearance order so output is stable
  std::vector<std::pair<std::string, std::string>> keys;
  std::vector<std::vector<MetricsReport>> groups;
  std::vector<int> attempts;
  for (const TrialOutcome& o : outcomes) {
    std::pair<std::string, std::string> key{method_name(o.job.method), o.job.setting};
    size_t gi = 0;
    for (; gi < keys.size(); ++gi)
      if (keys[gi] == key) break;
    if (gi == keys.size()) {
      keys.push_back(key);
      groups.emplace_back();
      attempts.push_back(0);
    }
    attempts[gi]++;
    if (o.metrics) groups[gi].push_back(*o.metrics);
  }
  std::vector<AggregateRow> rows;
  for (size_t gi = 0; gi < keys.size(); ++gi) {
    // a fully failed cell still gets rows, marked by count 0
    TrialAggregate agg = groups[gi].empty() ? TrialAggregate{} : aggregate_trials(groups[gi]);
    auto push = [&](const std::string& metric, const MeanStd& stat, int count) {
      rows.push_back({keys[gi].first, keys[gi].second, metric, stat, count});
    };
    push("shd", agg.shd, agg.count);
    push("tpr", agg.tpr, agg.count);
    push("fdr", agg.fdr, agg.count);
    push("sid", agg.sid, agg.sid_count);
  }
  return rows;
}

std::string aggregate_csv(const std::vector<AggregateRow>& rows) {
  std::ostringstream s;
  s << "method,setting,metric,mean,std\n";
  for (const AggregateRow& r : rows) {
    s << r.method << "," << r.setting << "," << r.metric << ",";
    if (r.count > 0)
      s << format_double(r.stat.mean) << "," << format_double(r.stat.std);
    else
      s << ",";
    s << "\n";
  }
  return s.str();
}

std::string long_csv(const std::vector<TrialOutcome>& outcomes) {
  std::ostringstream s;
  s << "method,setting,trial,metric,value\n";
  for (const TrialOutcome& o : outcomes) {
    if (!o.metrics) continue;
    const MetricsReport& m = *o.metrics;
    auto row = [&](const std::string& metric, const std::string& value) {
      s << method_name(o.job.method) << "," << o.job.setting << "," << o.job.trial << ","
        << metric << "," << value << "\n";
    };
    row("shd", std::to_string(m.shd));
    row("tpr", format_double(m.tpr));
    row("fdr", format_double(m.fdr));
    if (m.sid) row("sid", std::to_string(*m.sid));
  }
  return s.str();
}

std::string aggregate_table(const std::vector<AggregateRow>& rows) {
  // one line per (method, setting) with the four metrics side by side
  std::vector<std::pair<std::string, std::string>> keys;
  for (const AggregateRow& r : rows) {
    std::pair<std::string, std::string> key{r.method, r.setting};
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
  }
  std::ostringstream s;
  char head[256];
  std::snprintf(head, sizeof head, "%-12s %-32s %-16s %-16s %-16s %-16s %s\n", "method",
                "setting", "shd", "tpr", "fdr", "sid", "trials");
  s << head;
  for (const auto& key : keys) {
    char line[256];
    std::snprintf(line, sizeof line, "%-12s %-32s", key.first.c_str(), key.second.c_str());
    s << line;
    int count = 0;
    for (const std::string& metric : {"shd", "tpr", "fdr", "sid"}) {
      const AggregateRow* row = nullptr;
      for (const AggregateRow& r : rows)
        if (r.method == key.first && r.setting == key.second && r.metric == metric) row = &r;
      char cell[64];
      if (row && row->count > 0)
        std::snprintf(cell, sizeof cell, "%.2f+-%.2f", row->stat.mean, row->stat.std);
      else
        std::snprintf(cell, sizeof cell, "failed");
      char padded[80];
      std::snprintf(padded, sizeof padded, " %-16s", cell);
      s << padded;
      if (metric == std::string("shd") && row) count = row->count;
    }
    s << " " << count << "\n";
  }
  return s.str();
}

int cmd_simulate(const ExperimentSpec& spec) {
  validate_spec(spec);
  std::filesystem::create_directories(spec.out_dir);
  RunManifest manifest;
  manifest.config_hash = config_hash(spec);
  manifest.base_seed = spec.base_seed;
  manifest.started_at = iso_now();
  for (int t = 0; t < spec.trials; ++t) {
    auto t0 = std::chrono::steady_clock::now();
    TrialData td = make_trial_data(spec, 0, 0, t);
    char stem[32];
    std::snprintf(stem, sizeof stem, "trial%02d", t);
    std::string base = spec.out_dir + "/" + stem;
    write_dataset_csv(base + "_data.csv", td.data);
    write_binary_csv(base + "_truth.csv", td.dag.adjacency);
    TrialOutcome o;
    o.job.trial = t;
    o.job.setting = setting_label(spec, effective_degrees(spec)[0], spec.noise_means[0]);
    o.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    manifest.outcomes.push_back(std::move(o));
  }
  manifest.finished_at = iso_now();
  manifest.notes.push_back("simulate only; no fits run");
  write_text(spec.out_dir + "/manifest.json", manifest.to_json());
  std::printf("wrote %d trials to %s\n", spec.trials, spec.out_dir.c_str());
  return 0;
}

int cmd_fit(const std::string& dataset_path, Method method, const CasperConfig& cfg,
            const std::string& out_dir) {
  Dataset data;
  try {
    data = read_dataset_csv(dataset_path);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  TrainResult res;
  try {
    res = fit_with(method, data, cfg);
  } catch (const TrainingError& e) {
    std::fprintf(stderr, "training diverged: %s\n", e.what());
    return 4;
  }
  std::filesystem::create_directories(out_dir);
  write_weighted_csv(out_dir + "/weighted.csv", res.weighted);
  write_binary_csv(out_dir + "/pruned.csv", res.pruned);
  write_text(out_dir + "/result.json", train_result_json(res, cfg));
  std::printf("%s: %d edges, h=%g, converged=%d, %.2fs\n", method_name(method).c_str(),
              static_cast<int>(res.pruned.sum()), res.final_h, res.converged ? 1 : 0,
              res.wall_time_seconds);
  return 0;
}

int cmd_eval(const std::string& truth_path, const std::string& estimate_path,
             const std::string& out_dir) {
  BinaryMatrix truth, estimate;
  try {
    truth = read_binary_csv(truth_path);
    estimate = read_binary_csv(estimate_path);
    if (truth.rows() != estimate.rows())
      throw std::invalid_argument("truth and estimate disagree on d");
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  MetricsReport m = evaluate_graphs(truth, estimate);
  if (!m.sid) std::fprintf(stderr, "warning: estimate is cyclic, sid omitted\n");
  std::string body = metrics_json(m).dump(2) + "\n";
  std::fputs(body.c_str(), stdout);
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    write_text(out_dir + "/metrics.json", body);
  }
  return 0;
}

int cmd_bench(const ExperimentSpec& spec) {
  validate_spec(spec);
  std::filesystem::create_directories(spec.out_dir);
  RunManifest manifest;
  manifest.config_hash = config_hash(spec);
  manifest.base_seed = spec.base_seed;
  manifest.started_at = iso_now();
  manifest.notes.push_back(
      "random baseline: uniform pairs over a random topological order, expected edges = d");
  manifest.notes.push_back("simulated data is used raw; standardization applies to ingest only");

  std::vector<TrialJob> jobs = build_jobs(spec);
  std::vector<TrialOutcome> outcomes(jobs.size());
  std::atomic<size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (size_t i = next.fetch_add(1); i < jobs.size(); i = next.fetch_add(1)) {
      outcomes[i] = run_trial(spec, jobs[i]);
      std::lock_guard<std::mutex> lk(log_mutex);
      const TrialOutcome& o = outcomes[i];
      std::fprintf(stderr, "[%zu/%zu] %s %s trial %d: %s%s%s (%.1fs)\n", i + 1, jobs.size(),
                   method_name(o.job.method).c_str(), o.job.setting.c_str(), o.job.trial,
                   o.metrics ? (o.flagged ? "flagged" : "ok") : "FAILED",
                   o.error.empty() ? "" : ": ", o.error.c_str(), o.wall_seconds);
    }
  };
  int pool = std::min<int>(spec.jobs, static_cast<int>(jobs.size()));
  if (pool <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int i = 0; i < pool; ++i) threads.emplace_back(worker);
    for (std::thread& th : threads) th.join();
  }

  manifest.finished_at = iso_now();
  manifest.outcomes = outcomes;
  std::vector<AggregateRow> rows = aggregate_outcomes(outcomes);
  std::string table = aggregate_table(rows);
  write_text(spec.out_dir + "/aggregate.csv", aggregate_csv(rows));
  write_text(spec.out_dir + "/long.csv", long_csv(outcomes));
  write_text(spec.out_dir + "/table.txt", table);
  write_text(spec.out_dir + "/manifest.json", manifest.to_json());
  std::fputs(table.c_str(), stdout);
  return 0;
}

int cmd_ingest_check(const std::string& path, bool standardize) {
  Dataset data;
  try {
    data = ingest_csv(path, standardize);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  json j;
  j["d"] = data.d();
  j["n"] = data.n();
  j["names"] = data.names;
  j["standardized"] = standardize;
  std::fputs((j.dump(2) + "\n").c_str(), stdout);
  return 0;
}

}  // namespace casper
