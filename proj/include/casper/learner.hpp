#pragma once
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "casper/graph.hpp"
#include "casper/nn.hpp"
#include "casper/sem.hpp"

namespace casper {

enum class FitMode { Linear, Mlp };

struct LagrangianSchedule {
  double alpha0 = 0.0;
  double mu0 = 1.0;
  double mu_growth = 10.0;
  double progress_ratio = 0.25;  // h must shrink below this fraction of the previous h
  double h_tolerance = 1e-8;
  double mu_cap = 1e16;
};

struct CasperConfig {
  FitMode mode = FitMode::Linear;
  double lambda1 = 0.01;
  double lambda2 = 0.01;  // mlp mode only
  int k_inner = 3;
  int k_outer_max = 300;    // descent epochs per subproblem
  int pretrain_epochs = 10;
  double omega = 0.3;
  AcyclicityForm acyclicity_form = AcyclicityForm::matrix_exponential();
  LagrangianSchedule lagrangian;
  uint64_t seed = 0;
  double theta_lr = 0.001;  // slow theta keeps the critic ahead of the fit
  double phi_lr = 0.005;
  int mlp_hidden = 10;
  int critic_hidden = 16;
  double linear_init_scale = 0.3;  // casper linear mode starts from U(+-scale)
  bool reset_critic_between_subproblems = false;
  double rel_change_tol = 1e-6;
  int max_divergence_recoveries = 3;
};

CasperConfig default_linear_config(uint64_t seed);
CasperConfig default_mlp_config(uint64_t seed);

struct OuterRecord {
  int epoch = 0;  // strictly increasing across the whole run
  double score = 0.0;
  double h = 0.0;
  double alpha = 0.0;
  double mu = 0.0;
  double critic_distance = 0.0;
  double clip_bound = 0.0;            // c applied by this epoch's inner loop
  double max_abs_critic_param = 0.0;  // after the inner loop's clip
};

struct TrainResult {
  Matrix weighted;
  BinaryMatrix pruned;
  std::vector<OuterRecord> history;
  double wall_time_seconds = 0.0;
  double final_h = 0.0;
  bool converged = false;
  bool hit_mu_cap = false;
  bool hit_subproblem_cap = false;
  int divergence_recoveries = 0;
};

class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& msg, TrainResult last)
      : std::runtime_error(msg), last_state(std::move(last)) {}
  TrainResult last_state;  // last finite snapshot before the failure
};

double least_squares_score(const Dataset& x, const Matrix& w, double lambda1);

double dag_penalty(double h, double alpha_t, double mu_t);

struct CasperScore {
  double value = 0.0;     // distance + sparsity
  double distance = 0.0;  // mean critic value on real rows minus reconstructed rows
  double sparsity = 0.0;
  Matrix w_grad;                        // linear mode theta gradient
  std::vector<NetGradients> net_grads;  // mlp mode theta gradients, one per node net
  NetGradients phi_grad;                // critic parameter gradient of the distance term
};
CasperScore casper_score(const Dataset& x, const FittingModel& model, const CriticModel& critic,
                         double lambda1);

// k ascent steps on the distance term with theta frozen, each followed by a
// clip of every critic parameter to +-log(1+current_h)
void critic_inner_loop(const Dataset& x, const FittingModel& model, CriticModel& critic,
                       AdamState& opt, int k_inner, double current_h);

TrainResult casper_fit(const Dataset& x, const CasperConfig& config);
TrainResult notears_fit(const Dataset& x, const CasperConfig& config);
TrainResult notears_mlp_fit(const Dataset& x, const CasperConfig& config);

BinaryMatrix random_baseline(int d, double expected_edges, uint64_t seed);

// json record with config echo, history arrays and wall time
std::string train_result_json(const TrainResult& result, const CasperConfig& config);

}  // namespace casper
