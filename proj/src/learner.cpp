#include "casper/learner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>

#include "casper/rng.hpp"

namespace casper {

namespace {

constexpr int kMaxSubproblems = 64;
// a subproblem only counts as stalled after this many consecutive flat epochs;
// single-epoch flats happen mid-descent whenever adam crawls through a stiff region
constexpr int kStallPatience = 5;
// adam oscillates around a stiff penalty wall with amplitude proportional to the
// learning rate, which keeps h from settling under the tolerance; late subproblems
// are short-travel, so shrinking the step each round costs nothing
constexpr double kSubproblemLrDecay = 0.8;
constexpr double kMinLrFraction = 0.01;

double subproblem_lr(double base, int sub) {
  return std::max(base * std::pow(kSubproblemLrDecay, sub), base * kMinLrFraction);
}

void validate_config(const CasperConfig& cfg) {
  if (cfg.lambda1 < 0.0 || cfg.lambda2 < 0.0)
    throw std::invalid_argument("lambda coefficients must be nonnegative");
  if (cfg.k_inner < 1) throw std::invalid_argument("k_inner must be at least 1");
  if (cfg.k_outer_max < 1) throw std::invalid_argument("k_outer_max must be at least 1");
  if (cfg.omega <= 0.0) throw std::invalid_argument("omega must be positive");
  if (cfg.theta_lr <= 0.0 || cfg.phi_lr <= 0.0)
    throw std::invalid_argument("learning rates must be positive");
  const LagrangianSchedule& l = cfg.lagrangian;
  if (l.mu0 <= 0.0) throw std::invalid_argument("mu0 must be positive");
  if (l.mu_growth <= 1.0) throw std::invalid_argument("mu_growth must exceed 1");
  if (l.progress_ratio <= 0.0 || l.progress_ratio >= 1.0)
    throw std::invalid_argument("progress_ratio must lie in (0,1)");
}

void validate_dataset(const Dataset& x) {
  if (x.n() < 1 || x.d() < 1) throw std::invalid_argument("dataset must be nonempty");
  if (!x.values.allFinite()) throw std::invalid_argument("dataset must be finite");
}

struct Snapshot {
  Matrix w;
  std::vector<DenseNet> nets;
  DenseNet critic_net;
};

Snapshot save_state(const FittingModel& model, const CriticModel& critic) {
  return {model.w, model.nets, critic.net};
}

void restore_state(const Snapshot& snap, FittingModel& model, CriticModel& critic) {
  model.w = snap.w;
  model.nets = snap.nets;
  critic.net = snap.critic_net;
}

NetGradients zero_gradients(const DenseNet& net) {
  NetGradients g;
  for (const auto& layer : net.layers) {
    DenseNet::Layer zl;
    zl.w = Matrix::Zero(layer.w.rows(), layer.w.cols());
    zl.b = Matrix::Zero(layer.b.rows(), layer.b.cols());
    g.layers.push_back(std::move(zl));
  }
  return g;
}

void accumulate(NetGradients& into, const NetGradients& from) {
  for (size_t l = 0; l < into.layers.size(); ++l) {
    into.layers[l].w += from.layers[l].w;
    into.layers[l].b += from.layers[l].b;
  }
}

// theta-side gradients of the fit objective, flat and parallel to collect_params
struct ThetaGradients {
  Matrix w;                             // linear mode
  std::vector<NetGradients> nets;       // mlp mode
  std::vector<const Matrix*> flat(const FittingModel& model) {
    std::vector<const Matrix*> out;
    if (model.mode == FittingModel::Mode::Linear) {
      out.push_back(&w);
      return out;
    }
    for (auto& g : nets)
      for (auto& layer : g.layers) {
        out.push_back(&layer.w);
        out.push_back(&layer.b);
      }
    return out;
  }
};

ThetaGradients zero_theta(const FittingModel& model) {
  ThetaGradients g;
  if (model.mode == FittingModel::Mode::Linear) {
    g.w = Matrix::Zero(model.w.rows(), model.w.cols());
  } else {
    for (const auto& net : model.nets) g.nets.push_back(zero_gradients(net));
  }
  return g;
}

// pushes a d x d adjacency-space gradient through extract_weighted_adjacency
void add_adjacency_gradient(const FittingModel& model, const Matrix& da, ThetaGradients& grads) {
  if (model.mode == FittingModel::Mode::Linear) {
    // adjacency is the weight matrix itself
    grads.w += da;
    return;
  }
  int d = model.d();
  for (int j = 0; j < d; ++j) {
    const Matrix& w1 = model.nets[j].layers.front().w;
    Matrix& g1 = grads.nets[j].layers.front().w;
    for (int i = 0; i < d; ++i) {
      double norm = w1.row(i).norm();
      if (norm > 0.0) g1.row(i) += (da(i, j) / norm) * w1.row(i);
    }
  }
}

double l1_of_adjacency(const Matrix& a) { return a.cwiseAbs().sum(); }

// lambda1 L1 of the weighted adjacency, in value and theta gradient
double add_sparsity(const FittingModel& model, const Matrix& adjacency, double lambda1,
                    ThetaGradients& grads) {
  double value = lambda1 * l1_of_adjacency(adjacency);
  if (lambda1 == 0.0) return value;
  if (model.mode == FittingModel::Mode::Linear) {
    grads.w += lambda1 * model.w.array().sign().matrix();
  } else {
    // adjacency entries are norms, so d|A|/dA = 1 on the support
    Matrix ones = Matrix::Constant(adjacency.rows(), adjacency.cols(), lambda1);
    add_adjacency_gradient(model, ones, grads);
  }
  return value;
}

double add_l2(const FittingModel& model, double lambda2, ThetaGradients& grads) {
  if (model.mode == FittingModel::Mode::Linear || lambda2 == 0.0) return 0.0;
  double sq = 0.0;
  for (size_t j = 0; j < model.nets.size(); ++j) {
    const DenseNet& net = model.nets[j];
    for (size_t l = 0; l < net.layers.size(); ++l) {
      sq += net.layers[l].w.squaredNorm() + net.layers[l].b.squaredNorm();
      grads.nets[j].layers[l].w += lambda2 * net.layers[l].w;
      grads.nets[j].layers[l].b += lambda2 * net.layers[l].b;
    }
  }
  return 0.5 * lambda2 * sq;
}

// distance term and its theta gradient; critic fixed
double add_distance(const Matrix& x, const Matrix& xhat, const FittingModel& model,
                    const CriticModel& critic, ThetaGradients& grads) {
  int n = static_cast<int>(x.rows());
  double mean_real = forward(critic.net, x).mean();
  double mean_hat = forward(critic.net, xhat).mean();
  NetGradients through = backward(critic.net, xhat, Matrix::Constant(n, 1, -1.0 / n));
  if (model.mode == FittingModel::Mode::Linear) {
    grads.w += x.transpose() * through.input;
  } else {
    for (int j = 0; j < model.d(); ++j) {
      NetGradients gj = backward(model.nets[j], x, through.input.col(j));
      accumulate(grads.nets[j], gj);
    }
  }
  return mean_real - mean_hat;
}

NetGradients critic_distance_gradient(const Matrix& x, const Matrix& xhat,
                                      const CriticModel& critic) {
  int n = static_cast<int>(x.rows());
  NetGradients on_real = backward(critic.net, x, Matrix::Constant(n, 1, 1.0 / n));
  NetGradients on_hat = backward(critic.net, xhat, Matrix::Constant(n, 1, -1.0 / n));
  accumulate(on_real, on_hat);
  return on_real;
}

double current_h(const FittingModel& model, const AcyclicityForm& form, Matrix* adjacency_out) {
  Matrix a = extract_weighted_adjacency(model);
  double h = h_value(a, form);
  if (adjacency_out) *adjacency_out = std::move(a);
  return h;
}

void step_theta(FittingModel& model, AdamState& opt, ThetaGradients& grads) {
  opt.step(collect_params(model), grads.flat(model));
}

std::string mode_name(FitMode mode) { return mode == FitMode::Linear ? "linear" : "mlp"; }

TrainResult finish(FittingModel& model, const CasperConfig& cfg, TrainResult res,
                   std::chrono::steady_clock::time_point t0) {
  res.weighted = extract_weighted_adjacency(model);
  res.pruned = prune(res.weighted, cfg.omega);
  res.final_h = h_value(res.weighted, cfg.acyclicity_form);
  res.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

struct LagrangianState {
  double alpha;
  double mu;
  double h_prev = std::numeric_limits<double>::infinity();
  bool done = false;

  explicit LagrangianState(const LagrangianSchedule& s) : alpha(s.alpha0), mu(s.mu0) {}

  // between-subproblem dual update; sets flags on the result when finished
  void update(double h_sub, const LagrangianSchedule& s, TrainResult& res) {
    alpha += mu * h_sub;
    if (h_sub <= s.h_tolerance) {
      res.converged = true;
      done = true;
      return;
    }
    if (h_sub > s.progress_ratio * h_prev) {
      mu *= s.mu_growth;
      if (mu > s.mu_cap) {
        res.hit_mu_cap = true;
        done = true;
      }
    }
    h_prev = h_sub;
  }
};

}  // namespace

CasperConfig default_linear_config(uint64_t seed) {
  CasperConfig cfg;
  cfg.mode = FitMode::Linear;
  cfg.seed = seed;
  return cfg;
}

CasperConfig default_mlp_config(uint64_t seed) {
  CasperConfig cfg;
  cfg.mode = FitMode::Mlp;
  cfg.seed = seed;
  return cfg;
}

double least_squares_score(const Dataset& x, const Matrix& w, double lambda1) {
  if (w.rows() != x.d() || w.cols() != x.d())
    throw std::invalid_argument("weight matrix must be d x d");
  int n = x.n();
  double fit = (x.values - x.values * w).squaredNorm() / (2.0 * n);
  return fit + lambda1 * w.cwiseAbs().sum();
}

double dag_penalty(double h, double alpha_t, double mu_t) {
  return alpha_t * h + 0.5 * mu_t * h * h;
}

CasperScore casper_score(const Dataset& x, const FittingModel& model, const CriticModel& critic,
                         double lambda1) {
  validate_dataset(x);
  if (model.d() != x.d() || critic.net.input_dim() != x.d())
    throw std::invalid_argument("model and critic must match the dataset dimension");
  if (lambda1 < 0.0) throw std::invalid_argument("lambda1 must be nonnegative");

  Matrix xhat = predict(model, x.values);
  ThetaGradients grads = zero_theta(model);
  CasperScore out;
  out.distance = add_distance(x.values, xhat, model, critic, grads);
  Matrix adjacency = extract_weighted_adjacency(model);
  out.sparsity = add_sparsity(model, adjacency, lambda1, grads);
  out.value = out.distance + out.sparsity;
  out.phi_grad = critic_distance_gradient(x.values, xhat, critic);
  if (model.mode == FittingModel::Mode::Linear)
    out.w_grad = std::move(grads.w);
  else
    out.net_grads = std::move(grads.nets);
  return out;
}

void critic_inner_loop(const Dataset& x, const FittingModel& model, CriticModel& critic,
                       AdamState& opt, int k_inner, double current_h) {
  if (k_inner < 1) throw std::invalid_argument("k_inner must be at least 1");
  if (current_h < 0.0) throw std::invalid_argument("h must be nonnegative");
  Matrix xhat = predict(model, x.values);
  double c = std::log1p(current_h);
  for (int k = 0; k < k_inner; ++k) {
    NetGradients g = critic_distance_gradient(x.values, xhat, critic);
    std::vector<const Matrix*> flat;
    for (auto& layer : g.layers) {
      flat.push_back(&layer.w);
      flat.push_back(&layer.b);
    }
    opt.step_ascent(collect_params(critic.net), flat);
    clip_params(critic.net, c);
  }
  critic.clip_bound = c;
}

TrainResult casper_fit(const Dataset& x, const CasperConfig& cfg) {
  validate_config(cfg);
  validate_dataset(x);
  auto t0 = std::chrono::steady_clock::now();
  int d = x.d();
  Rng model_rng = make_rng(derive_seed(cfg.seed, 1));
  Rng critic_rng = make_rng(derive_seed(cfg.seed, 2));
  FittingModel model = cfg.mode == FitMode::Linear
                           ? make_linear_model_random(d, cfg.linear_init_scale, model_rng)
                           : make_mlp_model(d, cfg.mlp_hidden, model_rng);
  CriticModel critic = make_critic(d, cfg.critic_hidden, critic_rng);
  AdamState opt_theta(cfg.theta_lr);
  AdamState opt_phi(cfg.phi_lr);
  TrainResult res;

  // pretraining: descend F with the critic frozen and unclipped
  for (int e = 0; e < cfg.pretrain_epochs; ++e) {
    Matrix xhat = predict(model, x.values);
    ThetaGradients grads = zero_theta(model);
    add_distance(x.values, xhat, model, critic, grads);
    add_sparsity(model, extract_weighted_adjacency(model), cfg.lambda1, grads);
    step_theta(model, opt_theta, grads);
  }
  opt_theta.reset();

  LagrangianState lag(cfg.lagrangian);
  Snapshot snap = save_state(model, critic);
  int global_epoch = 0;
  double theta_lr = cfg.theta_lr, phi_lr = cfg.phi_lr;
  for (int sub = 0; sub < kMaxSubproblems && !lag.done; ++sub) {
    int recoveries = 0;
    int stall = 0;
    double prev_score = std::numeric_limits<double>::infinity();
    opt_theta.reset();  // each subproblem is a fresh optimization target
    opt_theta.set_learning_rate(subproblem_lr(theta_lr, sub));
    for (int e = 0; e < cfg.k_outer_max; ++e) {
      Matrix adjacency;
      double h = current_h(model, cfg.acyclicity_form, &adjacency);
      Matrix xhat = predict(model, x.values);
      ThetaGradients grads = zero_theta(model);
      double distance = add_distance(x.values, xhat, model, critic, grads);
      double score = distance + add_sparsity(model, adjacency, cfg.lambda1, grads) +
                     add_l2(model, cfg.lambda2, grads);
      double total = score + dag_penalty(h, lag.alpha, lag.mu);
      if (!std::isfinite(total)) {
        restore_state(snap, model, critic);
        theta_lr *= 0.5;
        phi_lr *= 0.5;
        opt_theta.reset();
        opt_theta.set_learning_rate(subproblem_lr(theta_lr, sub));
        opt_phi.reset();
        opt_phi.set_learning_rate(phi_lr);
        res.divergence_recoveries++;
        if (++recoveries > cfg.max_divergence_recoveries)
          throw TrainingError("casper training diverged",
                              finish(model, cfg, std::move(res), t0));
        continue;
      }
      snap = save_state(model, critic);
      add_adjacency_gradient(model, (lag.alpha + lag.mu * h) * h_gradient(adjacency, cfg.acyclicity_form),
                             grads);
      step_theta(model, opt_theta, grads);
      double h_new = current_h(model, cfg.acyclicity_form, nullptr);
      critic_inner_loop(x, model, critic, opt_phi, cfg.k_inner, h_new);
      res.history.push_back({global_epoch++, total, h_new, lag.alpha, lag.mu, distance,
                             critic.clip_bound, max_abs_param(critic.net)});
      // the fit is done the moment the constraint holds; lingering here would
      // let the sparsity term erode true edges while the critic is clipped out
      if (h_new <= cfg.lagrangian.h_tolerance) break;
      if (std::abs(total - prev_score) < cfg.rel_change_tol * std::max(1.0, std::abs(prev_score)))
        stall++;
      else
        stall = 0;
      if (stall >= kStallPatience) break;
      prev_score = total;
    }
    lag.update(current_h(model, cfg.acyclicity_form, nullptr), cfg.lagrangian, res);
    if (cfg.reset_critic_between_subproblems && !lag.done) {
      critic = make_critic(d, cfg.critic_hidden, critic_rng);
      opt_phi.reset();
    }
  }
  if (!lag.done) res.hit_subproblem_cap = true;
  return finish(model, cfg, std::move(res), t0);
}

namespace {

TrainResult notears_engine(const Dataset& x, const CasperConfig& cfg) {
  validate_config(cfg);
  validate_dataset(x);
  auto t0 = std::chrono::steady_clock::now();
  int d = x.d();
  Rng model_rng = make_rng(derive_seed(cfg.seed, 1));
  FittingModel model = cfg.mode == FitMode::Linear ? make_linear_model(d)
                                                   : make_mlp_model(d, cfg.mlp_hidden, model_rng);
  CriticModel unused_critic;  // empty, keeps the snapshot helpers uniform
  AdamState opt(cfg.theta_lr);
  TrainResult res;
  const Matrix& data = x.values;
  int n = x.n();

  LagrangianState lag(cfg.lagrangian);
  Snapshot snap = save_state(model, unused_critic);
  int global_epoch = 0;
  double theta_lr = cfg.theta_lr;
  for (int sub = 0; sub < kMaxSubproblems && !lag.done; ++sub) {
    int recoveries = 0;
    int stall = 0;
    double prev_score = std::numeric_limits<double>::infinity();
    opt.reset();  // each subproblem is a fresh optimization target
    opt.set_learning_rate(subproblem_lr(theta_lr, sub));
    for (int e = 0; e < cfg.k_outer_max; ++e) {
      Matrix adjacency;
      double h = current_h(model, cfg.acyclicity_form, &adjacency);
      ThetaGradients grads = zero_theta(model);
      Matrix xhat = predict(model, data);
      Matrix residual = data - xhat;
      double score = residual.squaredNorm() / (2.0 * n);
      if (model.mode == FittingModel::Mode::Linear) {
        grads.w += -(data.transpose() * residual) / n;
      } else {
        Matrix up = -residual / n;
        for (int j = 0; j < d; ++j)
          accumulate(grads.nets[j], backward(model.nets[j], data, up.col(j)));
      }
      score += add_sparsity(model, adjacency, cfg.lambda1, grads);
      score += add_l2(model, cfg.lambda2, grads);
      double total = score + dag_penalty(h, lag.alpha, lag.mu);
      if (!std::isfinite(total)) {
        restore_state(snap, model, unused_critic);
        theta_lr *= 0.5;
        opt.reset();
        opt.set_learning_rate(subproblem_lr(theta_lr, sub));
        res.divergence_recoveries++;
        if (++recoveries > cfg.max_divergence_recoveries)
          throw TrainingError("baseline training diverged",
                              finish(model, cfg, std::move(res), t0));
        continue;
      }
      snap = save_state(model, unused_critic);
      add_adjacency_gradient(model, (lag.alpha + lag.mu * h) * h_gradient(adjacency, cfg.acyclicity_form),
                             grads);
      step_theta(model, opt, grads);
      double h_new = current_h(model, cfg.acyclicity_form, nullptr);
      res.history.push_back({global_epoch++, total, h_new, lag.alpha, lag.mu, 0.0, 0.0, 0.0});
      if (std::abs(total - prev_score) < cfg.rel_change_tol * std::max(1.0, std::abs(prev_score)))
        stall++;
      else
        stall = 0;
      if (stall >= kStallPatience) break;
      prev_score = total;
    }
    lag.update(current_h(model, cfg.acyclicity_form, nullptr), cfg.lagrangian, res);
  }
  if (!lag.done) res.hit_subproblem_cap = true;
  return finish(model, cfg, std::move(res), t0);
}

}  // namespace

TrainResult notears_fit(const Dataset& x, const CasperConfig& config) {
  CasperConfig cfg = config;
  cfg.mode = FitMode::Linear;
  return notears_engine(x, cfg);
}

TrainResult notears_mlp_fit(const Dataset& x, const CasperConfig& config) {
  CasperConfig cfg = config;
  cfg.mode = FitMode::Mlp;
  return notears_engine(x, cfg);
}

BinaryMatrix random_baseline(int d, double expected_edges, uint64_t seed) {
  if (d < 1) throw std::invalid_argument("d must be positive");
  double max_edges = d * (d - 1) / 2.0;
  if (expected_edges < 0.0 || expected_edges > max_edges)
    throw std::invalid_argument("expected edge count must lie in [0, d(d-1)/2]");
  Rng rng = make_rng(seed);
  std::vector<int> order(d);
  for (int i = 0; i < d; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  double p = max_edges > 0.0 ? expected_edges / max_edges : 0.0;
  std::bernoulli_distribution edge(p);
  BinaryMatrix g = BinaryMatrix::Zero(d, d);
  for (int a = 0; a < d; ++a)
    for (int b = a + 1; b < d; ++b)
      if (edge(rng)) g(order[a], order[b]) = 1;
  return g;
}

std::string train_result_json(const TrainResult& result, const CasperConfig& config) {
  nlohmann::json doc;
  nlohmann::json cfg;
  cfg["mode"] = mode_name(config.mode);
  cfg["lambda1"] = config.lambda1;
  cfg["lambda2"] = config.lambda2;
  cfg["k_inner"] = config.k_inner;
  cfg["k_outer_max"] = config.k_outer_max;
  cfg["pretrain_epochs"] = config.pretrain_epochs;
  cfg["omega"] = config.omega;
  cfg["acyclicity_form"] =
      config.acyclicity_form.kind == AcyclicityForm::Kind::MatrixExponential ? "expm"
                                                                             : "polynomial";
  cfg["acyclicity_alpha"] = config.acyclicity_form.alpha;
  cfg["seed"] = config.seed;
  cfg["theta_lr"] = config.theta_lr;
  cfg["phi_lr"] = config.phi_lr;
  cfg["mlp_hidden"] = config.mlp_hidden;
  cfg["critic_hidden"] = config.critic_hidden;
  cfg["linear_init_scale"] = config.linear_init_scale;
  cfg["reset_critic_between_subproblems"] = config.reset_critic_between_subproblems;
  nlohmann::json lagr;
  lagr["alpha0"] = config.lagrangian.alpha0;
  lagr["mu0"] = config.lagrangian.mu0;
  lagr["mu_growth"] = config.lagrangian.mu_growth;
  lagr["progress_ratio"] = config.lagrangian.progress_ratio;
  lagr["h_tolerance"] = config.lagrangian.h_tolerance;
  lagr["mu_cap"] = config.lagrangian.mu_cap;
  cfg["lagrangian"] = lagr;
  doc["config"] = cfg;

  nlohmann::json hist;
  for (const char* key : {"epoch", "score", "h", "alpha", "mu", "critic_distance", "clip_bound",
                          "max_abs_critic_param"})
    hist[key] = nlohmann::json::array();
  for (const auto& rec : result.history) {
    hist["epoch"].push_back(rec.epoch);
    hist["score"].push_back(rec.score);
    hist["h"].push_back(rec.h);
    hist["alpha"].push_back(rec.alpha);
    hist["mu"].push_back(rec.mu);
    hist["critic_distance"].push_back(rec.critic_distance);
    hist["clip_bound"].push_back(rec.clip_bound);
    hist["max_abs_critic_param"].push_back(rec.max_abs_critic_param);
  }
  doc["history"] = hist;
  doc["wall_time_seconds"] = result.wall_time_seconds;
  doc["final_h"] = result.final_h;
  doc["converged"] = result.converged;
  doc["hit_mu_cap"] = result.hit_mu_cap;
  doc["hit_subproblem_cap"] = result.hit_subproblem_cap;
  doc["divergence_recoveries"] = result.divergence_recoveries;
  return doc.dump(2);
}

}  // namespace casper
