#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <nlohmann/json.hpp>
#include <random>

#include "casper/learner.hpp"
#include "casper/metrics.hpp"

using namespace casper;

namespace {

// naive scalar-loop least squares, the reference for the vectorized version
double naive_ls(const Matrix& x, const Matrix& w, double lambda1) {
  int n = static_cast<int>(x.rows()), d = static_cast<int>(x.cols());
  double acc = 0.0;
  for (int r = 0; r < n; ++r)
    for (int j = 0; j < d; ++j) {
      double pred = 0.0;
      for (int i = 0; i < d; ++i) pred += x(r, i) * w(i, j);
      acc += (x(r, j) - pred) * (x(r, j) - pred);
    }
  double l1 = 0.0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) l1 += std::abs(w(i, j));
  return acc / (2.0 * n) + lambda1 * l1;
}

Dataset make_dataset(const Matrix& values) {
  Dataset out;
  out.values = values;
  out.names = default_names(static_cast<int>(values.cols()));
  return out;
}

Dataset two_node_chain(int n, double coeff, uint64_t seed) {
  GroundTruthDag dag;
  dag.adjacency = BinaryMatrix::Zero(2, 2);
  dag.adjacency(0, 1) = 1;
  dag.order = {0, 1};
  LinearSemSpec spec;
  spec.dag = dag;
  spec.coefficients = Matrix::Zero(2, 2);
  spec.coefficients(0, 1) = coeff;
  return simulate_linear(spec, n, seed);
}

CriticModel linear_critic(const Vector& w) {
  CriticModel critic;
  critic.net.activation = Activation::Tanh;
  DenseNet::Layer l;
  l.w = w;
  l.b = Matrix::Zero(1, 1);
  critic.net.layers = {l};
  return critic;
}

void check_run_invariants(const TrainResult& res) {
  REQUIRE(!res.history.empty());
  for (size_t k = 0; k < res.history.size(); ++k) {
    if (k > 0) {
      CHECK(res.history[k].epoch > res.history[k - 1].epoch);
      CHECK(res.history[k].mu >= res.history[k - 1].mu);
    }
    CHECK(res.history[k].max_abs_critic_param <= res.history[k].clip_bound + 1e-12);
  }
  CHECK(is_acyclic(res.pruned));
  if (res.converged)
    CHECK(res.final_h <= 1e-8);
  else
    CHECK((res.hit_mu_cap || res.hit_subproblem_cap));
}

}  // namespace

TEST_CASE("least squares matches the scalar oracle") {
  Rng rng(11);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int rep = 0; rep < 20; ++rep) {
    int n = 3 + static_cast<int>(rng() % 5), d = 2 + static_cast<int>(rng() % 3);
    Matrix x(n, d), w(d, d);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) x(i, j) = u(rng);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) w(i, j) = u(rng);
    Dataset data = make_dataset(x);
    CHECK(least_squares_score(data, w, 0.1) ==
          doctest::Approx(naive_ls(x, w, 0.1)).epsilon(1e-12));
  }
}

TEST_CASE("least squares worked cases") {
  // single row (1,2), one edge of weight 1: residuals 1 and 1, plus 0.1 L1
  Matrix x(1, 2);
  x << 1, 2;
  Matrix w = Matrix::Zero(2, 2);
  w(0, 1) = 1;
  CHECK(least_squares_score(make_dataset(x), w, 0.1) == doctest::Approx(1.1).epsilon(1e-15));

  Rng rng(12);
  std::uniform_real_distribution<double> u(-1, 1);
  Matrix big(50, 3);
  for (int i = 0; i < 50; ++i)
    for (int j = 0; j < 3; ++j) big(i, j) = u(rng);
  Dataset data = make_dataset(big);
  CHECK(least_squares_score(data, Matrix::Zero(3, 3), 0.0) ==
        doctest::Approx(big.squaredNorm() / 100.0).epsilon(1e-12));

  // exact-reconstruction column: x2 = 1.5 x1 with binary-exact values, so the
  // only residual left is the unexplained root column: (1+4+9+0.25)/(2*4)
  Matrix exact(4, 2);
  exact << 1, 1.5, -2, -3, 3, 4.5, 0.5, 0.75;
  Matrix wtrue = Matrix::Zero(2, 2);
  wtrue(0, 1) = 1.5;
  CHECK(least_squares_score(make_dataset(exact), wtrue, 0.0) ==
        doctest::Approx(1.78125).epsilon(1e-15));

  CHECK_THROWS_AS(least_squares_score(data, Matrix::Zero(2, 2), 0.0), std::invalid_argument);
}

TEST_CASE("dag penalty worked cases") {
  CHECK(dag_penalty(0.0, 3.0, 7.0) == 0.0);
  CHECK(dag_penalty(2.0, 1.0, 4.0) == doctest::Approx(10.0).epsilon(1e-15));
  Rng rng(13);
  std::uniform_real_distribution<double> u(0.01, 5.0);
  for (int rep = 0; rep < 50; ++rep) {
    double alpha = u(rng), mu = u(rng), h1 = u(rng), h2 = h1 + u(rng);
    CHECK(dag_penalty(h2, alpha, mu) > dag_penalty(h1, alpha, mu));
  }
}

TEST_CASE("casper score worked cases") {
  Rng rng(14);
  Matrix x(3, 2);
  x << 0.5, -1.0, 1.5, 0.25, -0.75, 2.0;
  Dataset data = make_dataset(x);

  FittingModel model = make_linear_model(2);
  model.w << 0.0, 0.8, -0.3, 0.0;

  SUBCASE("zero critic leaves only the sparsity term") {
    CriticModel critic = make_critic(2, 16, rng);
    clip_params(critic.net, 0.0);
    CasperScore s = casper_score(data, model, critic, 0.5);
    CHECK(s.distance == 0.0);
    CHECK(s.value == doctest::Approx(0.5 * 1.1).epsilon(1e-14));
    CHECK((s.w_grad - 0.5 * model.w.array().sign().matrix()).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("identity fitting zeroes the distance for any critic") {
    FittingModel identity = make_linear_model(2);
    identity.w = Matrix::Identity(2, 2);
    CriticModel critic = make_critic(2, 16, rng);
    CasperScore s = casper_score(data, identity, critic, 0.0);
    CHECK(s.distance == 0.0);
  }

  SUBCASE("linear critic reduces to a mean difference") {
    Vector w(2);
    w << 0.7, -0.2;
    CriticModel critic = linear_critic(w);
    CasperScore s = casper_score(data, model, critic, 0.0);
    // hand evaluation: T(x) = 0.7 x1 - 0.2 x2 averaged over rows of X and XW
    Matrix xhat = x * model.w;
    double want = 0.7 * (x.col(0).mean() - xhat.col(0).mean()) -
                  0.2 * (x.col(1).mean() - xhat.col(1).mean());
    CHECK(s.distance == doctest::Approx(want).epsilon(1e-14));
  }

  SUBCASE("dimension mismatch is rejected") {
    CriticModel critic = make_critic(3, 16, rng);
    CHECK_THROWS_AS(casper_score(data, model, critic, 0.0), std::invalid_argument);
  }
}

TEST_CASE("casper score gradients match finite differences") {
  std::mt19937_64 seeder(15);
  std::uniform_real_distribution<double> u(-1.2, 1.2);
  double eps = 1e-6;
  for (int rep = 0; rep < 6; ++rep) {
    Rng rng(seeder());
    Matrix x(5, 3);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 3; ++j) x(i, j) = u(rng);
    Dataset data = make_dataset(x);
    bool linear = rep % 2 == 0;
    FittingModel model = linear ? make_linear_model_random(3, 0.8, rng)
                                : make_mlp_model(3, 4, rng);
    CriticModel critic = make_critic(3, 8, rng);
    double lambda1 = 0.05;
    CasperScore s = casper_score(data, model, critic, lambda1);

    if (linear) {
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          FittingModel up = model, down = model;
          up.w(i, j) += eps;
          down.w(i, j) -= eps;
          double fd = (casper_score(data, up, critic, lambda1).value -
                       casper_score(data, down, critic, lambda1).value) /
                      (2 * eps);
          CHECK(s.w_grad(i, j) == doctest::Approx(fd).epsilon(1e-4).scale(1.0));
        }
    } else {
      for (int node = 0; node < 3; ++node)
        for (size_t l = 0; l < model.nets[node].layers.size(); ++l)
          for (int i = 0; i < model.nets[node].layers[l].w.rows(); ++i)
            for (int j = 0; j < model.nets[node].layers[l].w.cols(); ++j) {
              FittingModel up = model, down = model;
              up.nets[node].layers[l].w(i, j) += eps;
              down.nets[node].layers[l].w(i, j) -= eps;
              double fd = (casper_score(data, up, critic, lambda1).value -
                           casper_score(data, down, critic, lambda1).value) /
                          (2 * eps);
              CHECK(s.net_grads[node].layers[l].w(i, j) ==
                    doctest::Approx(fd).epsilon(1e-4).scale(1.0));
            }
    }

    for (size_t l = 0; l < critic.net.layers.size(); ++l)
      for (int i = 0; i < critic.net.layers[l].w.rows(); ++i)
        for (int j = 0; j < critic.net.layers[l].w.cols(); ++j) {
          CriticModel up = critic, down = critic;
          up.net.layers[l].w(i, j) += eps;
          down.net.layers[l].w(i, j) -= eps;
          double fd = (casper_score(data, model, up, 0.0).value -
                       casper_score(data, model, down, 0.0).value) /
                      (2 * eps);
          CHECK(s.phi_grad.layers[l].w(i, j) == doctest::Approx(fd).epsilon(1e-4).scale(1.0));
        }
  }
}

TEST_CASE("critic inner loop clipping") {
  Rng rng(16);
  Matrix x(200, 3);
  std::normal_distribution<double> gauss;
  for (int i = 0; i < 200; ++i)
    for (int j = 0; j < 3; ++j) x(i, j) = gauss(rng);
  Dataset data = make_dataset(x);
  FittingModel model = make_linear_model(3);  // xhat = 0, easy to tell apart

  SUBCASE("h of zero collapses the critic") {
    CriticModel critic = make_critic(3, 16, rng);
    AdamState opt(0.005);
    critic_inner_loop(data, model, critic, opt, 3, 0.0);
    CHECK(max_abs_param(critic.net) == 0.0);
    CHECK(forward(critic.net, x).cwiseAbs().maxCoeff() == 0.0);
    CHECK(critic.clip_bound == 0.0);
  }

  SUBCASE("bound follows log(1+h)") {
    CriticModel critic = make_critic(3, 16, rng);
    AdamState opt(0.005);
    critic_inner_loop(data, model, critic, opt, 3, 3.91);
    CHECK(critic.clip_bound == doctest::Approx(1.5913).epsilon(1e-4));
    CHECK(max_abs_param(critic.net) <= critic.clip_bound + 1e-15);
  }

  SUBCASE("ascent increases the distance when the bound allows it") {
    CriticModel critic = make_critic(3, 16, rng);
    auto distance = [&](const CriticModel& c) {
      return forward(c.net, x).mean() - forward(c.net, Matrix::Zero(200, 3)).mean();
    };
    double before = distance(critic);
    AdamState opt(0.005);
    for (int round = 0; round < 10; ++round)
      critic_inner_loop(data, model, critic, opt, 3, 10.0);
    CHECK(distance(critic) > before);
  }
}

TEST_CASE("casper fit recovers a two node chain") {
  Dataset data = two_node_chain(2000, 1.5, 21);
  CasperConfig cfg = default_linear_config(7);
  // start hot: the clip bound tracks dag-ness, so a near-dag init would mute the
  // critic before it has seen anything
  cfg.linear_init_scale = 1.0;
  TrainResult res = casper_fit(data, cfg);
  check_run_invariants(res);
  BinaryMatrix truth = BinaryMatrix::Zero(2, 2);
  truth(0, 1) = 1;
  CHECK(structural_hamming(truth, res.pruned) == 0);
  CHECK(res.converged);
  CHECK(res.wall_time_seconds > 0.0);
}

TEST_CASE("notears fit recovers a two node chain") {
  Dataset data = two_node_chain(2000, 1.5, 22);
  CasperConfig cfg = default_linear_config(8);
  cfg.lambda1 = 0.1;
  cfg.theta_lr = 0.03;  // least-squares descent tolerates (and needs) a hotter step
  TrainResult res = notears_fit(data, cfg);
  check_run_invariants(res);
  BinaryMatrix truth = BinaryMatrix::Zero(2, 2);
  truth(0, 1) = 1;
  CHECK(structural_hamming(truth, res.pruned) == 0);
  CHECK(res.converged);
}

TEST_CASE("notears mlp fit runs and returns a dag") {
  Dataset data = two_node_chain(400, 1.5, 23);
  CasperConfig cfg = default_mlp_config(9);
  cfg.k_outer_max = 150;
  TrainResult res = notears_mlp_fit(data, cfg);
  check_run_invariants(res);
  CHECK(res.weighted.minCoeff() >= 0.0);
}

TEST_CASE("linear fits are deterministic per seed") {
  Dataset data = two_node_chain(500, 1.2, 24);
  CasperConfig cfg = default_linear_config(10);
  cfg.k_outer_max = 120;
  TrainResult a = casper_fit(data, cfg);
  TrainResult b = casper_fit(data, cfg);
  CHECK((a.weighted - b.weighted).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.history.size() == b.history.size());

  TrainResult na = notears_fit(data, cfg);
  TrainResult nb = notears_fit(data, cfg);
  CHECK((na.weighted - nb.weighted).cwiseAbs().maxCoeff() == 0.0);

  CasperConfig other = cfg;
  other.seed = 11;
  TrainResult c = casper_fit(data, other);
  CHECK((a.weighted - c.weighted).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("divergence raises a training error with the last finite state") {
  Dataset data = two_node_chain(200, 1.5, 25);
  CasperConfig cfg = default_linear_config(12);
  cfg.theta_lr = 1e12;
  CHECK_THROWS_AS(notears_fit(data, cfg), TrainingError);
  try {
    notears_fit(data, cfg);
  } catch (const TrainingError& err) {
    CHECK(err.last_state.weighted.allFinite());
    CHECK(err.last_state.divergence_recoveries > 3);
  }
  CHECK_THROWS_AS(casper_fit(data, cfg), TrainingError);
}

TEST_CASE("random baseline") {
  CHECK(random_baseline(6, 0.0, 1).sum() == 0);

  BinaryMatrix full = random_baseline(5, 10.0, 2);
  CHECK(full.sum() == 10);
  CHECK(is_acyclic(full));

  BinaryMatrix g = random_baseline(8, 12.0, 3);
  CHECK(structural_hamming(g, g) == 0);
  CHECK(is_acyclic(g));

  // an independent uniform dag with e expected edges covers a given true edge
  // with probability e/(d(d-1)): the pair is drawn e/(d(d-1)/2) of the time and
  // the direction matches half of that.  at e=d=10 the mean tpr is 1/9
  double tpr_sum = 0.0;
  for (int s = 0; s < 100; ++s) {
    GroundTruthDag truth = generate_er(10, 2, 1000 + s);
    BinaryMatrix est = random_baseline(10, 10.0, 2000 + s);
    tpr_sum += tpr_fdr(truth.adjacency, est).tpr;
  }
  CHECK(tpr_sum / 100.0 == doctest::Approx(1.0 / 9.0).epsilon(0.35));
  CHECK(tpr_sum / 100.0 < 0.2);

  CHECK_THROWS_AS(random_baseline(4, 7.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(random_baseline(4, -1.0, 1), std::invalid_argument);
}

TEST_CASE("config validation") {
  Dataset data = two_node_chain(50, 1.0, 26);
  CasperConfig cfg = default_linear_config(1);
  cfg.k_inner = 0;
  CHECK_THROWS_AS(casper_fit(data, cfg), std::invalid_argument);
  cfg = default_linear_config(1);
  cfg.omega = 0.0;
  CHECK_THROWS_AS(casper_fit(data, cfg), std::invalid_argument);
  cfg = default_linear_config(1);
  cfg.lambda1 = -0.1;
  CHECK_THROWS_AS(notears_fit(data, cfg), std::invalid_argument);
  cfg = default_linear_config(1);
  cfg.lagrangian.progress_ratio = 1.5;
  CHECK_THROWS_AS(casper_fit(data, cfg), std::invalid_argument);
}

TEST_CASE("train result serializes to json") {
  Dataset data = two_node_chain(300, 1.5, 27);
  CasperConfig cfg = default_linear_config(13);
  cfg.k_outer_max = 60;
  TrainResult res = notears_fit(data, cfg);
  nlohmann::json doc = nlohmann::json::parse(train_result_json(res, cfg));
  CHECK(doc["config"]["mode"] == "linear");
  CHECK(doc["config"]["seed"] == 13);
  CHECK(doc["config"]["lagrangian"]["mu_growth"] == 10.0);
  CHECK(doc["history"]["epoch"].size() == res.history.size());
  CHECK(doc["history"]["h"].size() == res.history.size());
  CHECK(doc["wall_time_seconds"].get<double>() >= 0.0);
  CHECK(doc.contains("converged"));
}
