#include "casper/sem.hpp"

#include <Eigen/Cholesky>
#include <stdexcept>

#include "casper/rng.hpp"

namespace casper {

namespace {

void check_spec(const GroundTruthDag& dag) {
  if (dag.adjacency.rows() != dag.adjacency.cols())
    throw std::invalid_argument("adjacency must be square");
  if (!is_acyclic(dag.adjacency)) throw std::invalid_argument("simulation needs an acyclic graph");
  if (static_cast<int>(dag.order.size()) != dag.d())
    throw std::invalid_argument("topological order must cover every node");
}

Vector draw_noise(int n, double mean, double std, Rng& rng) {
  std::normal_distribution<double> gauss(mean, std);
  Vector out(n);
  for (int i = 0; i < n; ++i) out(i) = gauss(rng);
  return out;
}

}  // namespace

std::vector<std::string> default_names(int d) {
  std::vector<std::string> names(d);
  for (int j = 0; j < d; ++j) names[j] = "X" + std::to_string(j + 1);
  return names;
}

LinearSemSpec sample_linear_weights(const GroundTruthDag& dag, uint64_t seed,
                                    double noise_mean, double noise_std) {
  check_spec(dag);
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> mag(0.5, 2.0);
  std::bernoulli_distribution flip(0.5);
  int d = dag.d();
  Matrix coeff = Matrix::Zero(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (dag.adjacency(i, j)) coeff(i, j) = (flip(rng) ? -1.0 : 1.0) * mag(rng);
  return {dag, coeff, noise_mean, noise_std};
}

Dataset simulate_linear(const LinearSemSpec& spec, int n, uint64_t seed) {
  check_spec(spec.dag);
  if (n < 1) throw std::invalid_argument("need at least one sample");
  if (spec.noise_std <= 0) throw std::invalid_argument("noise std must be positive");
  int d = spec.dag.d();
  if (spec.coefficients.rows() != d || spec.coefficients.cols() != d)
    throw std::invalid_argument("coefficient shape must match the graph");
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (spec.coefficients(i, j) != 0.0 && !spec.dag.adjacency(i, j))
        throw std::invalid_argument("coefficients must vanish off the edge support");

  Rng rng = make_rng(seed);
  Matrix x = Matrix::Zero(n, d);
  for (int node : spec.dag.order) {
    Vector col = x * spec.coefficients.col(node);
    col += draw_noise(n, spec.noise_mean, spec.noise_std, rng);
    x.col(node) = col;
  }
  return {x, default_names(d)};
}

Dataset simulate_nonlinear_gp(const NonlinearSemSpec& spec, int n, uint64_t seed) {
  check_spec(spec.dag);
  if (n < 1) throw std::invalid_argument("need at least one sample");
  if (n > 10000) throw std::invalid_argument("kernel matrix infeasible past n=10000");
  if (spec.kernel_bandwidth <= 0) throw std::invalid_argument("bandwidth must be positive");
  if (spec.noise_std <= 0) throw std::invalid_argument("noise std must be positive");

  Rng rng = make_rng(seed);
  int d = spec.dag.d();
  Matrix x = Matrix::Zero(n, d);
  std::normal_distribution<double> unit(0.0, 1.0);

  for (int node : spec.dag.order) {
    std::vector<int> parents;
    for (int i = 0; i < d; ++i)
      if (spec.dag.adjacency(i, node)) parents.push_back(i);

    if (!parents.empty()) {
      Matrix p(n, static_cast<int>(parents.size()));
      for (size_t k = 0; k < parents.size(); ++k) p.col(k) = x.col(parents[k]);

      Vector sq = p.rowwise().squaredNorm();
      Matrix dist = sq.replicate(1, n) + sq.transpose().replicate(n, 1) - 2.0 * (p * p.transpose());
      Matrix kernel =
          (-dist / (2.0 * spec.kernel_bandwidth * spec.kernel_bandwidth)).array().exp();

      Vector z(n);
      for (int i = 0; i < n; ++i) z(i) = unit(rng);
      bool done = false;
      for (double jitter = 1e-6; jitter <= 1e-3 + 1e-15; jitter *= 10.0) {
        Matrix shifted = kernel + jitter * Matrix::Identity(n, n);
        Eigen::LLT<Matrix> llt(shifted);
        if (llt.info() == Eigen::Success) {
          x.col(node) = llt.matrixL() * z;
          done = true;
          break;
        }
      }
      if (!done) throw std::runtime_error("kernel factorization failed at max jitter");
      x.col(node) += draw_noise(n, spec.noise_mean, spec.noise_std, rng);
    } else {
      x.col(node) = draw_noise(n, spec.noise_mean, spec.noise_std, rng);
    }
  }
  return {x, default_names(d)};
}

}  // namespace casper
