#include "casper/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "casper/rng.hpp"

namespace casper {

namespace {

void check_square(const Matrix& w) {
  if (w.rows() != w.cols() || w.rows() < 1)
    throw std::invalid_argument("adjacency must be square and non-empty");
  if (!w.allFinite())
    throw std::invalid_argument("adjacency must be finite");
}

constexpr double kTaylorTol = 1e-12;

}  // namespace

int requested_edges(const GraphModel& model, int d) {
  return model.degree * d;
}

GroundTruthDag generate_er(int d, int degree, uint64_t seed) {
  if (d < 2) throw std::invalid_argument("need at least 2 nodes");
  long max_edges = static_cast<long>(d) * (d - 1) / 2;
  long want = static_cast<long>(degree) * d;
  if (degree < 1 || want > max_edges)
    throw std::invalid_argument("edge budget k*d must lie in [d, d(d-1)/2]");

  Rng rng = make_rng(seed);
  std::vector<int> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  double p = static_cast<double>(want) / static_cast<double>(max_edges);
  std::bernoulli_distribution coin(p);
  BinaryMatrix adj = BinaryMatrix::Zero(d, d);
  for (int a = 0; a < d; ++a)
    for (int b = a + 1; b < d; ++b)
      if (coin(rng)) adj(order[a], order[b]) = 1;  // earlier in order -> later
  return {adj, order};
}

GroundTruthDag generate_sf(int d, int degree, uint64_t seed) {
  if (d < 2) throw std::invalid_argument("need at least 2 nodes");
  int k = degree;
  if (k < 1 || k >= d) throw std::invalid_argument("attachment degree must lie in [1, d-1]");

  Rng rng = make_rng(seed);
  // preferential attachment over arrival labels 0..d-1; first k nodes seed the
  // graph, each later arrival wires k edges toward existing nodes
  std::vector<std::pair<int, int>> edges;
  std::vector<int> repeats;  // nodes repeated once per incident edge
  for (int v = 0; v < k; ++v) repeats.push_back(v);
  for (int v = k; v < d; ++v) {
    std::vector<int> targets;
    std::vector<int> pool = repeats;
    while (static_cast<int>(targets.size()) < k && !pool.empty()) {
      std::uniform_int_distribution<size_t> pick(0, pool.size() - 1);
      int t = pool[pick(rng)];
      targets.push_back(t);
      pool.erase(std::remove(pool.begin(), pool.end(), t), pool.end());
    }
    for (int t : targets) {
      edges.emplace_back(v, t);  // oriented new -> existing
      repeats.push_back(t);
      repeats.push_back(v);
    }
  }

  // uniform relabeling so hub identity is not tied to arrival index
  std::vector<int> relabel(d);
  std::iota(relabel.begin(), relabel.end(), 0);
  std::shuffle(relabel.begin(), relabel.end(), rng);

  BinaryMatrix adj = BinaryMatrix::Zero(d, d);
  for (auto [a, b] : edges) adj(relabel[a], relabel[b]) = 1;

  // arrivals point at earlier nodes, so reversed arrival order is topological
  std::vector<int> order(d);
  for (int v = 0; v < d; ++v) order[d - 1 - v] = relabel[v];
  return {adj, order};
}

Matrix matrix_exponential(const Matrix& m) {
  check_square(m);
  int d = static_cast<int>(m.rows());
  double norm = m.cwiseAbs().rowwise().sum().maxCoeff();  // inf norm
  int s = 0;
  if (norm > 0.5) s = static_cast<int>(std::ceil(std::log2(norm / 0.5)));

  Matrix a = m / std::pow(2.0, s);
  Matrix result = Matrix::Identity(d, d);
  Matrix term = Matrix::Identity(d, d);
  for (int k = 1; k <= 200; ++k) {
    term = (term * a) / k;
    result += term;
    if (term.cwiseAbs().maxCoeff() < kTaylorTol) break;
  }
  for (int i = 0; i < s; ++i) result = result * result;
  return result;
}

double h_value(const Matrix& w, const AcyclicityForm& form) {
  check_square(w);
  int d = static_cast<int>(w.rows());
  Matrix m = w.cwiseProduct(w);
  double h;
  if (form.kind == AcyclicityForm::Kind::MatrixExponential) {
    h = matrix_exponential(m).trace() - d;
  } else {
    if (form.alpha <= 0.0) throw std::invalid_argument("polynomial form needs alpha > 0");
    Matrix b = Matrix::Identity(d, d) + form.alpha * m;
    Matrix p = Matrix::Identity(d, d);
    for (int i = 0; i < d; ++i) p = p * b;
    h = p.trace() - d;
  }
  if (h < 0.0) {
    if (h < -1e-12) throw std::runtime_error("acyclicity value went negative");
    h = 0.0;
  }
  return h;
}

Matrix h_gradient(const Matrix& w, const AcyclicityForm& form) {
  check_square(w);
  int d = static_cast<int>(w.rows());
  Matrix m = w.cwiseProduct(w);
  if (form.kind == AcyclicityForm::Kind::MatrixExponential) {
    return matrix_exponential(m).transpose().cwiseProduct(2.0 * w);
  }
  if (form.alpha <= 0.0) throw std::invalid_argument("polynomial form needs alpha > 0");
  Matrix b = Matrix::Identity(d, d) + form.alpha * m;
  Matrix p = Matrix::Identity(d, d);
  for (int i = 0; i < d - 1; ++i) p = p * b;
  return (d * form.alpha) * p.transpose().cwiseProduct(2.0 * w);
}

BinaryMatrix prune(const Matrix& w, double omega) {
  check_square(w);
  if (omega <= 0.0) throw std::invalid_argument("prune threshold must be positive");
  int d = static_cast<int>(w.rows());
  BinaryMatrix out = BinaryMatrix::Zero(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (i != j && std::abs(w(i, j)) >= omega) out(i, j) = 1;
  return out;
}

bool is_acyclic(const BinaryMatrix& g) {
  if (g.rows() != g.cols()) throw std::invalid_argument("adjacency must be square");
  int d = static_cast<int>(g.rows());
  // iterative DFS, colors: 0 unseen, 1 on stack, 2 done
  std::vector<int> color(d, 0);
  std::vector<std::pair<int, int>> stack;
  for (int start = 0; start < d; ++start) {
    if (color[start] != 0) continue;
    stack.push_back({start, 0});
    color[start] = 1;
    while (!stack.empty()) {
      auto& [v, next] = stack.back();
      bool descended = false;
      for (int j = next; j < d; ++j) {
        if (g(v, j) == 0) continue;
        if (j == v) return false;  // self loop
        if (color[j] == 1) return false;
        if (color[j] == 0) {
          next = j + 1;
          stack.push_back({j, 0});
          color[j] = 1;
          descended = true;
          break;
        }
      }
      if (!descended) {
        color[v] = 2;
        stack.pop_back();
      }
    }
  }
  return true;
}

}  // namespace casper
