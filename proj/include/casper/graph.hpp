#pragma once
#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace casper {

using Matrix = Eigen::MatrixXd;
using BinaryMatrix = Eigen::MatrixXi;  // entries 0/1, no self loops for DAGs
using Vector = Eigen::VectorXd;

struct GroundTruthDag {
  BinaryMatrix adjacency;       // (i,j)=1 means edge i -> j
  std::vector<int> order;       // a topological order of the nodes
  int d() const { return static_cast<int>(adjacency.rows()); }
  int edge_count() const { return adjacency.sum(); }
};

struct GraphModel {
  enum class Scheme { Er, Sf };
  Scheme scheme = Scheme::Er;
  int degree = 2;
};

struct AcyclicityForm {
  enum class Kind { MatrixExponential, Polynomial };
  Kind kind = Kind::MatrixExponential;
  double alpha = 0.0;  // polynomial only, must be > 0
  static AcyclicityForm matrix_exponential() { return {Kind::MatrixExponential, 0.0}; }
  static AcyclicityForm polynomial(double a) { return {Kind::Polynomial, a}; }
  // 1/d keeps the polynomial well conditioned as d grows
  static AcyclicityForm polynomial_default(int d) { return polynomial(1.0 / d); }
};

// nominal edge budget for a generation scheme; the SF mechanism can realize
// fewer when early arrivals have too few attachment targets
int requested_edges(const GraphModel& model, int d);

GroundTruthDag generate_er(int d, int degree, uint64_t seed);
GroundTruthDag generate_sf(int d, int degree, uint64_t seed);

// trace-based acyclicity functional; 0 exactly on DAG-supported matrices
double h_value(const Matrix& w, const AcyclicityForm& form);
Matrix h_gradient(const Matrix& w, const AcyclicityForm& form);

// |w| >= omega keeps the edge; diagonal always dropped
BinaryMatrix prune(const Matrix& w, double omega);

bool is_acyclic(const BinaryMatrix& g);

// exp(m) for square nonnegative m, scaling and squaring + truncated Taylor
Matrix matrix_exponential(const Matrix& m);

}  // namespace casper
