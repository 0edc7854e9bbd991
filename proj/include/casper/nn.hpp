#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "casper/graph.hpp"
#include "casper/rng.hpp"

namespace casper {

enum class Activation { Sigmoid, Relu, Tanh };

struct DenseNet {
  struct Layer {
    Matrix w;  // in x out
    Matrix b;  // 1 x out
  };
  std::vector<Layer> layers;
  Activation activation = Activation::Sigmoid;  // between layers, none after last
  int input_dim() const { return static_cast<int>(layers.front().w.rows()); }
  int output_dim() const { return static_cast<int>(layers.back().w.cols()); }
};

// uniform +-sqrt(6/(fan_in+fan_out)) init
DenseNet make_dense_net(const std::vector<int>& dims, Activation act, Rng& rng);

Matrix forward(const DenseNet& net, const Matrix& batch);

struct NetGradients {
  std::vector<DenseNet::Layer> layers;  // same shapes as the net
  Matrix input;                         // n x input_dim
};
NetGradients backward(const DenseNet& net, const Matrix& batch, const Matrix& upstream);

void clip_params(DenseNet& net, double c);
double max_abs_param(const DenseNet& net);

// upper bound on |T(x)-T(y)| / ||x-y||_inf from per-layer interval clipping
double lipschitz_bound(const DenseNet& net, double clip);

class AdamState {
 public:
  explicit AdamState(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(const std::vector<Matrix*>& params, const std::vector<const Matrix*>& grads);
  // ascent: same moments, opposite move
  void step_ascent(const std::vector<Matrix*>& params, const std::vector<const Matrix*>& grads);
  void reset();
  double learning_rate() const { return lr_; }
  void set_learning_rate(double lr) { lr_ = lr; }

 private:
  void apply(const std::vector<Matrix*>& params, const std::vector<const Matrix*>& grads,
             double direction);
  double lr_, beta1_, beta2_, eps_;
  long steps_ = 0;
  std::vector<Matrix> m_, v_;
};

struct FittingModel {
  enum class Mode { Linear, PerNodeMlp };
  Mode mode = Mode::Linear;
  Matrix w;                    // linear mode: d x d, X_hat = X W
  std::vector<DenseNet> nets;  // mlp mode: net j predicts column j from all of X
  int d() const {
    return mode == Mode::Linear ? static_cast<int>(w.rows()) : static_cast<int>(nets.size());
  }
};

FittingModel make_linear_model(int d);
FittingModel make_linear_model_random(int d, double scale, Rng& rng);
FittingModel make_mlp_model(int d, int hidden, Rng& rng);

Matrix predict(const FittingModel& model, const Matrix& x);

// linear mode: the weight matrix itself (signed); mlp mode: W_ij = L2 norm of
// the first-layer weights of net j that read input i
Matrix extract_weighted_adjacency(const FittingModel& model);

struct CriticModel {
  DenseNet net;  // d -> 1
  double clip_bound = -1.0;  // negative until the first clip
};
CriticModel make_critic(int d, int hidden, Rng& rng);

std::vector<Matrix*> collect_params(DenseNet& net);
std::vector<Matrix*> collect_params(FittingModel& model);

// versioned json checkpoint, row-major parameter arrays
void save_net_json(const DenseNet& net, const std::string& path);
DenseNet load_net_json(const std::string& path);

}  // namespace casper
