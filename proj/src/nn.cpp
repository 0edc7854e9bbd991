#include "casper/nn.hpp"

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <stdexcept>

namespace casper {

namespace {

constexpr const char* kNetMagic = "dense-net/1";

Matrix activate(const Matrix& z, Activation act) {
  switch (act) {
    case Activation::Sigmoid:
      return (1.0 / (1.0 + (-z.array()).exp())).matrix();
    case Activation::Relu:
      return z.cwiseMax(0.0);
    case Activation::Tanh:
      return z.array().tanh().matrix();
  }
  throw std::logic_error("unknown activation");
}

// derivative expressed through the activation output
Matrix activate_grad(const Matrix& a, Activation act) {
  switch (act) {
    case Activation::Sigmoid:
      return (a.array() * (1.0 - a.array())).matrix();
    case Activation::Relu:
      return (a.array() > 0.0).cast<double>().matrix();
    case Activation::Tanh:
      return (1.0 - a.array().square()).matrix();
  }
  throw std::logic_error("unknown activation");
}

double activation_slope(Activation act) {
  switch (act) {
    case Activation::Sigmoid:
      return 0.25;
    case Activation::Relu:
      return 1.0;
    case Activation::Tanh:
      return 1.0;
  }
  return 1.0;
}

void check_batch(const DenseNet& net, const Matrix& batch) {
  if (net.layers.empty()) throw std::invalid_argument("net has no layers");
  if (batch.cols() != net.input_dim())
    throw std::invalid_argument("batch width must equal the net input dim");
  if (!batch.allFinite()) throw std::invalid_argument("batch must be finite");
}

}  // namespace

DenseNet make_dense_net(const std::vector<int>& dims, Activation act, Rng& rng) {
  if (dims.size() < 2) throw std::invalid_argument("need at least input and output dims");
  DenseNet net;
  net.activation = act;
  for (size_t l = 0; l + 1 < dims.size(); ++l) {
    int in = dims[l], out = dims[l + 1];
    if (in < 1 || out < 1) throw std::invalid_argument("layer dims must be positive");
    double bound = std::sqrt(6.0 / (in + out));
    std::uniform_real_distribution<double> u(-bound, bound);
    DenseNet::Layer layer;
    layer.w = Matrix(in, out);
    for (int i = 0; i < in; ++i)
      for (int j = 0; j < out; ++j) layer.w(i, j) = u(rng);
    layer.b = Matrix::Zero(1, out);
    net.layers.push_back(std::move(layer));
  }
  return net;
}

Matrix forward(const DenseNet& net, const Matrix& batch) {
  check_batch(net, batch);
  Matrix a = batch;
  for (size_t l = 0; l < net.layers.size(); ++l) {
    Matrix z = (a * net.layers[l].w).rowwise() + net.layers[l].b.row(0);
    a = (l + 1 < net.layers.size()) ? activate(z, net.activation) : z;
  }
  return a;
}

NetGradients backward(const DenseNet& net, const Matrix& batch, const Matrix& upstream) {
  check_batch(net, batch);
  size_t depth = net.layers.size();
  if (upstream.rows() != batch.rows() || upstream.cols() != net.output_dim())
    throw std::invalid_argument("upstream gradient shape mismatch");

  std::vector<Matrix> inputs(depth);  // activation fed into each layer
  Matrix a = batch;
  for (size_t l = 0; l < depth; ++l) {
    inputs[l] = a;
    Matrix z = (a * net.layers[l].w).rowwise() + net.layers[l].b.row(0);
    a = (l + 1 < depth) ? activate(z, net.activation) : z;
  }

  NetGradients grads;
  grads.layers.resize(depth);
  Matrix delta = upstream;  // dL/dz of the layer being processed
  for (size_t l = depth; l-- > 0;) {
    grads.layers[l].w = inputs[l].transpose() * delta;
    grads.layers[l].b = delta.colwise().sum();
    Matrix da = delta * net.layers[l].w.transpose();
    if (l > 0)
      delta = da.cwiseProduct(activate_grad(inputs[l], net.activation));
    else
      grads.input = da;
  }
  return grads;
}

void clip_params(DenseNet& net, double c) {
  if (c < 0.0) throw std::invalid_argument("clip bound must be nonnegative");
  for (auto& layer : net.layers) {
    layer.w = layer.w.cwiseMax(-c).cwiseMin(c);
    layer.b = layer.b.cwiseMax(-c).cwiseMin(c);
  }
}

double max_abs_param(const DenseNet& net) {
  double mx = 0.0;
  for (const auto& layer : net.layers)
    mx = std::max({mx, layer.w.cwiseAbs().maxCoeff(), layer.b.cwiseAbs().maxCoeff()});
  return mx;
}

double lipschitz_bound(const DenseNet& net, double clip) {
  double bound = 1.0;
  for (size_t l = 0; l < net.layers.size(); ++l) {
    bound *= clip * static_cast<double>(net.layers[l].w.rows());
    if (l + 1 < net.layers.size()) bound *= activation_slope(net.activation);
  }
  return bound;
}

AdamState::AdamState(double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void AdamState::reset() {
  steps_ = 0;
  m_.clear();
  v_.clear();
}

void AdamState::apply(const std::vector<Matrix*>& params, const std::vector<const Matrix*>& grads,
                      double direction) {
  if (params.size() != grads.size()) throw std::invalid_argument("param/grad count mismatch");
  if (m_.empty()) {
    for (const auto* p : params) {
      m_.push_back(Matrix::Zero(p->rows(), p->cols()));
      v_.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
  }
  if (m_.size() != params.size()) throw std::invalid_argument("optimizer bound to another model");
  steps_++;
  double bc1 = 1.0 - std::pow(beta1_, steps_);
  double bc2 = 1.0 - std::pow(beta2_, steps_);
  for (size_t k = 0; k < params.size(); ++k) {
    const Matrix& g = *grads[k];
    Matrix& p = *params[k];
    if (g.rows() != p.rows() || g.cols() != p.cols())
      throw std::invalid_argument("gradient shape mismatch");
    m_[k] = beta1_ * m_[k] + (1.0 - beta1_) * g;
    v_[k] = beta2_ * v_[k] + (1.0 - beta2_) * g.cwiseProduct(g);
    Matrix mhat = m_[k] / bc1;
    Matrix vhat = v_[k] / bc2;
    p -= direction * lr_ * (mhat.array() / (vhat.array().sqrt() + eps_)).matrix();
  }
}

void AdamState::step(const std::vector<Matrix*>& params, const std::vector<const Matrix*>& grads) {
  apply(params, grads, 1.0);
}

void AdamState::step_ascent(const std::vector<Matrix*>& params,
                            const std::vector<const Matrix*>& grads) {
  apply(params, grads, -1.0);
}

FittingModel make_linear_model(int d) {
  FittingModel model;
  model.mode = FittingModel::Mode::Linear;
  model.w = Matrix::Zero(d, d);
  return model;
}

FittingModel make_linear_model_random(int d, double scale, Rng& rng) {
  FittingModel model = make_linear_model(d);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) model.w(i, j) = u(rng);
  return model;
}

FittingModel make_mlp_model(int d, int hidden, Rng& rng) {
  FittingModel model;
  model.mode = FittingModel::Mode::PerNodeMlp;
  for (int j = 0; j < d; ++j)
    model.nets.push_back(make_dense_net({d, hidden, 1}, Activation::Sigmoid, rng));
  return model;
}

Matrix predict(const FittingModel& model, const Matrix& x) {
  if (model.mode == FittingModel::Mode::Linear) {
    if (x.cols() != model.w.rows()) throw std::invalid_argument("batch width mismatch");
    return x * model.w;
  }
  Matrix out(x.rows(), model.d());
  for (int j = 0; j < model.d(); ++j) out.col(j) = forward(model.nets[j], x);
  return out;
}

Matrix extract_weighted_adjacency(const FittingModel& model) {
  if (model.mode == FittingModel::Mode::Linear) return model.w;
  int d = model.d();
  Matrix w(d, d);
  for (int j = 0; j < d; ++j) {
    const Matrix& first = model.nets[j].layers.front().w;  // d x hidden
    for (int i = 0; i < d; ++i) w(i, j) = first.row(i).norm();
  }
  return w;
}

CriticModel make_critic(int d, int hidden, Rng& rng) {
  return {make_dense_net({d, hidden, 1}, Activation::Tanh, rng), -1.0};
}

std::vector<Matrix*> collect_params(DenseNet& net) {
  std::vector<Matrix*> out;
  for (auto& layer : net.layers) {
    out.push_back(&layer.w);
    out.push_back(&layer.b);
  }
  return out;
}

std::vector<Matrix*> collect_params(FittingModel& model) {
  if (model.mode == FittingModel::Mode::Linear) return {&model.w};
  std::vector<Matrix*> out;
  for (auto& net : model.nets)
    for (auto* p : collect_params(net)) out.push_back(p);
  return out;
}

void save_net_json(const DenseNet& net, const std::string& path) {
  nlohmann::json doc;
  doc["format"] = kNetMagic;
  switch (net.activation) {
    case Activation::Sigmoid: doc["activation"] = "sigmoid"; break;
    case Activation::Relu: doc["activation"] = "relu"; break;
    case Activation::Tanh: doc["activation"] = "tanh"; break;
  }
  for (const auto& layer : net.layers) {
    nlohmann::json jl;
    jl["rows"] = layer.w.rows();
    jl["cols"] = layer.w.cols();
    std::vector<double> w, b;
    for (int i = 0; i < layer.w.rows(); ++i)
      for (int j = 0; j < layer.w.cols(); ++j) w.push_back(layer.w(i, j));
    for (int j = 0; j < layer.b.cols(); ++j) b.push_back(layer.b(0, j));
    jl["w"] = w;
    jl["b"] = b;
    doc["layers"].push_back(jl);
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << doc.dump(2) << '\n';
}

DenseNet load_net_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json doc = nlohmann::json::parse(in);
  if (!doc.contains("format") || doc["format"] != kNetMagic)
    throw std::runtime_error("not a dense-net checkpoint: " + path);
  DenseNet net;
  std::string act = doc["activation"];
  if (act == "sigmoid")
    net.activation = Activation::Sigmoid;
  else if (act == "relu")
    net.activation = Activation::Relu;
  else if (act == "tanh")
    net.activation = Activation::Tanh;
  else
    throw std::runtime_error("unknown activation in checkpoint");
  for (const auto& jl : doc["layers"]) {
    int rows = jl["rows"], cols = jl["cols"];
    std::vector<double> w = jl["w"], b = jl["b"];
    if (static_cast<int>(w.size()) != rows * cols || static_cast<int>(b.size()) != cols)
      throw std::runtime_error("checkpoint layer size mismatch");
    DenseNet::Layer layer;
    layer.w = Matrix(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) layer.w(i, j) = w[i * cols + j];
    layer.b = Matrix(1, cols);
    for (int j = 0; j < cols; ++j) layer.b(0, j) = b[j];
    net.layers.push_back(std::move(layer));
  }
  if (net.layers.empty()) throw std::runtime_error("checkpoint has no layers");
  return net;
}

}  // namespace casper
