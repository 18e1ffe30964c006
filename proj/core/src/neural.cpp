#include "mfc/neural.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>

#include "mfc/error.hpp"

namespace mfc {
namespace {

bool same_shape(const std::vector<DenseLayer>& a, const std::vector<DenseLayer>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t l = 0; l < a.size(); ++l) {
    if (a[l].weight.rows() != b[l].weight.rows() || a[l].weight.cols() != b[l].weight.cols() ||
        a[l].bias.size() != b[l].bias.size()) {
      return false;
    }
  }
  return true;
}

std::vector<DenseLayer> zeros_like(const std::vector<DenseLayer>& layers) {
  std::vector<DenseLayer> out(layers.size());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    out[l].weight = Eigen::MatrixXd::Zero(layers[l].weight.rows(), layers[l].weight.cols());
    out[l].bias = Eigen::VectorXd::Zero(layers[l].bias.size());
  }
  return out;
}

// Pre-activations and activations of every layer for a batch.
struct Trace {
  std::vector<Eigen::MatrixXd> pre;
  std::vector<Eigen::MatrixXd> post;  // post[0] is the input
};

Trace run_forward(const MLPParams& p, const Eigen::MatrixXd& inputs) {
  if (p.layers.empty()) fail(ErrorKind::ShapeMismatch, "network has no layers");
  if (static_cast<std::size_t>(inputs.rows()) != p.input_dim()) {
    fail(ErrorKind::DimensionMismatch, "network expects input of size " +
                                           std::to_string(p.input_dim()) + ", got " +
                                           std::to_string(inputs.rows()));
  }
  Trace t;
  t.post.push_back(inputs);
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const auto& layer = p.layers[l];
    Eigen::MatrixXd z = layer.weight * t.post.back();
    z.colwise() += layer.bias;
    Eigen::MatrixXd a;
    const bool last = l + 1 == p.layers.size();
    if (!last) {
      a = p.hidden == HiddenActivation::Tanh ? Eigen::MatrixXd(z.array().tanh()) : z;
    } else if (p.output == OutputActivation::ScaledTanh) {
      a = (p.output_scale * z.array().tanh() + p.output_offset).matrix();
    } else {
      a = z;
    }
    t.pre.push_back(std::move(z));
    t.post.push_back(std::move(a));
  }
  return t;
}

}  // namespace

std::size_t MLPParams::input_dim() const {
  return layers.empty() ? 0 : static_cast<std::size_t>(layers.front().weight.cols());
}

std::size_t MLPParams::output_dim() const {
  return layers.empty() ? 0 : static_cast<std::size_t>(layers.back().weight.rows());
}

std::size_t MLPParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

std::vector<std::size_t> MLPParams::widths() const {
  std::vector<std::size_t> w;
  if (layers.empty()) return w;
  w.push_back(input_dim());
  for (const auto& l : layers) w.push_back(static_cast<std::size_t>(l.weight.rows()));
  return w;
}

bool MLPParams::all_finite() const {
  for (const auto& l : layers) {
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

MLPParams make_mlp(const MLPSpec& spec, Rng& rng) {
  if (spec.widths.size() < 2) fail(ErrorKind::ShapeMismatch, "need at least input and output widths");
  MLPParams p;
  p.hidden = spec.hidden;
  p.output = spec.output;
  p.output_scale = spec.output_scale;
  p.output_offset = spec.output_offset;
  for (std::size_t l = 0; l + 1 < spec.widths.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(spec.widths[l]);
    const auto out = static_cast<Eigen::Index>(spec.widths[l + 1]);
    if (in == 0 || out == 0) fail(ErrorKind::ShapeMismatch, "layer width must be positive");
    const bool last = l + 2 == spec.widths.size();
    const double bound = last && spec.last_layer_init > 0.0 ? spec.last_layer_init
                                                            : 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> u(-bound, bound);
    DenseLayer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd(out)};
    for (Eigen::Index j = 0; j < in; ++j) {
      for (Eigen::Index i = 0; i < out; ++i) layer.weight(i, j) = u(rng);
    }
    for (Eigen::Index i = 0; i < out; ++i) layer.bias(i) = u(rng);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

Eigen::VectorXd mlp_forward(const MLPParams& params, const Eigen::VectorXd& input) {
  return mlp_forward_batch(params, input).col(0);
}

Eigen::MatrixXd mlp_forward_batch(const MLPParams& params, const Eigen::MatrixXd& inputs) {
  return run_forward(params, inputs).post.back();
}

MLPGradients mlp_backward_batch(const MLPParams& params, const Eigen::MatrixXd& inputs,
                                const Eigen::MatrixXd& upstream) {
  Trace t = run_forward(params, inputs);
  if (upstream.rows() != static_cast<Eigen::Index>(params.output_dim()) ||
      upstream.cols() != inputs.cols()) {
    fail(ErrorKind::DimensionMismatch, "upstream gradient shape does not match the output");
  }
  MLPGradients g;
  g.layers.resize(params.layers.size());

  // delta holds d(objective)/d(pre-activation) of the current layer.
  const std::size_t last = params.layers.size() - 1;
  Eigen::MatrixXd delta;
  if (params.output == OutputActivation::ScaledTanh) {
    const Eigen::ArrayXXd th = t.pre[last].array().tanh();
    delta = (upstream.array() * params.output_scale * (1.0 - th * th)).matrix();
  } else {
    delta = upstream;
  }
  for (std::size_t l = params.layers.size(); l-- > 0;) {
    g.layers[l].weight = delta * t.post[l].transpose();
    g.layers[l].bias = delta.rowwise().sum();
    Eigen::MatrixXd back = params.layers[l].weight.transpose() * delta;
    if (l == 0) {
      g.input = std::move(back);
    } else if (params.hidden == HiddenActivation::Tanh) {
      const Eigen::ArrayXXd a = t.post[l].array();
      delta = (back.array() * (1.0 - a * a)).matrix();
    } else {
      delta = std::move(back);
    }
  }
  return g;
}

MLPGradients mlp_backward(const MLPParams& params, const Eigen::VectorXd& input,
                          const Eigen::VectorXd& upstream) {
  return mlp_backward_batch(params, input, upstream);
}

AdamState make_adam(const MLPParams& params, double learning_rate) {
  AdamState s;
  s.first = zeros_like(params.layers);
  s.second = zeros_like(params.layers);
  s.learning_rate = learning_rate;
  return s;
}

void adam_update(MLPParams& params, const MLPGradients& grads, AdamState& state) {
  if (!same_shape(params.layers, grads.layers) || !same_shape(params.layers, state.first)) {
    fail(ErrorKind::ShapeMismatch, "Adam: parameter, gradient and moment shapes differ");
  }
  for (const auto& l : grads.layers) {
    if (!l.weight.allFinite() || !l.bias.allFinite()) {
      fail(ErrorKind::NonFiniteGradient, "Adam received a non-finite gradient");
    }
  }
  ++state.step;
  const double b1 = state.beta1;
  const double b2 = state.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  const double lr = state.learning_rate;
  const double eps = state.epsilon;

  auto apply = [&](auto& param, const auto& grad, auto& m, auto& v) {
    m = b1 * m + (1.0 - b1) * grad;
    v = b2 * v + (1.0 - b2) * grad.cwiseProduct(grad);
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    apply(params.layers[l].weight, grads.layers[l].weight, state.first[l].weight,
          state.second[l].weight);
    apply(params.layers[l].bias, grads.layers[l].bias, state.first[l].bias, state.second[l].bias);
  }
}

void soft_update(MLPParams& target, const MLPParams& source, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) fail(ErrorKind::InvalidParameter, "tau must lie in [0,1]");
  if (!same_shape(target.layers, source.layers)) {
    fail(ErrorKind::ShapeMismatch, "soft update between networks of different shapes");
  }
  for (std::size_t l = 0; l < target.layers.size(); ++l) {
    target.layers[l].weight = tau * source.layers[l].weight + (1.0 - tau) * target.layers[l].weight;
    target.layers[l].bias = tau * source.layers[l].bias + (1.0 - tau) * target.layers[l].bias;
  }
}

std::vector<double> flatten(const std::vector<DenseLayer>& layers) {
  std::vector<double> flat;
  for (const auto& l : layers) {
    flat.insert(flat.end(), l.weight.data(), l.weight.data() + l.weight.size());
    flat.insert(flat.end(), l.bias.data(), l.bias.data() + l.bias.size());
  }
  return flat;
}

std::vector<double> flatten(const MLPParams& params) { return flatten(params.layers); }

void unflatten(MLPParams& params, std::span<const double> flat) {
  if (flat.size() != params.parameter_count()) fail(ErrorKind::ShapeMismatch, "flat parameter count");
  std::size_t k = 0;
  for (auto& l : params.layers) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(k), l.weight.size(), l.weight.data());
    k += static_cast<std::size_t>(l.weight.size());
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(k), l.bias.size(), l.bias.data());
    k += static_cast<std::size_t>(l.bias.size());
  }
}

void save_checkpoint(const MLPParams& params, std::ostream& out) {
  out << "mlp " << (params.hidden == HiddenActivation::Tanh ? "tanh" : "identity") << ' '
      << (params.output == OutputActivation::ScaledTanh ? "scaled_tanh" : "identity") << ' '
      << std::setprecision(17) << params.output_scale << ' ' << params.output_offset << ' '
      << params.layers.size() + 1;
  for (std::size_t w : params.widths()) out << ' ' << w;
  out << '\n';
  for (const auto& l : params.layers) {
    for (Eigen::Index i = 0; i < l.weight.rows(); ++i) {
      for (Eigen::Index j = 0; j < l.weight.cols(); ++j) {
        out << (j ? " " : "") << l.weight(i, j);
      }
      out << '\n';
    }
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) out << (i ? " " : "") << l.bias(i);
    out << '\n';
  }
}

MLPParams load_checkpoint(std::istream& in) {
  std::string magic, hidden, output;
  std::size_t n_widths = 0;
  MLPParams p;
  if (!(in >> magic >> hidden >> output >> p.output_scale >> p.output_offset >> n_widths) ||
      magic != "mlp" || n_widths < 2) {
    fail(ErrorKind::IoError, "malformed checkpoint header");
  }
  p.hidden = hidden == "tanh" ? HiddenActivation::Tanh : HiddenActivation::Identity;
  p.output = output == "scaled_tanh" ? OutputActivation::ScaledTanh : OutputActivation::Identity;
  std::vector<std::size_t> widths(n_widths);
  for (auto& w : widths) {
    if (!(in >> w) || w == 0) fail(ErrorKind::IoError, "malformed checkpoint widths");
  }
  for (std::size_t l = 0; l + 1 < n_widths; ++l) {
    DenseLayer layer{Eigen::MatrixXd(widths[l + 1], widths[l]), Eigen::VectorXd(widths[l + 1])};
    for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) {
        if (!(in >> layer.weight(i, j))) fail(ErrorKind::IoError, "truncated checkpoint weights");
      }
    }
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) {
      if (!(in >> layer.bias(i))) fail(ErrorKind::IoError, "truncated checkpoint bias");
    }
    p.layers.push_back(std::move(layer));
  }
  return p;
}

void save_checkpoint(const MLPParams& params, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path);
  save_checkpoint(params, out);
}

MLPParams load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::IoError, "cannot read " + path);
  return load_checkpoint(in);
}

}  // namespace mfc
