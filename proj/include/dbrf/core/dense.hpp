#pragma once

#include "dbrf/core/common.hpp"

#include <string_view>

namespace dbrf {

enum class Activation { identity, relu, sigmoid };

inline std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
  }
  return "identity";
}

inline Activation activation_from_string(std::string_view s) {
  if (s == "identity") return Activation::identity;
  if (s == "relu") return Activation::relu;
  if (s == "sigmoid") return Activation::sigmoid;
  throw ConfigError("unknown activation '" + std::string(s) + "'");
}

/// Fully connected layer `activation(weights * input + bias)`.
struct DenseLayer {
  Matrix weights;  // out x in
  Vector bias;     // out
  Activation activation = Activation::identity;

  Index in_dim() const { return weights.cols(); }
  Index out_dim() const { return weights.rows(); }
};

/// Glorot-uniform weights, zero bias.
inline DenseLayer make_dense(Index in, Index out, Activation act, Rng& rng) {
  require(in > 0 && out > 0, "dense layer dimensions must be positive");
  DenseLayer layer;
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  layer.weights.resize(out, in);
  for (Index j = 0; j < in; ++j)
    for (Index i = 0; i < out; ++i) layer.weights(i, j) = dist(rng);
  layer.bias = Vector::Zero(out);
  layer.activation = act;
  return layer;
}

inline DenseLayer zeros_like(const DenseLayer& layer) {
  return {Matrix::Zero(layer.weights.rows(), layer.weights.cols()), Vector::Zero(layer.bias.size()),
          layer.activation};
}

inline void check_layer(const DenseLayer& layer) {
  require(layer.bias.size() == layer.weights.rows(), "dense layer bias length does not match weight rows");
}

inline Matrix apply_activation(Activation act, const Matrix& pre) {
  switch (act) {
    case Activation::identity: return pre;
    case Activation::relu: return pre.cwiseMax(0.0);
    case Activation::sigmoid: return pre.unaryExpr([](double v) { return sigmoid(v); });
  }
  return pre;
}

// d(activation)/d(pre) * upstream
inline Matrix activation_backward(Activation act, const Matrix& pre, const Matrix& upstream) {
  switch (act) {
    case Activation::identity: return upstream;
    case Activation::relu: return upstream.cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
    case Activation::sigmoid: {
      Matrix s = pre.unaryExpr([](double v) { return sigmoid(v); });
      return upstream.cwiseProduct(s.cwiseProduct((1.0 - s.array()).matrix()));
    }
  }
  return upstream;
}

struct DenseCache {
  Matrix input;  // in x batch
  Matrix pre;    // out x batch
};

/// Batched forward; columns are examples.
inline Matrix dense_forward(const DenseLayer& layer, const Matrix& input, DenseCache* cache = nullptr) {
  check_layer(layer);
  if (input.rows() != layer.in_dim())
    throw ConfigError("dense_forward: input has " + std::to_string(input.rows()) + " rows, layer expects " +
                      std::to_string(layer.in_dim()));
  Matrix pre = layer.weights * input;
  pre.colwise() += layer.bias;
  Matrix out = apply_activation(layer.activation, pre);
  if (cache) {
    cache->input = input;
    cache->pre = std::move(pre);
  }
  return out;
}

inline Vector dense_forward(const DenseLayer& layer, const Vector& input) {
  const Matrix in = input;
  return dense_forward(layer, in).col(0);
}

/// Accumulates parameter gradients into `grad` and returns d(loss)/d(input).
inline Matrix dense_backward(const DenseLayer& layer, const DenseCache& cache, const Matrix& d_out,
                             DenseLayer* grad) {
  const Matrix d_pre = activation_backward(layer.activation, cache.pre, d_out);
  if (grad) {
    grad->weights.noalias() += d_pre * cache.input.transpose();
    grad->bias += d_pre.rowwise().sum();
  }
  return layer.weights.transpose() * d_pre;
}

/// Stack of dense layers with optional inverted dropout after each hidden layer.
struct Mlp {
  std::vector<DenseLayer> layers;

  Index in_dim() const { return layers.front().in_dim(); }
  Index out_dim() const { return layers.back().out_dim(); }
};

/// `sizes` = {in, hidden..., out}; hidden layers use relu, the output is linear.
inline Mlp make_mlp(const std::vector<Index>& sizes, Rng& rng, Activation hidden = Activation::relu) {
  require(sizes.size() >= 2, "an MLP needs at least input and output sizes");
  Mlp net;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    const bool last = i + 2 == sizes.size();
    net.layers.push_back(make_dense(sizes[i], sizes[i + 1], last ? Activation::identity : hidden, rng));
  }
  return net;
}

inline Mlp zeros_like(const Mlp& net) {
  Mlp out;
  for (const auto& l : net.layers) out.layers.push_back(zeros_like(l));
  return out;
}

struct MlpCache {
  std::vector<DenseCache> layers;
  std::vector<Matrix> masks;  // empty when no dropout was applied
};

/// `masks` (optional) holds one pre-scaled keep-mask per hidden layer.
inline Matrix mlp_forward(const Mlp& net, const Matrix& input, MlpCache* cache = nullptr,
                          const std::vector<Matrix>* masks = nullptr) {
  if (masks) require(masks->size() + 1 == net.layers.size(), "dropout mask count must equal hidden layer count");
  if (cache) {
    cache->layers.assign(net.layers.size(), {});
    cache->masks.clear();
  }
  Matrix h = input;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    h = dense_forward(net.layers[i], h, cache ? &cache->layers[i] : nullptr);
    if (masks && i + 1 < net.layers.size()) {
      const Matrix& m = (*masks)[i];
      require(m.rows() == h.rows() && m.cols() == h.cols(), "dropout mask shape mismatch");
      h = h.cwiseProduct(m);
      if (cache) cache->masks.push_back(m);
    }
  }
  return h;
}

inline Matrix mlp_backward(const Mlp& net, const MlpCache& cache, const Matrix& d_out, Mlp* grad) {
  Matrix d = d_out;
  for (std::size_t k = net.layers.size(); k-- > 0;) {
    if (!cache.masks.empty() && k + 1 < net.layers.size()) d = d.cwiseProduct(cache.masks[k]);
    d = dense_backward(net.layers[k], cache.layers[k], d, grad ? &grad->layers[k] : nullptr);
  }
  return d;
}

inline Matrix dropout_mask(Index rows, Index cols, double rate, Rng& rng) {
  require(rate >= 0.0 && rate < 1.0, "dropout rate must lie in [0, 1)");
  std::bernoulli_distribution keep(1.0 - rate);
  const double scale = 1.0 / (1.0 - rate);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = keep(rng) ? scale : 0.0;
  return m;
}

inline void collect_tensors(DenseLayer& l, std::vector<std::span<double>>& out) {
  out.push_back(as_span(l.weights));
  out.push_back(as_span(l.bias));
}

inline void collect_tensors(Mlp& net, std::vector<std::span<double>>& out) {
  for (auto& l : net.layers) collect_tensors(l, out);
}

inline std::size_t parameter_count(const Mlp& net) {
  std::size_t n = 0;
  for (const auto& l : net.layers) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
  return n;
}

}  // namespace dbrf
