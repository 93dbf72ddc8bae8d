#pragma once

#include "dbrf/core/dense.hpp"

#include <functional>

namespace dbrf {

/// Network sizes. `onehot` marks input columns reconstructed with BCE.
struct ArchConfig {
  Index input_dim = 2;
  std::vector<bool> onehot;
  Index sensitive_dim = 1;
  Index z_dim = 8;
  Index b_dim = 4;
  Index hidden = 64;
  double dropout = 0.2;

  void validate() const {
    require(input_dim > 0 && sensitive_dim > 0 && z_dim > 0 && b_dim > 0 && hidden > 0,
            "architecture sizes must be positive");
    require(onehot.empty() || static_cast<Index>(onehot.size()) == input_dim,
            "architecture: onehot mask length must equal input_dim");
    require(dropout >= 0.0 && dropout < 1.0, "architecture: dropout must lie in [0, 1)");
  }

  std::vector<bool> onehot_mask() const {
    return onehot.empty() ? std::vector<bool>(static_cast<std::size_t>(input_dim), false) : onehot;
  }
};

/// x -> shared relu layer -> two Gaussian heads (z and b).
struct Encoder {
  DenseLayer hidden;
  DenseLayer mu_z, log_var_z;
  DenseLayer mu_b, log_var_b;
};

/// Everything the model optimizer updates.
struct DbrfNetworks {
  Encoder encoder;
  Mlp x_decoder;   // (z, b) -> x
  Mlp a_decoder;   // b -> a logits
  Mlp rm_decoder;  // z -> r_m logit
  Mlp y_from_z;    // z -> y logit (dropout)
  Mlp y_from_b;    // b -> y logit (dropout)
};

struct ModelParams {
  ArchConfig arch;
  DbrfNetworks nets;
  Mlp discriminator;  // (z, b) -> real/fake logit
};

inline Encoder make_encoder(Index in, Index hidden, Index z_dim, Index b_dim, Rng& rng) {
  Encoder e;
  e.hidden = make_dense(in, hidden, Activation::relu, rng);
  e.mu_z = make_dense(hidden, z_dim, Activation::identity, rng);
  e.log_var_z = make_dense(hidden, z_dim, Activation::identity, rng);
  e.mu_b = make_dense(hidden, b_dim, Activation::identity, rng);
  e.log_var_b = make_dense(hidden, b_dim, Activation::identity, rng);
  return e;
}

inline ModelParams make_model(const ArchConfig& arch, std::uint64_t seed) {
  arch.validate();
  Rng rng(seed);
  ModelParams p;
  p.arch = arch;
  const Index h = arch.hidden;
  p.nets.encoder = make_encoder(arch.input_dim, h, arch.z_dim, arch.b_dim, rng);
  p.nets.x_decoder = make_mlp({arch.z_dim + arch.b_dim, h, arch.input_dim}, rng);
  p.nets.a_decoder = make_mlp({arch.b_dim, h, arch.sensitive_dim}, rng);
  p.nets.rm_decoder = make_mlp({arch.z_dim, h, 1}, rng);
  p.nets.y_from_z = make_mlp({arch.z_dim, h, 1}, rng);
  p.nets.y_from_b = make_mlp({arch.b_dim, h, 1}, rng);
  p.discriminator = make_mlp({arch.z_dim + arch.b_dim, h, 1}, rng);
  return p;
}

using TensorVisitor = std::function<void(const std::string& name, Index rows, Index cols, std::span<double> data)>;

inline void visit_tensors(DenseLayer& l, const std::string& prefix, const TensorVisitor& f) {
  f(prefix + ".weights", l.weights.rows(), l.weights.cols(), as_span(l.weights));
  f(prefix + ".bias", l.bias.size(), 1, as_span(l.bias));
}

inline void visit_tensors(Mlp& net, const std::string& prefix, const TensorVisitor& f) {
  for (std::size_t i = 0; i < net.layers.size(); ++i) visit_tensors(net.layers[i], prefix + "." + std::to_string(i), f);
}

inline void visit_tensors(Encoder& e, const std::string& prefix, const TensorVisitor& f) {
  visit_tensors(e.hidden, prefix + ".hidden", f);
  visit_tensors(e.mu_z, prefix + ".mu_z", f);
  visit_tensors(e.log_var_z, prefix + ".log_var_z", f);
  visit_tensors(e.mu_b, prefix + ".mu_b", f);
  visit_tensors(e.log_var_b, prefix + ".log_var_b", f);
}

inline void visit_tensors(DbrfNetworks& n, const std::string& prefix, const TensorVisitor& f) {
  visit_tensors(n.encoder, prefix + "encoder", f);
  visit_tensors(n.x_decoder, prefix + "x_decoder", f);
  visit_tensors(n.a_decoder, prefix + "a_decoder", f);
  visit_tensors(n.rm_decoder, prefix + "rm_decoder", f);
  visit_tensors(n.y_from_z, prefix + "y_from_z", f);
  visit_tensors(n.y_from_b, prefix + "y_from_b", f);
}

inline void visit_tensors(ModelParams& p, const std::string& prefix, const TensorVisitor& f) {
  visit_tensors(p.nets, prefix, f);
  visit_tensors(p.discriminator, prefix + "discriminator", f);
}

inline void collect_tensors(Encoder& e, std::vector<std::span<double>>& out) {
  visit_tensors(e, "", [&](const std::string&, Index, Index, std::span<double> s) { out.push_back(s); });
}

inline void collect_tensors(DbrfNetworks& n, std::vector<std::span<double>>& out) {
  visit_tensors(n, "", [&](const std::string&, Index, Index, std::span<double> s) { out.push_back(s); });
}

inline void collect_tensors(ModelParams& p, std::vector<std::span<double>>& out) {
  visit_tensors(p, "", [&](const std::string&, Index, Index, std::span<double> s) { out.push_back(s); });
}

template <class Params>
std::size_t parameter_count(Params& p) {
  std::vector<std::span<double>> v;
  collect_tensors(p, v);
  std::size_t n = 0;
  for (auto s : v) n += s.size();
  return n;
}

template <class Params>
bool all_parameters_finite(Params& p) {
  std::vector<std::span<double>> v;
  collect_tensors(p, v);
  for (auto s : v)
    for (double x : s)
      if (!std::isfinite(x)) return false;
  return true;
}

/// FNV-1a over the raw bytes of every tensor; used to detect any parameter change.
template <class Params>
std::uint64_t parameter_hash(Params& p) {
  std::vector<std::span<double>> v;
  collect_tensors(p, v);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto s : v) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(s.data());
    for (std::size_t i = 0; i < s.size_bytes(); ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

}  // namespace dbrf
