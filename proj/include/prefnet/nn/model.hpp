#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "prefnet/encoding/encoding.hpp"
#include "prefnet/nn/tensor.hpp"

namespace prefnet::nn {

struct ModelConfig {
  std::size_t hidden = 32;     // d
  std::size_t steps = 3;       // GGNN propagation rounds T
  std::size_t pref_dims = 1;   // P: 1 for auto-scaling, 2 for power management
  std::size_t ff_layers = 2;   // hidden layers in each head
  std::size_t ff_width = 0;    // 0 -> 2d

  std::size_t width() const { return ff_width ? ff_width : 2 * hidden; }
  std::size_t fused_dim() const { return 2 * hidden + pref_dims; }
  bool operator==(const ModelConfig&) const = default;
};

void validate(const ModelConfig& config);

// Gated graph network: input projection, per-step message weights and a
// GRU-style update shared across steps.
struct GgnnParams {
  Tensor in_w, in_b;                 // (|F|+2) x d, 1 x d
  std::vector<Tensor> msg_w, msg_b;  // T of d x d, 1 x d
  Tensor wz, uz, bz;
  Tensor wr, ur, br;
  Tensor wh, uh, bh;
};

struct FeedForward {
  std::vector<Tensor> w;
  std::vector<Tensor> b;
};

struct PolicyValueParams {
  GgnnParams ggnn;
  Tensor embedding;  // E_F: |F| x d
  FeedForward policy;
  FeedForward value;
};

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

// Node embeddings for one request: |N| x d.
Tensor ggnn_encode(const GgnnParams& params, const Tensor& adjacency, const Tensor& annotation);
// H = mean over requests.
Tensor aggregate(std::span<const Tensor> per_request);
// Ẑ rows ordered (node, type): [H[n], E[f], ω̂]; shape (|N|·|F|) x (2d+P).
Tensor fuse(const Tensor& node_embeddings, const Tensor& type_embeddings, std::span<const double> preference);
Tensor feed_forward(const FeedForward& ff, const Tensor& input);
// Log action probabilities, (|N|·|F|) x 3, classes (scale-in, keep, scale-out).
Tensor policy_forward(const FeedForward& head, const Tensor& fused, const Matrix* logit_mask = nullptr);
Tensor value_forward(const FeedForward& head, const Tensor& fused);

class PolicyValueNet {
 public:
  struct Output {
    Tensor log_probs;
    Tensor value;
  };

  PolicyValueNet(const ModelConfig& config, std::uint64_t seed);
  // Adopts the given tensors by name; shapes must match `config`.
  PolicyValueNet(const ModelConfig& config, const NamedTensors& tensors);

  PolicyValueNet(const PolicyValueNet& other);
  PolicyValueNet& operator=(const PolicyValueNet& other);
  PolicyValueNet(PolicyValueNet&&) noexcept = default;
  PolicyValueNet& operator=(PolicyValueNet&&) noexcept = default;

  const ModelConfig& config() const { return config_; }
  Output forward(const encoding::SurrogateState& state) const;
  Tensor encode(const encoding::SurrogateState& state) const;

  // Stable order; tensors alias the live parameters.
  NamedTensors named_parameters() const;
  // Names starting with these prefixes form the parameter groups.
  static std::vector<std::string> groups() { return {"ggnn.", "embed.", "policy.", "value."}; }
  void zero_grad();
  void set_all(double value);

  PolicyValueParams& params() { return params_; }
  const PolicyValueParams& params() const { return params_; }

 private:
  void allocate_zero();

  ModelConfig config_;
  PolicyValueParams params_;
};

}  // namespace prefnet::nn
