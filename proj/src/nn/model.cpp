#include "prefnet/nn/model.hpp"

#include <cmath>
#include <map>
#include <random>

#include "prefnet/core/errors.hpp"
#include "prefnet/core/rng.hpp"
#include "prefnet/sim/catalog.hpp"

namespace prefnet::nn {

namespace {

constexpr std::size_t kActionClasses = 3;

Matrix uniform_matrix(std::size_t rows, std::size_t cols, double bound, Rng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = (2.0 * uniform01(rng) - 1.0) * bound;
  return m;
}

void build_ff(FeedForward& ff, std::size_t in, std::size_t width, std::size_t layers, std::size_t out, Rng* rng) {
  ff.w.clear();
  ff.b.clear();
  std::size_t prev = in;
  for (std::size_t l = 0; l <= layers; ++l) {
    const std::size_t next = l == layers ? out : width;
    const double bound = 1.0 / std::sqrt(static_cast<double>(prev));
    ff.w.push_back(Tensor::parameter(rng ? uniform_matrix(prev, next, bound, *rng) : Matrix(prev, next)));
    ff.b.push_back(Tensor::parameter(rng ? uniform_matrix(1, next, bound, *rng) : Matrix(1, next)));
    prev = next;
  }
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) { return add(matmul(x, w), b); }

void append_ff(NamedTensors& out, const std::string& prefix, const FeedForward& ff) {
  for (std::size_t l = 0; l < ff.w.size(); ++l) {
    const std::string layer = l + 1 == ff.w.size() ? "out" : "l" + std::to_string(l);
    out.emplace_back(prefix + layer + ".w", ff.w[l]);
    out.emplace_back(prefix + layer + ".b", ff.b[l]);
  }
}


}  // namespace

void validate(const ModelConfig& config) {
  if (config.hidden < 1) throw ConfigError("model: hidden dimension must be >= 1");
  if (config.pref_dims > 2) throw ConfigError("model: pref_dims must be 0, 1 or 2");
  if (config.width() < 1) throw ConfigError("model: feed-forward width must be >= 1");
}

Tensor ggnn_encode(const GgnnParams& p, const Tensor& adjacency, const Tensor& annotation) {
  if (adjacency.rows() != adjacency.cols() || adjacency.rows() != annotation.rows()) {
    throw ContractViolation("ggnn_encode: adjacency and annotation disagree on node count");
  }
  if (annotation.cols() != p.in_w.rows()) throw ContractViolation("ggnn_encode: annotation width mismatch");
  Tensor h = linear(annotation, p.in_w, p.in_b);
  for (std::size_t t = 0; t < p.msg_w.size(); ++t) {
    Tensor m = matmul(adjacency, linear(h, p.msg_w[t], p.msg_b[t]));
    Tensor z = sigmoid(add(add(matmul(m, p.wz), matmul(h, p.uz)), p.bz));
    Tensor r = sigmoid(add(add(matmul(m, p.wr), matmul(h, p.ur)), p.br));
    Tensor cand = tanh(add(add(matmul(m, p.wh), matmul(mul(r, h), p.uh)), p.bh));
    h = add(mul(one_minus(z), h), mul(z, cand));
  }
  return h;
}

Tensor aggregate(std::span<const Tensor> per_request) {
  if (per_request.empty()) throw ContractViolation("aggregate: at least one request embedding is required");
  if (per_request.size() == 1) return per_request.front();
  return mean_of(per_request);
}

Tensor fuse(const Tensor& node_embeddings, const Tensor& type_embeddings, std::span<const double> preference) {
  if (node_embeddings.cols() != type_embeddings.cols()) throw ContractViolation("fuse: hidden dimensions differ");
  const std::size_t nodes = node_embeddings.rows();
  const std::size_t types = type_embeddings.rows();
  std::vector<std::size_t> node_idx(nodes * types);
  std::vector<std::size_t> type_idx(nodes * types);
  for (std::size_t n = 0; n < nodes; ++n) {
    for (std::size_t f = 0; f < types; ++f) {
      node_idx[n * types + f] = n;
      type_idx[n * types + f] = f;
    }
  }
  std::vector<Tensor> parts{gather_rows(node_embeddings, node_idx), gather_rows(type_embeddings, type_idx)};
  if (!preference.empty()) {
    std::vector<double> pref_block;
    pref_block.reserve(nodes * types * preference.size());
    for (std::size_t r = 0; r < nodes * types; ++r) pref_block.insert(pref_block.end(), preference.begin(), preference.end());
    parts.push_back(Tensor::constant(nodes * types, preference.size(), std::move(pref_block)));
  }
  return concat_cols(parts);
}

Tensor feed_forward(const FeedForward& ff, const Tensor& input) {
  Tensor x = input;
  for (std::size_t l = 0; l < ff.w.size(); ++l) {
    x = linear(x, ff.w[l], ff.b[l]);
    if (l + 1 < ff.w.size()) x = tanh(x);
  }
  return x;
}

Tensor policy_forward(const FeedForward& head, const Tensor& fused, const Matrix* logit_mask) {
  Tensor logits = feed_forward(head, fused);
  if (logits.cols() != kActionClasses) throw ContractViolation("policy_forward: head must emit 3 logits");
  if (logit_mask) {
    if (logit_mask->rows() != logits.rows() || logit_mask->cols() != logits.cols()) {
      throw ContractViolation("policy_forward: mask shape mismatch");
    }
    logits = add(logits, Tensor::constant(*logit_mask));
  }
  return log_softmax_rows(logits);
}

Tensor value_forward(const FeedForward& head, const Tensor& fused) {
  Tensor v = feed_forward(head, mean_rows(fused));
  if (v.size() != 1) throw ContractViolation("value_forward: head must emit a scalar");
  return v;
}

PolicyValueNet::PolicyValueNet(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  validate(config_);
  Rng rng = make_rng(seed, 0x6d6f64656cULL);
  const std::size_t d = config_.hidden;
  auto uni = [&](std::size_t r, std::size_t c, std::size_t fan_in) {
    return Tensor::parameter(uniform_matrix(r, c, 1.0 / std::sqrt(static_cast<double>(fan_in)), rng));
  };
  auto& g = params_.ggnn;
  g.in_w = uni(encoding::kAnnotationCols, d, encoding::kAnnotationCols);
  g.in_b = uni(1, d, encoding::kAnnotationCols);
  for (std::size_t t = 0; t < config_.steps; ++t) {
    g.msg_w.push_back(uni(d, d, d));
    g.msg_b.push_back(uni(1, d, d));
  }
  g.wz = uni(d, d, d); g.uz = uni(d, d, d); g.bz = uni(1, d, d);
  g.wr = uni(d, d, d); g.ur = uni(d, d, d); g.br = uni(1, d, d);
  g.wh = uni(d, d, d); g.uh = uni(d, d, d); g.bh = uni(1, d, d);

  std::normal_distribution<double> normal(0.0, 0.1);
  Matrix e(sim::kNumVnfTypes, d);
  for (double& v : e.data()) v = normal(rng);
  params_.embedding = Tensor::parameter(e);

  build_ff(params_.policy, config_.fused_dim(), config_.width(), config_.ff_layers, kActionClasses, &rng);
  build_ff(params_.value, config_.fused_dim(), config_.width(), config_.ff_layers, 1, &rng);
}

void PolicyValueNet::allocate_zero() {
  const std::size_t d = config_.hidden;
  auto z = [](std::size_t r, std::size_t c) { return Tensor::parameter(Matrix(r, c)); };
  auto& g = params_.ggnn;
  g.in_w = z(encoding::kAnnotationCols, d);
  g.in_b = z(1, d);
  g.msg_w.clear();
  g.msg_b.clear();
  for (std::size_t t = 0; t < config_.steps; ++t) {
    g.msg_w.push_back(z(d, d));
    g.msg_b.push_back(z(1, d));
  }
  g.wz = z(d, d); g.uz = z(d, d); g.bz = z(1, d);
  g.wr = z(d, d); g.ur = z(d, d); g.br = z(1, d);
  g.wh = z(d, d); g.uh = z(d, d); g.bh = z(1, d);
  params_.embedding = z(sim::kNumVnfTypes, d);
  build_ff(params_.policy, config_.fused_dim(), config_.width(), config_.ff_layers, kActionClasses, nullptr);
  build_ff(params_.value, config_.fused_dim(), config_.width(), config_.ff_layers, 1, nullptr);
}

PolicyValueNet::PolicyValueNet(const ModelConfig& config, const NamedTensors& tensors) : config_(config) {
  validate(config_);
  allocate_zero();
  std::map<std::string, const Tensor*> by_name;
  for (const auto& [name, t] : tensors) by_name[name] = &t;
  auto own = named_parameters();
  if (own.size() != tensors.size()) {
    throw FormatError("parameter count mismatch: expected " + std::to_string(own.size()) + ", got " +
                      std::to_string(tensors.size()));
  }
  for (auto& [name, dst] : own) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw FormatError("missing parameter '" + name + "'");
    const Tensor& src = *it->second;
    if (src.rows() != dst.rows() || src.cols() != dst.cols()) throw FormatError("shape mismatch for '" + name + "'");
    std::copy(src.value().begin(), src.value().end(), dst.value().begin());
  }
}

PolicyValueNet::PolicyValueNet(const PolicyValueNet& other) : config_(other.config_) {
  allocate_zero();
  auto src = other.named_parameters();
  auto dst = named_parameters();
  for (std::size_t i = 0; i < src.size(); ++i) {
    std::copy(src[i].second.value().begin(), src[i].second.value().end(), dst[i].second.value().begin());
  }
}

PolicyValueNet& PolicyValueNet::operator=(const PolicyValueNet& other) {
  if (this != &other) {
    PolicyValueNet copy(other);
    *this = std::move(copy);
  }
  return *this;
}

Tensor PolicyValueNet::encode(const encoding::SurrogateState& state) const {
  if (!state.adjacency) throw ContractViolation("forward: state has no adjacency matrix");
  if (state.preference.size() != config_.pref_dims) {
    throw ContractViolation("forward: preference has " + std::to_string(state.preference.size()) +
                            " dims, model expects " + std::to_string(config_.pref_dims));
  }
  Tensor m = Tensor::constant(*state.adjacency);
  std::vector<Tensor> per_request;
  per_request.reserve(state.annotations.size());
  for (const auto& x : state.annotations) per_request.push_back(ggnn_encode(params_.ggnn, m, Tensor::constant(x)));
  Tensor h = aggregate(per_request);
  return fuse(h, params_.embedding, state.preference);
}

PolicyValueNet::Output PolicyValueNet::forward(const encoding::SurrogateState& state) const {
  Tensor fused = encode(state);
  return {policy_forward(params_.policy, fused, state.logit_mask.get()), value_forward(params_.value, fused)};
}

NamedTensors PolicyValueNet::named_parameters() const {
  NamedTensors out;
  const auto& g = params_.ggnn;
  out.emplace_back("ggnn.in.w", g.in_w);
  out.emplace_back("ggnn.in.b", g.in_b);
  for (std::size_t t = 0; t < g.msg_w.size(); ++t) {
    out.emplace_back("ggnn.msg" + std::to_string(t) + ".w", g.msg_w[t]);
    out.emplace_back("ggnn.msg" + std::to_string(t) + ".b", g.msg_b[t]);
  }
  out.emplace_back("ggnn.gru.wz", g.wz);
  out.emplace_back("ggnn.gru.uz", g.uz);
  out.emplace_back("ggnn.gru.bz", g.bz);
  out.emplace_back("ggnn.gru.wr", g.wr);
  out.emplace_back("ggnn.gru.ur", g.ur);
  out.emplace_back("ggnn.gru.br", g.br);
  out.emplace_back("ggnn.gru.wh", g.wh);
  out.emplace_back("ggnn.gru.uh", g.uh);
  out.emplace_back("ggnn.gru.bh", g.bh);
  out.emplace_back("embed.vnf", params_.embedding);
  append_ff(out, "policy.", params_.policy);
  append_ff(out, "value.", params_.value);
  return out;
}

void PolicyValueNet::zero_grad() {
  for (auto& [name, t] : named_parameters()) t.zero_grad();
}

void PolicyValueNet::set_all(double value) {
  for (auto& [name, t] : named_parameters()) std::fill(t.value().begin(), t.value().end(), value);
}

}  // namespace prefnet::nn
