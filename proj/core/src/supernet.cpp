// Copyright 2026 The hybridprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "hybridprune/supernet.hpp"

#include <cmath>
#include <string>

#include "hybridprune/error.hpp"
#include "hybridprune/random.hpp"

namespace hybridprune {

std::string_view to_string(ModuleKind kind) noexcept { return kind == ModuleKind::SA ? "SA" : "PA"; }

ModuleKind parse_module_kind(std::string_view text) {
  if (text == "SA") return ModuleKind::SA;
  if (text == "PA") return ModuleKind::PA;
  fail(ErrorKind::Parse, "unknown module kind '" + std::string(text) + "'");
}

std::string to_string(const PeftModuleId& id) {
  return std::to_string(id.layer) + ":" + std::string(to_string(id.kind));
}

void SupernetConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) fail(ErrorKind::InvalidConfig, "supernet config: " + what);
  };
  require(num_layers > 0, "num_layers must be positive");
  require(d_model > 0 && num_heads > 0, "d_model and num_heads must be positive");
  require(d_model % num_heads == 0, "d_model (" + std::to_string(d_model) +
                                        ") must be divisible by num_heads (" +
                                        std::to_string(num_heads) + ")");
  require(d_ff > 0, "d_ff must be positive");
  require(sa_bottleneck > 0 && sa_bottleneck < d_model, "sa_bottleneck must be in (0, d_model)");
  require(pa_rank > 0 && pa_rank < d_model, "pa_rank must be in (0, d_model)");
  require(vocab_size > 0 && num_classes > 1 && max_seq_len > 0,
          "vocab_size, max_seq_len must be positive and num_classes > 1");
  require(n_pa_choices > 0 && n_sa_choices > 0, "choice counts must be positive");
}

MaskState::MaskState(std::size_t num_layers) : flags_(2 * num_layers, true) {}

MaskState MaskState::from_flags(std::vector<bool> flags) {
  if (flags.size() % 2 != 0) {
    fail(ErrorKind::InvalidArgument, "mask needs two flags per layer, got " + std::to_string(flags.size()));
  }
  MaskState m;
  m.flags_ = std::move(flags);
  return m;
}

void MaskState::deactivate(const PeftModuleId& id) { flags_.at(id.flat_index()) = false; }

std::size_t MaskState::active_count() const noexcept {
  std::size_t n = 0;
  for (bool f : flags_) n += f ? 1 : 0;
  return n;
}

std::vector<PeftModuleId> MaskState::active_ids() const {
  std::vector<PeftModuleId> ids;
  for (std::size_t i = 0; i < flags_.size(); ++i) {
    if (flags_[i]) ids.push_back(PeftModuleId::from_flat(i));
  }
  return ids;
}

void fill_normal(Matrix& m, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
}

void reinitialize(PeftModule& module, std::mt19937_64& rng) {
  fill_normal(module.down.values(), 1.0 / std::sqrt(static_cast<double>(module.down.rows())), rng);
  fill_normal(module.up.values(), 1.0 / std::sqrt(static_cast<double>(module.up.rows())), rng);
  module.down.zero_grad();
  module.up.zero_grad();
}

namespace {

Tensor random_tensor(Index rows, Index cols, double stddev, std::mt19937_64& rng) {
  Tensor t(rows, cols);
  fill_normal(t.values(), stddev, rng);
  return t;
}

}  // namespace

Supernet::Supernet(const SupernetConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  const auto d = static_cast<Index>(config_.d_model);
  const auto ff = static_cast<Index>(config_.d_ff);
  const double d_std = 1.0 / std::sqrt(static_cast<double>(d));
  const double ff_std = 1.0 / std::sqrt(static_cast<double>(ff));

  auto backbone_rng = make_rng(seed, Stream::Backbone);
  token_embedding_ = random_tensor(static_cast<Index>(config_.vocab_size), d, 1.0, backbone_rng);
  position_embedding_ = random_tensor(static_cast<Index>(config_.max_seq_len), d, 1.0, backbone_rng);
  layers_.reserve(config_.num_layers);
  for (std::size_t l = 0; l < config_.num_layers; ++l) {
    BackboneLayer layer;
    layer.wq = random_tensor(d, d, d_std, backbone_rng);
    layer.wk = random_tensor(d, d, d_std, backbone_rng);
    layer.wv = random_tensor(d, d, d_std, backbone_rng);
    layer.wo = random_tensor(d, d, d_std, backbone_rng);
    layer.w1 = random_tensor(d, ff, d_std, backbone_rng);
    layer.b1 = Tensor(1, ff);
    layer.w2 = random_tensor(ff, d, ff_std, backbone_rng);
    layer.b2 = Tensor(1, d);
    layers_.push_back(std::move(layer));
  }

  auto adapter_rng = make_rng(seed, Stream::Adapters);
  modules_.reserve(2 * config_.num_layers);
  for (std::size_t l = 0; l < config_.num_layers; ++l) {
    for (ModuleKind kind : {ModuleKind::SA, ModuleKind::PA}) {
      const auto r = static_cast<Index>(kind == ModuleKind::SA ? config_.sa_bottleneck : config_.pa_rank);
      PeftModule m{PeftModuleId{l, kind}, Tensor(d, r), Tensor(r, d)};
      reinitialize(m, adapter_rng);
      modules_.push_back(std::move(m));
    }
  }

  head_w_ = Tensor(d, static_cast<Index>(config_.num_classes));
  head_b_ = Tensor(1, static_cast<Index>(config_.num_classes));
  auto head_rng = make_rng(seed, Stream::Head);
  reinitialize_head(head_rng);

  mask_ = MaskState(config_.num_layers);
}

void Supernet::apply_mask(const MaskState& mask) {
  if (mask.num_layers() != config_.num_layers) {
    fail(ErrorKind::InvalidArgument, "mask covers " + std::to_string(mask.num_layers()) +
                                         " layers, supernet has " + std::to_string(config_.num_layers));
  }
  mask_ = mask;
}

std::vector<Tensor*> Supernet::trainable_parameters() {
  std::vector<Tensor*> params;
  for (PeftModule& m : modules_) {
    if (!mask_.active(m.id)) continue;
    params.push_back(&m.down);
    params.push_back(&m.up);
  }
  params.push_back(&head_w_);
  params.push_back(&head_b_);
  return params;
}

std::vector<Tensor*> Supernet::backbone_parameters() {
  std::vector<Tensor*> params{&token_embedding_, &position_embedding_};
  for (BackboneLayer& l : layers_) {
    for (Tensor* t : {&l.wq, &l.wk, &l.wv, &l.wo, &l.w1, &l.b1, &l.w2, &l.b2}) params.push_back(t);
  }
  return params;
}

void Supernet::zero_grad() {
  for (Tensor* t : trainable_parameters()) t->zero_grad();
}

Matrix Supernet::embed(std::span<const int> tokens, Index seq_len) const {
  if (seq_len <= 0 || seq_len > static_cast<Index>(config_.max_seq_len) ||
      static_cast<Index>(tokens.size()) % seq_len != 0) {
    fail(ErrorKind::ShapeMismatch, "embed: " + std::to_string(tokens.size()) +
                                       " tokens do not form sequences of length " + std::to_string(seq_len));
  }
  Matrix out(static_cast<Index>(tokens.size()), static_cast<Index>(config_.d_model));
  for (Index i = 0; i < out.rows(); ++i) {
    const int tok = tokens[static_cast<std::size_t>(i)];
    if (tok < 0 || tok >= static_cast<int>(config_.vocab_size)) {
      fail(ErrorKind::InvalidArgument, "embed: token id " + std::to_string(tok) + " out of vocabulary");
    }
    out.row(i) = token_embedding_.values().row(tok) + position_embedding_.values().row(i % seq_len);
  }
  return out;
}

Var Supernet::layer_forward(Tape& tape, Var h_in, std::size_t layer_index, const MaskState& mask,
                            Index seq_len, bool trainable, ForwardTrace* trace) {
  const BackboneLayer& L = layers_.at(layer_index);
  const auto heads = static_cast<Index>(config_.num_heads);

  const Var n1 = tape.layer_norm(h_in);
  const Var q = tape.matmul(n1, tape.constant(L.wq));
  const Var k = tape.matmul(n1, tape.constant(L.wk));
  const Var v = tape.matmul(n1, tape.constant(L.wv));
  const Var att = tape.matmul(tape.self_attention(q, k, v, seq_len, heads), tape.constant(L.wo));
  const Var a = tape.add(h_in, att);

  const Var n2 = tape.layer_norm(a);
  const Var hidden = tape.activation(tape.add_row(tape.matmul(n2, tape.constant(L.w1)), tape.constant(L.b1)),
                                     Activation::Gelu);
  const Var h = tape.add_row(tape.matmul(hidden, tape.constant(L.w2)), tape.constant(L.b2));
  Var out = tape.add(a, h);

  auto bind = [&](Tensor& t) { return trainable ? tape.parameter(t) : tape.constant(t); };

  const PeftModuleId sa_id{layer_index, ModuleKind::SA};
  if (mask.active(sa_id)) {
    PeftModule& m = module(sa_id);
    const Var z = tape.activation(tape.matmul(h, bind(m.down)), config_.sa_activation);
    const Var sa = tape.matmul(z, bind(m.up));
    out = tape.add(out, sa);
    if (trace != nullptr) trace->module_outputs.at(sa_id.flat_index()) = sa;
  }
  const PeftModuleId pa_id{layer_index, ModuleKind::PA};
  if (mask.active(pa_id)) {
    PeftModule& m = module(pa_id);
    const Var low = tape.matmul(tape.matmul(h_in, bind(m.down)), bind(m.up));
    const Var pa = tape.activation(low, config_.pa_linear ? Activation::Identity : config_.pa_activation);
    out = tape.add(out, pa);
    if (trace != nullptr) trace->module_outputs.at(pa_id.flat_index()) = pa;
  }
  return out;
}

Matrix Supernet::layer_forward(const Matrix& h_in, std::size_t layer_index, const MaskState& mask,
                               Index seq_len) {
  Tape tape;
  const Var out = layer_forward(tape, tape.constant(h_in), layer_index, mask, seq_len, false);
  return tape.value(out);
}

ForwardTrace Supernet::forward(Tape& tape, std::span<const int> tokens, Index seq_len, bool trainable) {
  ForwardTrace trace;
  trace.module_outputs.assign(modules_.size(), std::nullopt);
  Var h = tape.constant(embed(tokens, seq_len));
  for (std::size_t l = 0; l < config_.num_layers; ++l) {
    h = layer_forward(tape, h, l, mask_, seq_len, trainable, &trace);
  }
  const Var pooled = tape.mean_pool(tape.layer_norm(h), seq_len);
  const Var w = trainable ? tape.parameter(head_w_) : tape.constant(head_w_);
  const Var b = trainable ? tape.parameter(head_b_) : tape.constant(head_b_);
  trace.logits = tape.add_row(tape.matmul(pooled, w), b);
  return trace;
}

void Supernet::reinitialize_module(const PeftModuleId& id, std::mt19937_64& rng) {
  reinitialize(module(id), rng);
}

void Supernet::reinitialize_head(std::mt19937_64& rng) {
  fill_normal(head_w_.values(), 1.0 / std::sqrt(static_cast<double>(config_.d_model)), rng);
  head_b_.values().setZero();
  head_w_.zero_grad();
  head_b_.zero_grad();
}

std::size_t trainable_param_count(const Supernet& net, const MaskState& mask) {
  std::size_t total = net.head_param_count();
  for (const PeftModule& m : net.modules()) {
    if (mask.active(m.id)) total += m.param_count();
  }
  return total;
}

}  // namespace hybridprune
