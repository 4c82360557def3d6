// Copyright 2026 The hybridprune Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef HYBRIDPRUNE_SUPERNET_HPP
#define HYBRIDPRUNE_SUPERNET_HPP

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "hybridprune/tape.hpp"

namespace hybridprune {

// SA = serial bottleneck adapter after the feed-forward sublayer.
// PA = parallel low-rank branch from the layer input.
enum class ModuleKind : std::uint8_t { SA = 0, PA = 1 };

std::string_view to_string(ModuleKind kind) noexcept;
ModuleKind parse_module_kind(std::string_view text);

struct PeftModuleId {
  std::size_t layer = 0;
  ModuleKind kind = ModuleKind::SA;

  // (layer, kind) order, SA before PA within a layer.
  auto operator<=>(const PeftModuleId&) const = default;

  std::size_t flat_index() const noexcept { return 2 * layer + static_cast<std::size_t>(kind); }
  static PeftModuleId from_flat(std::size_t index) noexcept {
    return {index / 2, static_cast<ModuleKind>(index % 2)};
  }
};

std::string to_string(const PeftModuleId& id);

struct SupernetConfig {
  std::size_t num_layers = 24;
  std::size_t d_model = 64;
  std::size_t num_heads = 4;
  std::size_t d_ff = 128;
  std::size_t sa_bottleneck = 8;
  std::size_t pa_rank = 8;
  std::size_t vocab_size = 32;
  std::size_t num_classes = 2;
  std::size_t max_seq_len = 8;
  Activation sa_activation = Activation::Gelu;
  Activation pa_activation = Activation::Gelu;
  // Drops the nonlinearity around the PA product (canonical LoRA).
  bool pa_linear = false;
  // Choices per layer for each adapter family; only enters the search-cost bound.
  std::size_t n_pa_choices = 1;
  std::size_t n_sa_choices = 1;

  void validate() const;
  bool operator==(const SupernetConfig&) const = default;
};

// One boolean per PEFT module, indexed by PeftModuleId::flat_index(). Modules
// can only be switched off.
class MaskState {
 public:
  MaskState() = default;
  explicit MaskState(std::size_t num_layers);
  static MaskState from_flags(std::vector<bool> flags);

  std::size_t num_layers() const noexcept { return flags_.size() / 2; }
  std::size_t size() const noexcept { return flags_.size(); }
  bool active(const PeftModuleId& id) const { return flags_.at(id.flat_index()); }
  void deactivate(const PeftModuleId& id);
  std::size_t active_count() const noexcept;
  std::vector<PeftModuleId> active_ids() const;
  const std::vector<bool>& flags() const noexcept { return flags_; }

  bool operator==(const MaskState&) const = default;

 private:
  std::vector<bool> flags_;
};

struct PeftModule {
  PeftModuleId id;
  Tensor down;  // d_in x bottleneck
  Tensor up;    // bottleneck x d_out

  std::size_t param_count() const noexcept {
    return static_cast<std::size_t>(down.size() + up.size());
  }
};

// Draws W_down ~ N(0, 1/sqrt(d_down)) and W_up ~ N(0, 1/sqrt(d_up)), with the
// second argument a standard deviation and d the input width of each
// projection.
void reinitialize(PeftModule& module, std::mt19937_64& rng);

struct BackboneLayer {
  Tensor wq, wk, wv, wo;
  Tensor w1, b1, w2, b2;
};

// Handles to module outputs recorded during a forward pass, indexed by flat
// module index; empty for masked modules.
struct ForwardTrace {
  Var logits;
  std::vector<std::optional<Var>> module_outputs;
};

class Supernet {
 public:
  // Random frozen encoder; every layer gets one SA and one PA, all active.
  Supernet(const SupernetConfig& config, std::uint64_t seed);

  const SupernetConfig& config() const noexcept { return config_; }
  const MaskState& mask() const noexcept { return mask_; }
  void apply_mask(const MaskState& mask);

  std::size_t num_modules() const noexcept { return modules_.size(); }
  PeftModule& module(const PeftModuleId& id) { return modules_.at(id.flat_index()); }
  const PeftModule& module(const PeftModuleId& id) const { return modules_.at(id.flat_index()); }
  std::span<PeftModule> modules() noexcept { return modules_; }
  std::span<const PeftModule> modules() const noexcept { return modules_; }

  Tensor& head_weight() noexcept { return head_w_; }
  Tensor& head_bias() noexcept { return head_b_; }
  const Tensor& head_weight() const noexcept { return head_w_; }
  const Tensor& head_bias() const noexcept { return head_b_; }
  std::size_t head_param_count() const noexcept {
    return static_cast<std::size_t>(head_w_.size() + head_b_.size());
  }

  // Parameters the optimizer may touch: active modules plus the head.
  std::vector<Tensor*> trainable_parameters();
  // Frozen weights (embeddings and encoder layers).
  std::vector<Tensor*> backbone_parameters();
  void zero_grad();

  // Rows are (batch * seq_len) token ids; result is the summed token and
  // position embeddings.
  Matrix embed(std::span<const int> tokens, Index seq_len) const;

  // H_out = a + h + m_SA * sigma(h W_down) W_up + m_PA * sigma(H_in W_down W_up)
  // where a = H_in + Attention(LN(H_in)) and h = FFN(LN(a)).
  // With trainable=false all parameters are registered as constants.
  Var layer_forward(Tape& tape, Var h_in, std::size_t layer, const MaskState& mask, Index seq_len,
                    bool trainable, ForwardTrace* trace = nullptr);
  Matrix layer_forward(const Matrix& h_in, std::size_t layer, const MaskState& mask, Index seq_len);

  // Full forward under the current mask.
  ForwardTrace forward(Tape& tape, std::span<const int> tokens, Index seq_len, bool trainable);

  void reinitialize_module(const PeftModuleId& id, std::mt19937_64& rng);
  void reinitialize_head(std::mt19937_64& rng);

  const BackboneLayer& layer(std::size_t i) const { return layers_.at(i); }

 private:
  SupernetConfig config_;
  Tensor token_embedding_;
  Tensor position_embedding_;
  std::vector<BackboneLayer> layers_;
  std::vector<PeftModule> modules_;
  Tensor head_w_;
  Tensor head_b_;
  MaskState mask_;
};

inline Supernet build_supernet(const SupernetConfig& config, std::uint64_t seed) {
  return Supernet(config, seed);
}

inline void apply_mask(Supernet& net, const MaskState& mask) { net.apply_mask(mask); }

// Head size plus the sizes of modules active in `mask`.
std::size_t trainable_param_count(const Supernet& net, const MaskState& mask);

void fill_normal(Matrix& m, double stddev, std::mt19937_64& rng);

}  // namespace hybridprune

#endif  // HYBRIDPRUNE_SUPERNET_HPP
