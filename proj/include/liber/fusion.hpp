#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "liber/encoding.hpp"

namespace liber {

// Single-head self-attention parameters, each d_red x d_att, no biases.
struct AttentionWeights {
  Matrix query;
  Matrix key;
  Matrix value;

  std::size_t input_dim() const noexcept { return static_cast<std::size_t>(value.rows()); }
  std::size_t output_dim() const noexcept { return static_cast<std::size_t>(value.cols()); }

  // Uniform in [-scale/sqrt(d_red), scale/sqrt(d_red)].
  static AttentionWeights initialize(std::size_t d_red, std::size_t d_att, std::uint64_t seed,
                                     double scale = 1.0);
  static AttentionWeights zeros(std::size_t d_red, std::size_t d_att);

  std::vector<std::uint8_t> serialize() const;
  static AttentionWeights deserialize(std::span<const std::uint8_t> bytes);
  void save(const std::string& path) const;
  static AttentionWeights load(const std::string& path);

  bool operator==(const AttentionWeights&) const = default;
};

struct FusedRepresentation {
  std::string user_id;
  Vector values;
  std::size_t partition_count_used = 0;
};

// Row-wise softmax. -inf logits get weight 0; a row must hold at least one
// finite logit.
Matrix softmax_rows(const Matrix& logits);

// Intermediates of one attention pass, kept for the backward pass.
struct AttentionTrace {
  Matrix reps;     // j x d_red (valid rows only)
  Matrix queries;  // j x d_att
  Matrix keys;     // j x d_att
  Matrix values;   // j x d_att
  Matrix logits;   // j x j, scaled
  Matrix weights;  // j x j, row-stochastic
  Vector output;   // d_att
};

// Stacks reps as rows R and returns mean_rows(Softmax(R Wq (R Wk)^T / sqrt(d_att)) R Wv).
AttentionTrace self_attention_trace(const Matrix& reps, const AttentionWeights& w);
Vector self_attention_fuse(const Matrix& reps, const AttentionWeights& w);
// Padded batch layout: rows >= valid_rows are masked out of both the keys
// (logit -inf) and the final row average.
Vector self_attention_fuse(const Matrix& padded_reps, std::size_t valid_rows,
                           const AttentionWeights& w);
FusedRepresentation self_attention_fuse(std::span<const KnowledgeVector> reps,
                                        const AttentionWeights& w);

// mean_rows(R) Wv
Vector mean_pool_fuse(const Matrix& reps, const AttentionWeights& w);
FusedRepresentation mean_pool_fuse(std::span<const KnowledgeVector> reps,
                                   const AttentionWeights& w);

Matrix stack_rows(std::span<const Vector> reps);

// Gradients of a scalar loss with respect to the attention weights given
// d(loss)/d(output).
void self_attention_backward(const AttentionTrace& trace, const AttentionWeights& w,
                             const Vector& grad_output, AttentionWeights& grad);
void mean_pool_backward(const Matrix& reps, const Vector& grad_output, AttentionWeights& grad);

}  // namespace liber
