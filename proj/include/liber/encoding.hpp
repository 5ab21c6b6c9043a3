#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "liber/chat_client.hpp"
#include "liber/prompting.hpp"

namespace liber {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class VectorStage : std::uint8_t { raw = 0, reduced = 1 };

struct KnowledgeVector {
  std::string user_id;
  std::uint32_t partition_index = 0;
  VectorStage stage = VectorStage::raw;
  Vector values;
};

// Text encoder backend: one fixed-dimension vector per input text.
// Implementations must tolerate concurrent calls.
class EmbedClient {
 public:
  virtual ~EmbedClient() = default;
  virtual std::vector<Vector> embed(const std::vector<std::string>& texts) = 0;
  virtual std::string kind() const = 0;
};

// Embeds summary and shift independently and averages them with equal
// weight; the summary alone when the shift is absent.
KnowledgeVector encode_knowledge(EmbedClient& encoder, const std::string& user_id,
                                 const InterestKnowledge& knowledge,
                                 const RetryPolicy& retry = RetryPolicy{});

// Centering plus an orthonormal basis of the leading principal directions.
class Projection {
 public:
  Projection() = default;
  Projection(Vector mean, Matrix components, Vector explained_variance);

  std::size_t input_dim() const noexcept { return static_cast<std::size_t>(mean_.size()); }
  std::size_t output_dim() const noexcept { return static_cast<std::size_t>(components_.cols()); }
  bool empty() const noexcept { return mean_.size() == 0; }

  const Vector& mean() const noexcept { return mean_; }
  // d_enc x d_red, orthonormal columns.
  const Matrix& components() const noexcept { return components_; }
  const Vector& explained_variance() const noexcept { return explained_variance_; }

  // components^T (v - mean)
  Vector project(const Vector& v) const;
  KnowledgeVector project(const KnowledgeVector& v) const;
  // mean + components z
  Vector reconstruct(const Vector& z) const;

  std::vector<std::uint8_t> serialize() const;
  static Projection deserialize(std::span<const std::uint8_t> bytes);
  void save(const std::string& path) const;
  static Projection load(const std::string& path);

  bool operator==(const Projection& other) const;

 private:
  Vector mean_;
  Matrix components_;
  Vector explained_variance_;
};

// PCA through the eigendecomposition of the sample covariance. Each
// component's largest-magnitude entry is made positive.
Projection fit_projection(std::span<const Vector> vectors, std::size_t d_red);
Projection fit_projection(std::span<const KnowledgeVector> vectors, std::size_t d_red);

}  // namespace liber
