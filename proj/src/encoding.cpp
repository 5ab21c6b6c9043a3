#include "liber/encoding.hpp"

#include <algorithm>
#include <cmath>

#include "liber/binary_io.hpp"
#include "liber/errors.hpp"

namespace liber {
namespace {

constexpr char kProjectionMagic[4] = {'L', 'B', 'P', 'C'};
constexpr std::uint32_t kProjectionVersion = 1;

Vector embed_one(EmbedClient& encoder, const std::string& text, const RetryPolicy& retry) {
  auto out = call_with_retry(retry, [&] { return encoder.embed({text}); });
  if (out.size() != 1) throw ProtocolError("encoder returned a wrong number of vectors");
  if (out.front().size() == 0) throw ProtocolError("encoder returned a zero-length embedding");
  if (!out.front().allFinite()) throw ProtocolError("encoder returned non-finite values");
  return std::move(out.front());
}

}  // namespace

KnowledgeVector encode_knowledge(EmbedClient& encoder, const std::string& user_id,
                                 const InterestKnowledge& knowledge,
                                 const RetryPolicy& retry) {
  if (knowledge.summary.empty()) {
    throw PreconditionError("cannot encode knowledge with an empty summary");
  }
  Vector values = embed_one(encoder, knowledge.summary, retry);
  if (knowledge.shift) {
    Vector shift = embed_one(encoder, *knowledge.shift, retry);
    if (shift.size() != values.size()) {
      throw ProtocolError("encoder returned inconsistent dimensions");
    }
    values = 0.5 * (values + shift);
  }
  return {user_id, knowledge.partition_index, VectorStage::raw, std::move(values)};
}

Projection::Projection(Vector mean, Matrix components, Vector explained_variance)
    : mean_(std::move(mean)),
      components_(std::move(components)),
      explained_variance_(std::move(explained_variance)) {
  if (components_.rows() != mean_.size() || explained_variance_.size() != components_.cols()) {
    throw DimensionError("inconsistent projection shapes");
  }
}

Vector Projection::project(const Vector& v) const {
  if (v.size() != mean_.size()) {
    throw DimensionError("projection expects dimension " + std::to_string(mean_.size()) +
                         ", got " + std::to_string(v.size()));
  }
  return components_.transpose() * (v - mean_);
}

KnowledgeVector Projection::project(const KnowledgeVector& v) const {
  if (v.stage != VectorStage::raw) throw PreconditionError("only raw vectors can be projected");
  return {v.user_id, v.partition_index, VectorStage::reduced, project(v.values)};
}

Vector Projection::reconstruct(const Vector& z) const {
  if (z.size() != components_.cols()) throw DimensionError("reconstruct: wrong dimension");
  return mean_ + components_ * z;
}

std::vector<std::uint8_t> Projection::serialize() const {
  ByteWriter w;
  w.raw(std::string_view(kProjectionMagic, 4));
  w.u32(kProjectionVersion);
  w.u32(static_cast<std::uint32_t>(input_dim()));
  w.u32(static_cast<std::uint32_t>(output_dim()));
  w.f64s(std::span<const double>(mean_.data(), static_cast<std::size_t>(mean_.size())));
  write_matrix_col_major(w, components_);
  w.f64s(std::span<const double>(explained_variance_.data(),
                                 static_cast<std::size_t>(explained_variance_.size())));
  return w.take();
}

Projection Projection::deserialize(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (r.raw(4) != std::string_view(kProjectionMagic, 4)) throw DataError("not a projection file");
  if (r.u32() != kProjectionVersion) throw DataError("unsupported projection version");
  const auto d_enc = r.u32();
  const auto d_red = r.u32();
  Vector mean(d_enc);
  r.f64s(std::span<double>(mean.data(), d_enc));
  Matrix components(d_enc, d_red);
  read_matrix_col_major(r, components);
  Vector variance(d_red);
  r.f64s(std::span<double>(variance.data(), d_red));
  if (r.remaining() != 0) throw DataError("trailing bytes in projection file");
  return {std::move(mean), std::move(components), std::move(variance)};
}

void Projection::save(const std::string& path) const { write_file(path, serialize()); }

Projection Projection::load(const std::string& path) { return deserialize(read_file(path)); }

bool Projection::operator==(const Projection& other) const {
  return mean_.size() == other.mean_.size() && components_.cols() == other.components_.cols() &&
         mean_ == other.mean_ && components_ == other.components_ &&
         explained_variance_ == other.explained_variance_;
}

Projection fit_projection(std::span<const Vector> vectors, std::size_t d_red) {
  if (d_red == 0) throw DimensionError("d_red must be positive");
  if (vectors.size() < d_red) {
    throw DimensionError("PCA needs at least d_red=" + std::to_string(d_red) +
                         " samples, got " + std::to_string(vectors.size()));
  }
  const auto d_enc = vectors.front().size();
  if (static_cast<std::size_t>(d_enc) < d_red) {
    throw DimensionError("d_red=" + std::to_string(d_red) + " exceeds d_enc=" +
                         std::to_string(d_enc));
  }
  const auto n = static_cast<Eigen::Index>(vectors.size());
  Matrix data(n, d_enc);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (vectors[i].size() != d_enc) throw DimensionError("PCA input has mixed dimensions");
    if (!vectors[i].allFinite()) throw DimensionError("PCA input has non-finite entries");
    data.row(i) = vectors[i].transpose();
  }
  Vector mean = data.colwise().mean().transpose();
  data.rowwise() -= mean.transpose();
  const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
  Matrix cov = (data.transpose() * data) / denom;

  Eigen::SelfAdjointEigenSolver<Matrix> solver(cov);
  if (solver.info() != Eigen::Success) throw DimensionError("eigendecomposition failed");
  // Eigen returns ascending eigenvalues.
  const auto k = static_cast<Eigen::Index>(d_red);
  Matrix components(d_enc, k);
  Vector variance(k);
  for (Eigen::Index c = 0; c < k; ++c) {
    const Eigen::Index src = d_enc - 1 - c;
    Vector col = solver.eigenvectors().col(src);
    Eigen::Index arg = 0;
    col.cwiseAbs().maxCoeff(&arg);
    if (col(arg) < 0) col = -col;
    components.col(c) = col;
    variance(c) = std::max(0.0, solver.eigenvalues()(src));
  }
  return {std::move(mean), std::move(components), std::move(variance)};
}

Projection fit_projection(std::span<const KnowledgeVector> vectors, std::size_t d_red) {
  std::vector<Vector> values;
  values.reserve(vectors.size());
  for (const auto& v : vectors) {
    if (v.stage != VectorStage::raw) throw PreconditionError("PCA is fit on raw vectors");
    values.push_back(v.values);
  }
  return fit_projection(std::span<const Vector>(values), d_red);
}

}  // namespace liber
