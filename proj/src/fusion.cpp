#include "liber/fusion.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "liber/binary_io.hpp"
#include "liber/errors.hpp"

namespace liber {
namespace {

constexpr char kWeightsMagic[4] = {'L', 'B', 'A', 'W'};
constexpr std::uint32_t kWeightsVersion = 1;

void check_reps(const Matrix& reps, const AttentionWeights& w) {
  if (reps.rows() == 0) throw DegenerateInputError("fusion needs at least one partition vector");
  if (reps.cols() != w.value.rows()) {
    throw DimensionError("partition vectors have dimension " + std::to_string(reps.cols()) +
                         ", fusion weights expect " + std::to_string(w.value.rows()));
  }
}

Matrix to_matrix(std::span<const KnowledgeVector> reps) {
  if (reps.empty()) throw DegenerateInputError("fusion needs at least one partition vector");
  const auto dim = reps.front().values.size();
  Matrix m(static_cast<Eigen::Index>(reps.size()), dim);
  for (std::size_t i = 0; i < reps.size(); ++i) {
    if (reps[i].stage != VectorStage::reduced) {
      throw PreconditionError("fusion expects reduced partition vectors");
    }
    if (reps[i].values.size() != dim) throw DimensionError("partition vectors differ in size");
    m.row(static_cast<Eigen::Index>(i)) = reps[i].values.transpose();
  }
  return m;
}

}  // namespace

AttentionWeights AttentionWeights::initialize(std::size_t d_red, std::size_t d_att,
                                              std::uint64_t seed, double scale) {
  if (d_red == 0 || d_att == 0) throw DimensionError("attention dimensions must be positive");
  std::mt19937_64 rng(seed);
  if (!(scale > 0.0)) throw DimensionError("attention init scale must be positive");
  const double bound = scale / std::sqrt(static_cast<double>(d_red));
  std::uniform_real_distribution<double> dist(-bound, bound);
  auto draw = [&] {
    Matrix m(static_cast<Eigen::Index>(d_red), static_cast<Eigen::Index>(d_att));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = dist(rng);
    return m;
  };
  AttentionWeights w;
  w.query = draw();
  w.key = draw();
  w.value = draw();
  return w;
}

AttentionWeights AttentionWeights::zeros(std::size_t d_red, std::size_t d_att) {
  const auto r = static_cast<Eigen::Index>(d_red);
  const auto c = static_cast<Eigen::Index>(d_att);
  return {Matrix::Zero(r, c), Matrix::Zero(r, c), Matrix::Zero(r, c)};
}

std::vector<std::uint8_t> AttentionWeights::serialize() const {
  ByteWriter w;
  w.raw(std::string_view(kWeightsMagic, 4));
  w.u32(kWeightsVersion);
  w.u32(static_cast<std::uint32_t>(input_dim()));
  w.u32(static_cast<std::uint32_t>(output_dim()));
  write_matrix_row_major(w, query);
  write_matrix_row_major(w, key);
  write_matrix_row_major(w, value);
  return w.take();
}

AttentionWeights AttentionWeights::deserialize(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (r.raw(4) != std::string_view(kWeightsMagic, 4)) throw DataError("not a fusion weight file");
  if (r.u32() != kWeightsVersion) throw DataError("unsupported fusion weight version");
  const auto d_red = r.u32();
  const auto d_att = r.u32();
  auto w = zeros(d_red, d_att);
  read_matrix_row_major(r, w.query);
  read_matrix_row_major(r, w.key);
  read_matrix_row_major(r, w.value);
  if (r.remaining() != 0) throw DataError("trailing bytes in fusion weight file");
  return w;
}

void AttentionWeights::save(const std::string& path) const { write_file(path, serialize()); }

AttentionWeights AttentionWeights::load(const std::string& path) {
  return deserialize(read_file(path));
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double top = logits.row(i).maxCoeff();
    if (!std::isfinite(top)) throw DegenerateInputError("softmax row without a finite logit");
    double total = 0.0;
    for (Eigen::Index j = 0; j < logits.cols(); ++j) {
      const double e = std::isinf(logits(i, j)) ? 0.0 : std::exp(logits(i, j) - top);
      out(i, j) = e;
      total += e;
    }
    out.row(i) /= total;
  }
  return out;
}

AttentionTrace self_attention_trace(const Matrix& reps, const AttentionWeights& w) {
  check_reps(reps, w);
  AttentionTrace t;
  t.reps = reps;
  t.queries = reps * w.query;
  t.keys = reps * w.key;
  t.values = reps * w.value;
  const double scale = 1.0 / std::sqrt(static_cast<double>(w.value.cols()));
  t.logits = (t.queries * t.keys.transpose()) * scale;
  t.weights = softmax_rows(t.logits);
  t.output = (t.weights * t.values).colwise().mean().transpose();
  return t;
}

Vector self_attention_fuse(const Matrix& reps, const AttentionWeights& w) {
  return self_attention_trace(reps, w).output;
}

Vector self_attention_fuse(const Matrix& padded_reps, std::size_t valid_rows,
                           const AttentionWeights& w) {
  check_reps(padded_reps, w);
  const auto valid = static_cast<Eigen::Index>(valid_rows);
  if (valid == 0 || valid > padded_reps.rows()) {
    throw DegenerateInputError("valid_rows must be in 1..rows");
  }
  const Matrix q = padded_reps * w.query;
  const Matrix k = padded_reps * w.key;
  const Matrix v = padded_reps * w.value;
  const double scale = 1.0 / std::sqrt(static_cast<double>(w.value.cols()));
  Matrix logits = (q * k.transpose()) * scale;
  logits.rightCols(logits.cols() - valid).setConstant(-std::numeric_limits<double>::infinity());
  // Padded query rows still need one finite logit; they are dropped below.
  const Matrix weights = softmax_rows(logits);
  const Matrix h = weights * v;
  return h.topRows(valid).colwise().mean().transpose();
}

FusedRepresentation self_attention_fuse(std::span<const KnowledgeVector> reps,
                                        const AttentionWeights& w) {
  const Matrix m = to_matrix(reps);
  return {reps.front().user_id, self_attention_fuse(m, w), reps.size()};
}

Vector mean_pool_fuse(const Matrix& reps, const AttentionWeights& w) {
  check_reps(reps, w);
  return w.value.transpose() * reps.colwise().mean().transpose();
}

FusedRepresentation mean_pool_fuse(std::span<const KnowledgeVector> reps,
                                   const AttentionWeights& w) {
  const Matrix m = to_matrix(reps);
  return {reps.front().user_id, mean_pool_fuse(m, w), reps.size()};
}

Matrix stack_rows(std::span<const Vector> reps) {
  if (reps.empty()) return {};
  Matrix m(static_cast<Eigen::Index>(reps.size()), reps.front().size());
  for (std::size_t i = 0; i < reps.size(); ++i) {
    if (reps[i].size() != m.cols()) throw DimensionError("partition vectors differ in size");
    m.row(static_cast<Eigen::Index>(i)) = reps[i].transpose();
  }
  return m;
}

void self_attention_backward(const AttentionTrace& t, const AttentionWeights& w,
                             const Vector& grad_output, AttentionWeights& grad) {
  const auto j = t.reps.rows();
  const double scale = 1.0 / std::sqrt(static_cast<double>(w.value.cols()));
  // output = (1/j) sum_i H_i with H = A V
  const Matrix d_h = Matrix::Ones(j, 1) * (grad_output.transpose() / static_cast<double>(j));
  const Matrix d_a = d_h * t.values.transpose();
  const Matrix d_v = t.weights.transpose() * d_h;
  Matrix d_s(j, j);
  for (Eigen::Index i = 0; i < j; ++i) {
    const double dot = d_a.row(i).dot(t.weights.row(i));
    d_s.row(i) = t.weights.row(i).cwiseProduct(d_a.row(i).array().matrix() -
                                               Eigen::RowVectorXd::Constant(j, dot));
  }
  const Matrix d_q = d_s * t.keys * scale;
  const Matrix d_k = d_s.transpose() * t.queries * scale;
  grad.query += t.reps.transpose() * d_q;
  grad.key += t.reps.transpose() * d_k;
  grad.value += t.reps.transpose() * d_v;
}

void mean_pool_backward(const Matrix& reps, const Vector& grad_output, AttentionWeights& grad) {
  grad.value += reps.colwise().mean().transpose() * grad_output.transpose();
}

}  // namespace liber
