#include <gtest/gtest.h>

#include <random>

#include "liber/encoding.hpp"
#include "liber/errors.hpp"
#include "liber/mock_clients.hpp"
#include "support/svd_oracle.hpp"
#include "support/temp_dir.hpp"

using namespace liber;

namespace {

class FixedEmbed final : public EmbedClient {
 public:
  explicit FixedEmbed(std::map<std::string, Vector> table) : table_(std::move(table)) {}
  std::vector<Vector> embed(const std::vector<std::string>& texts) override {
    std::vector<Vector> out;
    for (const auto& t : texts) out.push_back(table_.at(t));
    return out;
  }
  std::string kind() const override { return "fixed"; }

 private:
  std::map<std::string, Vector> table_;
};

class FailingEmbed final : public EmbedClient {
 public:
  std::vector<Vector> embed(const std::vector<std::string>&) override {
    ++calls;
    throw TransportError("embedding service unavailable");
  }
  std::string kind() const override { return "failing"; }
  int calls = 0;
};

std::vector<Vector> planted_plane(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Vector origin(5), a(5), b(5);
  for (int i = 0; i < 5; ++i) {
    origin(i) = g(rng);
    a(i) = g(rng);
    b(i) = g(rng);
  }
  std::vector<Vector> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(origin + 3.0 * g(rng) * a + g(rng) * b);
  return out;
}

std::vector<Vector> gaussian_cloud(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Vector> out;
  for (std::size_t i = 0; i < n; ++i) {
    Vector v(static_cast<Eigen::Index>(d));
    for (std::size_t j = 0; j < d; ++j) v(static_cast<Eigen::Index>(j)) = g(rng) * (1.0 + j);
    out.push_back(v);
  }
  return out;
}

std::vector<std::vector<double>> rows_of(const std::vector<Vector>& xs) {
  std::vector<std::vector<double>> out;
  for (const auto& x : xs) out.emplace_back(x.data(), x.data() + x.size());
  return out;
}

double mean_squared_reconstruction(const Projection& p, const std::vector<Vector>& xs) {
  double total = 0;
  for (const auto& x : xs) total += (p.reconstruct(p.project(x)) - x).squaredNorm();
  return total / static_cast<double>(xs.size());
}

}  // namespace

TEST(EncodeKnowledge, SummaryOnlyWhenShiftAbsent) {
  Vector v(3), w(3);
  v << 1, 2, 3;
  w << 3, 2, -1;
  FixedEmbed embed({{"s", v}, {"c", w}});
  const auto k = encode_knowledge(embed, "u", InterestKnowledge{1, "s", std::nullopt});
  EXPECT_EQ(k.values, v);
  EXPECT_EQ(k.stage, VectorStage::raw);
  EXPECT_EQ(k.partition_index, 1u);
}

TEST(EncodeKnowledge, AveragesSummaryAndShift) {
  Vector v(3), w(3);
  v << 1, 2, 3;
  w << 3, 2, -1;
  FixedEmbed embed({{"s", v}, {"c", w}});
  const auto k = encode_knowledge(embed, "u", InterestKnowledge{2, "s", "c"});
  Vector expected(3);
  expected << 2, 2, 1;
  EXPECT_EQ(k.values, expected);
}

TEST(EncodeKnowledge, MockDimensionAndDeterminism) {
  MockEmbedClient embed;
  const InterestKnowledge k{2, "likes jazz", "new_interest=jazz"};
  const auto a = encode_knowledge(embed, "u", k);
  const auto b = encode_knowledge(embed, "u", k);
  EXPECT_EQ(a.values.size(), 768);
  EXPECT_EQ(a.values, b.values);
}

TEST(EncodeKnowledge, Errors) {
  MockEmbedClient mock;
  EXPECT_THROW(encode_knowledge(mock, "u", InterestKnowledge{1, "", std::nullopt}),
               PreconditionError);
  FixedEmbed empty({{"s", Vector()}});
  EXPECT_THROW(encode_knowledge(empty, "u", InterestKnowledge{1, "s", std::nullopt}),
               ProtocolError);
  FailingEmbed failing;
  EXPECT_THROW(encode_knowledge(failing, "u", InterestKnowledge{1, "s", std::nullopt},
                                RetryPolicy::immediate(3)),
               TransportError);
  EXPECT_EQ(failing.calls, 4);
}

TEST(FitProjection, RecoversPlantedPlaneAgainstSvdOracle) {
  const auto xs = planted_plane(60, 11);
  const auto p = fit_projection(std::span<const Vector>(xs), 2);

  std::vector<double> mean;
  const auto basis = oracle::principal_directions(rows_of(xs), 2, &mean);
  for (int j = 0; j < 5; ++j) EXPECT_NEAR(p.mean()(j), mean[static_cast<std::size_t>(j)], 1e-9);

  double worst = 0;
  for (const auto& x : xs) {
    const Vector lib = p.reconstruct(p.project(x));
    const auto ref = oracle::reconstruct(std::vector<double>(x.data(), x.data() + 5), mean, basis);
    for (int j = 0; j < 5; ++j) {
      worst = std::max(worst, std::abs(lib(j) - x(j)));
      EXPECT_NEAR(lib(j), ref[static_cast<std::size_t>(j)], 1e-6);
    }
  }
  EXPECT_LE(worst, 1e-6);

  // Same subspace: the two orthogonal projectors agree.
  Matrix oracle_basis(5, 2);
  for (int c = 0; c < 2; ++c)
    for (int j = 0; j < 5; ++j) oracle_basis(j, c) = basis[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)];
  const Matrix diff = p.components() * p.components().transpose() -
                      oracle_basis * oracle_basis.transpose();
  EXPECT_LE(diff.cwiseAbs().maxCoeff(), 1e-6);
}

TEST(FitProjection, VarianceMatchesOracleSingularValues) {
  const auto xs = gaussian_cloud(40, 6, 3);
  const auto p = fit_projection(std::span<const Vector>(xs), 6);
  std::vector<double> centered;
  for (const auto& x : xs) centered.insert(centered.end(), x.data(), x.data() + 6);
  const auto rows = rows_of(xs);
  std::vector<double> m(6, 0.0);
  for (const auto& r : rows)
    for (int j = 0; j < 6; ++j) m[static_cast<std::size_t>(j)] += r[static_cast<std::size_t>(j)] / 40.0;
  for (std::size_t i = 0; i < 40; ++i)
    for (std::size_t j = 0; j < 6; ++j) centered[i * 6 + j] -= m[j];
  const auto svd = oracle::jacobi_svd(centered, 40, 6);
  for (int c = 0; c < 6; ++c) {
    const double s = svd.singular[static_cast<std::size_t>(c)];
    EXPECT_NEAR(p.explained_variance()(c), s * s / 39.0, 1e-8 * (1 + s * s));
  }
}

TEST(FitProjection, OrthonormalComponents) {
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto xs = gaussian_cloud(50, 12, seed);
    const auto p = fit_projection(std::span<const Vector>(xs), 5);
    const Matrix gram = p.components().transpose() * p.components();
    EXPECT_LE((gram - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(FitProjection, CanonicalSigns) {
  const auto xs = gaussian_cloud(30, 8, 5);
  const auto p = fit_projection(std::span<const Vector>(xs), 4);
  for (Eigen::Index c = 0; c < 4; ++c) {
    Eigen::Index arg = 0;
    p.components().col(c).cwiseAbs().maxCoeff(&arg);
    EXPECT_GT(p.components()(arg, c), 0.0);
  }
}

TEST(FitProjection, FullBasisIsIdentityRoundTrip) {
  const auto xs = gaussian_cloud(30, 6, 9);
  const auto p = fit_projection(std::span<const Vector>(xs), 6);
  for (const auto& x : xs) EXPECT_LE((p.reconstruct(p.project(x)) - x).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(FitProjection, VarianceOrderedAndTraceConserved) {
  const auto xs = gaussian_cloud(40, 7, 21);
  const auto p = fit_projection(std::span<const Vector>(xs), 7);
  for (Eigen::Index c = 1; c < 7; ++c) {
    EXPECT_GE(p.explained_variance()(c - 1), p.explained_variance()(c));
    EXPECT_GE(p.explained_variance()(c), 0.0);
  }
  double trace = 0;
  for (int j = 0; j < 7; ++j) {
    double mean = 0;
    for (const auto& x : xs) mean += x(j) / 40.0;
    for (const auto& x : xs) trace += (x(j) - mean) * (x(j) - mean) / 39.0;
  }
  EXPECT_NEAR(p.explained_variance().sum(), trace, 1e-6 * trace);
}

TEST(FitProjection, ReconstructionErrorShrinksWithDimension) {
  const auto xs = gaussian_cloud(40, 8, 4);
  double last = std::numeric_limits<double>::infinity();
  for (std::size_t d = 1; d <= 8; ++d) {
    const double err =
        mean_squared_reconstruction(fit_projection(std::span<const Vector>(xs), d), xs);
    EXPECT_LE(err, last + 1e-12);
    last = err;
  }
}

TEST(FitProjection, Preconditions) {
  const auto xs = gaussian_cloud(3, 6, 1);
  EXPECT_THROW(fit_projection(std::span<const Vector>(xs), 4), DimensionError);
  const auto ys = gaussian_cloud(10, 3, 1);
  EXPECT_THROW(fit_projection(std::span<const Vector>(ys), 4), DimensionError);
  EXPECT_THROW(fit_projection(std::span<const Vector>(ys), 0), DimensionError);
  std::vector<KnowledgeVector> reduced = {{"u", 1, VectorStage::reduced, ys[0]}};
  EXPECT_THROW(fit_projection(std::span<const KnowledgeVector>(reduced), 1), PreconditionError);
}

TEST(Project, CenteringAndCoordinates) {
  const auto xs = gaussian_cloud(30, 6, 8);
  const auto p = fit_projection(std::span<const Vector>(xs), 3);
  EXPECT_LE(p.project(p.mean()).cwiseAbs().maxCoeff(), 1e-12);
  for (Eigen::Index k = 0; k < 3; ++k) {
    const Vector z = p.project(Vector(p.mean() + 2.5 * p.components().col(k)));
    for (Eigen::Index i = 0; i < 3; ++i) EXPECT_NEAR(z(i), i == k ? 2.5 : 0.0, 1e-6);
  }
  const Vector delta = xs[1] - xs[0];
  const Vector lhs = p.project(Vector(xs[2] + delta)) - p.project(xs[2]);
  EXPECT_LE((lhs - p.components().transpose() * delta).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Project, StagesAndDimensions) {
  const auto xs = gaussian_cloud(30, 6, 8);
  const auto p = fit_projection(std::span<const Vector>(xs), 3);
  const auto z = p.project(KnowledgeVector{"u", 4, VectorStage::raw, xs[0]});
  EXPECT_EQ(z.stage, VectorStage::reduced);
  EXPECT_EQ(z.partition_index, 4u);
  EXPECT_EQ(z.values.size(), 3);
  EXPECT_THROW(p.project(z), PreconditionError);
  EXPECT_THROW(p.project(Vector(Vector::Zero(5))), DimensionError);
}

TEST(Projection, SerializationRoundTrip) {
  const auto xs = gaussian_cloud(30, 6, 8);
  const auto p = fit_projection(std::span<const Vector>(xs), 3);
  testing_support::TempDir dir;
  p.save(dir.file("p.pca"));
  EXPECT_EQ(Projection::load(dir.file("p.pca")), p);
  auto bytes = p.serialize();
  bytes[0] = 'X';
  EXPECT_THROW(Projection::deserialize(bytes), DataError);
  bytes = p.serialize();
  bytes.resize(bytes.size() - 3);
  EXPECT_THROW(Projection::deserialize(bytes), DataError);
}

TEST(FitProjection, Deterministic) {
  const auto xs = gaussian_cloud(30, 10, 8);
  EXPECT_EQ(fit_projection(std::span<const Vector>(xs), 4),
            fit_projection(std::span<const Vector>(xs), 4));
}
