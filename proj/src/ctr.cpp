#include "liber/ctr.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "liber/binary_io.hpp"
#include "liber/errors.hpp"

namespace liber {
namespace {

constexpr char kModelMagic[4] = {'L', 'B', 'C', 'T'};
constexpr std::uint32_t kModelVersion = 1;

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double bce_with_logit(double z, int y) {
  return std::max(z, 0.0) - z * static_cast<double>(y) + std::log1p(std::exp(-std::abs(z)));
}

Matrix uniform(Eigen::Index rows, Eigen::Index cols, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
  return m;
}

void write_matrix(ByteWriter& w, const Matrix& m) {
  w.u32(static_cast<std::uint32_t>(m.rows()));
  w.u32(static_cast<std::uint32_t>(m.cols()));
  write_matrix_row_major(w, m);
}

Matrix read_matrix(ByteReader& r) {
  const auto rows = r.u32();
  const auto cols = r.u32();
  Matrix m(rows, cols);
  read_matrix_row_major(r, m);
  return m;
}

}  // namespace

// ---------------------------------------------------------------- Vocabulary

Vocabulary::Vocabulary(std::vector<std::string> fields)
    : fields_(std::move(fields)), index_(fields_.size()), ids_(fields_.size()) {}

Vocabulary Vocabulary::build(const CtrConfig& config, std::span<const CtrSample> samples) {
  Vocabulary v(config.fields);
  const bool has_history_field =
      std::find(config.fields.begin(), config.fields.end(), config.history_field) !=
      config.fields.end();
  if (!has_history_field) {
    throw ConfigError("history field '" + config.history_field + "' is not in the schema");
  }
  for (const auto& s : samples) {
    for (const auto& [field, id] : s.features) {
      if (std::find(config.fields.begin(), config.fields.end(), field) != config.fields.end()) {
        v.add(field, id);
      }
    }
    for (const auto& id : s.history) v.add(config.history_field, id);
  }
  return v;
}

std::size_t Vocabulary::field_index(const std::string& field) const {
  auto it = std::find(fields_.begin(), fields_.end(), field);
  if (it == fields_.end()) throw ConfigError("unknown feature field '" + field + "'");
  return static_cast<std::size_t>(it - fields_.begin());
}

std::size_t Vocabulary::add(const std::string& field, const std::string& id) {
  const auto f = field_index(field);
  auto [it, inserted] = index_[f].emplace(id, ids_[f].size() + 1);
  if (inserted) ids_[f].push_back(id);
  return it->second;
}

std::size_t Vocabulary::lookup(const std::string& field, const std::string& id) const {
  const auto f = field_index(field);
  auto it = index_[f].find(id);
  return it == index_[f].end() ? 0 : it->second;
}

std::size_t Vocabulary::size(const std::string& field) const {
  return ids_[field_index(field)].size() + 1;
}

// ------------------------------------------------------------- CtrParameters

void CtrParameters::set_zero() {
  for (auto& t : tables) t.setZero();
  fusion.query.setZero();
  fusion.key.setZero();
  fusion.value.setZero();
  for (auto& w : weights) w.setZero();
  for (auto& b : biases) b.setZero();
}

void CtrParameters::add_scaled(const CtrParameters& other, double scale) {
  for (std::size_t i = 0; i < tables.size(); ++i) tables[i] += scale * other.tables[i];
  fusion.query += scale * other.fusion.query;
  fusion.key += scale * other.fusion.key;
  fusion.value += scale * other.fusion.value;
  for (std::size_t i = 0; i < weights.size(); ++i) weights[i] += scale * other.weights[i];
  for (std::size_t i = 0; i < biases.size(); ++i) biases[i] += scale * other.biases[i];
}

std::vector<double*> CtrParameters::flat() {
  std::vector<double*> out;
  auto push = [&](auto& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) out.push_back(m.data() + i);
  };
  for (auto& t : tables) push(t);
  push(fusion.query);
  push(fusion.key);
  push(fusion.value);
  for (std::size_t l = 0; l < weights.size(); ++l) {
    push(weights[l]);
    push(biases[l]);
  }
  return out;
}

std::vector<std::pair<std::string, std::size_t>> CtrParameters::blocks() const {
  std::vector<std::pair<std::string, std::size_t>> out;
  for (std::size_t i = 0; i < tables.size(); ++i) {
    out.emplace_back("table" + std::to_string(i), tables[i].size());
  }
  out.emplace_back("fusion.query", fusion.query.size());
  out.emplace_back("fusion.key", fusion.key.size());
  out.emplace_back("fusion.value", fusion.value.size());
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.emplace_back("mlp" + std::to_string(l) + ".weight", weights[l].size());
    out.emplace_back("mlp" + std::to_string(l) + ".bias", biases[l].size());
  }
  return out;
}

bool CtrParameters::all_finite() const {
  for (const auto& t : tables)
    if (!t.allFinite()) return false;
  if (!fusion.query.allFinite() || !fusion.key.allFinite() || !fusion.value.allFinite())
    return false;
  for (const auto& w : weights)
    if (!w.allFinite()) return false;
  for (const auto& b : biases)
    if (!b.allFinite()) return false;
  return true;
}

bool CtrParameters::operator==(const CtrParameters& o) const {
  if (tables.size() != o.tables.size() || weights.size() != o.weights.size()) return false;
  for (std::size_t i = 0; i < tables.size(); ++i)
    if (tables[i].rows() != o.tables[i].rows() || tables[i] != o.tables[i]) return false;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i].cols() != o.weights[i].cols() || weights[i] != o.weights[i]) return false;
    if (biases[i] != o.biases[i]) return false;
  }
  return fusion == o.fusion;
}

// ------------------------------------------------------------------ CtrModel

struct CtrModel::Forward {
  std::vector<std::size_t> rows;
  std::vector<std::size_t> history_rows;
  std::vector<Vector> activations;  // [0] is the concatenated input
  std::vector<Vector> pre;          // hidden pre-activations
  double logit = 0.0;
  // How r-hat was produced, for the backward pass.
  bool fused_from_reps = false;
  Matrix reps;
  AttentionTrace trace;
};

CtrModel::CtrModel(CtrConfig config, Vocabulary vocab)
    : config_(std::move(config)), vocab_(std::move(vocab)) {
  if (config_.fields.empty()) throw ConfigError("CTR schema needs at least one field");
  if (vocab_.fields() != config_.fields) throw ConfigError("vocabulary does not match schema");
  vocab_.field_index(config_.history_field);
  if (config_.embedding_dim == 0) throw ConfigError("embedding_dim must be positive");
  std::mt19937_64 rng(config_.seed);
  const auto e = static_cast<Eigen::Index>(config_.embedding_dim);
  for (const auto& f : config_.fields) {
    params_.tables.push_back(uniform(static_cast<Eigen::Index>(vocab_.size(f)), e, 0.05, rng));
  }
  params_.fusion = AttentionWeights::initialize(config_.d_red, config_.d_att, rng(),
                                                config_.fusion_init_scale);
  std::size_t in = input_dim();
  std::vector<std::size_t> sizes = config_.hidden;
  sizes.push_back(1);
  for (std::size_t l = 0; l < sizes.size(); ++l) {
    const bool last = l + 1 == sizes.size();
    const double bound = last ? std::sqrt(6.0 / static_cast<double>(in + sizes[l]))
                              : std::sqrt(6.0 / static_cast<double>(in));
    params_.weights.push_back(uniform(static_cast<Eigen::Index>(sizes[l]),
                                      static_cast<Eigen::Index>(in), bound, rng));
    params_.biases.push_back(Vector::Zero(static_cast<Eigen::Index>(sizes[l])));
    in = sizes[l];
  }
}

std::size_t CtrModel::input_dim() const {
  return (config_.fields.size() + 1) * config_.embedding_dim +
         (config_.long_term_slot ? config_.d_att : 0);
}

CtrParameters CtrModel::zeros_like() const {
  CtrParameters z = params_;
  z.set_zero();
  return z;
}

Vector CtrModel::long_term_feature(const CtrSample& sample) const {
  const auto d_att = static_cast<Eigen::Index>(config_.d_att);
  if (sample.fused) {
    if (sample.fused->size() != d_att) throw DimensionError("fused r-hat has wrong dimension");
    return *sample.fused;
  }
  if (config_.fusion == FusionMode::zeros || sample.long_term.empty()) {
    return Vector::Zero(d_att);
  }
  const Matrix reps = stack_rows(sample.long_term);
  return config_.fusion == FusionMode::attention ? self_attention_fuse(reps, params_.fusion)
                                                 : mean_pool_fuse(reps, params_.fusion);
}

CtrModel::Forward CtrModel::forward(const CtrSample& sample) const {
  Forward f;
  const auto e = static_cast<Eigen::Index>(config_.embedding_dim);
  Vector input = Vector::Zero(static_cast<Eigen::Index>(input_dim()));

  f.rows.assign(config_.fields.size(), 0);
  for (const auto& [field, id] : sample.features) {
    auto it = std::find(config_.fields.begin(), config_.fields.end(), field);
    if (it == config_.fields.end()) continue;
    const auto idx = static_cast<std::size_t>(it - config_.fields.begin());
    f.rows[idx] = vocab_.lookup(field, id);
  }
  for (std::size_t i = 0; i < f.rows.size(); ++i) {
    input.segment(static_cast<Eigen::Index>(i) * e, e) =
        params_.tables[i].row(static_cast<Eigen::Index>(f.rows[i])).transpose();
  }

  const auto hist_field = vocab_.field_index(config_.history_field);
  const std::size_t take = std::min(sample.history.size(), config_.max_history);
  for (std::size_t i = sample.history.size() - take; i < sample.history.size(); ++i) {
    f.history_rows.push_back(vocab_.lookup(config_.history_field, sample.history[i]));
  }
  const auto hist_offset = static_cast<Eigen::Index>(config_.fields.size()) * e;
  if (!f.history_rows.empty()) {
    Vector pooled = Vector::Zero(e);
    for (auto r : f.history_rows) {
      pooled += params_.tables[hist_field].row(static_cast<Eigen::Index>(r)).transpose();
    }
    input.segment(hist_offset, e) = pooled / static_cast<double>(f.history_rows.size());
  }

  if (config_.long_term_slot) {
    const auto d_att = static_cast<Eigen::Index>(config_.d_att);
    Vector r_hat;
    if (!sample.fused && config_.fusion != FusionMode::zeros && !sample.long_term.empty()) {
      f.fused_from_reps = true;
      f.reps = stack_rows(sample.long_term);
      if (config_.fusion == FusionMode::attention) {
        f.trace = self_attention_trace(f.reps, params_.fusion);
        r_hat = f.trace.output;
      } else {
        r_hat = mean_pool_fuse(f.reps, params_.fusion);
      }
    } else {
      r_hat = long_term_feature(sample);
    }
    input.segment(hist_offset + e, d_att) = r_hat;
  }

  f.activations.push_back(std::move(input));
  const std::size_t layers = params_.weights.size();
  for (std::size_t l = 0; l + 1 < layers; ++l) {
    Vector pre = params_.weights[l] * f.activations.back() + params_.biases[l];
    f.activations.push_back(pre.cwiseMax(0.0));
    f.pre.push_back(std::move(pre));
  }
  f.logit = (params_.weights.back() * f.activations.back() + params_.biases.back())(0);
  return f;
}

double CtrModel::logit(const CtrSample& sample) const { return forward(sample).logit; }

double CtrModel::predict(const CtrSample& sample) const { return sigmoid(logit(sample)); }

double CtrModel::loss(const CtrSample& sample) const {
  return bce_with_logit(logit(sample), sample.label);
}

double CtrModel::accumulate_gradient(const CtrSample& sample, CtrParameters& grad,
                                     double scale) const {
  const Forward f = forward(sample);
  const double loss = bce_with_logit(f.logit, sample.label);
  const std::size_t layers = params_.weights.size();

  Vector delta(1);
  delta(0) = (sigmoid(f.logit) - static_cast<double>(sample.label)) * scale;
  for (std::size_t l = layers; l-- > 0;) {
    if (l + 1 < layers) {
      delta = delta.cwiseProduct((f.pre[l].array() > 0.0).cast<double>().matrix());
    }
    grad.weights[l] += delta * f.activations[l].transpose();
    grad.biases[l] += delta;
    delta = params_.weights[l].transpose() * delta;
  }
  const Vector& d_input = delta;

  const auto e = static_cast<Eigen::Index>(config_.embedding_dim);
  for (std::size_t i = 0; i < f.rows.size(); ++i) {
    grad.tables[i].row(static_cast<Eigen::Index>(f.rows[i])) +=
        d_input.segment(static_cast<Eigen::Index>(i) * e, e).transpose();
  }
  const auto hist_offset = static_cast<Eigen::Index>(config_.fields.size()) * e;
  if (!f.history_rows.empty()) {
    const auto hist_field = vocab_.field_index(config_.history_field);
    const Vector share =
        d_input.segment(hist_offset, e) / static_cast<double>(f.history_rows.size());
    for (auto r : f.history_rows) {
      grad.tables[hist_field].row(static_cast<Eigen::Index>(r)) += share.transpose();
    }
  }
  if (config_.long_term_slot && f.fused_from_reps) {
    const Vector d_r = d_input.segment(hist_offset + e, static_cast<Eigen::Index>(config_.d_att));
    if (config_.fusion == FusionMode::attention) {
      self_attention_backward(f.trace, params_.fusion, d_r, grad.fusion);
    } else {
      mean_pool_backward(f.reps, d_r, grad.fusion);
    }
  }
  return loss;
}

CtrModel CtrModel::backbone() const {
  CtrModel out = *this;
  if (!config_.long_term_slot) return out;
  out.config_.long_term_slot = false;
  const auto keep = static_cast<Eigen::Index>(out.input_dim());
  out.params_.weights.front() = Matrix(params_.weights.front().leftCols(keep));
  return out;
}

std::vector<std::uint8_t> CtrModel::serialize() const {
  ByteWriter w;
  w.raw(std::string_view(kModelMagic, 4));
  w.u32(kModelVersion);
  w.u32(static_cast<std::uint32_t>(config_.embedding_dim));
  w.u32(static_cast<std::uint32_t>(config_.hidden.size()));
  for (auto h : config_.hidden) w.u32(static_cast<std::uint32_t>(h));
  w.u32(static_cast<std::uint32_t>(config_.d_red));
  w.u32(static_cast<std::uint32_t>(config_.d_att));
  w.u32(static_cast<std::uint32_t>(config_.max_history));
  w.u8(static_cast<std::uint8_t>(config_.fusion));
  w.u8(config_.long_term_slot ? 1 : 0);
  w.u64(config_.seed);
  w.f64(config_.fusion_init_scale);
  w.str(config_.history_field);
  w.u32(static_cast<std::uint32_t>(config_.fields.size()));
  for (std::size_t f = 0; f < config_.fields.size(); ++f) {
    w.str(config_.fields[f]);
    const auto& ids = vocab_.ids(f);
    w.u32(static_cast<std::uint32_t>(ids.size()));
    for (const auto& id : ids) w.str(id);
    write_matrix(w, params_.tables[f]);
  }
  const auto fusion = params_.fusion.serialize();
  w.u32(static_cast<std::uint32_t>(fusion.size()));
  w.raw(std::string_view(reinterpret_cast<const char*>(fusion.data()), fusion.size()));
  w.u32(static_cast<std::uint32_t>(params_.weights.size()));
  for (std::size_t l = 0; l < params_.weights.size(); ++l) {
    write_matrix(w, params_.weights[l]);
    w.f64s(std::span<const double>(params_.biases[l].data(),
                                   static_cast<std::size_t>(params_.biases[l].size())));
  }
  return w.take();
}

CtrModel CtrModel::deserialize(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (r.raw(4) != std::string_view(kModelMagic, 4)) throw DataError("not a CTR checkpoint");
  if (r.u32() != kModelVersion) throw DataError("unsupported CTR checkpoint version");
  CtrConfig c;
  c.embedding_dim = r.u32();
  c.hidden.resize(r.u32());
  for (auto& h : c.hidden) h = r.u32();
  c.d_red = r.u32();
  c.d_att = r.u32();
  c.max_history = r.u32();
  c.fusion = static_cast<FusionMode>(r.u8());
  c.long_term_slot = r.u8() != 0;
  c.seed = r.u64();
  c.fusion_init_scale = r.f64();
  c.history_field = r.str();
  const auto nfields = r.u32();
  std::vector<std::vector<std::string>> ids(nfields);
  std::vector<Matrix> tables;
  for (std::uint32_t f = 0; f < nfields; ++f) {
    c.fields.push_back(r.str());
    ids[f].resize(r.u32());
    for (auto& id : ids[f]) id = r.str();
    tables.push_back(read_matrix(r));
  }
  Vocabulary vocab(c.fields);
  for (std::uint32_t f = 0; f < nfields; ++f)
    for (const auto& id : ids[f]) vocab.add(c.fields[f], id);
  CtrModel model(c, std::move(vocab));
  for (std::uint32_t f = 0; f < nfields; ++f) {
    if (tables[f].rows() != model.params_.tables[f].rows() ||
        tables[f].cols() != model.params_.tables[f].cols()) {
      throw DataError("CTR checkpoint table shape mismatch");
    }
    model.params_.tables[f] = std::move(tables[f]);
  }
  const auto fusion_size = r.u32();
  const auto fusion_bytes = r.raw(fusion_size);
  model.params_.fusion = AttentionWeights::deserialize(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(fusion_bytes.data()), fusion_bytes.size()));
  const auto layers = r.u32();
  if (layers != model.params_.weights.size()) throw DataError("CTR checkpoint layer mismatch");
  for (std::uint32_t l = 0; l < layers; ++l) {
    Matrix w = read_matrix(r);
    if (w.rows() != model.params_.weights[l].rows() ||
        w.cols() != model.params_.weights[l].cols()) {
      throw DataError("CTR checkpoint layer shape mismatch");
    }
    model.params_.weights[l] = std::move(w);
    auto& b = model.params_.biases[l];
    r.f64s(std::span<double>(b.data(), static_cast<std::size_t>(b.size())));
  }
  if (r.remaining() != 0) throw DataError("trailing bytes in CTR checkpoint");
  return model;
}

void CtrModel::save(const std::string& path) const { write_file(path, serialize()); }

CtrModel CtrModel::load(const std::string& path) { return deserialize(read_file(path)); }

// ------------------------------------------------------------------ training

TrainReport train(CtrModel& model, std::span<const CtrSample> samples,
                  const TrainOptions& options) {
  if (samples.empty()) throw PreconditionError("cannot train on an empty sample set");
  if (options.batch_size == 0) throw ConfigError("batch size must be positive");
  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  CtrParameters grad = model.zeros_like();
  TrainReport report;
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t end = std::min(order.size(), start + options.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      grad.set_zero();
      for (std::size_t i = start; i < end; ++i) {
        const double loss = model.accumulate_gradient(samples[order[i]], grad, scale);
        if (!std::isfinite(loss)) {
          std::ostringstream msg;
          msg << "non-finite loss at epoch " << epoch << ", sample " << order[i] << " (user "
              << samples[order[i]].user_id << ", item " << samples[order[i]].target_item_id
              << "), learning rate " << options.learning_rate;
          throw TrainingError(msg.str());
        }
        epoch_loss += loss;
      }
      model.parameters().add_scaled(grad, -options.learning_rate);
    }
    if (!model.parameters().all_finite()) {
      throw TrainingError("non-finite parameters after epoch " + std::to_string(epoch) +
                          " with learning rate " + std::to_string(options.learning_rate));
    }
    report.epoch_losses.push_back(epoch_loss / static_cast<double>(samples.size()));
  }
  return report;
}

std::vector<double> predict_all(const CtrModel& model, std::span<const CtrSample> samples) {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(model.predict(s));
  return out;
}

}  // namespace liber
