#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "liber/encoding.hpp"
#include "liber/fusion.hpp"

namespace liber {

struct CtrSample {
  std::string user_id;
  std::string target_item_id;
  std::vector<std::pair<std::string, std::string>> features;  // (field, id)
  std::vector<std::string> history;                           // oldest first
  // Reduced per-partition vectors r_1..r_j visible at `timestamp`. Fused
  // inside the model so that the fusion weights train with the CTR loss.
  std::vector<Vector> long_term;
  // A precomputed r-hat; takes precedence over long_term when set.
  std::optional<Vector> fused;
  int label = 0;
  std::int64_t timestamp = 0;
};

enum class FusionMode : std::uint8_t { attention = 0, mean_pool = 1, zeros = 2 };

struct CtrConfig {
  std::vector<std::string> fields;  // schema order of the categorical inputs
  std::string history_field = "item_id";
  std::size_t embedding_dim = 32;
  std::vector<std::size_t> hidden = {200, 80};
  std::size_t d_red = 32;
  std::size_t d_att = 32;
  std::size_t max_history = 20;
  FusionMode fusion = FusionMode::attention;
  // Fusion weights start uniform in +-fusion_init_scale/sqrt(d_red).
  double fusion_init_scale = 10.0;
  // false builds the backbone without an r-hat input slot.
  bool long_term_slot = true;
  std::uint64_t seed = 7;
};

// Per-field id -> row maps. Row 0 of every table is the out-of-vocabulary slot.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> fields);

  // Adds every feature value and every history id (to history_field).
  static Vocabulary build(const CtrConfig& config, std::span<const CtrSample> samples);

  std::size_t add(const std::string& field, const std::string& id);
  std::size_t lookup(const std::string& field, const std::string& id) const;
  std::size_t size(const std::string& field) const;  // rows including OOV
  std::size_t field_index(const std::string& field) const;
  const std::vector<std::string>& fields() const noexcept { return fields_; }
  const std::vector<std::string>& ids(std::size_t field) const { return ids_.at(field); }

 private:
  std::vector<std::string> fields_;
  std::vector<std::map<std::string, std::size_t>> index_;
  std::vector<std::vector<std::string>> ids_;  // row-1 ordered
};

// theta: embedding tables, fusion weights and the output MLP.
struct CtrParameters {
  std::vector<Matrix> tables;  // per field: rows x embedding_dim
  AttentionWeights fusion;
  std::vector<Matrix> weights;  // layer l: out x in
  std::vector<Vector> biases;

  void set_zero();
  void add_scaled(const CtrParameters& other, double scale);
  // Stable flat view over every scalar, in declaration order.
  std::vector<double*> flat();
  std::vector<std::pair<std::string, std::size_t>> blocks() const;  // (name, size)
  bool all_finite() const;
  bool operator==(const CtrParameters& other) const;
};

class CtrModel {
 public:
  CtrModel(CtrConfig config, Vocabulary vocab);

  const CtrConfig& config() const noexcept { return config_; }
  const Vocabulary& vocabulary() const noexcept { return vocab_; }
  CtrParameters& parameters() noexcept { return params_; }
  const CtrParameters& parameters() const noexcept { return params_; }
  CtrParameters zeros_like() const;

  std::size_t input_dim() const;

  double logit(const CtrSample& sample) const;
  // sigmoid(logit), in (0, 1).
  double predict(const CtrSample& sample) const;
  // r-hat as fed to the MLP: zeros when the sample has no long-term vectors.
  Vector long_term_feature(const CtrSample& sample) const;

  // Binary cross-entropy of one sample; adds scale * d(loss)/d(theta) to grad.
  double accumulate_gradient(const CtrSample& sample, CtrParameters& grad,
                             double scale = 1.0) const;
  double loss(const CtrSample& sample) const;

  // The same model without the r-hat slot: first-layer columns for r-hat
  // are dropped, every other parameter is copied.
  CtrModel backbone() const;

  std::vector<std::uint8_t> serialize() const;
  static CtrModel deserialize(std::span<const std::uint8_t> bytes);
  void save(const std::string& path) const;
  static CtrModel load(const std::string& path);

 private:
  struct Forward;
  Forward forward(const CtrSample& sample) const;

  CtrConfig config_;
  Vocabulary vocab_;
  CtrParameters params_;
};

struct TrainOptions {
  std::size_t epochs = 10;
  double learning_rate = 1e-2;
  std::size_t batch_size = 64;
  std::uint64_t seed = 1;
};

struct TrainReport {
  std::vector<double> epoch_losses;  // mean training BCE per epoch
};

// Minibatch SGD on mean binary cross-entropy. Throws TrainingError on a
// non-finite loss or parameter.
TrainReport train(CtrModel& model, std::span<const CtrSample> samples,
                  const TrainOptions& options);

std::vector<double> predict_all(const CtrModel& model, std::span<const CtrSample> samples);

}  // namespace liber
