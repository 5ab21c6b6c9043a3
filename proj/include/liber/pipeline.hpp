#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "liber/behavior_stream.hpp"
#include "liber/ctr.hpp"
#include "liber/dataset.hpp"
#include "liber/encoding.hpp"
#include "liber/fusion.hpp"
#include "liber/ledger.hpp"
#include "liber/prompting.hpp"
#include "liber/store.hpp"

namespace liber {

enum class Variant { full, no_partition, no_interest_shift, no_attention_fuse, per_step };

struct VariantConfig {
  Variant variant = Variant::full;
  std::size_t per_step_max_len = 20;   // per_step: trailing window per call
  std::size_t no_partition_max_len = 100;
  std::size_t k = 20;
  std::size_t d_red = 32;
  std::size_t d_att = 32;
  std::uint64_t seed = 1;

  bool uses_shift() const noexcept {
    return variant == Variant::full || variant == Variant::no_attention_fuse;
  }
  FusionMode fusion_mode() const noexcept {
    return variant == Variant::no_attention_fuse ? FusionMode::mean_pool
                                                 : FusionMode::attention;
  }
};

// "full", "no-partition", "no-interest-shift", "no-attention-fuse",
// "per-step:<L>". Throws ConfigError otherwise.
VariantConfig parse_variant(std::string_view text, VariantConfig base = {});
std::string variant_name(const VariantConfig& config);

struct Clients {
  ChatClient& chat;
  EmbedClient& embed;
  RetryPolicy retry = RetryPolicy{};
  const PromptBuilder* prompts = nullptr;
  std::size_t threads = 1;
};

// One stored representation of a user and the time it became available.
struct KnowledgeEntry {
  std::uint32_t index = 0;
  std::int64_t sealed_at = 0;
};

struct UserKnowledge {
  UserState state;
  std::vector<KnowledgeEntry> entries;
  bool failed = false;
  std::string failure;
};

struct StreamResult {
  std::map<std::string, UserKnowledge> users;
  std::vector<std::string> failed_users;
  std::size_t new_records = 0;
  Projection projection;
};

// Runs partitioning, interest summaries, interest shifts, encoding and
// projection for every user, storing each new representation exactly once.
// Keys already present in the store are reused without any language-model
// call. When `projection` is empty it is fit on this run's new raw vectors.
// Users whose client calls still fail after retries are reported in
// failed_users and skipped; the run continues.
//
// Representation keys by variant:
//   full / no_interest_shift / no_attention_fuse: partition index j
//   per_step(L):  arrival ordinal i, over the trailing L behaviors
//   no_partition: N, over the trailing 100 of the N ingested behaviors
StreamResult process_stream(const Dataset& dataset, const VariantConfig& variant,
                            Clients& clients, RepresentationStore& store,
                            EfficiencyLedger& ledger, Projection projection = {});

// Fuses every stored reduced vector of the user in index order (only the
// latest one for per_step). Throws DegenerateInputError when the user has
// none; callers then use the zeros r-hat.
FusedRepresentation fuse_user(const RepresentationStore& store, const std::string& user_id,
                              const AttentionWeights& weights, const VariantConfig& variant);

struct SampleOptions {
  double split_ratio = 0.9;
  std::size_t max_history = 20;
  // Attribute columns used as categorical fields; all when empty.
  std::vector<std::string> feature_attributes;
  bool use_long_term = true;
};

struct SampleSplit {
  std::vector<CtrSample> train;
  std::vector<CtrSample> test;
  std::vector<std::string> fields;
};

// Builds one CtrSample per interaction. h holds the user's latest
// behaviors strictly before the sample; long_term holds the stored vectors
// whose sealed_at is strictly before it. Failed users are excluded.
SampleSplit build_training_samples(const Dataset& dataset, const StreamResult& stream,
                                   const RepresentationStore& store,
                                   const VariantConfig& variant, const SampleOptions& options);

struct ExperimentOptions {
  VariantConfig variant;
  // Zero r-hat for every sample and no language-model work at all.
  bool backbone_only = false;
  SampleOptions samples;
  TrainOptions train;
  std::size_t embedding_dim = 32;
  std::vector<std::size_t> hidden = {200, 80};
  double fusion_init_scale = 10.0;
  std::uint64_t model_seed = 7;
};

struct ExperimentResult {
  std::string label;
  double auc = 0.0;
  double log_loss = 0.0;
  EfficiencyReport efficiency;
  TrainReport training;
  std::size_t train_samples = 0;
  std::size_t test_samples = 0;
  std::size_t failed_users = 0;
  // The projection used for the stored vectors (empty for the backbone).
  Projection projection;
};

// split -> process_stream over the training period -> samples -> train ->
// test AUC / LogLoss. The store must be dedicated to this variant.
ExperimentResult run_experiment(const Dataset& dataset, const ExperimentOptions& options,
                                Clients& clients, RepresentationStore& store,
                                Projection projection = {},
                                std::optional<CtrModel>* model_out = nullptr);

}  // namespace liber
