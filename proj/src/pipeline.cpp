#include "liber/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <exception>
#include <set>
#include <thread>

#include "liber/errors.hpp"
#include "liber/metrics.hpp"

namespace liber {
namespace {

struct PendingRecord {
  KnowledgeVector raw;
  InterestKnowledge knowledge;
};

struct UserWork {
  UserKnowledge knowledge;
  std::vector<PendingRecord> pending;
};

class UserProcessor {
 public:
  UserProcessor(const Dataset& dataset, const VariantConfig& variant, Clients& clients,
                const RepresentationStore& store, EfficiencyLedger& ledger)
      : dataset_(dataset), variant_(variant), clients_(clients), store_(store), ledger_(ledger) {}

  UserWork run(const std::string& user_id, const std::vector<std::size_t>& rows) const {
    UserWork work{UserKnowledge{UserState(user_id), {}, false, {}}, {}};
    LlmContext ctx{clients_.chat, ledger_, clients_.retry, clients_.prompts};
    const UserProfile profile = dataset_.profile(user_id);
    std::optional<std::string> previous_summary;
    std::vector<Behavior> seen;
    const PartitionConfig partitions{variant_.k};

    auto handle = [&](std::uint32_t index, std::span<const Behavior> behaviors,
                      std::int64_t sealed_at) {
      work.knowledge.entries.push_back({index, sealed_at});
      if (auto stored = store_.find(user_id, index)) {
        previous_summary = stored->summary;
        return;
      }
      InterestKnowledge k;
      k.partition_index = index;
      k.summary = summarize_partition(ctx, profile, behaviors, dataset_.factors);
      if (variant_.uses_shift() && previous_summary) {
        k.shift = infer_interest_shift(ctx, user_id, k.summary, *previous_summary,
                                       dataset_.factors);
      }
      KnowledgeVector raw = encode_knowledge(clients_.embed, user_id, k, clients_.retry);
      previous_summary = k.summary;
      work.pending.push_back({std::move(raw), std::move(k)});
    };

    try {
      for (auto row : rows) {
        const Behavior& b = dataset_.records[row].behavior;
        const auto outcome = work.knowledge.state.ingest(b, partitions);
        switch (variant_.variant) {
          case Variant::full:
          case Variant::no_interest_shift:
          case Variant::no_attention_fuse:
            if (const auto* sealed = std::get_if<PartitionSealed>(&outcome)) {
              handle(sealed->partition.index(), sealed->partition.behaviors(),
                     sealed->partition.sealed_at());
            }
            break;
          case Variant::per_step: {
            seen.push_back(b);
            const auto n = std::min(seen.size(), variant_.per_step_max_len);
            handle(static_cast<std::uint32_t>(seen.size()),
                   std::span<const Behavior>(seen).last(n), b.timestamp);
            break;
          }
          case Variant::no_partition:
            seen.push_back(b);
            break;
        }
      }
      if (variant_.variant == Variant::no_partition && !seen.empty()) {
        const auto n = std::min(seen.size(), variant_.no_partition_max_len);
        handle(static_cast<std::uint32_t>(seen.size()), std::span<const Behavior>(seen).last(n),
               seen.back().timestamp);
      }
    } catch (const TransportError& e) {
      work.knowledge.failed = true;
      work.knowledge.failure = e.what();
      work.pending.clear();
    } catch (const ProtocolError& e) {
      work.knowledge.failed = true;
      work.knowledge.failure = e.what();
      work.pending.clear();
    }
    return work;
  }

 private:
  const Dataset& dataset_;
  const VariantConfig& variant_;
  Clients& clients_;
  const RepresentationStore& store_;
  EfficiencyLedger& ledger_;
};

}  // namespace

VariantConfig parse_variant(std::string_view text, VariantConfig base) {
  if (text == "full") {
    base.variant = Variant::full;
  } else if (text == "no-partition") {
    base.variant = Variant::no_partition;
  } else if (text == "no-interest-shift") {
    base.variant = Variant::no_interest_shift;
  } else if (text == "no-attention-fuse") {
    base.variant = Variant::no_attention_fuse;
  } else if (text.starts_with("per-step:")) {
    const auto num = text.substr(9);
    std::size_t len = 0;
    auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), len);
    if (ec != std::errc() || ptr != num.data() + num.size() || len < 1) {
      throw ConfigError("per-step length must be a positive integer: '" + std::string(text) + "'");
    }
    base.variant = Variant::per_step;
    base.per_step_max_len = len;
  } else {
    throw ConfigError("unknown variant '" + std::string(text) + "'");
  }
  return base;
}

std::string variant_name(const VariantConfig& config) {
  switch (config.variant) {
    case Variant::full:
      return "full";
    case Variant::no_partition:
      return "no-partition";
    case Variant::no_interest_shift:
      return "no-interest-shift";
    case Variant::no_attention_fuse:
      return "no-attention-fuse";
    case Variant::per_step:
      return "per-step:" + std::to_string(config.per_step_max_len);
  }
  return "unknown";
}

StreamResult process_stream(const Dataset& dataset, const VariantConfig& variant,
                            Clients& clients, RepresentationStore& store,
                            EfficiencyLedger& ledger, Projection projection) {
  validate(PartitionConfig{variant.k});
  if (variant.variant == Variant::per_step && variant.per_step_max_len < 1) {
    throw ConfigError("per-step length must be >= 1");
  }
  const auto groups = dataset.by_user();
  std::vector<const std::pair<const std::string, std::vector<std::size_t>>*> order;
  for (const auto& g : groups) order.push_back(&g);

  UserProcessor processor(dataset, variant, clients, store, ledger);
  std::vector<std::optional<UserWork>> results(order.size());
  const std::size_t threads = std::max<std::size_t>(1, std::min(clients.threads, order.size()));
  if (threads <= 1) {
    for (std::size_t i = 0; i < order.size(); ++i) {
      results[i] = processor.run(order[i]->first, order[i]->second);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(threads);
    {
      std::vector<std::jthread> pool;
      for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
          try {
            for (std::size_t i = next++; i < order.size(); i = next++) {
              results[i] = processor.run(order[i]->first, order[i]->second);
            }
          } catch (...) {
            errors[t] = std::current_exception();
          }
        });
      }
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  StreamResult out;
  std::vector<const PendingRecord*> pending;
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto& work = *results[i];
    if (work.knowledge.failed) out.failed_users.push_back(order[i]->first);
    for (const auto& p : work.pending) pending.push_back(&p);
  }

  if (!pending.empty()) {
    if (projection.empty()) {
      std::vector<Vector> raw;
      raw.reserve(pending.size());
      for (const auto* p : pending) raw.push_back(p->raw.values);
      projection = fit_projection(std::span<const Vector>(raw), variant.d_red);
    }
    if (projection.output_dim() != variant.d_red) {
      throw DimensionError("projection output dimension " +
                           std::to_string(projection.output_dim()) + " differs from d_red " +
                           std::to_string(variant.d_red));
    }
    // Single writer, in user then partition order.
    for (const auto* p : pending) {
      StoredRecord rec;
      rec.user_id = p->raw.user_id;
      rec.partition_index = p->raw.partition_index;
      rec.stage = VectorStage::reduced;
      rec.values = projection.project(p->raw.values);
      rec.summary = p->knowledge.summary;
      rec.shift = p->knowledge.shift;
      store.append(rec);
      ++out.new_records;
    }
  }
  out.projection = std::move(projection);
  for (std::size_t i = 0; i < order.size(); ++i) {
    out.users.emplace(order[i]->first, std::move(results[i]->knowledge));
  }
  return out;
}

FusedRepresentation fuse_user(const RepresentationStore& store, const std::string& user_id,
                              const AttentionWeights& weights, const VariantConfig& variant) {
  auto records = store.user_records(user_id);
  if (records.empty()) {
    throw DegenerateInputError("no stored partition vectors for user '" + user_id + "'");
  }
  if (variant.variant == Variant::per_step) records.erase(records.begin(), records.end() - 1);
  std::vector<Vector> reps;
  for (const auto& r : records) reps.push_back(r.values);
  const Matrix m = stack_rows(reps);
  FusedRepresentation out;
  out.user_id = user_id;
  out.partition_count_used = reps.size();
  out.values = variant.fusion_mode() == FusionMode::mean_pool ? mean_pool_fuse(m, weights)
                                                              : self_attention_fuse(m, weights);
  return out;
}

SampleSplit build_training_samples(const Dataset& dataset, const StreamResult& stream,
                                   const RepresentationStore& store,
                                   const VariantConfig& variant, const SampleOptions& options) {
  const TimeSplit split = split_by_time(dataset, options.split_ratio);
  SampleSplit out;
  out.fields = {"user_id", "item_id"};
  const auto& attrs =
      options.feature_attributes.empty() ? dataset.attribute_names : options.feature_attributes;
  for (const auto& a : attrs) {
    if (std::find(out.fields.begin(), out.fields.end(), a) == out.fields.end()) {
      out.fields.push_back(a);
    }
  }

  // Stored vectors per user in entry order, with their availability time.
  std::map<std::string, std::vector<std::pair<std::int64_t, Vector>>> knowledge;
  if (options.use_long_term) {
    for (const auto& [user, k] : stream.users) {
      if (k.failed) continue;
      auto& list = knowledge[user];
      for (const auto& e : k.entries) {
        auto rec = store.find(user, e.index);
        if (!rec) throw StoreError("missing stored vector for (" + user + ", " +
                                   std::to_string(e.index) + ")");
        list.emplace_back(e.sealed_at, std::move(rec->values));
      }
    }
  }
  std::map<std::string, std::vector<const Behavior*>> timeline;
  for (const auto& r : dataset.records) timeline[r.behavior.user_id].push_back(&r.behavior);

  auto make = [&](const InteractionRecord& r) {
    const Behavior& b = r.behavior;
    CtrSample s;
    s.user_id = b.user_id;
    s.target_item_id = b.item_id;
    s.label = r.label;
    s.timestamp = b.timestamp;
    s.features = {{"user_id", b.user_id}, {"item_id", b.item_id}};
    for (const auto& [name, value] : b.attributes) {
      if (std::find(out.fields.begin(), out.fields.end(), name) != out.fields.end()) {
        s.features.emplace_back(name, value);
      }
    }
    const auto& events = timeline[b.user_id];
    // Stable order keeps same-timestamp events out of each other's history.
    auto end = std::lower_bound(events.begin(), events.end(), b.timestamp,
                                [](const Behavior* e, std::int64_t t) { return e->timestamp < t; });
    const auto take = std::min<std::size_t>(options.max_history,
                                            static_cast<std::size_t>(end - events.begin()));
    for (auto it = end - static_cast<std::ptrdiff_t>(take); it != end; ++it) {
      s.history.push_back((*it)->item_id);
    }
    if (auto it = knowledge.find(b.user_id); it != knowledge.end()) {
      for (const auto& [sealed_at, values] : it->second) {
        if (sealed_at < b.timestamp) s.long_term.push_back(values);
      }
      if (variant.variant == Variant::per_step && s.long_term.size() > 1) {
        s.long_term.erase(s.long_term.begin(), s.long_term.end() - 1);
      }
    }
    return s;
  };

  std::set<std::string> failed(stream.failed_users.begin(), stream.failed_users.end());
  for (const auto& r : split.train.records) {
    if (!failed.contains(r.behavior.user_id)) out.train.push_back(make(r));
  }
  for (const auto& r : split.test.records) {
    if (!failed.contains(r.behavior.user_id)) out.test.push_back(make(r));
  }
  if (out.train.empty() || out.test.empty()) {
    throw ConfigError("time split leaves no usable training or test samples");
  }
  return out;
}

ExperimentResult run_experiment(const Dataset& dataset, const ExperimentOptions& options,
                                Clients& clients, RepresentationStore& store,
                                Projection projection, std::optional<CtrModel>* model_out) {
  ExperimentResult result;
  result.label = options.backbone_only ? "backbone" : variant_name(options.variant);
  EfficiencyLedger ledger(result.label);

  const TimeSplit split = split_by_time(dataset, options.samples.split_ratio);
  StreamResult stream;
  if (!options.backbone_only) {
    stream = process_stream(split.train, options.variant, clients, store, ledger,
                            std::move(projection));
  }
  SampleOptions sample_options = options.samples;
  sample_options.use_long_term = !options.backbone_only;
  SampleSplit samples =
      build_training_samples(dataset, stream, store, options.variant, sample_options);

  CtrConfig config;
  config.fields = samples.fields;
  config.embedding_dim = options.embedding_dim;
  config.hidden = options.hidden;
  config.d_red = options.variant.d_red;
  config.d_att = options.variant.d_att;
  config.max_history = options.samples.max_history;
  config.fusion = options.backbone_only ? FusionMode::zeros : options.variant.fusion_mode();
  config.fusion_init_scale = options.fusion_init_scale;
  config.seed = options.model_seed;
  CtrModel model(config, Vocabulary::build(config, samples.train));
  result.training = train(model, samples.train, options.train);

  std::vector<int> labels;
  for (const auto& s : samples.test) labels.push_back(s.label);
  const auto scores = predict_all(model, samples.test);
  result.auc = auc(scores, labels);
  result.log_loss = log_loss(scores, labels);
  const std::size_t users = std::max<std::size_t>(1, split.train.users().size());
  result.efficiency = ledger_report(ledger, users);
  result.train_samples = samples.train.size();
  result.test_samples = samples.test.size();
  result.failed_users = stream.failed_users.size();
  result.projection = std::move(stream.projection);
  if (model_out) model_out->emplace(std::move(model));
  return result;
}

}  // namespace liber
