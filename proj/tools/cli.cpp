#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Core>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <sstream>

#include "liber/errors.hpp"
#include "liber/http_clients.hpp"
#include "liber/metrics.hpp"
#include "liber/mock_clients.hpp"
#include "liber/pipeline.hpp"
#include "liber/synthetic.hpp"

namespace liber::cli {
namespace {

using nlohmann::ordered_json;

constexpr const char* kVersion = "0.1.0";

struct Options {
  std::string dataset;
  std::string variant = "full";
  std::size_t k = 20;
  std::string dims = "32,32";
  std::string chat_endpoint;
  bool mock_chat = false;
  std::string chat_model = "llama-2-13b-chat";
  std::string embed_endpoint;
  bool mock_embed = false;
  std::string embed_model = "bert-base-uncased";
  std::size_t mock_embed_dim = 768;
  std::string mock_tag = "topic";
  std::string templates;
  std::string store;
  std::uint64_t seed = 1;
  double split = 0.9;
  std::string report = "text";
  std::size_t min_interactions = 0;
  int label_threshold = 3;
  int positive_only_rating = 0;
  std::vector<std::string> factors;
  std::string profiles;
  std::size_t threads = 1;
  std::string run_metadata = "liber-run.json";

  double lr = 0.3;
  std::size_t batch = 32;
  std::size_t epochs = 20;
  double fusion_init_scale = 10.0;
  std::vector<double> lr_grid;
  std::vector<std::size_t> batch_grid;
  std::string model;
  std::vector<std::string> variants;

  std::string out;
  std::size_t users = 10;
  std::size_t behaviors = 180;
  std::size_t topics = 4;
  double exposure_bias = 0.0;
};

std::pair<std::size_t, std::size_t> parse_dims(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw ConfigError("--dims expects <d_red>,<d_att>");
  try {
    std::size_t used = 0;
    const auto d_red = std::stoul(text.substr(0, comma), &used);
    if (used != comma) throw ConfigError("");
    const auto rest = text.substr(comma + 1);
    const auto d_att = std::stoul(rest, &used);
    if (used != rest.size() || d_red == 0 || d_att == 0) throw ConfigError("");
    return {d_red, d_att};
  } catch (const std::exception&) {
    throw ConfigError("--dims expects two positive integers <d_red>,<d_att>, got '" + text + "'");
  }
}

VariantConfig base_variant(const Options& o) {
  VariantConfig v;
  v.k = o.k;
  std::tie(v.d_red, v.d_att) = parse_dims(o.dims);
  v.seed = o.seed;
  return v;
}

Dataset load(const Options& o) {
  if (o.dataset.empty()) throw ConfigError("--dataset is required");
  LoadOptions lo;
  lo.labels.threshold = o.label_threshold;
  if (o.positive_only_rating != 0) lo.labels.positive_only_rating = o.positive_only_rating;
  lo.min_interactions = o.min_interactions;
  lo.factors = o.factors;
  lo.profiles_path = o.profiles;
  return load_interactions(o.dataset, lo);
}

std::string env_or_empty(const char* name) {
  const char* v = std::getenv(name);
  return v ? v : "";
}

// Owns the configured backends for one run.
struct Backends {
  std::unique_ptr<ChatClient> chat;
  std::unique_ptr<EmbedClient> embed;
  std::optional<PromptBuilder> prompts;

  Clients clients(const Options& o) {
    return Clients{*chat, *embed, RetryPolicy{}, prompts ? &*prompts : nullptr, o.threads};
  }
};

Backends make_backends(const Options& o) {
  Backends b;
  if (o.mock_chat == !o.chat_endpoint.empty()) {
    throw ConfigError("choose exactly one of --mock-chat and --chat-endpoint");
  }
  if (o.mock_embed == !o.embed_endpoint.empty()) {
    throw ConfigError("choose exactly one of --mock-embed and --embed-endpoint");
  }
  if (o.mock_chat) {
    b.chat = std::make_unique<MockChatClient>(o.mock_tag);
  } else {
    HttpChatConfig c;
    c.url = o.chat_endpoint;
    c.model = o.chat_model;
    c.api_key = env_or_empty("CHAT_API_KEY");
    b.chat = std::make_unique<HttpChatClient>(c);
  }
  if (o.mock_embed) {
    b.embed = std::make_unique<MockEmbedClient>(o.mock_embed_dim);
  } else {
    HttpEmbedConfig c;
    c.url = o.embed_endpoint;
    c.model = o.embed_model;
    c.api_key = env_or_empty("EMBED_API_KEY");
    b.embed = std::make_unique<HttpEmbedClient>(c);
  }
  if (!o.templates.empty()) {
    auto t = PromptTemplates::load(o.templates);
    b.prompts.emplace(std::move(t));
  }
  return b;
}

std::string projection_path(const std::string& store) { return store + ".pca"; }

Projection load_projection(const Options& o) {
  if (o.store.empty() || !std::filesystem::exists(projection_path(o.store))) return {};
  return Projection::load(projection_path(o.store));
}

void save_projection(const Options& o, const Projection& p) {
  if (o.store.empty() || p.empty()) return;
  if (!std::filesystem::exists(projection_path(o.store))) p.save(projection_path(o.store));
}

std::unique_ptr<RepresentationStore> open_store(const Options& o) {
  if (o.store.empty()) return std::make_unique<RepresentationStore>();
  return std::make_unique<RepresentationStore>(o.store);
}

ExperimentOptions experiment_options(const Options& o, const VariantConfig& v) {
  ExperimentOptions e;
  e.variant = v;
  e.samples.split_ratio = o.split;
  e.train.learning_rate = o.lr;
  e.train.batch_size = o.batch;
  e.train.epochs = o.epochs;
  e.train.seed = o.seed;
  e.fusion_init_scale = o.fusion_init_scale;
  e.model_seed = o.seed;
  return e;
}

ordered_json efficiency_json(const EfficiencyReport& r) {
  return {{"variant", r.variant},
          {"calls_per_user", r.calls_per_user},
          {"tokens_per_prompt", r.tokens_per_prompt},
          {"time_per_user", r.time_per_user}};
}

ordered_json result_json(const ExperimentResult& r) {
  ordered_json j = {{"variant", r.label},
                    {"auc", r.auc},
                    {"log_loss", r.log_loss},
                    {"calls_per_user", r.efficiency.calls_per_user},
                    {"tokens_per_prompt", r.efficiency.tokens_per_prompt},
                    {"time_per_user", r.efficiency.time_per_user},
                    {"train_samples", r.train_samples},
                    {"test_samples", r.test_samples},
                    {"failed_users", r.failed_users}};
  j["epoch_losses"] = r.training.epoch_losses;
  return j;
}

std::string fixed(double v, int precision = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << v;
  return s.str();
}

void print_table(std::ostream& out, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    width[c] = header[c].size();
    for (const auto& r : rows) width[c] = std::max(width[c], r[c].size());
  }
  auto line = [&](const std::vector<std::string>& r) {
    for (std::size_t c = 0; c < r.size(); ++c) {
      out << (c ? "  " : "") << std::left << std::setw(static_cast<int>(width[c])) << r[c];
    }
    out << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
}

struct RunOutcome {
  ordered_json report;
  std::size_t failed_users = 0;
};

// The no-partition variant stores one vector per user, usually too few to
// fit its own projection, so it reuses the one fitted for the full variant.
Projection reference_projection(const Dataset& dataset, const Options& o, Backends& backends) {
  VariantConfig v = base_variant(o);
  RepresentationStore scratch;
  EfficiencyLedger ledger("reference");
  auto clients = backends.clients(o);
  const auto split = split_by_time(dataset, o.split);
  return process_stream(split.train, v, clients, scratch, ledger).projection;
}

RunOutcome cmd_ingest(const Options& o, std::ostream& out) {
  if (o.store.empty()) throw ConfigError("ingest needs --store");
  const Dataset dataset = load(o);
  const VariantConfig v = parse_variant(o.variant, base_variant(o));
  auto backends = make_backends(o);
  auto clients = backends.clients(o);
  auto store = open_store(o);
  EfficiencyLedger ledger(variant_name(v));
  const auto split = split_by_time(dataset, o.split);
  const auto users = split.train.users().size();
  auto result = process_stream(split.train, v, clients, *store, ledger, load_projection(o));
  save_projection(o, result.projection);
  const auto eff = ledger_report(ledger, std::max<std::size_t>(1, users));

  ordered_json j = {{"command", "ingest"},
                    {"users", users},
                    {"new_records", result.new_records},
                    {"store_records", store->size()},
                    {"failed_users", result.failed_users},
                    {"efficiency", efficiency_json(eff)}};
  if (o.report == "json") {
    out << j.dump(2) << '\n';
  } else {
    out << "variant " << variant_name(v) << ": " << users << " users, " << result.new_records
        << " new representations, " << store->size() << " stored\n";
    out << "llm calls/user " << fixed(eff.calls_per_user, 2) << ", tokens/prompt "
        << fixed(eff.tokens_per_prompt, 1) << ", time/user " << fixed(eff.time_per_user, 3)
        << " s\n";
    for (const auto& u : result.failed_users) out << "failed user: " << u << '\n';
  }
  return {j, result.failed_users.size()};
}

RunOutcome cmd_train(const Options& o, std::ostream& out) {
  const Dataset dataset = load(o);
  const VariantConfig v = parse_variant(o.variant, base_variant(o));
  auto backends = make_backends(o);
  auto clients = backends.clients(o);
  auto store = open_store(o);
  Projection projection = load_projection(o);
  if (projection.empty() && v.variant == Variant::no_partition) {
    projection = reference_projection(dataset, o, backends);
  }
  std::optional<CtrModel> model;
  const auto r =
      run_experiment(dataset, experiment_options(o, v), clients, *store, projection, &model);
  save_projection(o, r.projection);
  if (!o.model.empty()) model->save(o.model);

  ordered_json j = {{"command", "train"}, {"result", result_json(r)}};
  if (!o.model.empty()) j["model"] = o.model;
  if (o.report == "json") {
    out << j.dump(2) << '\n';
  } else {
    out << "variant " << r.label << ": " << r.train_samples << " training samples\n";
    for (std::size_t e = 0; e < r.training.epoch_losses.size(); ++e) {
      out << "epoch " << e + 1 << " loss " << fixed(r.training.epoch_losses[e]) << '\n';
    }
    if (!o.model.empty()) out << "model saved to " << o.model << '\n';
  }
  return {j, r.failed_users};
}

RunOutcome cmd_evaluate(const Options& o, std::ostream& out) {
  const Dataset dataset = load(o);
  ordered_json j = {{"command", "evaluate"}};
  std::size_t failed = 0;
  double auc_value = 0.0, ll_value = 0.0;
  std::string label;

  if (o.model.empty()) {
    const VariantConfig v = parse_variant(o.variant, base_variant(o));
    auto backends = make_backends(o);
    auto clients = backends.clients(o);
    auto store = open_store(o);
    Projection projection = load_projection(o);
    if (projection.empty() && v.variant == Variant::no_partition) {
      projection = reference_projection(dataset, o, backends);
    }
    const auto r = run_experiment(dataset, experiment_options(o, v), clients, *store, projection);
    save_projection(o, r.projection);
    j["result"] = result_json(r);
    failed = r.failed_users;
    auc_value = r.auc;
    ll_value = r.log_loss;
    label = r.label;
  } else {
    // Representations come from the store; new users are processed first.
    const CtrModel model = CtrModel::load(o.model);
    VariantConfig v = parse_variant(o.variant, base_variant(o));
    v.d_red = model.config().d_red;
    v.d_att = model.config().d_att;
    const bool backbone = model.config().fusion == FusionMode::zeros;
    StreamResult stream;
    EfficiencyLedger ledger(variant_name(v));
    auto store = open_store(o);
    if (!backbone) {
      auto backends = make_backends(o);
      auto clients = backends.clients(o);
      const auto split = split_by_time(dataset, o.split);
      stream = process_stream(split.train, v, clients, *store, ledger, load_projection(o));
      save_projection(o, stream.projection);
    }
    SampleOptions so;
    so.split_ratio = o.split;
    so.max_history = model.config().max_history;
    so.use_long_term = !backbone;
    const auto samples = build_training_samples(dataset, stream, *store, v, so);
    std::vector<int> labels;
    for (const auto& s : samples.test) labels.push_back(s.label);
    const auto scores = predict_all(model, samples.test);
    auc_value = auc(scores, labels);
    ll_value = log_loss(scores, labels);
    failed = stream.failed_users.size();
    label = backbone ? "backbone" : variant_name(v);
    j["result"] = {{"variant", label},
                   {"auc", auc_value},
                   {"log_loss", ll_value},
                   {"test_samples", samples.test.size()},
                   {"llm_calls", ledger.totals().llm_calls},
                   {"failed_users", failed}};
  }
  if (o.report == "json") {
    out << j.dump(2) << '\n';
  } else {
    out << "variant " << label << ": AUC " << fixed(auc_value) << "  LogLoss "
        << fixed(ll_value) << '\n';
  }
  return {j, failed};
}

std::vector<VariantConfig> ordered_variants(const std::vector<std::string>& names,
                                            const VariantConfig& base) {
  std::vector<VariantConfig> out;
  for (const auto& n : names) out.push_back(parse_variant(n, base));
  return out;
}

RunOutcome cmd_efficiency(const Options& o, std::ostream& out) {
  const Dataset dataset = load(o);
  const auto names = o.variants.empty()
                         ? std::vector<std::string>{"full", "no-interest-shift", "no-partition",
                                                    "per-step:20"}
                         : o.variants;
  const auto variants = ordered_variants(names, base_variant(o));
  auto backends = make_backends(o);
  const auto split = split_by_time(dataset, o.split);
  const auto users = std::max<std::size_t>(1, split.train.users().size());

  Projection reference;
  ordered_json rows = ordered_json::array();
  std::vector<std::vector<std::string>> table;
  std::size_t failed = 0;
  for (const auto& v : variants) {
    RepresentationStore store;
    EfficiencyLedger ledger(variant_name(v));
    auto clients = backends.clients(o);
    Projection p;
    if (v.variant == Variant::no_partition) {
      if (reference.empty()) reference = reference_projection(dataset, o, backends);
      p = reference;
    }
    const auto result = process_stream(split.train, v, clients, store, ledger, p);
    if (v.variant == Variant::full && reference.empty()) reference = result.projection;
    failed += result.failed_users.size();
    const auto eff = ledger_report(ledger, users);
    rows.push_back(efficiency_json(eff));
    table.push_back({eff.variant, fixed(eff.calls_per_user, 2), fixed(eff.tokens_per_prompt, 1),
                     fixed(eff.time_per_user, 4)});
  }
  ordered_json j = {{"command", "efficiency"}, {"users", users}, {"variants", rows}};
  if (o.report == "json") {
    out << j.dump(2) << '\n';
  } else {
    print_table(out, {"variant", "calls/user", "tokens/prompt", "time/user(s)"}, table);
  }
  return {j, failed};
}

RunOutcome cmd_ablate(const Options& o, std::ostream& out) {
  const Dataset dataset = load(o);
  const auto base = base_variant(o);
  auto backends = make_backends(o);
  const auto lrs = o.lr_grid.empty() ? std::vector<double>{o.lr} : o.lr_grid;
  const auto batches = o.batch_grid.empty() ? std::vector<std::size_t>{o.batch} : o.batch_grid;

  struct Row {
    std::string name;
    bool backbone;
  };
  const std::vector<Row> rows = {{"full", false},
                                 {"no-partition", false},
                                 {"no-interest-shift", false},
                                 {"no-attention-fuse", false},
                                 {"backbone", true}};
  Projection reference;
  ordered_json results = ordered_json::array();
  std::vector<std::vector<std::string>> table;
  std::size_t failed = 0;
  for (const auto& row : rows) {
    const VariantConfig v = row.backbone ? base : parse_variant(row.name, base);
    RepresentationStore store;
    Projection projection = v.variant == Variant::no_partition && !row.backbone ? reference
                                                                                  : Projection{};
    std::optional<ExperimentResult> best;
    std::optional<EfficiencyReport> first_efficiency;
    double best_lr = 0.0;
    std::size_t best_batch = 0;
    // Grid points after the first hit the warm store and make no calls.
    for (double lr : lrs) {
      for (std::size_t batch : batches) {
        auto e = experiment_options(o, v);
        e.backbone_only = row.backbone;
        e.train.learning_rate = lr;
        e.train.batch_size = batch;
        auto clients = backends.clients(o);
        auto r = run_experiment(dataset, e, clients, store, projection);
        if (projection.empty()) projection = r.projection;
        if (!first_efficiency) first_efficiency = r.efficiency;
        if (!best || r.auc > best->auc) {
          best = std::move(r);
          best_lr = lr;
          best_batch = batch;
        }
      }
    }
    if (v.variant == Variant::full && !row.backbone) reference = projection;
    best->efficiency = *first_efficiency;
    failed += best->failed_users;
    auto j = result_json(*best);
    j["learning_rate"] = best_lr;
    j["batch_size"] = best_batch;
    results.push_back(j);
    table.push_back({best->label, fixed(best->auc), fixed(best->log_loss),
                     fixed(best->efficiency.calls_per_user, 2),
                     fixed(best->efficiency.tokens_per_prompt, 1)});
  }
  ordered_json j = {{"command", "ablate"}, {"variants", results}};
  if (o.report == "json") {
    out << j.dump(2) << '\n';
  } else {
    print_table(out, {"variant", "AUC", "LogLoss", "calls_per_user", "tokens_per_prompt"}, table);
  }
  return {j, failed};
}

RunOutcome cmd_synth(const Options& o, std::ostream& out) {
  if (o.out.empty()) throw ConfigError("synth needs --out");
  SyntheticConfig c;
  c.users = o.users;
  c.behaviors_per_user = o.behaviors;
  c.topics = o.topics;
  c.seed = o.seed;
  c.exposure_bias = o.exposure_bias;
  const auto data = generate_synthetic_stream(c);
  save_tsv(data.dataset, o.out);
  ordered_json users = ordered_json::array();
  for (const auto& u : data.users) {
    users.push_back({{"user_id", u.user_id},
                     {"initial_topic", u.initial_topic},
                     {"drifted_topic", u.drifted_topic},
                     {"drift_index", u.drift_index}});
  }
  ordered_json j = {{"command", "synth"},
                    {"path", o.out},
                    {"records", data.dataset.records.size()},
                    {"users", users}};
  if (o.report == "json") {
    out << j.dump(2) << '\n';
  } else {
    out << "wrote " << data.dataset.records.size() << " records for " << data.users.size()
        << " users to " << o.out << '\n';
  }
  return {j, 0};
}

ordered_json metadata(const std::string& command, const std::vector<std::string>& args,
                      const Options& o) {
  const bool clients_used = command != "synth";
  ordered_json config = {{"dataset", o.dataset},
                         {"variant", o.variant},
                         {"k", o.k},
                         {"dims", o.dims},
                         {"store", o.store},
                         {"seed", o.seed},
                         {"split", o.split},
                         {"min_interactions", o.min_interactions},
                         {"label_threshold", o.label_threshold},
                         {"positive_only_rating", o.positive_only_rating},
                         {"factors", o.factors},
                         {"threads", o.threads},
                         {"lr", o.lr},
                         {"batch", o.batch},
                         {"epochs", o.epochs},
                         {"fusion_init_scale", o.fusion_init_scale},
                         {"lr_grid", o.lr_grid},
                         {"batch_grid", o.batch_grid},
                         {"model", o.model}};
  if (command == "synth") {
    config = {{"out", o.out},         {"users", o.users},
              {"behaviors", o.behaviors}, {"topics", o.topics},
              {"seed", o.seed},       {"exposure_bias", o.exposure_bias}};
  }
  ordered_json clients = nullptr;
  if (clients_used) {
    clients = {{"chat", o.mock_chat ? "mock" : "http"},
               {"chat_endpoint", o.chat_endpoint},
               {"chat_model", o.mock_chat ? "" : o.chat_model},
               {"temperature", 0.0},
               {"mock_tag", o.mock_tag},
               {"embed", o.mock_embed ? "mock" : "http"},
               {"embed_endpoint", o.embed_endpoint},
               {"embed_model", o.mock_embed ? "" : o.embed_model},
               {"mock_embed_dim", o.mock_embed_dim},
               {"templates", o.templates.empty() ? "built-in" : o.templates}};
  }
  return {{"command", command},
          {"argv", args},
          {"config", config},
          {"clients", clients},
          {"versions",
           {{"liber", kVersion},
            {"compiler", __VERSION__},
            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                          std::to_string(EIGEN_MAJOR_VERSION) + "." +
                          std::to_string(EIGEN_MINOR_VERSION)}}}};
}

void add_data_options(CLI::App& cmd, Options& o) {
  cmd.add_option("--dataset", o.dataset, "interactions file (TSV with header, or JSON lines)");
  cmd.add_option("--min-interactions", o.min_interactions,
                 "drop users and items with fewer interactions");
  cmd.add_option("--label-threshold", o.label_threshold, "ratings above this are positive");
  cmd.add_option("--positive-only-rating", o.positive_only_rating,
                 "only this rating is positive (0 disables)");
  cmd.add_option("--factors", o.factors, "analysis factors for the prompts")->delimiter(',');
  cmd.add_option("--profiles", o.profiles, "user_id<TAB>profile file");
  cmd.add_option("--split", o.split, "training share of the global time split")
      ->check(CLI::Range(0.0, 1.0));
}

void add_pipeline_options(CLI::App& cmd, Options& o, bool with_variant) {
  if (with_variant) {
    cmd.add_option("--variant", o.variant,
                   "full|no-partition|no-interest-shift|no-attention-fuse|per-step:<L>");
  }
  cmd.add_option("--k", o.k, "partition size")->check(CLI::PositiveNumber);
  cmd.add_option("--dims", o.dims, "<d_red>,<d_att>");
  cmd.add_option("--chat-endpoint", o.chat_endpoint, "chat completions URL (http://)");
  cmd.add_flag("--mock-chat", o.mock_chat, "use the deterministic chat mock");
  cmd.add_option("--chat-model", o.chat_model);
  cmd.add_option("--embed-endpoint", o.embed_endpoint, "embeddings URL (http://)");
  cmd.add_flag("--mock-embed", o.mock_embed, "use the deterministic embedding mock");
  cmd.add_option("--embed-model", o.embed_model);
  cmd.add_option("--mock-embed-dim", o.mock_embed_dim)->check(CLI::PositiveNumber);
  cmd.add_option("--mock-tag", o.mock_tag, "attribute the chat mock counts");
  cmd.add_option("--templates", o.templates, "directory with summary/shift prompt files");
  cmd.add_option("--threads", o.threads, "users processed in parallel")
      ->check(CLI::PositiveNumber);
}

void add_training_options(CLI::App& cmd, Options& o) {
  cmd.add_option("--lr", o.lr, "learning rate")->check(CLI::NonNegativeNumber);
  cmd.add_option("--batch", o.batch, "batch size")->check(CLI::PositiveNumber);
  cmd.add_option("--epochs", o.epochs)->check(CLI::PositiveNumber);
  cmd.add_option("--fusion-init-scale", o.fusion_init_scale)->check(CLI::PositiveNumber);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Lifelong user behavior modeling for CTR prediction"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  app.add_option("--run-metadata", o.run_metadata, "where to write the run metadata JSON");

  auto* ingest = app.add_subcommand("ingest", "partition, summarize, encode and store");
  auto* train = app.add_subcommand("train", "train the CTR model");
  auto* evaluate = app.add_subcommand("evaluate", "AUC and LogLoss on the test split");
  auto* efficiency = app.add_subcommand("efficiency", "language-model cost per variant");
  auto* ablate = app.add_subcommand("ablate", "compare the ablation variants");
  auto* synth = app.add_subcommand("synth", "write a synthetic topic-drift dataset");

  for (auto* cmd : {ingest, train, evaluate, efficiency, ablate}) {
    add_data_options(*cmd, o);
    add_pipeline_options(*cmd, o, cmd != ablate && cmd != efficiency);
    if (cmd != ablate && cmd != efficiency) {
      cmd->add_option("--store", o.store, "representation store file");
    }
    cmd->add_option("--seed", o.seed);
    cmd->add_option("--report", o.report)->check(CLI::IsMember({"text", "json"}));
  }
  for (auto* cmd : {train, evaluate, ablate}) add_training_options(*cmd, o);
  train->add_option("--model", o.model, "write the trained model here");
  evaluate->add_option("--model", o.model, "evaluate this saved model");
  efficiency->add_option("--variants", o.variants, "comma-separated variants")->delimiter(',');
  ablate->add_option("--lr-grid", o.lr_grid, "learning rates to search")->delimiter(',');
  ablate->add_option("--batch-grid", o.batch_grid, "batch sizes to search")->delimiter(',');

  synth->add_option("--out", o.out, "output TSV")->required();
  synth->add_option("--users", o.users)->check(CLI::PositiveNumber);
  synth->add_option("--behaviors", o.behaviors, "behaviors per user")->check(CLI::PositiveNumber);
  synth->add_option("--topics", o.topics)->check(CLI::Range(2, 8));
  synth->add_option("--exposure-bias", o.exposure_bias)->check(CLI::Range(0.0, 1.0));
  synth->add_option("--seed", o.seed);
  synth->add_option("--report", o.report)->check(CLI::IsMember({"text", "json"}));

  std::vector<std::string> argv_store = {"liber"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    std::ostringstream help, diag;
    const int code = app.exit(e, help, diag);
    out << help.str();
    err << diag.str();
    return code == 0 ? kExitOk : kExitConfig;
  }

  std::string command;
  for (auto* cmd : app.get_subcommands()) command = cmd->get_name();
  try {
    if (o.split <= 0.0 || o.split >= 1.0) throw ConfigError("--split must lie in (0, 1)");
    RunOutcome outcome;
    if (command == "ingest") outcome = cmd_ingest(o, out);
    else if (command == "train") outcome = cmd_train(o, out);
    else if (command == "evaluate") outcome = cmd_evaluate(o, out);
    else if (command == "efficiency") outcome = cmd_efficiency(o, out);
    else if (command == "ablate") outcome = cmd_ablate(o, out);
    else outcome = cmd_synth(o, out);

    auto meta = metadata(command, args, o);
    meta["report"] = outcome.report;
    std::ofstream file(o.run_metadata);
    if (!file) throw ConfigError("cannot write run metadata to " + o.run_metadata);
    file << meta.dump(2) << '\n';
    if (outcome.failed_users > 0) {
      err << outcome.failed_users << " user(s) failed after retries\n";
      return kExitClient;
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DimensionError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const PreconditionError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const TrainingError& e) {
    err << "training failed: " << e.what() << '\n';
    return kExitConfig;
  } catch (const TransportError& e) {
    err << "client failure: " << e.what() << '\n';
    return kExitClient;
  } catch (const ProtocolError& e) {
    err << "client failure: " << e.what() << '\n';
    return kExitClient;
  } catch (const Error& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  }
}

}  // namespace liber::cli
