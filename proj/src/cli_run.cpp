#include "reclab/cli/run.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

#include "reclab/baselines/itemknn.hpp"
#include "reclab/baselines/popularity.hpp"
#include "reclab/common/csv.hpp"
#include "reclab/common/error.hpp"
#include "reclab/common/hash.hpp"
#include "reclab/data/io.hpp"
#include "reclab/data/ops.hpp"
#include "reclab/eval/metrics.hpp"
#include "reclab/eval/tsne.hpp"
#include "reclab/train/batching.hpp"
#include "reclab/train/checkpoint.hpp"

namespace reclab::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed)
      if (it.key() == a) {
        ok = true;
        break;
      }
    if (!ok) throw ConfigError("unknown key '" + it.key() + "' in " + where);
  }
}

template <typename T>
T get_or(const json& j, const char* key, T def) {
  if (!j.contains(key)) return def;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

void parse_data(const json& d, RunConfig::Data& out) {
  check_keys(d, "data",
             {"source", "path", "synthetic", "filter", "train_fraction",
              "valid_fraction", "seed"});
  out.source = get_or<std::string>(d, "source", out.source);
  out.path = get_or<std::string>(d, "path", out.path);
  out.train_fraction = get_or<double>(d, "train_fraction", out.train_fraction);
  out.valid_fraction = get_or<double>(d, "valid_fraction", out.valid_fraction);
  out.seed = get_or<std::uint64_t>(d, "seed", out.seed);
  if (d.contains("synthetic")) {
    const json& s = d.at("synthetic");
    check_keys(s, "data.synthetic",
               {"n_users", "n_trips", "n_cities", "n_countries", "min_trip_len",
                "max_trip_len", "trip_len_weights", "seasonality",
                "route_strength", "multi_trip_fraction", "start_year"});
    auto& g = out.synthetic;
    g.n_users = get_or<int>(s, "n_users", g.n_users);
    g.n_trips = get_or<int>(s, "n_trips", g.n_trips);
    g.n_cities = get_or<int>(s, "n_cities", g.n_cities);
    g.n_countries = get_or<int>(s, "n_countries", g.n_countries);
    g.min_trip_len = get_or<int>(s, "min_trip_len", g.min_trip_len);
    g.max_trip_len = get_or<int>(s, "max_trip_len", g.max_trip_len);
    g.trip_len_weights =
        get_or<std::vector<double>>(s, "trip_len_weights", g.trip_len_weights);
    g.seasonality = get_or<double>(s, "seasonality", g.seasonality);
    g.route_strength = get_or<double>(s, "route_strength", g.route_strength);
    g.multi_trip_fraction =
        get_or<double>(s, "multi_trip_fraction", g.multi_trip_fraction);
    g.start_year = get_or<int>(s, "start_year", g.start_year);
  }
  if (d.contains("filter")) {
    const json& f = d.at("filter");
    check_keys(f, "data.filter",
               {"min_cities", "max_cities", "max_duration_days", "scope"});
    out.filter_min_cities = get_or<int>(f, "min_cities", out.filter_min_cities);
    out.filter_max_cities = get_or<int>(f, "max_cities", out.filter_max_cities);
    out.filter_max_duration_days =
        get_or<long>(f, "max_duration_days", out.filter_max_duration_days);
    out.filter_scope = get_or<std::string>(f, "scope", out.filter_scope);
    if (out.filter_scope != "train" && out.filter_scope != "all")
      throw ConfigError("data.filter.scope must be 'train' or 'all'");
  }
  if (out.source != "synthetic" && out.source != "file")
    throw ConfigError("data.source must be 'synthetic' or 'file'");
  if (out.source == "file" && out.path.empty())
    throw ConfigError("data.source=file requires data.path");
  if (out.train_fraction <= 0 || out.train_fraction >= 1)
    throw ConfigError("data.train_fraction must lie in (0, 1)");
  if (out.valid_fraction <= 0 || out.valid_fraction >= 1)
    throw ConfigError("data.valid_fraction must lie in (0, 1)");
}

}  // namespace

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  c.snapshot = j;
  check_keys(j, "config",
             {"data", "model", "training", "augmentation", "features",
              "evaluation", "output"});
  if (j.contains("data")) parse_data(j.at("data"), c.data);

  if (j.contains("model")) {
    const json& m = j.at("model");
    check_keys(m, "model",
               {"variant", "hidden", "city_dim", "month_dim", "duration_dim",
                "cat_dim", "dropout"});
    c.model.variant = get_or<std::string>(m, "variant", c.model.variant);
    c.model.hidden = get_or<int>(m, "hidden", c.model.hidden);
    c.model.city_dim = get_or<int>(m, "city_dim", c.model.city_dim);
    c.model.month_dim = get_or<int>(m, "month_dim", c.model.month_dim);
    c.model.duration_dim = get_or<int>(m, "duration_dim", c.model.duration_dim);
    c.model.cat_dim = get_or<int>(m, "cat_dim", c.model.cat_dim);
    c.model.dropout = get_or<double>(m, "dropout", c.model.dropout);
    if (c.model.variant != "narm" && c.model.variant != "narm_v1" &&
        c.model.variant != "narm_v2")
      throw ConfigError("model.variant must be narm, narm_v1 or narm_v2");
  }

  c.training.seed = c.data.seed;  // single --seed story unless overridden
  if (j.contains("training")) {
    const json& t = j.at("training");
    check_keys(t, "training",
               {"learning_rate", "weight_decay", "batch_size", "history_window",
                "early_stop_patience", "max_epochs", "seed", "optimizer",
                "loss", "beta", "focal_alpha", "focal_gamma", "clip_norm"});
    auto& tc = c.training;
    tc.learning_rate = get_or<double>(t, "learning_rate", tc.learning_rate);
    tc.weight_decay = get_or<double>(t, "weight_decay", tc.weight_decay);
    tc.batch_size = get_or<int>(t, "batch_size", tc.batch_size);
    tc.history_window = get_or<int>(t, "history_window", tc.history_window);
    tc.early_stop_patience =
        get_or<int>(t, "early_stop_patience", tc.early_stop_patience);
    tc.max_epochs = get_or<int>(t, "max_epochs", tc.max_epochs);
    tc.seed = get_or<std::uint64_t>(t, "seed", tc.seed);
    tc.optimizer = get_or<std::string>(t, "optimizer", tc.optimizer);
    if (t.contains("loss")) {
      tc.loss = t.at("loss").get<std::string>();
      c.loss_explicit = true;
    }
    tc.beta = get_or<double>(t, "beta", tc.beta);
    tc.focal_alpha = get_or<double>(t, "focal_alpha", tc.focal_alpha);
    tc.focal_gamma = get_or<double>(t, "focal_gamma", tc.focal_gamma);
    tc.clip_norm = get_or<double>(t, "clip_norm", tc.clip_norm);
  }

  if (j.contains("augmentation")) {
    const json& a = j.at("augmentation");
    check_keys(a, "augmentation",
               {"p_drop", "p_mask", "p_substitute", "p_none",
                "substitute_top_k", "min_trip_len", "similarity_top_k"});
    auto& p = c.augmentation.policy;
    p.p_drop = get_or<double>(a, "p_drop", p.p_drop);
    p.p_mask = get_or<double>(a, "p_mask", p.p_mask);
    p.p_substitute = get_or<double>(a, "p_substitute", p.p_substitute);
    p.p_none = get_or<double>(a, "p_none", p.p_none);
    p.substitute_top_k = get_or<int>(a, "substitute_top_k", p.substitute_top_k);
    c.augmentation.min_trip_len =
        get_or<int>(a, "min_trip_len", c.augmentation.min_trip_len);
    c.augmentation.similarity_top_k =
        get_or<int>(a, "similarity_top_k", c.augmentation.similarity_top_k);
  }

  if (j.contains("features")) {
    const json& f = j.at("features");
    check_keys(f, "features", {"include_extended", "default_month", "autoencoder"});
    c.features.config.include_extended =
        get_or<bool>(f, "include_extended", c.features.config.include_extended);
    c.features.config.default_month =
        get_or<int>(f, "default_month", c.features.config.default_month);
    if (f.contains("autoencoder")) {
      const json& ae = f.at("autoencoder");
      check_keys(ae, "features.autoencoder",
                 {"latent_dim", "hidden_dim", "max_epochs", "batch_size",
                  "learning_rate", "weight_decay", "holdout_fraction",
                  "patience"});
      auto& o = c.features.autoencoder;
      o.latent_dim = get_or<int>(ae, "latent_dim", o.latent_dim);
      o.hidden_dim = get_or<int>(ae, "hidden_dim", o.hidden_dim);
      o.max_epochs = get_or<int>(ae, "max_epochs", o.max_epochs);
      o.batch_size = get_or<int>(ae, "batch_size", o.batch_size);
      o.learning_rate = get_or<double>(ae, "learning_rate", o.learning_rate);
      o.weight_decay = get_or<double>(ae, "weight_decay", o.weight_decay);
      o.holdout_fraction =
          get_or<double>(ae, "holdout_fraction", o.holdout_fraction);
      o.patience = get_or<int>(ae, "patience", o.patience);
    }
  }

  if (j.contains("evaluation")) {
    const json& e = j.at("evaluation");
    check_keys(e, "evaluation", {"k"});
    c.evaluation.k = get_or<int>(e, "k", c.evaluation.k);
    if (c.evaluation.k < 1) throw ConfigError("evaluation.k must be >= 1");
  }

  if (j.contains("output")) {
    const json& o = j.at("output");
    check_keys(o, "output",
               {"dir", "data_file", "metrics_file", "timing_file",
                "checkpoint_file", "report_file", "summary_file",
                "leaderboard_file", "leaderboard_records", "plot_file",
                "coords_file", "manifest_file", "plot_max_points"});
    auto& ou = c.output;
    ou.dir = get_or<std::string>(o, "dir", ou.dir);
    ou.data_file = get_or<std::string>(o, "data_file", ou.data_file);
    ou.metrics_file = get_or<std::string>(o, "metrics_file", ou.metrics_file);
    ou.timing_file = get_or<std::string>(o, "timing_file", ou.timing_file);
    ou.checkpoint_file =
        get_or<std::string>(o, "checkpoint_file", ou.checkpoint_file);
    ou.report_file = get_or<std::string>(o, "report_file", ou.report_file);
    ou.summary_file = get_or<std::string>(o, "summary_file", ou.summary_file);
    ou.leaderboard_file =
        get_or<std::string>(o, "leaderboard_file", ou.leaderboard_file);
    ou.leaderboard_records =
        get_or<std::string>(o, "leaderboard_records", ou.leaderboard_records);
    ou.plot_file = get_or<std::string>(o, "plot_file", ou.plot_file);
    ou.coords_file = get_or<std::string>(o, "coords_file", ou.coords_file);
    ou.manifest_file = get_or<std::string>(o, "manifest_file", ou.manifest_file);
    ou.plot_max_points = get_or<int>(o, "plot_max_points", ou.plot_max_points);
  }
  return c;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config is not valid JSON: " + path);
  return from_json(j);
}

std::string RunConfig::out_dir() const {
  if (const char* env = std::getenv("REC_LAB_OUT"); env && *env) return env;
  return output.dir;
}

std::string RunConfig::effective_loss() const {
  if (loss_explicit) return training.loss;
  return model.variant == "narm" ? "cross_entropy" : "focal";
}

void apply_overrides(json& doc, const std::string& out, const std::string& seed,
                     const std::string& variant) {
  if (!doc.is_object()) throw ConfigError("config root must be an object");
  if (!out.empty()) doc["output"]["dir"] = out;
  if (!seed.empty()) {
    std::uint64_t s = 0;
    try {
      s = std::stoull(seed);
    } catch (const std::exception&) {
      throw ConfigError("--seed must be an unsigned integer");
    }
    doc["data"]["seed"] = s;
    doc["training"]["seed"] = s;
  }
  if (!variant.empty()) doc["model"]["variant"] = variant;
}

namespace {

struct PreparedData {
  data::TripDataset train_full;  // filtered; training + validation
  data::TripDataset train;
  data::TripDataset valid;
  data::TripDataset test;        // filtered only under filter.scope=all
  data::Vocabulary vocab;        // built on train_full
  std::string vocab_hash_hex;
  std::string data_hash;
};

data::TripDataset load_source(const RunConfig& cfg, std::string* data_hash) {
  if (cfg.data.source == "synthetic") {
    if (data_hash)
      *data_hash = "synthetic:" + std::to_string(cfg.data.seed);
    return data::generate_synthetic(cfg.data.synthetic, cfg.data.seed);
  }
  if (data_hash) {
    *data_hash = hash_hex(fnv1a(read_text_file(cfg.data.path)));
  }
  return data::load_trips(cfg.data.path);
}

PreparedData prepare_data(const RunConfig& cfg) {
  PreparedData p;
  data::TripDataset raw = load_source(cfg, &p.data_hash);
  auto filter = [&cfg](const data::TripDataset& ds) {
    return data::filter_trips(ds, cfg.data.filter_min_cities,
                              cfg.data.filter_max_cities,
                              cfg.data.filter_max_duration_days);
  };
  auto [train_full, test] = data::split_by_trip(
      raw, cfg.data.train_fraction,
      seed_stream({cfg.data.seed, fnv1a("split_train_test")}));
  p.train_full = filter(train_full);
  p.test = cfg.data.filter_scope == "all" ? filter(test) : std::move(test);
  auto [train, valid] = data::split_by_trip(
      p.train_full, 1.0 - cfg.data.valid_fraction,
      seed_stream({cfg.data.seed, fnv1a("split_train_valid")}));
  p.train = std::move(train);
  p.valid = std::move(valid);
  p.vocab = data::build_vocab(p.train_full);
  p.vocab_hash_hex = hash_hex(data::vocab_hash(p.vocab));
  return p;
}

struct VariantRun {
  model::NarmModel model;
  features::FeaturePipeline pipeline;
  train::TrainResult result;
  train::TrainConfig tcfg;
};

VariantRun train_variant(const PreparedData& prep, const RunConfig& cfg,
                         const std::string& variant) {
  model::NarmConfig mcfg = model::NarmConfig::for_variant(variant);
  mcfg.hidden = cfg.model.hidden;
  mcfg.city_dim = cfg.model.city_dim;
  mcfg.month_dim = cfg.model.month_dim;
  mcfg.duration_dim = cfg.model.duration_dim;
  mcfg.cat_dim = cfg.model.cat_dim;
  mcfg.dropout = cfg.model.dropout;

  train::TrainConfig tcfg = cfg.training;
  tcfg.loss = cfg.loss_explicit
                  ? cfg.training.loss
                  : (variant == "narm" ? "cross_entropy" : "focal");

  bool with_dense = mcfg.use_step_stats || mcfg.use_bypass;
  auto pipeline =
      features::FeaturePipeline::fit(prep.train, prep.vocab, cfg.features.config,
                                     tcfg.seed, with_dense,
                                     cfg.features.autoencoder);
  if (mcfg.use_step_stats)
    mcfg.step_dense_dim = static_cast<int>(
        features::step_feature_names(cfg.features.config).size());
  if (mcfg.use_bypass) {
    mcfg.user_dense_dim = static_cast<int>(
        features::user_feature_names(cfg.features.config).size());
    mcfg.user_embedding_dim = pipeline.encoder().latent_dim();
    mcfg.device_vocab_size = pipeline.device_vocab().size();
    mcfg.booker_vocab_size = pipeline.booker_vocab().size();
  }

  auto train_trips = pipeline.featurize(prep.train, prep.vocab);
  auto valid_trips = pipeline.featurize(prep.valid, prep.vocab);
  auto valid_samples = train::final_transitions(valid_trips);

  model::NarmModel model(mcfg, prep.vocab.city_space(),
                         prep.vocab.country_count(), tcfg.seed);

  train::SampleProvider provider;
  baselines::SimilarityIndex similarity;  // only fitted when augmenting
  if (variant == "narm") {
    auto fixed = train::final_transitions(train_trips);
    provider = [fixed](std::uint64_t) { return fixed; };
  } else {
    similarity = baselines::SimilarityIndex::fit(
        prep.train, std::max(cfg.augmentation.similarity_top_k,
                             cfg.augmentation.policy.substitute_top_k));
    augment::PerturbationPolicy policy = cfg.augmentation.policy;
    policy.seed = tcfg.seed;
    int min_len = cfg.augmentation.min_trip_len;
    const auto& vocab = prep.vocab;
    provider = [&train_trips, policy, &similarity, &vocab,
                min_len](std::uint64_t epoch) {
      return augment::augment_dataset(train_trips, policy, similarity, vocab,
                                      min_len, epoch);
    };
  }

  auto result = train::train_model(model, provider, valid_samples, tcfg);
  return VariantRun{std::move(model), std::move(pipeline), std::move(result),
                    std::move(tcfg)};
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::string body;
  for (const auto& l : lines) {
    body += l;
    body += '\n';
  }
  write_text_file(path, body);
}

std::vector<std::string> metrics_lines(const train::TrainResult& r) {
  std::vector<std::string> lines;
  for (const auto& e : r.history) {
    json rec = {{"epoch", e.epoch},
                {"train_loss", e.train_loss},
                {"val_loss", e.val_loss},
                {"val_acc4", e.val_acc4}};
    lines.push_back(rec.dump());
  }
  return lines;
}

std::vector<std::string> timing_lines(const train::TrainResult& r) {
  std::vector<std::string> lines;
  for (const auto& e : r.history) {
    json rec = {{"epoch", e.epoch}, {"wall_seconds", e.wall_seconds}};
    lines.push_back(rec.dump());
  }
  return lines;
}

void write_report(const fs::path& dir, const eval::MetricsReport& report,
                  const std::string& report_file,
                  const std::string& summary_file) {
  std::vector<std::string> lines;
  lines.reserve(report.records.size());
  for (const auto& r : report.records) {
    json rec = {{"trip_id", r.trip_id},
                {"top", r.top},
                {"truth", r.truth},
                {"hit", r.hit}};
    lines.push_back(rec.dump());
  }
  write_lines((dir / report_file).string(), lines);
  json summary = {{"model_name", report.model_name},
                  {"acc_at_4", report.acc_at_4},
                  {"n_evaluated", report.n_evaluated},
                  {"config_hash", report.config_hash},
                  {"seed", report.seed}};
  write_text_file((dir / summary_file).string(), summary.dump(2) + "\n");
}

void write_manifest(const RunConfig& cfg, const std::string& command,
                    const std::string& data_hash,
                    const std::vector<std::string>& outputs,
                    double wall_seconds) {
  fs::path dir(cfg.out_dir());
  json m = {{"command", command},
            {"config", cfg.snapshot},
            {"config_hash", hash_hex(fnv1a(cfg.snapshot.dump()))},
            {"data_hash", data_hash},
            {"outputs", outputs},
            {"wall_seconds", wall_seconds}};
  write_text_file((dir / cfg.output.manifest_file).string(), m.dump(2) + "\n");
}

class Stopwatch {
public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

private:
  std::chrono::steady_clock::time_point start_ =
      std::chrono::steady_clock::now();
};

}  // namespace

void cmd_generate(const RunConfig& cfg) {
  Stopwatch watch;
  fs::path dir(cfg.out_dir());
  fs::create_directories(dir);
  std::string data_hash;
  data::TripDataset ds = load_source(cfg, &data_hash);
  data::save_trips(ds, (dir / cfg.output.data_file).string());
  write_manifest(cfg, "generate", data_hash, {cfg.output.data_file},
                 watch.seconds());
}

void cmd_train(const RunConfig& cfg) {
  Stopwatch watch;
  fs::path dir(cfg.out_dir());
  fs::create_directories(dir);
  PreparedData prep = prepare_data(cfg);
  VariantRun run = train_variant(prep, cfg, cfg.model.variant);

  write_lines((dir / cfg.output.metrics_file).string(),
              metrics_lines(run.result));
  write_lines((dir / cfg.output.timing_file).string(),
              timing_lines(run.result));

  json extra = {{"variant", cfg.model.variant},
                {"best_epoch", run.result.best_epoch},
                {"best_val_acc4", run.result.best_val_acc4},
                {"diverged", run.result.diverged},
                {"history_window", run.tcfg.history_window},
                {"config", cfg.snapshot}};
  train::save_model((dir / cfg.output.checkpoint_file).string(), run.model,
                    run.pipeline, prep.vocab_hash_hex, extra);
  write_manifest(cfg, "train", prep.data_hash,
                 {cfg.output.metrics_file, cfg.output.timing_file,
                  cfg.output.checkpoint_file},
                 watch.seconds());
}

void cmd_evaluate(const RunConfig& cfg, const std::string& checkpoint_path) {
  Stopwatch watch;
  fs::path dir(cfg.out_dir());
  fs::create_directories(dir);
  PreparedData prep = prepare_data(cfg);
  std::string ckpt = checkpoint_path.empty()
                         ? (dir / cfg.output.checkpoint_file).string()
                         : checkpoint_path;
  train::LoadedModel loaded = train::load_model(ckpt, prep.vocab_hash_hex);
  int window = loaded.manifest.value("history_window",
                                     cfg.training.history_window);
  std::string variant = loaded.manifest.value("variant", cfg.model.variant);

  eval::NarmRecommender rec(variant, loaded.model, loaded.pipeline, prep.vocab,
                            window);
  eval::MetricsReport report = eval::evaluate(rec, prep.test, cfg.evaluation.k);
  report.config_hash = hash_hex(fnv1a(cfg.snapshot.dump()));
  report.seed = cfg.data.seed;
  write_report(dir, report, cfg.output.report_file, cfg.output.summary_file);
  write_manifest(cfg, "evaluate", prep.data_hash,
                 {cfg.output.report_file, cfg.output.summary_file},
                 watch.seconds());
}

void cmd_compare(const RunConfig& cfg) {
  Stopwatch watch;
  fs::path dir(cfg.out_dir());
  fs::create_directories(dir);
  PreparedData prep = prepare_data(cfg);
  std::string config_hash = hash_hex(fnv1a(cfg.snapshot.dump()));

  std::vector<eval::MetricsReport> reports;
  std::vector<std::string> outputs;

  auto pop = baselines::CountryPopularity::fit(prep.train_full);
  auto sim = baselines::SimilarityIndex::fit(prep.train_full,
                                             cfg.augmentation.similarity_top_k);
  {
    eval::PopularityRecommender rec(pop);
    reports.push_back(eval::evaluate(rec, prep.test, cfg.evaluation.k));
  }
  {
    eval::ItemKnnRecommender rec(sim, pop);
    reports.push_back(eval::evaluate(rec, prep.test, cfg.evaluation.k));
  }
  for (const std::string variant : {"narm", "narm_v1", "narm_v2"}) {
    VariantRun run = train_variant(prep, cfg, variant);
    eval::NarmRecommender rec(variant, run.model, run.pipeline, prep.vocab,
                              run.tcfg.history_window);
    reports.push_back(eval::evaluate(rec, prep.test, cfg.evaluation.k));
    write_lines((dir / ("metrics_" + variant + ".jsonl")).string(),
                metrics_lines(run.result));
    outputs.push_back("metrics_" + variant + ".jsonl");
  }
  for (auto& r : reports) {
    r.config_hash = config_hash;
    r.seed = cfg.data.seed;
    write_report(dir, r, "report_" + r.model_name + ".jsonl",
                 "summary_" + r.model_name + ".json");
    outputs.push_back("report_" + r.model_name + ".jsonl");
  }

  auto rows = eval::leaderboard(reports);
  write_text_file((dir / cfg.output.leaderboard_file).string(),
                  eval::leaderboard_table(rows));
  std::vector<std::string> lines;
  for (const auto& row : rows) {
    json rec = {{"model_name", row.model_name},
                {"acc_at_4", row.acc_at_4},
                {"n_evaluated", row.n_evaluated}};
    lines.push_back(rec.dump());
  }
  write_lines((dir / cfg.output.leaderboard_records).string(), lines);
  outputs.push_back(cfg.output.leaderboard_file);
  outputs.push_back(cfg.output.leaderboard_records);
  write_manifest(cfg, "compare", prep.data_hash, outputs, watch.seconds());
}

void cmd_export_embeddings(const RunConfig& cfg,
                           const std::string& checkpoint_path) {
  Stopwatch watch;
  fs::path dir(cfg.out_dir());
  fs::create_directories(dir);
  PreparedData prep = prepare_data(cfg);
  std::string ckpt = checkpoint_path.empty()
                         ? (dir / cfg.output.checkpoint_file).string()
                         : checkpoint_path;
  train::LoadedModel loaded = train::load_model(ckpt, prep.vocab_hash_hex);
  if (!loaded.pipeline.with_dense())
    throw ConfigError("checkpoint variant has no user encoder to export");

  Eigen::MatrixXd raw = loaded.pipeline.user_matrix(prep.train_full);
  auto names = features::user_feature_names(loaded.pipeline.config());
  Eigen::Index month_col = -1;
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == "most_frequent_month")
      month_col = static_cast<Eigen::Index>(i);
  if (month_col < 0) throw InvalidConfig("month feature column missing");

  Eigen::Index n =
      std::min<Eigen::Index>(raw.rows(), cfg.output.plot_max_points);
  Eigen::MatrixXd sub = raw.topRows(n);
  std::vector<int> months(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    months[static_cast<std::size_t>(i)] = static_cast<int>(sub(i, month_col));
  Eigen::MatrixXd latent =
      loaded.pipeline.encoder().encode(loaded.pipeline.user_norm().apply(sub));

  eval::TsneOptions opt;
  opt.seed = cfg.data.seed;
  eval::export_embedding_plot(latent, months,
                              (dir / cfg.output.plot_file).string(),
                              (dir / cfg.output.coords_file).string(), opt);
  write_manifest(cfg, "export-embeddings", prep.data_hash,
                 {cfg.output.plot_file, cfg.output.coords_file},
                 watch.seconds());
}

}  // namespace reclab::cli
