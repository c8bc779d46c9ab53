#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "reclab/cli/run.hpp"
#include "reclab/common/error.hpp"

namespace {

using reclab::cli::RunConfig;

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::string seed;
  std::string variant;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("-c,--config", args.config_path, "JSON configuration file");
  cmd->add_option("-o,--out", args.out_dir, "output directory override");
  cmd->add_option("-s,--seed", args.seed, "seed override (data + training)");
  cmd->add_option("--variant", args.variant,
                  "model variant override (narm, narm_v1, narm_v2)");
}

RunConfig load_config(const CommonArgs& args) {
  nlohmann::json doc = nlohmann::json::object();
  if (!args.config_path.empty()) {
    std::ifstream in(args.config_path);
    if (!in) throw reclab::IoError("cannot read config " + args.config_path);
    doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded())
      throw reclab::ConfigError("config is not valid JSON: " +
                                args.config_path);
  }
  reclab::cli::apply_overrides(doc, args.out_dir, args.seed, args.variant);
  return RunConfig::from_json(doc);
}

// "SomeError: detail" -> {"error":"SomeError","message":"detail"}
void report_error(const std::exception& e) {
  std::string what = e.what();
  std::string kind = "Error";
  std::string message = what;
  if (auto pos = what.find(": "); pos != std::string::npos) {
    kind = what.substr(0, pos);
    message = what.substr(pos + 2);
  }
  nlohmann::json rec = {{"error", kind}, {"message", message}};
  std::cerr << rec.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"session-based trip recommendation lab"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string checkpoint;

  CLI::App* generate =
      app.add_subcommand("generate", "produce the reservations file");
  add_common(generate, args);

  CLI::App* train =
      app.add_subcommand("train", "train one variant, write checkpoint");
  add_common(train, args);

  CLI::App* evaluate =
      app.add_subcommand("evaluate", "score a checkpoint on the test split");
  add_common(evaluate, args);
  evaluate->add_option("--checkpoint", checkpoint, "checkpoint archive");

  CLI::App* compare = app.add_subcommand(
      "compare", "train all variants, rank them against the baselines");
  add_common(compare, args);

  CLI::App* export_emb = app.add_subcommand(
      "export-embeddings", "2-D map of the user embedding space");
  add_common(export_emb, args);
  export_emb->add_option("--checkpoint", checkpoint, "checkpoint archive");

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg = load_config(args);
    if (generate->parsed()) reclab::cli::cmd_generate(cfg);
    if (train->parsed()) reclab::cli::cmd_train(cfg);
    if (evaluate->parsed()) reclab::cli::cmd_evaluate(cfg, checkpoint);
    if (compare->parsed()) reclab::cli::cmd_compare(cfg);
    if (export_emb->parsed()) reclab::cli::cmd_export_embeddings(cfg, checkpoint);
  } catch (const std::exception& e) {
    report_error(e);
    return 1;
  }
  return 0;
}
