#include "reclab/train/checkpoint.hpp"

#include <cstdint>
#include <fstream>

#include "reclab/common/error.hpp"

namespace reclab::train {

namespace {

void write_u64(std::ostream& out, std::uint64_t v) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(buf, 8);
}

std::uint64_t read_u64(std::istream& in) {
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), 8);
  if (!in) throw MalformedInput("truncated checkpoint");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

nlohmann::json config_to_json(const model::NarmConfig& c) {
  return {{"hidden", c.hidden},
          {"city_dim", c.city_dim},
          {"month_dim", c.month_dim},
          {"duration_dim", c.duration_dim},
          {"cat_dim", c.cat_dim},
          {"dropout", c.dropout},
          {"duration_buckets", c.duration_buckets},
          {"use_time", c.use_time},
          {"use_step_stats", c.use_step_stats},
          {"use_self_attention", c.use_self_attention},
          {"use_bypass", c.use_bypass},
          {"use_country_head", c.use_country_head},
          {"step_dense_dim", c.step_dense_dim},
          {"user_dense_dim", c.user_dense_dim},
          {"user_embedding_dim", c.user_embedding_dim},
          {"device_vocab_size", c.device_vocab_size},
          {"booker_vocab_size", c.booker_vocab_size}};
}

model::NarmConfig config_from_json(const nlohmann::json& j) {
  model::NarmConfig c;
  c.hidden = j.at("hidden").get<int>();
  c.city_dim = j.at("city_dim").get<int>();
  c.month_dim = j.at("month_dim").get<int>();
  c.duration_dim = j.at("duration_dim").get<int>();
  c.cat_dim = j.at("cat_dim").get<int>();
  c.dropout = j.at("dropout").get<double>();
  c.duration_buckets = j.at("duration_buckets").get<int>();
  c.use_time = j.at("use_time").get<bool>();
  c.use_step_stats = j.at("use_step_stats").get<bool>();
  c.use_self_attention = j.at("use_self_attention").get<bool>();
  c.use_bypass = j.at("use_bypass").get<bool>();
  c.use_country_head = j.at("use_country_head").get<bool>();
  c.step_dense_dim = j.at("step_dense_dim").get<int>();
  c.user_dense_dim = j.at("user_dense_dim").get<int>();
  c.user_embedding_dim = j.at("user_embedding_dim").get<int>();
  c.device_vocab_size = j.at("device_vocab_size").get<int>();
  c.booker_vocab_size = j.at("booker_vocab_size").get<int>();
  return c;
}

Eigen::RowVectorXd json_to_rowvec(const nlohmann::json& j) {
  Eigen::RowVectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

nlohmann::json rowvec_to_json(const Eigen::RowVectorXd& v) {
  nlohmann::json j = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v(i));
  return j;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& cp) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out.write(kCheckpointMagic,
            static_cast<std::streamsize>(std::string(kCheckpointMagic).size()));
  std::string manifest = cp.manifest.dump();
  write_u64(out, manifest.size());
  out.write(manifest.data(), static_cast<std::streamsize>(manifest.size()));
  write_u64(out, cp.tensors.size());
  for (const auto& [name, m] : cp.tensors) {
    write_u64(out, name.size());
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u64(out, static_cast<std::uint64_t>(m.rows()));
    write_u64(out, static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        auto f = static_cast<float>(m(r, c));
        out.write(reinterpret_cast<const char*>(&f), sizeof(float));
      }
  }
  if (!out) throw IoError("failed writing " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::string magic(std::string(kCheckpointMagic).size(), '\0');
  in.read(magic.data(), static_cast<std::streamsize>(magic.size()));
  if (!in || magic != kCheckpointMagic)
    throw MalformedInput("not a checkpoint archive: " + path);

  Checkpoint cp;
  std::uint64_t mlen = read_u64(in);
  std::string manifest(mlen, '\0');
  in.read(manifest.data(), static_cast<std::streamsize>(mlen));
  if (!in) throw MalformedInput("truncated checkpoint manifest");
  cp.manifest = nlohmann::json::parse(manifest, nullptr, false);
  if (cp.manifest.is_discarded())
    throw MalformedInput("checkpoint manifest is not valid JSON");

  std::uint64_t n = read_u64(in);
  for (std::uint64_t i = 0; i < n; ++i) {
    std::uint64_t name_len = read_u64(in);
    std::string name(name_len, '\0');
    in.read(name.data(), static_cast<std::streamsize>(name_len));
    auto rows = static_cast<Eigen::Index>(read_u64(in));
    auto cols = static_cast<Eigen::Index>(read_u64(in));
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) {
        float f;
        in.read(reinterpret_cast<char*>(&f), sizeof(float));
        if (!in) throw MalformedInput("truncated tensor " + name);
        m(r, c) = static_cast<double>(f);
      }
    cp.tensors.emplace(std::move(name), std::move(m));
  }
  return cp;
}

void save_model(const std::string& path, const model::NarmModel& m,
                const features::FeaturePipeline& pipeline,
                const std::string& vocab_hash, const nlohmann::json& extra) {
  Checkpoint cp;
  cp.manifest["type"] = "model";
  cp.manifest["vocab_hash"] = vocab_hash;
  cp.manifest["model"] = config_to_json(m.config());
  cp.manifest["model"]["city_space"] = m.city_space();
  cp.manifest["model"]["country_count"] = m.country_count();

  nlohmann::json pj;
  pj["with_dense"] = pipeline.with_dense();
  pj["include_extended"] = pipeline.config().include_extended;
  pj["default_month"] = pipeline.config().default_month;
  if (pipeline.with_dense()) {
    pj["device_values"] = pipeline.device_vocab().known_values();
    pj["booker_values"] = pipeline.booker_vocab().known_values();
    pj["encoder"] = {{"input_dim", pipeline.encoder().input_dim()},
                     {"hidden_dim", pipeline.encoder().hidden_dim()},
                     {"latent_dim", pipeline.encoder().latent_dim()}};
    // Normalizer rows are tiny; keep them human-readable in the manifest so
    // float32 tensor rounding never touches them.
    pj["user_mean"] = rowvec_to_json(pipeline.user_norm().mean);
    pj["user_std"] = rowvec_to_json(pipeline.user_norm().std);
    pj["step_mean"] = rowvec_to_json(pipeline.step_norm().mean);
    pj["step_std"] = rowvec_to_json(pipeline.step_norm().std);
    for (const auto* p : pipeline.encoder().params().all())
      cp.tensors["pipeline/" + p->name] = p->value;
  }
  cp.manifest["pipeline"] = std::move(pj);
  for (auto it = extra.begin(); it != extra.end(); ++it)
    cp.manifest[it.key()] = it.value();

  for (const auto* p : m.params().all()) cp.tensors["model/" + p->name] = p->value;
  save_checkpoint(path, cp);
}

LoadedModel load_model(const std::string& path,
                       const std::string& expect_vocab_hash) {
  Checkpoint cp = load_checkpoint(path);
  if (cp.manifest.value("type", "") != "model")
    throw MalformedInput("checkpoint is not a model archive");
  std::string stored = cp.manifest.value("vocab_hash", "");
  if (stored != expect_vocab_hash)
    throw HashMismatch("checkpoint vocabulary hash " + stored +
                       " != current " + expect_vocab_hash);

  const auto& mj = cp.manifest.at("model");
  model::NarmConfig cfg = config_from_json(mj);
  model::NarmModel m(cfg, mj.at("city_space").get<int>(),
                     mj.at("country_count").get<int>(), 0);
  for (auto* p : m.params().all()) {
    auto it = cp.tensors.find("model/" + p->name);
    if (it == cp.tensors.end())
      throw MalformedInput("checkpoint missing tensor " + p->name);
    if (it->second.rows() != p->value.rows() ||
        it->second.cols() != p->value.cols())
      throw ShapeMismatch("checkpoint tensor " + p->name);
    p->value = it->second;
  }
  m.zero_pad_row();

  const auto& pj = cp.manifest.at("pipeline");
  features::FeatureConfig fcfg;
  fcfg.include_extended = pj.at("include_extended").get<bool>();
  fcfg.default_month = pj.at("default_month").get<int>();
  features::FeaturePipeline pipeline;
  if (pj.at("with_dense").get<bool>()) {
    features::NormalizationStats user_norm{json_to_rowvec(pj.at("user_mean")),
                                           json_to_rowvec(pj.at("user_std"))};
    features::NormalizationStats step_norm{json_to_rowvec(pj.at("step_mean")),
                                           json_to_rowvec(pj.at("step_std"))};
    auto device = features::CategoricalVocab::from_values(
        pj.at("device_values").get<std::vector<std::string>>());
    auto booker = features::CategoricalVocab::from_values(
        pj.at("booker_values").get<std::vector<std::string>>());
    const auto& ej = pj.at("encoder");
    auto encoder = features::UserEncoder::from_params(
        ej.at("input_dim").get<int>(), ej.at("hidden_dim").get<int>(),
        ej.at("latent_dim").get<int>());
    for (auto* p : encoder.params().all()) {
      auto it = cp.tensors.find("pipeline/" + p->name);
      if (it == cp.tensors.end())
        throw MalformedInput("checkpoint missing tensor " + p->name);
      p->value = it->second;
    }
    pipeline = features::FeaturePipeline::from_parts(
        fcfg, true, std::move(user_norm), std::move(step_norm),
        std::move(device), std::move(booker), std::move(encoder));
  } else {
    pipeline = features::FeaturePipeline::from_parts(
        fcfg, false, {}, {}, {}, {}, {});
  }
  return LoadedModel{std::move(m), std::move(pipeline),
                     std::move(cp.manifest)};
}

}  // namespace reclab::train
