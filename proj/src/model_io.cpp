#include "binary_io.hpp"
#include "chansel/error.hpp"
#include "chansel/model.hpp"
#include "chansel/version.hpp"

namespace chansel {

using nlohmann::json;

void write_model(const ModelParams &params, const std::filesystem::path &manifest_path) {
  params.validate();
  auto payload = manifest_path;
  payload.replace_extension(".f64");
  json manifest = {
      {"format_version", kFormatVersion},
      {"tool_version", kToolVersion},
      {"layers",
       {{"input_channels", params.sizes.input_channels},
        {"taps", params.sizes.taps},
        {"features", params.sizes.features},
        {"classes", params.sizes.classes}}},
      {"class_symbols", params.class_symbols},
      {"seed", params.seed},
      {"config_hash", params.config_hash},
      {"params_hash", params_hash(params)},
      {"provenance", {{"parent_hash", params.provenance.parent_hash},
                      {"subset", params.provenance.subset}}},
      {"payload", payload.filename().string()},
  };
  if (!manifest_path.parent_path().empty())
    std::filesystem::create_directories(manifest_path.parent_path());
  detail::write_text(manifest_path, manifest.dump(2) + "\n");
  const auto flat = params.flatten();
  detail::write_f64_le(payload, flat);
}

ModelParams read_model(const std::filesystem::path &manifest_path) {
  json manifest;
  try {
    manifest = json::parse(detail::read_text(manifest_path));
  } catch (const json::exception &e) {
    throw IoError("bad model manifest " + manifest_path.string() + ": " + e.what());
  }
  if (manifest.value("format_version", 0) != kFormatVersion)
    throw IoError("unsupported model format version in " + manifest_path.string());
  const auto &layers = manifest.at("layers");
  LayerSizes sizes{layers.at("input_channels").get<std::size_t>(),
                   layers.at("taps").get<std::size_t>(), layers.at("features").get<std::size_t>(),
                   layers.at("classes").get<std::size_t>()};
  ModelParams p;
  p.sizes = sizes;
  const auto f = static_cast<Eigen::Index>(sizes.features);
  const auto k = static_cast<Eigen::Index>(sizes.classes);
  p.input_weights.resize(f, static_cast<Eigen::Index>(sizes.input_width()));
  p.hidden_bias.resize(f);
  p.output_weights.resize(k, f);
  p.output_bias.resize(k);
  p.class_symbols = manifest.at("class_symbols").get<std::vector<std::string>>();
  p.seed = manifest.value("seed", std::uint64_t{0});
  p.config_hash = manifest.value("config_hash", std::string());
  if (manifest.contains("provenance")) {
    p.provenance.parent_hash = manifest["provenance"].value("parent_hash", std::string());
    p.provenance.subset = manifest["provenance"].value("subset", std::string());
  }
  const auto payload = manifest_path.parent_path() / manifest.at("payload").get<std::string>();
  p.assign(detail::read_f64_le(payload, p.parameter_count()));
  p.validate();
  if (manifest.contains("params_hash") && manifest["params_hash"].get<std::string>() != params_hash(p))
    throw IoError("model payload does not match its manifest hash: " + manifest_path.string());
  return p;
}

} // namespace chansel
