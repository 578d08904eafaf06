#include "vid/checkpoint.hpp"

#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "vid/errors.hpp"

namespace vid {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void write_doubles(std::ofstream& out, const std::vector<double>& values) {
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
}

void read_doubles(std::ifstream& in, std::vector<double>& values, const std::string& path) {
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!in) throw DataError("checkpoint data file truncated: " + path);
}

}  // namespace

void save_checkpoint(const std::string& base_path, const EncoderParams& encoder,
                     const Classifier& classifier, const ExperimentConfig& cfg) {
  std::vector<ad::Tensor> arrays = encoder.all_tensors();
  arrays.push_back(classifier.weights());
  arrays.push_back(classifier.bias());

  json manifest;
  manifest["format_version"] = kCheckpointFormatVersion;
  manifest["view"] = view_name(classifier.view());
  manifest["config_hash"] = cfg.config_hash();
  manifest["encoder"] = {{"vocab_size", encoder.vocab_size}, {"max_len", encoder.max_len},
                         {"width", encoder.width},           {"layers", encoder.layers},
                         {"heads", encoder.heads}};
  json shapes = json::array();
  for (const auto& t : arrays) shapes.push_back(t.shape());
  manifest["shapes"] = shapes;

  const std::string bin_path = base_path + ".bin";
  const std::string json_path = base_path + ".json";
  const std::string bin_tmp = bin_path + ".tmp";
  const std::string json_tmp = json_path + ".tmp";
  {
    std::ofstream out(bin_tmp, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint: " + bin_tmp);
    for (const auto& t : arrays) write_doubles(out, t.data());
    if (!out) throw DataError("short write to checkpoint: " + bin_tmp);
  }
  {
    std::ofstream out(json_tmp);
    if (!out) throw DataError("cannot write checkpoint manifest: " + json_tmp);
    out << manifest.dump(2) << '\n';
  }
  fs::rename(bin_tmp, bin_path);
  fs::rename(json_tmp, json_path);
}

LoadedCheckpoint load_checkpoint(const std::string& base_path, const ExperimentConfig& cfg,
                                 bool force) {
  const std::string json_path = base_path + ".json";
  const std::string bin_path = base_path + ".bin";
  std::ifstream jf(json_path);
  if (!jf) throw DataError("cannot open checkpoint manifest: " + json_path);
  json manifest;
  try {
    jf >> manifest;
  } catch (const json::exception& e) {
    throw DataError("malformed checkpoint manifest " + json_path + ": " + e.what());
  }
  if (manifest.value("format_version", -1) != kCheckpointFormatVersion) {
    throw DataError("unsupported checkpoint format version in " + json_path);
  }
  const std::string stored_hash = manifest.value("config_hash", "");
  if (!force && stored_hash != cfg.config_hash()) {
    throw DataError("checkpoint " + base_path + " was written with config hash " + stored_hash +
                    ", current config hashes to " + cfg.config_hash() +
                    " (use force to load anyway)");
  }

  const auto& enc = manifest.at("encoder");
  LoadedCheckpoint out;
  out.config_hash = stored_hash;
  // Rebuild the parameter skeleton, then overwrite every array from disk.
  Rng dummy(0);
  out.encoder = EncoderParams::init(enc.at("vocab_size").get<std::size_t>(),
                                    enc.at("max_len").get<std::size_t>(),
                                    enc.at("width").get<std::size_t>(),
                                    enc.at("layers").get<std::size_t>(),
                                    enc.at("heads").get<std::size_t>(), dummy);
  const View view = view_from_name(manifest.at("view").get<std::string>());
  const std::size_t head_in = view_input_dim(view, out.encoder.width);
  ad::Tensor head_w = ad::Tensor::zeros({head_in, 2}, /*requires_grad=*/true);
  ad::Tensor head_b = ad::Tensor::zeros({2}, /*requires_grad=*/true);

  std::vector<ad::Tensor> arrays = out.encoder.all_tensors();
  arrays.push_back(head_w);
  arrays.push_back(head_b);

  const auto& shapes = manifest.at("shapes");
  if (shapes.size() != arrays.size()) {
    throw DataError("checkpoint " + base_path + ": expected " + std::to_string(arrays.size()) +
                    " arrays, manifest lists " + std::to_string(shapes.size()));
  }
  for (std::size_t i = 0; i < arrays.size(); ++i) {
    if (shapes[i].get<std::vector<std::size_t>>() != arrays[i].shape()) {
      throw DataError("checkpoint " + base_path + ": array " + std::to_string(i) +
                      " shape mismatch against the configured encoder dimensions");
    }
  }

  std::ifstream bf(bin_path, std::ios::binary);
  if (!bf) throw DataError("cannot open checkpoint data: " + bin_path);
  for (auto& t : arrays) read_doubles(bf, t.data(), bin_path);

  out.classifier = Classifier::from_weights(view, head_w, head_b);
  return out;
}

}  // namespace vid
