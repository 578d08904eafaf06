#ifndef VID_CHECKPOINT_HPP
#define VID_CHECKPOINT_HPP

#include <string>

#include "vid/config.hpp"
#include "vid/distill.hpp"
#include "vid/encoder.hpp"

namespace vid {

// A checkpoint is a JSON manifest (`<base>.json`: format version, view tag,
// array shapes, config hash) plus `<base>.bin` holding the arrays as raw
// little-endian doubles in manifest order. Both files are written to a
// temporary name and renamed, so an interrupted save leaves no partial
// checkpoint behind.
inline constexpr int kCheckpointFormatVersion = 1;

void save_checkpoint(const std::string& base_path, const EncoderParams& encoder,
                     const Classifier& classifier, const ExperimentConfig& cfg);

struct LoadedCheckpoint {
  EncoderParams encoder;
  Classifier classifier;
  std::string config_hash;
};

// Rejects a config-hash mismatch unless `force`; shape mismatches are always
// rejected.
LoadedCheckpoint load_checkpoint(const std::string& base_path, const ExperimentConfig& cfg,
                                 bool force = false);

}  // namespace vid

#endif
