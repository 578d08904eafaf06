#ifndef VID_CONFIG_HPP
#define VID_CONFIG_HPP

#include <cstdint>
#include <map>
#include <string>

namespace vid {

// Every knob of one run. Defaults follow the reference setup: T=2, λ=0.5,
// 5 teacher/distillation epochs, 1 fine-tuning epoch, 20% validation split.
struct ExperimentConfig {
  double temperature = 2.0;
  double lambda = 0.5;
  std::size_t teacher_epochs = 5;
  std::size_t distill_epochs = 5;
  std::size_t finetune_epochs = 1;
  std::uint64_t seed = 1;

  std::size_t width = 128;
  std::size_t layers = 2;
  std::size_t heads = 2;
  std::size_t max_len = 64;

  double lr = 5e-2;
  // Fine-tuning runs for a single epoch, so it gets a larger step than the
  // main loop: one pass must be enough to pull the student to the mixed
  // objective's optimum, where the soft-label term keeps the predictions
  // measurably softer than hard-label training alone would.
  double finetune_lr = 5e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double weight_decay = 0.01;
  std::size_t batch_size = 8;
  double val_fraction = 0.2;
  double head_init_std = 0.1;

  // Runs the in-pipeline invariant assertions (teacher immutability,
  // label-transfer round-trip). Excluded from the config hash.
  bool check_invariants = false;

  void validate() const;
  void set(const std::string& key, const std::string& value);

  // Deterministic key=value rendering; basis of the config hash.
  std::map<std::string, std::string> to_map() const;
  std::string canonical_string() const;
  std::string config_hash() const;  // FNV-1a 64 of the canonical string, hex

  static ExperimentConfig from_file(const std::string& path);
  void save(const std::string& path) const;
};

}  // namespace vid

#endif
