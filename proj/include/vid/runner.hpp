#ifndef VID_RUNNER_HPP
#define VID_RUNNER_HPP

#include <string>
#include <vector>

#include "vid/config.hpp"
#include "vid/corpus.hpp"
#include "vid/metrics.hpp"

namespace vid {

// Command-level entry points shared by the C API and the CLI. Each command
// reads its inputs, writes artifacts into a directory, and returns the text
// that the CLI prints. All file writes go through write-then-rename.

// Writes labeled.tsv / unlabeled.tsv / test.tsv / manifest.json plus the
// vocabulary and drug lexicon files into `out_dir`.
std::string run_generate(const SynthConfig& cfg, const std::string& out_dir);

// Runs the full pipeline on a generated corpus directory: stratified
// validation split, teacher training, cross-view distillation, fine-tuning.
// Writes student_doc.{json,bin}, student_drug.{json,bin}, metrics.json,
// config.txt and run.json into `run_dir`.
std::string run_train(const ExperimentConfig& cfg, const std::string& corpus_dir,
                      const std::string& run_dir);

// Scores saved checkpoints on the corpus test split. With `per_view`, also
// reports each student alone.
std::string run_eval(const ExperimentConfig& cfg, const std::string& corpus_dir,
                     const std::string& run_dir, bool per_view, bool force = false);

// Baselines, the four pretrain×finetune permutations, and full VID over the
// given seeds. `only` (optional) restricts the report to one method name.
std::string run_ablate(const ExperimentConfig& cfg, const std::string& corpus_dir,
                       const std::vector<std::uint64_t>& seeds, const std::string& only,
                       const std::string& report_json_path);

// Canonical method row names used by run_ablate, in report order.
const std::vector<std::string>& ablation_method_names();

// Atomically replaces `path` with `content`.
void write_file_atomic(const std::string& path, const std::string& content);

// FNV-1a 64 hash of a file's bytes, hex; DataError when unreadable.
std::string hash_file(const std::string& path);

}  // namespace vid

#endif
