/* C API for the view-distillation library. All functions return a status
 * code; on failure vid_last_error() describes the most recent error of the
 * calling thread. Strings returned through `char**` out-parameters are
 * heap-allocated and must be released with vid_string_free().
 */
#ifndef VID_H
#define VID_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

enum {
  VID_OK = 0,
  VID_ERR_USAGE = 1,    /* bad parameters or flags */
  VID_ERR_DATA = 2,     /* malformed corpora, checkpoint mismatches */
  VID_ERR_INTERNAL = 3, /* everything else */
};

const char* vid_version(void);
const char* vid_last_error(void);
void vid_string_free(char* s);

/* Experiment configuration: temperature, lambda, epochs, seed, encoder
 * dimensions, optimizer settings. Keys match the key=value config file
 * format (vid_config_set("lambda", "0.5"), ...). */
typedef struct vid_config vid_config;
vid_config* vid_config_new(void);
void vid_config_free(vid_config* cfg);
int vid_config_set(vid_config* cfg, const char* key, const char* value);
int vid_config_load_file(vid_config* cfg, const char* path);

/* Synthetic corpus configuration. Keys: n_labeled, n_unlabeled, n_test,
 * positive_rate, seed, n_drugs, n_filler, channel_noise, leak_rate,
 * signal_words. */
typedef struct vid_synth_config vid_synth_config;
vid_synth_config* vid_synth_config_new(void);
void vid_synth_config_free(vid_synth_config* cfg);
int vid_synth_config_set(vid_synth_config* cfg, const char* key, const char* value);

/* Writes labeled.tsv, unlabeled.tsv, test.tsv, manifest.json plus the
 * vocabulary and drug-lexicon files into out_dir. */
int vid_generate(const vid_synth_config* cfg, const char* out_dir, char** report);

/* Runs the full pipeline on a generated corpus directory and writes the two
 * student checkpoints, metrics.json, config.txt and run.json into run_dir. */
int vid_train(const vid_config* cfg, const char* corpus_dir, const char* run_dir, char** report);

/* Scores the checkpoints in run_dir on the corpus test split. per_view also
 * reports each student alone; force skips the config-hash check. */
int vid_eval(const vid_config* cfg, const char* corpus_dir, const char* run_dir, int per_view,
             int force, char** report);

/* Baselines, the pretrain-x-finetune permutation grid, and full VID over the
 * given seeds. `only` (NULL or "" for all) restricts the report to one
 * method; report_json_path (NULL to skip) receives per-seed raw values. */
int vid_ablate(const vid_config* cfg, const char* corpus_dir, const uint64_t* seeds,
               size_t n_seeds, const char* only, const char* report_json_path, char** report);

#ifdef __cplusplus
}
#endif

#endif /* VID_H */
