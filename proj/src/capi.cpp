#include "vid.h"

#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include "vid/config.hpp"
#include "vid/corpus.hpp"
#include "vid/errors.hpp"
#include "vid/runner.hpp"

struct vid_config {
  vid::ExperimentConfig cfg;
};

struct vid_synth_config {
  vid::SynthConfig cfg;
};

namespace {

thread_local std::string g_last_error;

int fail(const std::exception& e, int code) {
  g_last_error = e.what();
  return code;
}

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    return VID_OK;
  } catch (const vid::Error& e) {
    return fail(e, static_cast<int>(e.code()));
  } catch (const std::exception& e) {
    return fail(e, VID_ERR_INTERNAL);
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void set_report(char** report, const std::string& text) {
  if (report) *report = dup_string(text);
}

double parse_double_or_throw(const std::string& key, const char* value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != std::strlen(value)) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw vid::ParamError("synth config key '" + key + "': expected a number, got '" +
                          std::string(value) + "'");
  }
}

std::uint64_t parse_u64_or_throw(const std::string& key, const char* value) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(value, &pos);
    if (pos != std::strlen(value)) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw vid::ParamError("synth config key '" + key + "': expected an integer, got '" +
                          std::string(value) + "'");
  }
}

void require(const void* p, const char* what) {
  if (!p) throw vid::ParamError(std::string("null ") + what);
}

}  // namespace

extern "C" {

const char* vid_version(void) { return "0.1.0"; }

const char* vid_last_error(void) { return g_last_error.c_str(); }

void vid_string_free(char* s) { std::free(s); }

vid_config* vid_config_new(void) { return new vid_config(); }

void vid_config_free(vid_config* cfg) { delete cfg; }

int vid_config_set(vid_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    require(cfg, "config");
    require(key, "key");
    require(value, "value");
    cfg->cfg.set(key, value);
  });
}

int vid_config_load_file(vid_config* cfg, const char* path) {
  return guarded([&] {
    require(cfg, "config");
    require(path, "path");
    cfg->cfg = vid::ExperimentConfig::from_file(path);
  });
}

vid_synth_config* vid_synth_config_new(void) { return new vid_synth_config(); }

void vid_synth_config_free(vid_synth_config* cfg) { delete cfg; }

int vid_synth_config_set(vid_synth_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    require(cfg, "synth config");
    require(key, "key");
    require(value, "value");
    const std::string k = key;
    auto& c = cfg->cfg;
    if (k == "n_labeled") c.n_labeled = parse_u64_or_throw(k, value);
    else if (k == "n_unlabeled") c.n_unlabeled = parse_u64_or_throw(k, value);
    else if (k == "n_test") c.n_test = parse_u64_or_throw(k, value);
    else if (k == "positive_rate") c.positive_rate = parse_double_or_throw(k, value);
    else if (k == "seed") c.seed = parse_u64_or_throw(k, value);
    else if (k == "n_drugs") c.n_drugs = parse_u64_or_throw(k, value);
    else if (k == "n_filler") c.n_filler = parse_u64_or_throw(k, value);
    else if (k == "channel_noise") c.channel_noise = parse_double_or_throw(k, value);
    else if (k == "leak_rate") c.leak_rate = parse_double_or_throw(k, value);
    else if (k == "signal_words") c.signal_words = parse_u64_or_throw(k, value);
    else throw vid::ParamError("unknown synth config key: " + k);
    c.validate();
  });
}

int vid_generate(const vid_synth_config* cfg, const char* out_dir, char** report) {
  return guarded([&] {
    require(cfg, "synth config");
    require(out_dir, "out_dir");
    set_report(report, vid::run_generate(cfg->cfg, out_dir));
  });
}

int vid_train(const vid_config* cfg, const char* corpus_dir, const char* run_dir, char** report) {
  return guarded([&] {
    require(cfg, "config");
    require(corpus_dir, "corpus_dir");
    require(run_dir, "run_dir");
    set_report(report, vid::run_train(cfg->cfg, corpus_dir, run_dir));
  });
}

int vid_eval(const vid_config* cfg, const char* corpus_dir, const char* run_dir, int per_view,
             int force, char** report) {
  return guarded([&] {
    require(cfg, "config");
    require(corpus_dir, "corpus_dir");
    require(run_dir, "run_dir");
    set_report(report, vid::run_eval(cfg->cfg, corpus_dir, run_dir, per_view != 0, force != 0));
  });
}

int vid_ablate(const vid_config* cfg, const char* corpus_dir, const uint64_t* seeds,
               size_t n_seeds, const char* only, const char* report_json_path, char** report) {
  return guarded([&] {
    require(cfg, "config");
    require(corpus_dir, "corpus_dir");
    if (n_seeds > 0) require(seeds, "seeds");
    std::vector<std::uint64_t> seed_list(seeds, seeds + n_seeds);
    set_report(report, vid::run_ablate(cfg->cfg, corpus_dir, seed_list,
                                       only ? only : "",
                                       report_json_path ? report_json_path : ""));
  });
}

}  // extern "C"
