// Command-line front end over the C API in vid.h.
//
//   vid generate --labeled 2000 --unlabeled 8000 --test 1000 --pos-rate 0.092 --seed 7
//   vid train    --corpus DIR [--run DIR] [--config FILE] [--set key=value ...]
//   vid eval     --corpus DIR --run DIR [--per-view] [--force]
//   vid ablate   --corpus DIR [--seeds K | --seed-list 1,2,3] [--only NAME]
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 internal.

#include <cstdio>
#include <cstdlib>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vid.h"

namespace {

std::string output_root() {
  const char* env = std::getenv("VID_RUN_DIR");
  return env && *env ? env : "runs";
}

int report_status(int status, char* report) {
  if (status == VID_OK) {
    if (report) std::fputs(report, stdout);
  } else {
    std::fprintf(stderr, "error: %s\n", vid_last_error());
  }
  vid_string_free(report);
  return status;
}

struct ConfigHandle {
  vid_config* p = vid_config_new();
  ~ConfigHandle() { vid_config_free(p); }
};

struct SynthHandle {
  vid_synth_config* p = vid_synth_config_new();
  ~SynthHandle() { vid_synth_config_free(p); }
};

// Applies a config file first, then flag overrides, so flags win.
int apply_config(vid_config* cfg, const std::string& config_file,
                 const std::vector<std::pair<std::string, std::string>>& overrides) {
  if (!config_file.empty()) {
    const int rc = vid_config_load_file(cfg, config_file.c_str());
    if (rc != VID_OK) return rc;
  }
  for (const auto& [key, value] : overrides) {
    const int rc = vid_config_set(cfg, key.c_str(), value.c_str());
    if (rc != VID_OK) return rc;
  }
  return VID_OK;
}

std::vector<std::pair<std::string, std::string>> parse_overrides(
    const std::vector<std::string>& raw, std::string* bad) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& kv : raw) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos) {
      *bad = kv;
      return {};
    }
    out.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"View-distillation trainer for two-view text classification"};
  app.require_subcommand(1);

  // generate
  auto* generate = app.add_subcommand("generate", "Write a synthetic corpus");
  std::string gen_out = output_root() + "/corpus";
  std::uint64_t n_labeled = 2000, n_unlabeled = 8000, n_test = 1000, gen_seed = 1;
  double pos_rate = 0.092;
  generate->add_option("--labeled", n_labeled, "labeled document count");
  generate->add_option("--unlabeled", n_unlabeled, "unlabeled document count");
  generate->add_option("--test", n_test, "test document count");
  generate->add_option("--pos-rate", pos_rate, "positive class rate in (0,1)");
  generate->add_option("--seed", gen_seed, "generator seed");
  generate->add_option("--out", gen_out, "output directory");

  // train
  auto* train = app.add_subcommand("train", "Run the distillation pipeline");
  std::string train_corpus, train_run = output_root() + "/run", train_config;
  std::vector<std::string> train_sets;
  double train_lambda = -1.0, train_temperature = -1.0;
  std::int64_t train_seed = -1;
  train->add_option("--corpus", train_corpus, "corpus directory")->required();
  train->add_option("--run", train_run, "run output directory");
  train->add_option("--config", train_config, "key=value config file");
  train->add_option("--set", train_sets, "config override key=value (repeatable)");
  train->add_option("--lambda", train_lambda, "fine-tuning mix weight in [0,1]");
  train->add_option("--temperature", train_temperature, "soft-label temperature");
  train->add_option("--seed", train_seed, "run seed");

  // eval
  auto* eval = app.add_subcommand("eval", "Score checkpoints on the test split");
  std::string eval_corpus, eval_run, eval_config;
  std::vector<std::string> eval_sets;
  bool per_view = false, force = false;
  eval->add_option("--corpus", eval_corpus, "corpus directory")->required();
  eval->add_option("--run", eval_run, "run directory with checkpoints")->required();
  eval->add_option("--config", eval_config, "key=value config file");
  eval->add_option("--set", eval_sets, "config override key=value (repeatable)");
  eval->add_flag("--per-view", per_view, "also report each view's classifier alone");
  eval->add_flag("--force", force, "skip the checkpoint config-hash check");

  // ablate
  auto* ablate = app.add_subcommand("ablate", "Baselines and permutation grid over seeds");
  std::string ab_corpus, ab_config, ab_only, ab_json;
  std::vector<std::string> ab_sets;
  std::uint64_t ab_seeds = 5, ab_base_seed = 1;
  std::vector<std::uint64_t> ab_seed_list;
  ablate->add_option("--corpus", ab_corpus, "corpus directory")->required();
  ablate->add_option("--config", ab_config, "key=value config file");
  ablate->add_option("--set", ab_sets, "config override key=value (repeatable)");
  ablate->add_option("--seeds", ab_seeds, "number of seeds (base-seed, base-seed+1, ...)");
  ablate->add_option("--base-seed", ab_base_seed, "first seed");
  ablate->add_option("--seed-list", ab_seed_list, "explicit seed list")->delimiter(',');
  ablate->add_option("--only", ab_only, "restrict report to one method");
  ablate->add_option("--report-json", ab_json, "write per-seed raw values as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : VID_ERR_USAGE;
  }

  if (generate->parsed()) {
    SynthHandle synth;
    const std::pair<const char*, std::string> kv[] = {
        {"n_labeled", std::to_string(n_labeled)}, {"n_unlabeled", std::to_string(n_unlabeled)},
        {"n_test", std::to_string(n_test)},       {"positive_rate", std::to_string(pos_rate)},
        {"seed", std::to_string(gen_seed)}};
    for (const auto& [key, value] : kv) {
      if (vid_synth_config_set(synth.p, key, value.c_str()) != VID_OK) {
        std::fprintf(stderr, "error: %s\n", vid_last_error());
        return VID_ERR_USAGE;
      }
    }
    char* report = nullptr;
    const int status = vid_generate(synth.p, gen_out.c_str(), &report);
    return report_status(status, report);
  }

  auto collect = [](std::vector<std::string> sets, double lambda, double temperature,
                    std::int64_t seed) {
    std::vector<std::pair<std::string, std::string>> out;
    std::string bad;
    out = parse_overrides(sets, &bad);
    if (!bad.empty()) return std::make_pair(out, bad);
    if (lambda >= 0.0) out.emplace_back("lambda", std::to_string(lambda));
    if (temperature >= 0.0) out.emplace_back("temperature", std::to_string(temperature));
    if (seed >= 0) out.emplace_back("seed", std::to_string(seed));
    return std::make_pair(out, std::string());
  };

  if (train->parsed()) {
    ConfigHandle cfg;
    auto [overrides, bad] = collect(train_sets, train_lambda, train_temperature, train_seed);
    if (!bad.empty()) {
      std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", bad.c_str());
      return VID_ERR_USAGE;
    }
    int rc = apply_config(cfg.p, train_config, overrides);
    if (rc != VID_OK) {
      std::fprintf(stderr, "error: %s\n", vid_last_error());
      return rc;
    }
    char* report = nullptr;
    const int status = vid_train(cfg.p, train_corpus.c_str(), train_run.c_str(), &report);
    return report_status(status, report);
  }

  if (eval->parsed()) {
    ConfigHandle cfg;
    // default to the config the run was trained with
    if (eval_config.empty()) eval_config = eval_run + "/config.txt";
    auto [overrides, bad] = collect(eval_sets, -1.0, -1.0, -1);
    if (!bad.empty()) {
      std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", bad.c_str());
      return VID_ERR_USAGE;
    }
    int rc = apply_config(cfg.p, eval_config, overrides);
    if (rc != VID_OK) {
      std::fprintf(stderr, "error: %s\n", vid_last_error());
      return rc;
    }
    char* report = nullptr;
    const int status =
        vid_eval(cfg.p, eval_corpus.c_str(), eval_run.c_str(), per_view, force, &report);
    return report_status(status, report);
  }

  if (ablate->parsed()) {
    ConfigHandle cfg;
    auto [overrides, bad] = collect(ab_sets, -1.0, -1.0, -1);
    if (!bad.empty()) {
      std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", bad.c_str());
      return VID_ERR_USAGE;
    }
    int rc = apply_config(cfg.p, ab_config, overrides);
    if (rc != VID_OK) {
      std::fprintf(stderr, "error: %s\n", vid_last_error());
      return rc;
    }
    std::vector<std::uint64_t> seeds = ab_seed_list;
    if (seeds.empty()) {
      for (std::uint64_t i = 0; i < ab_seeds; ++i) seeds.push_back(ab_base_seed + i);
    }
    char* report = nullptr;
    const int status = vid_ablate(cfg.p, ab_corpus.c_str(), seeds.data(), seeds.size(),
                                  ab_only.empty() ? nullptr : ab_only.c_str(),
                                  ab_json.empty() ? nullptr : ab_json.c_str(), &report);
    return report_status(status, report);
  }

  return VID_ERR_USAGE;
}
