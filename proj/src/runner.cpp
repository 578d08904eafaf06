#include "vid/runner.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"
#include "vid/checkpoint.hpp"
#include "vid/distill.hpp"
#include "vid/errors.hpp"

namespace vid {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr std::uint64_t kEncoderSalt = 0xE5C0DE;
constexpr std::uint64_t kCombinedSalt = 0xC0B1;
constexpr std::uint64_t kSameViewSalt = 0x5A3E;

std::string path_join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

json synth_config_to_json(const SynthConfig& cfg) {
  return {{"n_labeled", cfg.n_labeled},     {"n_unlabeled", cfg.n_unlabeled},
          {"n_test", cfg.n_test},           {"positive_rate", cfg.positive_rate},
          {"seed", cfg.seed},               {"n_drugs", cfg.n_drugs},
          {"n_filler", cfg.n_filler},       {"channel_noise", cfg.channel_noise},
          {"leak_rate", cfg.leak_rate},     {"signal_words", cfg.signal_words}};
}

std::string corpus_content(const std::vector<Document>& docs, bool labeled) {
  std::ostringstream os;
  for (const auto& d : docs) {
    if (labeled)
      os << d.id << '\t' << static_cast<int>(*d.label) << '\t' << d.text << '\n';
    else
      os << d.id << '\t' << d.text << '\n';
  }
  return os.str();
}

struct CorpusDir {
  Vocabulary vocab;
  std::vector<Document> labeled;
  std::vector<Document> unlabeled;
  std::vector<Document> test;
  std::string manifest_hash;
};

CorpusDir load_corpus_dir(const std::string& dir) {
  CorpusDir c;
  c.vocab = Vocabulary::load(path_join(dir, "vocab.txt"), path_join(dir, "lexicon.txt"));
  c.labeled = load_corpus(path_join(dir, "labeled.tsv"), true, c.vocab).documents;
  c.unlabeled = load_corpus(path_join(dir, "unlabeled.tsv"), false, c.vocab).documents;
  c.test = load_corpus(path_join(dir, "test.tsv"), true, c.vocab).documents;
  c.manifest_hash = hash_file(path_join(dir, "manifest.json"));
  return c;
}

EncoderParams make_encoder(const Vocabulary& vocab, const ExperimentConfig& cfg) {
  Rng base(cfg.seed);
  Rng enc_rng = base.fork(kEncoderSalt);
  return EncoderParams::init(vocab.size(), cfg.max_len, cfg.width, cfg.layers, cfg.heads, enc_rng);
}

Prf1 score_classifier(const Classifier& clf, const std::vector<PairedViews>& test) {
  std::vector<Label> preds, golds;
  for (const auto& pv : test) {
    preds.push_back(clf.predict(pv));
    golds.push_back(*pv.label);
  }
  return prf1(confusion(preds, golds));
}

Prf1 score_ensemble(const Classifier& cd, const Classifier& cg,
                    const std::vector<PairedViews>& test) {
  std::vector<Label> preds, golds;
  for (const auto& pv : test) {
    preds.push_back(predict_ensemble(cd, cg, pv).first);
    golds.push_back(*pv.label);
  }
  return prf1(confusion(preds, golds));
}

json prf1_to_json(const Prf1& m) {
  return {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
}

std::string metric_row(const std::string& name, const Prf1& m) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << name << '\t' << m.precision << '\t' << m.recall
     << '\t' << m.f1 << '\n';
  return os.str();
}

}  // namespace

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + tmp);
    out << content;
    if (!out) throw DataError("short write to file: " + tmp);
  }
  fs::rename(tmp, path);
}

std::string hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file for hashing: " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

std::string run_generate(const SynthConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  fs::create_directories(out_dir);
  SyntheticCorpus corpus = generate_synthetic(cfg);

  write_file_atomic(path_join(out_dir, "labeled.tsv"), corpus_content(corpus.labeled, true));
  write_file_atomic(path_join(out_dir, "unlabeled.tsv"), corpus_content(corpus.unlabeled, false));
  write_file_atomic(path_join(out_dir, "test.tsv"), corpus_content(corpus.test, true));

  const std::string vocab_tmp = path_join(out_dir, "vocab.txt.tmp");
  const std::string lex_tmp = path_join(out_dir, "lexicon.txt.tmp");
  corpus.vocab.save(vocab_tmp, lex_tmp);
  fs::rename(vocab_tmp, path_join(out_dir, "vocab.txt"));
  fs::rename(lex_tmp, path_join(out_dir, "lexicon.txt"));

  json manifest;
  manifest["format_version"] = 1;
  manifest["synth_config"] = synth_config_to_json(cfg);
  manifest["corpus_hash"] = {{"labeled", hash_file(path_join(out_dir, "labeled.tsv"))},
                             {"unlabeled", hash_file(path_join(out_dir, "unlabeled.tsv"))},
                             {"test", hash_file(path_join(out_dir, "test.tsv"))}};
  write_file_atomic(path_join(out_dir, "manifest.json"), manifest.dump(2) + "\n");

  std::ostringstream os;
  os << "wrote " << corpus.labeled.size() << " labeled, " << corpus.unlabeled.size()
     << " unlabeled, " << corpus.test.size() << " test documents to " << out_dir << "\n";
  return os.str();
}

std::string run_train(const ExperimentConfig& cfg, const std::string& corpus_dir,
                      const std::string& run_dir) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(run_dir);
  CorpusDir corpus = load_corpus_dir(corpus_dir);

  auto [train_docs, valid_docs] = split_validation(corpus.labeled, cfg.val_fraction, cfg.seed);
  EncoderParams encoder = make_encoder(corpus.vocab, cfg);
  std::vector<PairedViews> train_pairs = pair_views(train_docs, corpus.vocab, encoder);
  std::vector<PairedViews> valid_pairs = pair_views(valid_docs, corpus.vocab, encoder);
  std::vector<PairedViews> pool_pairs = pair_views(corpus.unlabeled, corpus.vocab, encoder);
  const auto t_encode = std::chrono::steady_clock::now();

  VidResult result = vid_pipeline(train_pairs, pool_pairs, cfg);
  const auto t_train = std::chrono::steady_clock::now();

  json metrics;
  metrics["config_hash"] = cfg.config_hash();
  metrics["validation"] = {
      {"ensemble", prf1_to_json(score_ensemble(result.student_doc, result.student_drug, valid_pairs))},
      {"student_doc", prf1_to_json(score_classifier(result.student_doc, valid_pairs))},
      {"student_drug", prf1_to_json(score_classifier(result.student_drug, valid_pairs))},
      {"teacher_doc", prf1_to_json(score_classifier(result.teacher_doc, valid_pairs))},
      {"teacher_drug", prf1_to_json(score_classifier(result.teacher_drug, valid_pairs))}};

  save_checkpoint(path_join(run_dir, "student_doc"), encoder, result.student_doc, cfg);
  save_checkpoint(path_join(run_dir, "student_drug"), encoder, result.student_drug, cfg);
  write_file_atomic(path_join(run_dir, "metrics.json"), metrics.dump(2) + "\n");
  write_file_atomic(path_join(run_dir, "config.txt"), cfg.canonical_string());

  const auto seconds = [](auto a, auto b) {
    return std::chrono::duration<double>(b - a).count();
  };
  json manifest;
  manifest["config"] = cfg.to_map();
  manifest["config_hash"] = cfg.config_hash();
  manifest["seed"] = cfg.seed;
  manifest["corpus_manifest_hash"] = corpus.manifest_hash;
  manifest["checkpoints"] = {path_join(run_dir, "student_doc"), path_join(run_dir, "student_drug")};
  manifest["metrics_file"] = path_join(run_dir, "metrics.json");
  manifest["timings_sec"] = {{"encode", seconds(t0, t_encode)},
                             {"train", seconds(t_encode, t_train)}};
  write_file_atomic(path_join(run_dir, "run.json"), manifest.dump(2) + "\n");

  std::ostringstream os;
  os << "method\tprecision\trecall\tf1\n";
  os << metric_row("ensemble (validation)",
                   score_ensemble(result.student_doc, result.student_drug, valid_pairs));
  os << "checkpoints and manifest written to " << run_dir << "\n";
  return os.str();
}

std::string run_eval(const ExperimentConfig& cfg, const std::string& corpus_dir,
                     const std::string& run_dir, bool per_view, bool force) {
  cfg.validate();
  CorpusDir corpus = load_corpus_dir(corpus_dir);
  LoadedCheckpoint cd = load_checkpoint(path_join(run_dir, "student_doc"), cfg, force);
  LoadedCheckpoint cg = load_checkpoint(path_join(run_dir, "student_drug"), cfg, force);
  if (cd.encoder.vocab_size != corpus.vocab.size()) {
    throw DataError("checkpoint encoder vocabulary size " + std::to_string(cd.encoder.vocab_size) +
                    " does not match vocabulary of size " + std::to_string(corpus.vocab.size()));
  }
  std::vector<PairedViews> test_pairs = pair_views(corpus.test, corpus.vocab, cd.encoder);

  std::ostringstream os;
  os << "method\tprecision\trecall\tf1\n";
  if (per_view) {
    os << metric_row("doc-view", score_classifier(cd.classifier, test_pairs));
    os << metric_row("drug-view", score_classifier(cg.classifier, test_pairs));
  }
  os << metric_row("ensemble", score_ensemble(cd.classifier, cg.classifier, test_pairs));
  return os.str();
}

const std::vector<std::string>& ablation_method_names() {
  static const std::vector<std::string> names = {
      "document-view", "drug-view",     "combined-view", "p-doc-f-doc",
      "p-drug-f-drug", "p-doc-f-drug",  "p-drug-f-doc",  "vid"};
  return names;
}

std::string run_ablate(const ExperimentConfig& cfg, const std::string& corpus_dir,
                       const std::vector<std::uint64_t>& seeds, const std::string& only,
                       const std::string& report_json_path) {
  cfg.validate();
  if (seeds.empty()) throw ParamError("ablate: need at least one seed");
  if (!only.empty()) {
    const auto& names = ablation_method_names();
    bool known = false;
    for (const auto& n : names) known = known || n == only || ("p-" + only) == n;
    if (!known && only != "combined") throw ParamError("unknown ablation method: " + only);
  }
  CorpusDir corpus = load_corpus_dir(corpus_dir);

  std::vector<RunResult> results;
  for (const auto& name : ablation_method_names()) results.push_back({name, {}});

  for (std::uint64_t seed : seeds) {
    ExperimentConfig scfg = cfg;
    scfg.seed = seed;
    auto [train_docs, valid_docs] = split_validation(corpus.labeled, scfg.val_fraction, scfg.seed);
    EncoderParams encoder = make_encoder(corpus.vocab, scfg);
    std::vector<PairedViews> train_pairs = pair_views(train_docs, corpus.vocab, encoder);
    std::vector<PairedViews> pool_pairs = pair_views(corpus.unlabeled, corpus.vocab, encoder);
    std::vector<PairedViews> test_pairs = pair_views(corpus.test, corpus.vocab, encoder);

    VidResult vid = vid_pipeline(train_pairs, pool_pairs, scfg);

    Rng extra(scfg.seed ^ kSameViewSalt);
    Rng r_sd = extra.fork(1), r_fd = extra.fork(2), r_sg = extra.fork(3), r_fg = extra.fork(4);
    Classifier p_doc_f_doc = build_student(vid.teacher_doc, vid.teacher_doc, View::Document,
                                           train_pairs, pool_pairs, scfg, r_sd, r_fd);
    Classifier p_drug_f_drug = build_student(vid.teacher_drug, vid.teacher_drug, View::Drug,
                                             train_pairs, pool_pairs, scfg, r_sg, r_fg);
    Rng r_comb(scfg.seed ^ kCombinedSalt);
    Classifier combined = train_teacher(train_pairs, View::Combined, scfg, r_comb);

    results[0].per_seed.push_back(score_classifier(vid.teacher_doc, test_pairs));
    results[1].per_seed.push_back(score_classifier(vid.teacher_drug, test_pairs));
    results[2].per_seed.push_back(score_classifier(combined, test_pairs));
    results[3].per_seed.push_back(score_classifier(p_doc_f_doc, test_pairs));
    results[4].per_seed.push_back(score_classifier(p_drug_f_drug, test_pairs));
    results[5].per_seed.push_back(score_classifier(vid.student_drug, test_pairs));
    results[6].per_seed.push_back(score_classifier(vid.student_doc, test_pairs));
    results[7].per_seed.push_back(score_ensemble(vid.student_doc, vid.student_drug, test_pairs));
  }

  std::vector<RunResult> selected;
  for (const auto& r : results) {
    if (only.empty() || r.name == only || r.name == "p-" + only ||
        (only == "combined" && r.name == "combined-view")) {
      selected.push_back(r);
    }
  }
  if (selected.empty()) throw ParamError("ablation filter matched nothing: " + only);

  if (!report_json_path.empty()) {
    write_file_atomic(report_json_path, runs_to_json(selected) + "\n");
  }

  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << "method\tprecision\trecall\tf1\n";
  for (const auto& s : summarize_runs(selected)) {
    os << s.name << '\t' << s.mean.precision << "±" << s.stddev.precision << '\t' << s.mean.recall
       << "±" << s.stddev.recall << '\t' << s.mean.f1 << "±" << s.stddev.f1 << '\n';
  }
  return os.str();
}

}  // namespace vid
