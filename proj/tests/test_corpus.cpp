// Synthetic corpus generation, TSV I/O, and the view-pairing step.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "doctest.h"
#include "vid/corpus.hpp"
#include "vid/errors.hpp"
#include "vid/metrics.hpp"

using namespace vid;

namespace {

std::string temp_dir() {
  auto dir = std::filesystem::temp_directory_path() / "vid_corpus_test";
  std::filesystem::create_directories(dir);
  return dir.string();
}

std::size_t count_positives(const std::vector<Document>& docs) {
  std::size_t n = 0;
  for (const auto& d : docs) n += d.label == Label::Positive;
  return n;
}

}  // namespace

TEST_CASE("generator hits the positive rate exactly on labeled and test splits") {
  SynthConfig cfg;  // 2000 labeled / 8000 unlabeled / 1000 test at 9.2%
  SyntheticCorpus corpus = generate_synthetic(cfg);
  REQUIRE(corpus.labeled.size() == 2000);
  REQUIRE(corpus.unlabeled.size() == 8000);
  REQUIRE(corpus.test.size() == 1000);
  CHECK(count_positives(corpus.labeled) == 184);  // round(0.092 * 2000)
  CHECK(count_positives(corpus.test) == 92);      // round(0.092 * 1000)
  for (const auto& d : corpus.unlabeled) CHECK(!d.label.has_value());
}

TEST_CASE("every generated document mentions a lexicon drug") {
  SynthConfig cfg;
  cfg.n_labeled = 300;
  cfg.n_unlabeled = 300;
  cfg.n_test = 100;
  SyntheticCorpus corpus = generate_synthetic(cfg);
  for (const auto* split : {&corpus.labeled, &corpus.unlabeled, &corpus.test}) {
    for (const auto& d : *split) {
      CHECK_NOTHROW(tokenize(d.text, corpus.vocab));
    }
  }
}

TEST_CASE("generation is deterministic in the seed") {
  SynthConfig cfg;
  cfg.n_labeled = 50;
  cfg.n_unlabeled = 50;
  cfg.n_test = 50;
  SyntheticCorpus a = generate_synthetic(cfg);
  SyntheticCorpus b = generate_synthetic(cfg);
  cfg.seed = 99;
  SyntheticCorpus c = generate_synthetic(cfg);
  for (std::size_t i = 0; i < a.labeled.size(); ++i) {
    CHECK(a.labeled[i].text == b.labeled[i].text);
    CHECK(a.labeled[i].label == b.labeled[i].label);
  }
  bool any_differs = false;
  for (std::size_t i = 0; i < a.labeled.size(); ++i) {
    any_differs = any_differs || a.labeled[i].text != c.labeled[i].text;
  }
  CHECK(any_differs);
}

TEST_CASE("document ids are unique across all splits") {
  SynthConfig cfg;
  cfg.n_labeled = 100;
  cfg.n_unlabeled = 100;
  cfg.n_test = 100;
  SyntheticCorpus corpus = generate_synthetic(cfg);
  std::set<std::string> ids;
  for (const auto* split : {&corpus.labeled, &corpus.unlabeled, &corpus.test}) {
    for (const auto& d : *split) CHECK(ids.insert(d.id).second);
  }
}

// A naive-Bayes bag-of-words probe restricted to tokens adjacent to the drug
// mention. The drug-context channel is required to be informative enough on
// its own for this trivial model to beat F1 = 0.5.
TEST_CASE("bag-of-words probe on drug-adjacent tokens beats f1 0.5") {
  SynthConfig cfg;
  SyntheticCorpus corpus = generate_synthetic(cfg);

  auto context_ids = [&](const Document& d) {
    EncodedDocument enc = tokenize(d.text, corpus.vocab);
    std::vector<int> out;
    const std::size_t lo = enc.drug_position > 3 ? enc.drug_position - 3 : 1;
    const std::size_t hi = std::min(enc.drug_position + 3, enc.token_ids.size() - 2);
    for (std::size_t i = lo; i <= hi; ++i) {
      if (i != enc.drug_position) out.push_back(enc.token_ids[i]);
    }
    return out;
  };

  std::map<int, double> pos_counts, neg_counts;
  double pos_total = 1.0, neg_total = 1.0, n_pos = 0.0, n_neg = 0.0;
  for (const auto& d : corpus.labeled) {
    const bool pos = d.label == Label::Positive;
    (pos ? n_pos : n_neg) += 1.0;
    for (int id : context_ids(d)) {
      auto& counts = pos ? pos_counts : neg_counts;
      counts[id] += 1.0;
      (pos ? pos_total : neg_total) += 1.0;
    }
  }
  const double vocab_size = static_cast<double>(corpus.vocab.size());
  const double prior = std::log(n_pos / n_neg);

  std::vector<Label> preds, golds;
  for (const auto& d : corpus.test) {
    double score = prior;
    for (int id : context_ids(d)) {
      const double p_pos = (pos_counts[id] + 1.0) / (pos_total + vocab_size);
      const double p_neg = (neg_counts[id] + 1.0) / (neg_total + vocab_size);
      score += std::log(p_pos) - std::log(p_neg);
    }
    preds.push_back(score > 0.0 ? Label::Positive : Label::Negative);
    golds.push_back(*d.label);
  }
  const Prf1 m = prf1(confusion(preds, golds));
  MESSAGE("drug-context probe f1 = ", m.f1);
  CHECK(m.f1 > 0.5);
}

TEST_CASE("corpus tsv save/load round trip") {
  SynthConfig cfg;
  cfg.n_labeled = 40;
  cfg.n_unlabeled = 40;
  cfg.n_test = 40;
  SyntheticCorpus corpus = generate_synthetic(cfg);
  const std::string dir = temp_dir();

  save_corpus(dir + "/labeled.tsv", corpus.labeled, true);
  save_corpus(dir + "/unlabeled.tsv", corpus.unlabeled, false);
  LoadResult lab = load_corpus(dir + "/labeled.tsv", true, corpus.vocab);
  LoadResult unlab = load_corpus(dir + "/unlabeled.tsv", false, corpus.vocab);
  CHECK(lab.dropped_no_drug == 0);
  REQUIRE(lab.documents.size() == corpus.labeled.size());
  REQUIRE(unlab.documents.size() == corpus.unlabeled.size());
  for (std::size_t i = 0; i < lab.documents.size(); ++i) {
    CHECK(lab.documents[i].id == corpus.labeled[i].id);
    CHECK(lab.documents[i].text == corpus.labeled[i].text);
    CHECK(lab.documents[i].label == corpus.labeled[i].label);
  }
}

TEST_CASE("corpus loading rejects malformed rows") {
  SynthConfig cfg;
  cfg.n_labeled = 10;
  cfg.n_unlabeled = 10;
  cfg.n_test = 10;
  SyntheticCorpus corpus = generate_synthetic(cfg);
  const std::string dir = temp_dir();
  const std::string drug = corpus.vocab.drug_lexicon().front();

  auto write = [&](const std::string& name, const std::string& content) {
    std::ofstream out(dir + "/" + name);
    out << content;
    return dir + "/" + name;
  };

  CHECK_THROWS_AS(load_corpus(dir + "/does_not_exist.tsv", true, corpus.vocab), DataError);
  CHECK_THROWS_AS(
      load_corpus(write("bad_label.tsv", "a\t7\ttook " + drug + "\n"), true, corpus.vocab),
      DataError);
  CHECK_THROWS_AS(
      load_corpus(write("missing_field.tsv", "a\ttook " + drug + "\n"), true, corpus.vocab),
      DataError);
  CHECK_THROWS_AS(load_corpus(write("dup_id.tsv", "a\t0\ttook " + drug + "\na\t1\ttook " + drug +
                                                      "\n"),
                              true, corpus.vocab),
                  DataError);
  CHECK_THROWS_AS(
      load_corpus(write("labeled_in_pool.tsv", "a\t1\ttook " + drug + "\n"), false, corpus.vocab),
      DataError);
}

TEST_CASE("documents without a drug mention are dropped and counted") {
  SynthConfig cfg;
  cfg.n_labeled = 10;
  cfg.n_unlabeled = 10;
  cfg.n_test = 10;
  SyntheticCorpus corpus = generate_synthetic(cfg);
  const std::string dir = temp_dir();
  const std::string drug = corpus.vocab.drug_lexicon().front();
  {
    std::ofstream out(dir + "/mixed.tsv");
    out << "a\t1\ttook " << drug << "\n";
    out << "b\t0\tno mention here\n";
    out << "c\t0\t" << drug << " again\n";
  }
  LoadResult r = load_corpus(dir + "/mixed.tsv", true, corpus.vocab);
  CHECK(r.documents.size() == 2);
  CHECK(r.dropped_no_drug == 1);
}

TEST_CASE("validation split is stratified and exact") {
  SynthConfig cfg;
  cfg.n_labeled = 1000;
  cfg.n_unlabeled = 10;
  cfg.n_test = 10;
  cfg.positive_rate = 0.1;
  SyntheticCorpus corpus = generate_synthetic(cfg);
  auto [train, valid] = split_validation(corpus.labeled, 0.2, 5);
  CHECK(train.size() == 800);
  CHECK(valid.size() == 200);
  CHECK(count_positives(train) == 80);
  CHECK(count_positives(valid) == 20);

  // deterministic in the seed, different under another seed
  auto [train2, valid2] = split_validation(corpus.labeled, 0.2, 5);
  CHECK(train2[0].id == train[0].id);
  auto [train3, valid3] = split_validation(corpus.labeled, 0.2, 6);
  bool differs = false;
  for (std::size_t i = 0; i < train.size(); ++i) differs = differs || train3[i].id != train[i].id;
  CHECK(differs);

  CHECK_THROWS_AS(split_validation(corpus.labeled, 0.0, 1), ParamError);
  CHECK_THROWS_AS(split_validation(corpus.labeled, 1.0, 1), ParamError);
}

TEST_CASE("pair_views carries ids, labels, and both view vectors") {
  SynthConfig cfg;
  cfg.n_labeled = 12;
  cfg.n_unlabeled = 12;
  cfg.n_test = 12;
  SyntheticCorpus corpus = generate_synthetic(cfg);
  Rng rng(3);
  EncoderParams params = EncoderParams::init(corpus.vocab.size(), 64, 16, 1, 2, rng);
  std::vector<PairedViews> pairs = pair_views(corpus.labeled, corpus.vocab, params);
  REQUIRE(pairs.size() == corpus.labeled.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    CHECK(pairs[i].id == corpus.labeled[i].id);
    CHECK(pairs[i].label == corpus.labeled[i].label);
    CHECK(pairs[i].doc_repr.size() == 16);
    CHECK(pairs[i].drug_repr.size() == 16);
    // both views come from one pass over one document but are distinct rows
    CHECK(pairs[i].doc_repr != pairs[i].drug_repr);
  }
}

TEST_CASE("synth config validation") {
  SynthConfig cfg;
  cfg.positive_rate = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ParamError);
  cfg = SynthConfig{};
  cfg.n_labeled = 0;
  CHECK_THROWS_AS(cfg.validate(), ParamError);
  cfg = SynthConfig{};
  cfg.n_drugs = 0;
  CHECK_THROWS_AS(cfg.validate(), ParamError);
  cfg = SynthConfig{};
  cfg.signal_words = 0;
  CHECK_THROWS_AS(cfg.validate(), ParamError);
  CHECK_NOTHROW(SynthConfig{}.validate());
}
