#ifndef VID_CORPUS_HPP
#define VID_CORPUS_HPP

#include <optional>
#include <string>
#include <vector>

#include "vid/encoder.hpp"

namespace vid {

enum class Label : int { Negative = 0, Positive = 1 };

struct Document {
  std::string id;
  std::string text;
  std::optional<Label> label;
};

// Document and drug view vectors of one document, both taken from the same
// forward pass. Carries the id that links pseudo-labels across views.
struct PairedViews {
  std::string id;
  std::vector<double> doc_repr;
  std::vector<double> drug_repr;
  std::optional<Label> label;
};

struct SynthConfig {
  std::size_t n_labeled = 2000;
  std::size_t n_unlabeled = 8000;
  std::size_t n_test = 1000;
  double positive_rate = 0.092;
  std::uint64_t seed = 1;
  std::size_t n_drugs = 4;
  std::size_t n_filler = 120;
  // Per-channel probability that a document's class signal is absent from
  // that channel. The two channels are corrupted independently, so neither
  // view alone sees every positive.
  double channel_noise = 0.10;
  double leak_rate = 0.02;  // chance a negative document carries a spurious signal word
  // How many distinct words each signal channel draws from. Wider channels
  // spread the class evidence across more word types, so a small labeled set
  // covers the lexicon only thinly.
  std::size_t signal_words = 10;

  void validate() const;
};

struct SyntheticCorpus {
  std::vector<Document> labeled;
  std::vector<Document> unlabeled;
  std::vector<Document> test;
  Vocabulary vocab;
  SynthConfig config;
};

// TSV corpus I/O: `id<TAB>label<TAB>text` when labeled, `id<TAB>text` when
// not. Documents without a drug-lexicon token are dropped with a count.
struct LoadResult {
  std::vector<Document> documents;
  std::size_t dropped_no_drug = 0;
};

LoadResult load_corpus(const std::string& path, bool labeled, const Vocabulary& vocab);
void save_corpus(const std::string& path, const std::vector<Document>& docs, bool labeled);

// Template-based generator standing in for a real ADR corpus. Positive
// documents carry symptom words adjacent to the drug mention and negative
// sentiment words elsewhere; the two signals are dropped independently per
// document. L and Test hit positive_rate exactly by construction.
SyntheticCorpus generate_synthetic(const SynthConfig& cfg);

// Stratified split preserving the class ratio within one document per class.
std::pair<std::vector<Document>, std::vector<Document>> split_validation(
    const std::vector<Document>& labeled, double fraction, std::uint64_t seed);

// One encoder pass per document; both views come from that pass.
std::vector<PairedViews> pair_views(const std::vector<Document>& docs, const Vocabulary& vocab,
                                    const EncoderParams& params);

}  // namespace vid

#endif
