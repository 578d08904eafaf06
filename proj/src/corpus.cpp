#include "vid/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "vid/errors.hpp"

namespace vid {

namespace {

// Wide signal vocabularies: a couple of thousand labeled documents cannot
// cover them, but the unlabeled pool can — the regime where pseudo-labeling
// has something to add over purely supervised training.
const std::vector<std::string> kSymptoms = {
    "dizzy",      "nausea",    "headache",     "insomnia", "rash",      "tremor",
    "drowsy",     "vomiting",  "cramps",       "numbness", "fatigue",   "itching",
    "sweating",   "swelling",  "blurred",      "pounding", "dryness",   "constipation",
    "diarrhea",   "jittery",   "agitation",    "weakness", "soreness",  "bloating",
    "chills",     "fever",     "migraine",     "twitching", "shaking",  "groggy",
    "heartburn",  "ringing",   "vertigo",      "spasms",   "hives",     "nightmares",
    "stiffness",  "tingling",  "nosebleed",    "wheezing"};

const std::vector<std::string> kNegSentiment = {
    "awful",       "terrible",  "hate",       "worst",     "miserable", "horrible",
    "ruined",      "unbearable", "exhausted", "crying",    "angry",     "frustrated",
    "hopeless",    "regret",    "useless",    "disappointed", "upset",  "dreadful",
    "nasty",       "suffering", "agony",      "misery",    "disgusted", "furious",
    "resentful",   "bitter",    "gross",      "unhappy",   "wrecked",   "drained",
    "overwhelmed", "desperate", "struggling", "complaining", "done",    "quitting",
    "brutal",      "intolerable", "torture",  "nightmare"};

const std::vector<std::string> kBenefit = {
    "helping",  "better",    "works",     "relief",     "great",     "fine",
    "calm",     "stable",    "improved",  "grateful",   "happy",     "good",
    "amazing",  "thankful",  "effective", "wonderful",  "steady",    "clearer",
    "easier",   "manageable", "hopeful",  "recovered",  "healed",    "normal",
    "balanced", "rested",    "energized", "focused",    "productive", "comfortable"};

const std::vector<std::string> kBaseFiller = {
    "the",   "my",    "this",  "that",  "taking", "took",   "been",  "on",
    "day",   "week",  "month", "since", "started", "doctor", "dose",  "pill",
    "night", "today", "again", "still", "just",   "really", "now",   "feel",
    "feeling", "after", "before", "morning", "first", "time",  "new",   "old",
    "meds",  "with",  "and",   "but",   "so",     "it",     "me",    "for"};

std::string make_word(Rng& rng, std::size_t syllables) {
  static const char* cons[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"};
  static const char* vows[] = {"a", "e", "i", "o", "u"};
  std::string w;
  for (std::size_t s = 0; s < syllables; ++s) {
    w += cons[rng.below(14)];
    w += vows[rng.below(5)];
  }
  return w;
}

struct WordLists {
  std::vector<std::string> drugs;
  std::vector<std::string> fillers;
};

WordLists build_word_lists(const SynthConfig& cfg, Rng& rng) {
  static const char* suffixes[] = {"ol", "ine", "pam", "zac", "il", "one"};
  WordLists lists;
  std::unordered_set<std::string> used;
  for (const auto& w : kSymptoms) used.insert(w);
  for (const auto& w : kNegSentiment) used.insert(w);
  for (const auto& w : kBenefit) used.insert(w);
  while (lists.drugs.size() < cfg.n_drugs) {
    std::string name = make_word(rng, 2 + rng.below(2)) + suffixes[rng.below(6)];
    if (used.insert(name).second) lists.drugs.push_back(name);
  }
  for (const auto& w : kBaseFiller) {
    if (lists.fillers.size() < cfg.n_filler && used.insert(w).second) lists.fillers.push_back(w);
  }
  while (lists.fillers.size() < cfg.n_filler) {
    std::string w = make_word(rng, 2);
    if (used.insert(w).second) lists.fillers.push_back(w);
  }
  return lists;
}

// One document: filler backbone, a drug mention, and the two class signals
// dropped independently at channel_noise.
std::string make_text(Label label, const WordLists& lists, const SynthConfig& cfg, Rng& rng) {
  const std::size_t n_filler_words = 3 + rng.below(3);
  std::vector<std::string> words;
  for (std::size_t i = 0; i < n_filler_words; ++i)
    words.push_back(lists.fillers[rng.below(lists.fillers.size())]);

  const std::size_t drug_at = rng.below(words.size() + 1);
  std::vector<std::string> drug_block = {lists.drugs[rng.below(lists.drugs.size())]};

  const bool positive = label == Label::Positive;
  const bool drug_signal = positive ? rng.uniform() >= cfg.channel_noise
                                    : rng.uniform() < cfg.leak_rate;
  const bool doc_signal = positive ? rng.uniform() >= cfg.channel_noise
                                   : rng.uniform() < cfg.leak_rate;
  const std::size_t n_sym = std::min(cfg.signal_words, kSymptoms.size());
  const std::size_t n_sent = std::min(cfg.signal_words, kNegSentiment.size());
  const std::size_t n_ben = std::min(cfg.signal_words, kBenefit.size());
  if (drug_signal) {
    const std::size_t n = 3 + rng.below(2);
    for (std::size_t i = 0; i < n; ++i) drug_block.push_back(kSymptoms[rng.below(n_sym)]);
  }
  std::vector<std::string> extras;
  if (doc_signal) {
    const std::size_t n = 3 + rng.below(2);
    for (std::size_t i = 0; i < n; ++i) extras.push_back(kNegSentiment[rng.below(n_sent)]);
  }
  if (!positive && rng.uniform() < 0.5) {
    extras.push_back(kBenefit[rng.below(n_ben)]);
  }

  std::vector<std::string> out;
  for (std::size_t i = 0; i <= words.size(); ++i) {
    if (i == drug_at)
      for (const auto& w : drug_block) out.push_back(w);
    if (i < words.size()) out.push_back(words[i]);
  }
  // sentiment words open the post, away from the drug block
  out.insert(out.begin(), extras.begin(), extras.end());
  std::string text;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (i) text += ' ';
    text += out[i];
  }
  return text;
}

std::vector<Document> make_split(const std::string& prefix, std::size_t n, bool exact_rate,
                                 bool keep_labels, const WordLists& lists, const SynthConfig& cfg,
                                 Rng& rng) {
  std::vector<Label> labels;
  if (exact_rate) {
    const std::size_t n_pos = static_cast<std::size_t>(
        std::llround(cfg.positive_rate * static_cast<double>(n)));
    labels.assign(n, Label::Negative);
    std::fill(labels.begin(), labels.begin() + static_cast<long>(n_pos), Label::Positive);
    rng.shuffle(labels);
  } else {
    for (std::size_t i = 0; i < n; ++i)
      labels.push_back(rng.uniform() < cfg.positive_rate ? Label::Positive : Label::Negative);
  }
  std::vector<Document> docs;
  docs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Document d;
    std::ostringstream id;
    id << prefix << i;
    d.id = id.str();
    d.text = make_text(labels[i], lists, cfg, rng);
    if (keep_labels) d.label = labels[i];
    docs.push_back(std::move(d));
  }
  return docs;
}

}  // namespace

void SynthConfig::validate() const {
  if (n_labeled == 0 || n_unlabeled == 0 || n_test == 0)
    throw ParamError("synthetic corpus counts must be positive");
  if (!(positive_rate > 0.0 && positive_rate < 1.0))
    throw ParamError("positive_rate must be in (0, 1), got " + std::to_string(positive_rate));
  if (n_drugs == 0) throw ParamError("need at least one drug name");
  if (!(channel_noise >= 0.0 && channel_noise < 1.0))
    throw ParamError("channel_noise must be in [0, 1)");
  if (!(leak_rate >= 0.0 && leak_rate < 1.0)) throw ParamError("leak_rate must be in [0, 1)");
  if (signal_words == 0) throw ParamError("signal_words must be positive");
}

SyntheticCorpus generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  Rng vocab_rng = rng.fork(0x766f6361);
  WordLists lists = build_word_lists(cfg, vocab_rng);

  SyntheticCorpus corpus;
  corpus.config = cfg;
  for (const auto& w : lists.drugs) corpus.vocab.add_drug(w);
  for (const auto& w : kSymptoms) corpus.vocab.add_token(w);
  for (const auto& w : kNegSentiment) corpus.vocab.add_token(w);
  for (const auto& w : kBenefit) corpus.vocab.add_token(w);
  for (const auto& w : lists.fillers) corpus.vocab.add_token(w);

  Rng l_rng = rng.fork(1);
  Rng u_rng = rng.fork(2);
  Rng t_rng = rng.fork(3);
  corpus.labeled = make_split("L", cfg.n_labeled, true, true, lists, cfg, l_rng);
  corpus.unlabeled = make_split("U", cfg.n_unlabeled, false, false, lists, cfg, u_rng);
  corpus.test = make_split("T", cfg.n_test, true, true, lists, cfg, t_rng);
  return corpus;
}

LoadResult load_corpus(const std::string& path, bool labeled, const Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file: " + path);
  LoadResult result;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t tab = line.find('\t', start);
      if (tab == std::string::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, tab - start));
      start = tab + 1;
    }
    const std::string where = path + " line " + std::to_string(line_no);
    Document doc;
    if (labeled) {
      if (fields.size() != 3)
        throw DataError(where + ": expected id<TAB>label<TAB>text");
      if (fields[1] != "0" && fields[1] != "1")
        throw DataError(where + ": label must be 0 or 1, got '" + fields[1] + "'");
      doc.id = fields[0];
      doc.label = fields[1] == "1" ? Label::Positive : Label::Negative;
      doc.text = fields[2];
    } else {
      if (fields.size() == 3 && (fields[1] == "0" || fields[1] == "1"))
        throw DataError(where + ": labeled row in an unlabeled corpus");
      if (fields.size() != 2)
        throw DataError(where + ": expected id<TAB>text");
      doc.id = fields[0];
      doc.text = fields[1];
    }
    if (!seen.insert(doc.id).second)
      throw DataError(where + ": duplicate document id '" + doc.id + "'");
    try {
      tokenize(doc.text, vocab);
    } catch (const NoDrugMention&) {
      ++result.dropped_no_drug;
      continue;
    }
    result.documents.push_back(std::move(doc));
  }
  return result;
}

void save_corpus(const std::string& path, const std::vector<Document>& docs, bool labeled) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write corpus file: " + path);
  for (const auto& d : docs) {
    if (labeled) {
      if (!d.label) throw ContractError("save_corpus: labeled output but document " + d.id +
                                        " has no label");
      out << d.id << '\t' << static_cast<int>(*d.label) << '\t' << d.text << '\n';
    } else {
      out << d.id << '\t' << d.text << '\n';
    }
  }
}

std::pair<std::vector<Document>, std::vector<Document>> split_validation(
    const std::vector<Document>& labeled, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw ParamError("validation fraction must be in (0, 1)");
  std::vector<std::size_t> pos_idx, neg_idx;
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    if (!labeled[i].label) throw ContractError("split_validation: unlabeled document " + labeled[i].id);
    (*labeled[i].label == Label::Positive ? pos_idx : neg_idx).push_back(i);
  }
  Rng rng(seed);
  rng.shuffle(pos_idx);
  rng.shuffle(neg_idx);
  std::vector<Document> train, valid;
  auto deal = [&](std::vector<std::size_t>& idx) {
    const std::size_t n_valid = static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(idx.size())));
    for (std::size_t i = 0; i < idx.size(); ++i)
      (i < n_valid ? valid : train).push_back(labeled[idx[i]]);
  };
  deal(pos_idx);
  deal(neg_idx);
  if (train.empty() || valid.empty())
    throw DataError("corpus too small to stratify into train/validation");
  return {std::move(train), std::move(valid)};
}

std::vector<PairedViews> pair_views(const std::vector<Document>& docs, const Vocabulary& vocab,
                                    const EncoderParams& params) {
  std::vector<PairedViews> pairs;
  pairs.reserve(docs.size());
  for (const auto& doc : docs) {
    EncodedDocument enc = tokenize(doc.text, vocab, params.max_len);
    ad::Tensor repr = encode(enc, params);
    PairedViews pv;
    pv.id = doc.id;
    pv.doc_repr = extract_view(repr, enc, View::Document);
    pv.drug_repr = extract_view(repr, enc, View::Drug);
    pv.label = doc.label;
    pairs.push_back(std::move(pv));
  }
  return pairs;
}

}  // namespace vid
