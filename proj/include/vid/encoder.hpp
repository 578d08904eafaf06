#ifndef VID_ENCODER_HPP
#define VID_ENCODER_HPP

#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "vid/rng.hpp"
#include "vid/tensor.hpp"

namespace vid {

enum class View { Document, Drug, Combined };

std::string view_name(View v);
View view_from_name(const std::string& name);

// Token inventory with fixed reserved ids. The drug lexicon is a subset of
// the vocabulary; a document must contain at least one lexicon token.
class Vocabulary {
 public:
  static constexpr int kCls = 0;
  static constexpr int kSep = 1;
  static constexpr int kPad = 2;
  static constexpr int kUnk = 3;
  static const std::vector<std::string>& reserved_tokens();

  Vocabulary();

  int add_token(const std::string& token);           // idempotent, returns id
  int add_drug(const std::string& name);             // adds to vocab and lexicon
  int id_of(const std::string& token) const;         // kUnk when absent
  const std::string& token_of(int id) const;
  bool is_drug(int id) const;
  std::size_t size() const { return tokens_.size(); }
  std::vector<std::string> drug_lexicon() const;

  void save(const std::string& vocab_path, const std::string& lexicon_path) const;
  static Vocabulary load(const std::string& vocab_path, const std::string& lexicon_path);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
  std::unordered_set<int> drug_ids_;
};

// Token ids with CLS first and SEP last, plus the index of the first drug
// token and the attention mask (false over padding).
struct EncodedDocument {
  std::vector<int> token_ids;
  std::size_t drug_position = 0;
  std::vector<bool> attention_mask;
};

// Weights of the miniature self-attention encoder. One instance is shared by
// every classifier of a run; encode() never mutates it.
struct EncoderParams {
  std::size_t vocab_size = 0;
  std::size_t max_len = 64;
  std::size_t width = 32;       // d
  std::size_t layers = 2;
  std::size_t heads = 2;

  ad::Tensor token_embedding;   // vocab×d
  ad::Tensor position_embedding;  // maxlen×d

  struct Layer {
    std::vector<ad::Tensor> wq, wk, wv;  // per head, d×(d/heads)
    ad::Tensor wo;                       // d×d
    ad::Tensor ln1_gain, ln1_bias;       // d
    ad::Tensor ff1, ff1_bias;            // d×4d, 4d
    ad::Tensor ff2, ff2_bias;            // 4d×d, d
    ad::Tensor ln2_gain, ln2_bias;       // d
  };
  std::vector<Layer> layer_stack;

  static EncoderParams init(std::size_t vocab_size, std::size_t max_len, std::size_t width,
                            std::size_t layers, std::size_t heads, Rng& rng);

  // Flat parameter list in a fixed serialization order.
  std::vector<ad::Tensor> all_tensors() const;
};

// Lowercases, splits on non-alphanumeric runs, maps through the vocabulary,
// wraps in CLS/SEP, and locates the first drug-lexicon token. Throws
// NoDrugMention when the document names no known drug.
EncodedDocument tokenize(const std::string& text, const Vocabulary& vocab,
                         std::size_t max_len = 64);

// Full forward pass; returns the [len×d] contextual representation matrix.
ad::Tensor encode(const EncodedDocument& doc, const EncoderParams& params);

// View extraction is a row pick from an existing encoding: Document view is
// the CLS row, Drug view the row at drug_position.
std::vector<double> extract_view(const ad::Tensor& encoded, const EncodedDocument& doc, View view);

}  // namespace vid

#endif
