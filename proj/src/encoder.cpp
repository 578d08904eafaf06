#include "vid/encoder.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

#include "vid/errors.hpp"

namespace vid {

std::string view_name(View v) {
  switch (v) {
    case View::Document: return "document";
    case View::Drug: return "drug";
    case View::Combined: return "combined";
  }
  throw ContractError("unknown view");
}

View view_from_name(const std::string& name) {
  if (name == "document") return View::Document;
  if (name == "drug") return View::Drug;
  if (name == "combined") return View::Combined;
  throw ParamError("unknown view name: " + name);
}

const std::vector<std::string>& Vocabulary::reserved_tokens() {
  static const std::vector<std::string> r = {"[cls]", "[sep]", "[pad]", "[unk]"};
  return r;
}

Vocabulary::Vocabulary() {
  for (const auto& t : reserved_tokens()) {
    index_.emplace(t, static_cast<int>(tokens_.size()));
    tokens_.push_back(t);
  }
}

int Vocabulary::add_token(const std::string& token) {
  auto it = index_.find(token);
  if (it != index_.end()) return it->second;
  const int id = static_cast<int>(tokens_.size());
  index_.emplace(token, id);
  tokens_.push_back(token);
  return id;
}

int Vocabulary::add_drug(const std::string& name) {
  const int id = add_token(name);
  drug_ids_.insert(id);
  return id;
}

int Vocabulary::id_of(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token_of(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw DataError("token id out of range: " + std::to_string(id));
  }
  return tokens_[static_cast<std::size_t>(id)];
}

bool Vocabulary::is_drug(int id) const { return drug_ids_.count(id) > 0; }

std::vector<std::string> Vocabulary::drug_lexicon() const {
  std::vector<std::string> names;
  for (int id : drug_ids_) names.push_back(tokens_[static_cast<std::size_t>(id)]);
  std::sort(names.begin(), names.end());
  return names;
}

void Vocabulary::save(const std::string& vocab_path, const std::string& lexicon_path) const {
  std::ofstream vf(vocab_path);
  if (!vf) throw DataError("cannot write vocabulary file: " + vocab_path);
  for (const auto& t : tokens_) vf << t << '\n';
  std::ofstream lf(lexicon_path);
  if (!lf) throw DataError("cannot write lexicon file: " + lexicon_path);
  for (const auto& name : drug_lexicon()) lf << name << '\n';
}

Vocabulary Vocabulary::load(const std::string& vocab_path, const std::string& lexicon_path) {
  std::ifstream vf(vocab_path);
  if (!vf) throw DataError("cannot read vocabulary file: " + vocab_path);
  Vocabulary vocab;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(vf, line)) {
    if (line_no < reserved_tokens().size()) {
      if (line != reserved_tokens()[line_no]) {
        throw DataError("vocabulary file " + vocab_path + " line " + std::to_string(line_no + 1) +
                        ": expected reserved token " + reserved_tokens()[line_no]);
      }
    } else {
      const int id = vocab.add_token(line);
      if (static_cast<std::size_t>(id) != line_no) {
        throw DataError("vocabulary file " + vocab_path + ": duplicate token '" + line + "'");
      }
    }
    ++line_no;
  }
  std::ifstream lf(lexicon_path);
  if (!lf) throw DataError("cannot read lexicon file: " + lexicon_path);
  while (std::getline(lf, line)) {
    if (line.empty()) continue;
    if (vocab.index_.find(line) == vocab.index_.end()) {
      throw DataError("lexicon token '" + line + "' missing from vocabulary");
    }
    vocab.drug_ids_.insert(vocab.id_of(line));
  }
  return vocab;
}

EncodedDocument tokenize(const std::string& text, const Vocabulary& vocab, std::size_t max_len) {
  if (text.empty()) throw ParamError("tokenize: empty text");
  std::vector<int> ids;
  ids.push_back(Vocabulary::kCls);
  std::string word;
  auto flush = [&] {
    if (!word.empty()) {
      if (ids.size() < max_len - 1) ids.push_back(vocab.id_of(word));
      word.clear();
    }
  };
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      word.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
    }
  }
  flush();
  ids.push_back(Vocabulary::kSep);

  EncodedDocument doc;
  doc.token_ids = std::move(ids);
  doc.attention_mask.assign(doc.token_ids.size(), true);
  for (std::size_t i = 1; i + 1 < doc.token_ids.size(); ++i) {
    if (vocab.is_drug(doc.token_ids[i])) {
      doc.drug_position = i;
      return doc;
    }
  }
  throw NoDrugMention("no drug-lexicon token in: " + text);
}

EncoderParams EncoderParams::init(std::size_t vocab_size, std::size_t max_len, std::size_t width,
                                  std::size_t layers, std::size_t heads, Rng& rng) {
  if (width % heads != 0) {
    throw ParamError("encoder width " + std::to_string(width) + " not divisible by " +
                     std::to_string(heads) + " heads");
  }
  EncoderParams p;
  p.vocab_size = vocab_size;
  p.max_len = max_len;
  p.width = width;
  p.layers = layers;
  p.heads = heads;
  // Positional noise is kept well below the token-embedding scale so content
  // dominates the contextual mixture.
  const double emb_std = 1.0;
  const double pos_std = 0.1;
  const double w_std = 1.0 / std::sqrt(static_cast<double>(width));
  p.token_embedding = ad::Tensor::randn({vocab_size, width}, emb_std, rng);
  p.position_embedding = ad::Tensor::randn({max_len, width}, pos_std, rng);
  const std::size_t dh = width / heads;
  const std::size_t hidden = 4 * width;
  for (std::size_t l = 0; l < layers; ++l) {
    Layer layer;
    for (std::size_t h = 0; h < heads; ++h) {
      layer.wq.push_back(ad::Tensor::randn({width, dh}, w_std, rng));
      layer.wk.push_back(ad::Tensor::randn({width, dh}, w_std, rng));
      layer.wv.push_back(ad::Tensor::randn({width, dh}, w_std, rng));
    }
    layer.wo = ad::Tensor::randn({width, width}, w_std, rng);
    layer.ln1_gain = ad::Tensor::from_data(std::vector<double>(width, 1.0), {width});
    layer.ln1_bias = ad::Tensor::zeros({width});
    layer.ff1 = ad::Tensor::randn({width, hidden}, w_std, rng);
    layer.ff1_bias = ad::Tensor::zeros({hidden});
    layer.ff2 = ad::Tensor::randn({hidden, width}, 1.0 / std::sqrt(static_cast<double>(hidden)), rng);
    layer.ff2_bias = ad::Tensor::zeros({width});
    layer.ln2_gain = ad::Tensor::from_data(std::vector<double>(width, 1.0), {width});
    layer.ln2_bias = ad::Tensor::zeros({width});
    p.layer_stack.push_back(std::move(layer));
  }
  return p;
}

std::vector<ad::Tensor> EncoderParams::all_tensors() const {
  std::vector<ad::Tensor> out = {token_embedding, position_embedding};
  for (const auto& l : layer_stack) {
    for (const auto& t : l.wq) out.push_back(t);
    for (const auto& t : l.wk) out.push_back(t);
    for (const auto& t : l.wv) out.push_back(t);
    out.push_back(l.wo);
    out.push_back(l.ln1_gain);
    out.push_back(l.ln1_bias);
    out.push_back(l.ff1);
    out.push_back(l.ff1_bias);
    out.push_back(l.ff2);
    out.push_back(l.ff2_bias);
    out.push_back(l.ln2_gain);
    out.push_back(l.ln2_bias);
  }
  return out;
}

ad::Tensor encode(const EncodedDocument& doc, const EncoderParams& params) {
  const std::size_t len = doc.token_ids.size();
  if (len > params.max_len) {
    throw DataError("document length " + std::to_string(len) + " exceeds max_len " +
                    std::to_string(params.max_len));
  }
  for (int id : doc.token_ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= params.vocab_size) {
      throw DataError("token id " + std::to_string(id) + " outside vocabulary of size " +
                      std::to_string(params.vocab_size));
    }
  }

  ad::Tensor x = ad::embedding_lookup(params.token_embedding, doc.token_ids);
  std::vector<int> positions(len);
  for (std::size_t i = 0; i < len; ++i) positions[i] = static_cast<int>(i);
  x = ad::add(x, ad::embedding_lookup(params.position_embedding, positions));

  for (const auto& layer : params.layer_stack) {
    // multi-head self-attention with residual
    ad::Tensor head_out;
    for (std::size_t h = 0; h < params.heads; ++h) {
      ad::Tensor q = ad::matmul(x, layer.wq[h]);
      ad::Tensor k = ad::matmul(x, layer.wk[h]);
      ad::Tensor v = ad::matmul(x, layer.wv[h]);
      // Geometric per-head distance penalties (1/2, 1/4, ...) keep each row's
      // mixture anchored to its neighborhood, so the first row summarizes the
      // document opening and a mention row summarizes its local context.
      const double slope = 0.5 / static_cast<double>(1 << h);
      ad::Tensor a = ad::attention(q, k, v, doc.attention_mask, slope);
      head_out = h == 0 ? a : ad::concat_cols(head_out, a);
    }
    x = ad::layer_norm(ad::add(x, ad::matmul(head_out, layer.wo)), layer.ln1_gain, layer.ln1_bias);
    // position-wise feed-forward with residual
    ad::Tensor ff = ad::relu(ad::add_row(ad::matmul(x, layer.ff1), layer.ff1_bias));
    ff = ad::add_row(ad::matmul(ff, layer.ff2), layer.ff2_bias);
    x = ad::layer_norm(ad::add(x, ff), layer.ln2_gain, layer.ln2_bias);
  }
  return x;
}

std::vector<double> extract_view(const ad::Tensor& encoded, const EncodedDocument& doc, View view) {
  const auto& shape = encoded.shape();
  if (shape.size() != 2 || shape[0] != doc.token_ids.size()) {
    throw ContractError("extract_view: encoding does not match document");
  }
  std::size_t row;
  switch (view) {
    case View::Document: row = 0; break;
    case View::Drug: row = doc.drug_position; break;
    case View::Combined:
      throw ContractError("extract_view: combined view is a concatenation, not a row");
  }
  const std::size_t d = shape[1];
  std::vector<double> out(d);
  std::copy(encoded.data().begin() + static_cast<long>(row * d),
            encoded.data().begin() + static_cast<long>((row + 1) * d), out.begin());
  return out;
}

}  // namespace vid
