#include "vid/distill.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "vid/errors.hpp"

namespace vid {

namespace {

std::array<double, 2> softmax2(const std::array<double, 2>& z, double temperature) {
  const double zmax = std::max(z[0], z[1]);
  const double e0 = std::exp((z[0] - zmax) / temperature);
  const double e1 = std::exp((z[1] - zmax) / temperature);
  return {e0 / (e0 + e1), e1 / (e0 + e1)};
}

std::array<double, 2> one_hot(Label label) {
  return label == Label::Positive ? std::array<double, 2>{0.0, 1.0}
                                  : std::array<double, 2>{1.0, 0.0};
}

struct TrainExample {
  std::vector<double> input;
  std::array<double, 2> hard{0.0, 0.0};
  std::array<double, 2> soft{0.0, 0.0};
};

// (1−λ)·CE(softmax(Z), hard) + λ·CE(softmax_T(Z), soft); λ=0 and λ=1
// collapse to the single active term exactly.
ad::Tensor mixed_loss_graph(const ad::Tensor& logits, std::vector<double> hard,
                            std::vector<double> soft, std::size_t b, double lambda,
                            double soft_temperature) {
  if (lambda == 0.0) {
    return ad::cross_entropy(ad::softmax_t(logits, 1.0),
                             ad::Tensor::from_data(std::move(hard), {b, 2}));
  }
  if (lambda == 1.0) {
    return ad::cross_entropy(ad::softmax_t(logits, soft_temperature),
                             ad::Tensor::from_data(std::move(soft), {b, 2}));
  }
  ad::Tensor hard_ce = ad::cross_entropy(ad::softmax_t(logits, 1.0),
                                         ad::Tensor::from_data(std::move(hard), {b, 2}));
  ad::Tensor soft_ce = ad::cross_entropy(ad::softmax_t(logits, soft_temperature),
                                         ad::Tensor::from_data(std::move(soft), {b, 2}));
  return ad::add(ad::scale(hard_ce, 1.0 - lambda), ad::scale(soft_ce, lambda));
}

// Minibatch training shared by the teacher, distillation, and fine-tuning
// stages.
void train_loop(Classifier& clf, const std::vector<TrainExample>& examples, std::size_t epochs,
                double lambda, double soft_temperature, const ExperimentConfig& cfg, Rng& rng) {
  if (examples.empty()) throw ParamError("training set is empty");
  const std::size_t in_dim = clf.input_dim();
  ad::Adam opt(cfg.lr, cfg.beta1, cfg.beta2, 1e-8, cfg.weight_decay);
  std::vector<ad::Tensor> params = clf.params();
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t b = std::min(cfg.batch_size, order.size() - start);
      std::vector<double> x(b * in_dim), hard(b * 2), soft(b * 2);
      for (std::size_t i = 0; i < b; ++i) {
        const TrainExample& ex = examples[order[start + i]];
        if (ex.input.size() != in_dim) {
          throw DimensionError("training input of length " + std::to_string(ex.input.size()) +
                               ", classifier expects " + std::to_string(in_dim));
        }
        std::copy(ex.input.begin(), ex.input.end(), x.begin() + static_cast<long>(i * in_dim));
        hard[i * 2] = ex.hard[0];
        hard[i * 2 + 1] = ex.hard[1];
        soft[i * 2] = ex.soft[0];
        soft[i * 2 + 1] = ex.soft[1];
      }
      ad::Tensor xb = ad::Tensor::from_data(std::move(x), {b, in_dim});
      ad::Tensor logits = ad::add_row(ad::matmul(xb, clf.weights()), clf.bias());
      ad::Tensor loss = mixed_loss_graph(logits, std::move(hard), std::move(soft), b, lambda,
                                         soft_temperature);
      opt.zero_grad(params);
      ad::backward(loss);
      opt.step(params);
    }
  }
}

}  // namespace

std::vector<double> view_input(const PairedViews& pv, View view) {
  switch (view) {
    case View::Document: return pv.doc_repr;
    case View::Drug: return pv.drug_repr;
    case View::Combined: {
      std::vector<double> both = pv.doc_repr;
      both.insert(both.end(), pv.drug_repr.begin(), pv.drug_repr.end());
      return both;
    }
  }
  throw ContractError("unknown view");
}

std::size_t view_input_dim(View view, std::size_t width) {
  return view == View::Combined ? 2 * width : width;
}

Classifier::Classifier(View view, std::size_t width, double init_std, Rng& rng) : view_(view) {
  const std::size_t in_dim = view_input_dim(view, width);
  weights_ = ad::Tensor::randn({in_dim, 2}, init_std, rng, /*requires_grad=*/true);
  bias_ = ad::Tensor::zeros({2}, /*requires_grad=*/true);
}

Classifier Classifier::from_weights(View view, ad::Tensor weights, ad::Tensor bias) {
  if (weights.shape().size() != 2 || weights.shape()[1] != 2 ||
      bias.shape() != std::vector<std::size_t>{2}) {
    throw DimensionError("classifier head must be [in×2] weights and [2] bias");
  }
  Classifier c;
  c.view_ = view;
  c.weights_ = std::move(weights);
  c.bias_ = std::move(bias);
  return c;
}

std::array<double, 2> Classifier::logits(const PairedViews& pv) const {
  const std::vector<double> v = view_input(pv, view_);
  if (v.size() != input_dim()) {
    throw DimensionError("view input of length " + std::to_string(v.size()) +
                         ", classifier expects " + std::to_string(input_dim()));
  }
  const auto& w = weights_.data();
  std::array<double, 2> z = {bias_.data()[0], bias_.data()[1]};
  for (std::size_t i = 0; i < v.size(); ++i) {
    z[0] += v[i] * w[i * 2];
    z[1] += v[i] * w[i * 2 + 1];
  }
  return z;
}

std::array<double, 2> Classifier::probabilities(const PairedViews& pv, double temperature) const {
  if (!(temperature > 0.0)) throw ParamError("temperature must be positive");
  return softmax2(logits(pv), temperature);
}

Label Classifier::predict(const PairedViews& pv) const {
  const auto z = logits(pv);
  return z[1] > z[0] ? Label::Positive : Label::Negative;
}

std::vector<double> Classifier::snapshot() const {
  std::vector<double> s = weights_.data();
  s.insert(s.end(), bias_.data().begin(), bias_.data().end());
  return s;
}

Classifier train_teacher(const std::vector<PairedViews>& train, View view,
                         const ExperimentConfig& cfg, Rng& rng) {
  if (train.empty()) throw ParamError("train_teacher: empty training set");
  bool has_pos = false, has_neg = false;
  std::vector<TrainExample> examples;
  examples.reserve(train.size());
  for (const auto& pv : train) {
    if (!pv.label) throw ContractError("train_teacher: unlabeled example " + pv.id);
    (*pv.label == Label::Positive ? has_pos : has_neg) = true;
    TrainExample ex;
    ex.input = view_input(pv, view);
    ex.hard = one_hot(*pv.label);
    examples.push_back(std::move(ex));
  }
  if (!has_pos || !has_neg) {
    throw DataError("train_teacher: degenerate single-class training set");
  }
  const std::size_t width = train.front().doc_repr.size();
  Classifier clf(view, width, cfg.head_init_std, rng);
  train_loop(clf, examples, cfg.teacher_epochs, /*lambda=*/0.0, /*T=*/1.0, cfg, rng);
  return clf;
}

SoftLabelSet pseudo_label(const Classifier& teacher, const std::vector<PairedViews>& pool,
                          double temperature) {
  if (pool.empty()) throw ParamError("pseudo_label: empty pool");
  if (!(temperature > 0.0)) throw ParamError("pseudo_label: temperature must be positive");
  SoftLabelSet out;
  out.temperature = temperature;
  for (const auto& pv : pool) {
    out.labels[pv.id] = teacher.probabilities(pv, temperature);
  }
  return out;
}

std::vector<DistillExample> transfer_labels(const SoftLabelSet& labels,
                                            const std::vector<PairedViews>& pool,
                                            View target_view) {
  std::unordered_map<std::string, const PairedViews*> by_id;
  for (const auto& pv : pool) by_id[pv.id] = &pv;
  std::vector<DistillExample> out;
  out.reserve(labels.labels.size());
  for (const auto& [id, soft] : labels.labels) {
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      throw DataError("transfer_labels: no pool item with id '" + id + "'");
    }
    out.push_back({id, view_input(*it->second, target_view), soft});
  }
  return out;
}

Classifier distill_student(const std::vector<DistillExample>& dataset, View view,
                           const ExperimentConfig& cfg, Rng& rng) {
  if (dataset.empty()) throw ParamError("distill_student: empty dataset");
  const std::size_t in_dim = dataset.front().input.size();
  const std::size_t width = view == View::Combined ? in_dim / 2 : in_dim;
  Classifier clf(view, width, cfg.head_init_std, rng);
  std::vector<TrainExample> examples;
  examples.reserve(dataset.size());
  for (const auto& ex : dataset) {
    examples.push_back({ex.input, {0.0, 0.0}, ex.soft_label});
  }
  train_loop(clf, examples, cfg.distill_epochs, /*lambda=*/1.0, cfg.temperature, cfg, rng);
  return clf;
}

void finetune(Classifier& student, const Classifier& teacher_same_view,
              const std::vector<PairedViews>& train, const ExperimentConfig& cfg, Rng& rng) {
  if (student.view() != teacher_same_view.view()) {
    throw ContractError("finetune: student is " + view_name(student.view()) + "-view, teacher is " +
                        view_name(teacher_same_view.view()) + "-view");
  }
  std::vector<TrainExample> examples;
  examples.reserve(train.size());
  for (const auto& pv : train) {
    if (!pv.label) throw ContractError("finetune: unlabeled example " + pv.id);
    TrainExample ex;
    ex.input = view_input(pv, student.view());
    ex.hard = one_hot(*pv.label);
    // frozen teacher target at temperature T
    ex.soft = teacher_same_view.probabilities(pv, cfg.temperature);
    examples.push_back(std::move(ex));
  }
  ExperimentConfig ft = cfg;
  ft.lr = cfg.finetune_lr;
  train_loop(student, examples, cfg.finetune_epochs, cfg.lambda, cfg.temperature, ft, rng);
}

Classifier build_student(const Classifier& labeling_teacher, const Classifier& finetune_teacher,
                         View student_view, const std::vector<PairedViews>& labeled,
                         const std::vector<PairedViews>& unlabeled, const ExperimentConfig& cfg,
                         Rng& rng_student, Rng& rng_finetune) {
  SoftLabelSet soft = pseudo_label(labeling_teacher, unlabeled, cfg.temperature);
  std::vector<DistillExample> dataset = transfer_labels(soft, unlabeled, student_view);
  if (cfg.check_invariants) {
    // mapping through ids and back must reproduce the label set exactly
    SoftLabelSet round_trip;
    round_trip.temperature = soft.temperature;
    for (const auto& ex : dataset) round_trip.labels[ex.id] = ex.soft_label;
    if (round_trip.labels != soft.labels) {
      throw ContractError("label-transfer round-trip changed the (id, label) set");
    }
  }
  Classifier student = distill_student(dataset, student_view, cfg, rng_student);
  finetune(student, finetune_teacher, labeled, cfg, rng_finetune);
  return student;
}

double finetune_loss(const Classifier& student, const Classifier& teacher,
                     const std::vector<PairedViews>& batch, double lambda, double temperature) {
  if (student.view() != teacher.view()) {
    throw ContractError("finetune_loss: student and teacher views differ");
  }
  if (batch.empty()) throw ParamError("finetune_loss: empty batch");
  const std::size_t b = batch.size();
  const std::size_t in_dim = student.input_dim();
  std::vector<double> x(b * in_dim), hard(b * 2), soft(b * 2);
  for (std::size_t i = 0; i < b; ++i) {
    const auto& pv = batch[i];
    if (!pv.label) throw ContractError("finetune_loss: unlabeled example " + pv.id);
    const std::vector<double> v = view_input(pv, student.view());
    std::copy(v.begin(), v.end(), x.begin() + static_cast<long>(i * in_dim));
    const auto h = one_hot(*pv.label);
    const auto s = teacher.probabilities(pv, temperature);
    hard[i * 2] = h[0];
    hard[i * 2 + 1] = h[1];
    soft[i * 2] = s[0];
    soft[i * 2 + 1] = s[1];
  }
  ad::Tensor xb = ad::Tensor::from_data(std::move(x), {b, in_dim});
  ad::Tensor logits = ad::add_row(ad::matmul(xb, student.weights()), student.bias());
  return mixed_loss_graph(logits, std::move(hard), std::move(soft), b, lambda, temperature)
      .item();
}

VidResult vid_pipeline(const std::vector<PairedViews>& labeled,
                       const std::vector<PairedViews>& unlabeled, const ExperimentConfig& cfg) {
  cfg.validate();
  if (unlabeled.empty()) throw ParamError("vid_pipeline: empty unlabeled pool");
  // Both branches draw the same per-stage streams, so the procedure is
  // exactly symmetric under a swap of the two views.
  const std::uint64_t teacher_seed = Rng::mix(cfg.seed, 0x01);
  const std::uint64_t student_seed = Rng::mix(cfg.seed, 0x02);
  const std::uint64_t finetune_seed = Rng::mix(cfg.seed, 0x03);
  Rng r_teacher_doc(teacher_seed), r_teacher_drug(teacher_seed);
  Rng r_student_doc(student_seed), r_student_drug(student_seed);
  Rng r_finetune_doc(finetune_seed), r_finetune_drug(finetune_seed);

  VidResult result;
  result.teacher_doc = train_teacher(labeled, View::Document, cfg, r_teacher_doc);
  result.teacher_drug = train_teacher(labeled, View::Drug, cfg, r_teacher_drug);

  std::vector<double> snap_doc, snap_drug;
  if (cfg.check_invariants) {
    snap_doc = result.teacher_doc.snapshot();
    snap_drug = result.teacher_drug.snapshot();
  }

  result.student_drug = build_student(result.teacher_doc, result.teacher_drug, View::Drug, labeled,
                                      unlabeled, cfg, r_student_drug, r_finetune_drug);
  result.student_doc = build_student(result.teacher_drug, result.teacher_doc, View::Document,
                                     labeled, unlabeled, cfg, r_student_doc, r_finetune_doc);

  if (cfg.check_invariants) {
    if (result.teacher_doc.snapshot() != snap_doc || result.teacher_drug.snapshot() != snap_drug) {
      throw ContractError("teacher parameters changed during distillation/fine-tuning");
    }
  }
  return result;
}

std::pair<Label, std::array<double, 2>> predict_ensemble(const Classifier& student_doc,
                                                         const Classifier& student_drug,
                                                         const PairedViews& pv) {
  const auto pd = student_doc.probabilities(pv, 1.0);
  const auto pg = student_drug.probabilities(pv, 1.0);
  const std::array<double, 2> avg = {(pd[0] + pg[0]) / 2.0, (pd[1] + pg[1]) / 2.0};
  return {avg[1] > avg[0] ? Label::Positive : Label::Negative, avg};
}

std::pair<Label, std::array<double, 2>> predict_ensemble(const Classifier& student_doc,
                                                         const Classifier& student_drug,
                                                         const Document& doc,
                                                         const Vocabulary& vocab,
                                                         const EncoderParams& params) {
  EncodedDocument enc = tokenize(doc.text, vocab, params.max_len);
  ad::Tensor repr = encode(enc, params);
  PairedViews pv;
  pv.id = doc.id;
  pv.doc_repr = extract_view(repr, enc, View::Document);
  pv.drug_repr = extract_view(repr, enc, View::Drug);
  return predict_ensemble(student_doc, student_drug, pv);
}

}  // namespace vid
