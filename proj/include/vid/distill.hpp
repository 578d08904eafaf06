#ifndef VID_DISTILL_HPP
#define VID_DISTILL_HPP

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vid/config.hpp"
#include "vid/corpus.hpp"
#include "vid/encoder.hpp"

namespace vid {

// Picks the classifier input for a view: the document row, the drug row, or
// their concatenation (combined-view baseline).
std::vector<double> view_input(const PairedViews& pv, View view);
std::size_t view_input_dim(View view, std::size_t width);

// Linear head over a fixed view of the shared encoder. The view is set at
// construction and every forward pass extracts exactly that view.
class Classifier {
 public:
  Classifier() = default;
  Classifier(View view, std::size_t width, double init_std, Rng& rng);
  static Classifier from_weights(View view, ad::Tensor weights, ad::Tensor bias);

  View view() const { return view_; }
  std::size_t input_dim() const { return weights_.shape()[0]; }

  std::array<double, 2> logits(const PairedViews& pv) const;
  std::array<double, 2> probabilities(const PairedViews& pv, double temperature) const;
  Label predict(const PairedViews& pv) const;

  ad::Tensor& weights() { return weights_; }
  ad::Tensor& bias() { return bias_; }
  const ad::Tensor& weights() const { return weights_; }
  const ad::Tensor& bias() const { return bias_; }
  std::vector<ad::Tensor> params() { return {weights_, bias_}; }

  std::vector<double> snapshot() const;  // weights then bias, flattened

 private:
  View view_ = View::Document;
  ad::Tensor weights_;  // in_dim×2
  ad::Tensor bias_;     // 2
};

// Temperature-T probability pairs keyed by document id.
struct SoftLabelSet {
  double temperature = 1.0;
  std::map<std::string, std::array<double, 2>> labels;
};

struct DistillExample {
  std::string id;
  std::vector<double> input;
  std::array<double, 2> soft_label;
};

struct VidResult {
  Classifier student_doc;   // ĉ_d
  Classifier student_drug;  // ĉ_g
  Classifier teacher_doc;   // C_d
  Classifier teacher_drug;  // C_g
};

// Hard-label training of a fresh classifier on its designated view.
Classifier train_teacher(const std::vector<PairedViews>& train, View view,
                         const ExperimentConfig& cfg, Rng& rng);

// Teacher probabilities at temperature T over its own view, per pool item.
SoftLabelSet pseudo_label(const Classifier& teacher, const std::vector<PairedViews>& pool,
                          double temperature);

// Joins soft labels onto the target view's representations by id.
std::vector<DistillExample> transfer_labels(const SoftLabelSet& labels,
                                            const std::vector<PairedViews>& pool,
                                            View target_view);

// Fresh classifier trained to match the soft labels, with temperature T
// applied to the student logits throughout.
Classifier distill_student(const std::vector<DistillExample>& dataset, View view,
                           const ExperimentConfig& cfg, Rng& rng);

// Mixed objective: (1−λ)·CE(student, y) + λ·CE(student_T, teacher_T). The
// teacher's temperature-T outputs are computed once up front and frozen.
void finetune(Classifier& student, const Classifier& teacher_same_view,
              const std::vector<PairedViews>& train, const ExperimentConfig& cfg, Rng& rng);

// Value of the fine-tuning objective on one batch: (1−λ)·CE(student, y) +
// λ·CE(student at T, teacher at T). This is exactly the quantity finetune()
// descends per minibatch.
double finetune_loss(const Classifier& student, const Classifier& teacher,
                     const std::vector<PairedViews>& batch, double lambda, double temperature);

// One initialization branch: `labeling_teacher` pseudo-labels the pool at
// cfg.temperature, labels are transferred onto `student_view`, a fresh
// student is distilled on them and fine-tuned against `finetune_teacher`.
// The ablation grid calls this with every pretrain×finetune pairing.
Classifier build_student(const Classifier& labeling_teacher, const Classifier& finetune_teacher,
                         View student_view, const std::vector<PairedViews>& labeled,
                         const std::vector<PairedViews>& unlabeled, const ExperimentConfig& cfg,
                         Rng& rng_student, Rng& rng_finetune);

// The full two-branch procedure: train both teachers, cross-pollinate
// through the unlabeled pool, distill and fine-tune both students.
VidResult vid_pipeline(const std::vector<PairedViews>& labeled,
                       const std::vector<PairedViews>& unlabeled, const ExperimentConfig& cfg);

// Mean of the two students' T=1 probability outputs; ties go to Negative.
std::pair<Label, std::array<double, 2>> predict_ensemble(const Classifier& student_doc,
                                                         const Classifier& student_drug,
                                                         const PairedViews& pv);

std::pair<Label, std::array<double, 2>> predict_ensemble(const Classifier& student_doc,
                                                         const Classifier& student_drug,
                                                         const Document& doc,
                                                         const Vocabulary& vocab,
                                                         const EncoderParams& params);

}  // namespace vid

#endif
