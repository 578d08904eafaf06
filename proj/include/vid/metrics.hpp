#ifndef VID_METRICS_HPP
#define VID_METRICS_HPP

#include <string>
#include <vector>

#include "vid/corpus.hpp"

namespace vid {

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::size_t total() const { return tp + fp + tn + fn; }
};

struct Prf1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

ConfusionCounts confusion(const std::vector<Label>& preds, const std::vector<Label>& golds);

// P=tp/(tp+fp), R=tp/(tp+fn), F1=2PR/(P+R); every 0/0 is defined as 0 so
// degenerate (e.g. all-negative) runs stay scoreable.
Prf1 prf1(const ConfusionCounts& c);

// One named method evaluated over several seeds.
struct RunResult {
  std::string name;
  std::vector<Prf1> per_seed;
};

struct RunSummary {
  std::string name;
  Prf1 mean;
  Prf1 stddev;
};

std::vector<RunSummary> summarize_runs(const std::vector<RunResult>& results);

// Tab-separated comparison table (method, P, R, F1 as mean±sd), rows in the
// order the results were given.
std::string compare_runs(const std::vector<RunResult>& results);

// Raw per-seed values as JSON, for machine consumption.
std::string runs_to_json(const std::vector<RunResult>& results);

}  // namespace vid

#endif
