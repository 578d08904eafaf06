#include "vid/metrics.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "json.hpp"
#include "vid/errors.hpp"

namespace vid {

ConfusionCounts confusion(const std::vector<Label>& preds, const std::vector<Label>& golds) {
  if (preds.size() != golds.size()) {
    throw DimensionError("confusion: " + std::to_string(preds.size()) + " predictions vs " +
                         std::to_string(golds.size()) + " golds");
  }
  if (preds.empty()) throw ParamError("confusion: empty input");
  ConfusionCounts c;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool p = preds[i] == Label::Positive;
    const bool g = golds[i] == Label::Positive;
    if (p && g) ++c.tp;
    else if (p && !g) ++c.fp;
    else if (!p && g) ++c.fn;
    else ++c.tn;
  }
  return c;
}

Prf1 prf1(const ConfusionCounts& c) {
  Prf1 m;
  const double tp = static_cast<double>(c.tp);
  m.precision = c.tp + c.fp == 0 ? 0.0 : tp / static_cast<double>(c.tp + c.fp);
  m.recall = c.tp + c.fn == 0 ? 0.0 : tp / static_cast<double>(c.tp + c.fn);
  m.f1 = m.precision + m.recall == 0.0 ? 0.0
                                       : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

std::vector<RunSummary> summarize_runs(const std::vector<RunResult>& results) {
  std::vector<RunSummary> out;
  for (const auto& r : results) {
    if (r.per_seed.empty()) throw ParamError("run '" + r.name + "' has no results");
    RunSummary s;
    s.name = r.name;
    const double n = static_cast<double>(r.per_seed.size());
    for (const auto& m : r.per_seed) {
      s.mean.precision += m.precision / n;
      s.mean.recall += m.recall / n;
      s.mean.f1 += m.f1 / n;
    }
    for (const auto& m : r.per_seed) {
      s.stddev.precision += (m.precision - s.mean.precision) * (m.precision - s.mean.precision) / n;
      s.stddev.recall += (m.recall - s.mean.recall) * (m.recall - s.mean.recall) / n;
      s.stddev.f1 += (m.f1 - s.mean.f1) * (m.f1 - s.mean.f1) / n;
    }
    s.stddev.precision = std::sqrt(s.stddev.precision);
    s.stddev.recall = std::sqrt(s.stddev.recall);
    s.stddev.f1 = std::sqrt(s.stddev.f1);
    out.push_back(std::move(s));
  }
  return out;
}

std::string compare_runs(const std::vector<RunResult>& results) {
  if (results.size() < 2) throw ParamError("compare_runs needs at least two runs");
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << "method\tprecision\trecall\tf1\n";
  for (const auto& s : summarize_runs(results)) {
    os << s.name << '\t' << s.mean.precision << "±" << s.stddev.precision << '\t'
       << s.mean.recall << "±" << s.stddev.recall << '\t' << s.mean.f1 << "±" << s.stddev.f1
       << '\n';
  }
  return os.str();
}

std::string runs_to_json(const std::vector<RunResult>& results) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : results) {
    nlohmann::json seeds = nlohmann::json::array();
    for (const auto& m : r.per_seed) {
      seeds.push_back({{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}});
    }
    j.push_back({{"method", r.name}, {"per_seed", seeds}});
  }
  return j.dump(2);
}

}  // namespace vid
