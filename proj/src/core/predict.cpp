#include "core/predict.hpp"

#include <sstream>

namespace relrefine {

predictor make_lexical_predictor(threshold_profile profile) {
  predictor p;
  p.kind = predictor_kind::lexical;
  p.profile = std::move(profile);
  return p;
}

predictor load_external_predictor(const std::string& probs_path) {
  predictor p;
  p.kind = predictor_kind::external;
  p.probs = load_predictions(probs_path);
  return p;
}

int predict_one(const sample& s, const predictor& p, const similarity_feature_pair* features) {
  if (p.kind == predictor_kind::external) {
    const prediction* hit = p.probs.find(s.id);
    if (!hit) fail(errc::validation, "no prediction for id '" + s.id + "'");
    return hit->pred_label;
  }
  if (!features) fail(errc::internal, "lexical prediction requires similarity features");
  const thresholds& th = p.profile.lookup(s.language);
  return combined_similarity(*features) >= th.sim_high ? 1 : 0;
}

void write_submission(const std::vector<int>& preds, const std::string& path) {
  std::string out;
  out.reserve(preds.size() * 2);
  for (int pred : preds) {
    out += pred == 1 ? '1' : '0';
    out += '\n';
  }
  write_file(path, out);
}

ordered_json predict_summary::to_json() const {
  ordered_json langs = ordered_json::object();
  for (const auto& [language, counts] : per_language) {
    ordered_json entry = ordered_json::object();
    entry["count"] = counts.count;
    entry["positive"] = counts.positive;
    entry["positive_rate"] =
        counts.count == 0 ? 0.0
                          : static_cast<double>(counts.positive) / static_cast<double>(counts.count);
    langs[language] = entry;
  }
  ordered_json obj = ordered_json::object();
  obj["total"] = total;
  obj["positive"] = positive;
  obj["per_language"] = langs;
  return obj;
}

std::vector<int> predict_all(task_kind task, const std::vector<sample>& samples,
                             const predictor& p, int jobs) {
  (void)task;
  std::vector<int> preds(samples.size(), 0);
  if (p.kind == predictor_kind::lexical) {
    auto models = fit_models_per_language(samples);
    parallel_for(samples.size(), jobs, [&](size_t i) {
      const sample& s = samples[i];
      similarity_feature_pair features =
          similarity_features(s.query, s.target.raw_text(), s.language, models.at(s.language));
      preds[i] = predict_one(s, p, &features);
    });
  } else {
    parallel_for(samples.size(), jobs,
                 [&](size_t i) { preds[i] = predict_one(samples[i], p, nullptr); });
  }
  return preds;
}

predict_summary run_predict(task_kind task, const std::string& in_path, const predictor& p,
                            const std::string& out_path, int jobs) {
  std::vector<sample> samples = read_jsonl(in_path, task);
  std::vector<int> preds = predict_all(task, samples, p, jobs);
  write_submission(preds, out_path);
  predict_summary summary;
  summary.total = samples.size();
  for (size_t i = 0; i < samples.size(); ++i) {
    language_predict_counts& counts = summary.per_language[samples[i].language];
    ++counts.count;
    counts.positive += static_cast<size_t>(preds[i]);
    summary.positive += static_cast<size_t>(preds[i]);
  }
  return summary;
}

}  // namespace relrefine
