#pragma once

#include <map>
#include <string>
#include <vector>

#include "core/corpus.hpp"
#include "core/refine.hpp"

namespace relrefine {

enum class predictor_kind { lexical, external };

struct predictor {
  predictor_kind kind = predictor_kind::lexical;
  threshold_profile profile;  // lexical
  prediction_set probs;       // external
};

predictor make_lexical_predictor(threshold_profile profile);
predictor load_external_predictor(const std::string& probs_path);

// Lexical needs features; External ignores them and joins on sample id.
int predict_one(const sample& s, const predictor& p, const similarity_feature_pair* features);

void write_submission(const std::vector<int>& preds, const std::string& path);

struct language_predict_counts {
  size_t count = 0;
  size_t positive = 0;
};

struct predict_summary {
  std::map<std::string, language_predict_counts> per_language;
  size_t total = 0;
  size_t positive = 0;

  ordered_json to_json() const;
};

std::vector<int> predict_all(task_kind task, const std::vector<sample>& samples,
                             const predictor& p, int jobs);

predict_summary run_predict(task_kind task, const std::string& in_path, const predictor& p,
                            const std::string& out_path, int jobs);

}  // namespace relrefine
