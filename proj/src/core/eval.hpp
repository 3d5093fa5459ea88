#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core/corpus.hpp"

namespace relrefine {

double f1_from_counts(size_t tp, size_t fp, size_t fn);

double f1_score(const std::vector<int>& preds, const std::vector<int>& labels);

// Mean of the two task scores, truncated to 4 decimals.
double overall_score(double f1_qc, double f1_qi);

struct confusion_counts {
  size_t tp = 0;
  size_t fp = 0;
  size_t fn = 0;
  size_t tn = 0;
};

struct score_report_data {
  std::map<std::string, double> per_language;
  bool has_languages = false;
  confusion_counts counts;
  double task_f1 = 0.0;

  ordered_json to_json() const;
};

std::vector<int> read_submission(const std::string& path);

// labels_path accepts either labeled JSONL (per-language scores available) or
// a bare 0/1 line file in submission format.
score_report_data score_report(task_kind task, const std::string& preds_path,
                               const std::string& labels_path);

struct ablation_config {
  task_kind task = task_kind::qi;
  std::string train_path;
  std::string dev_path;
  std::vector<std::vector<std::string>> rows;
  std::optional<std::string> predictions_path;
  std::optional<std::string> guards_path;
  std::optional<std::string> rules_path;
  std::optional<std::string> gen_file_path;
  std::optional<std::string> probs_path;  // external predictor over the dev split
  double grid_step = 0.05;
  int icl_pos = 1;
  int icl_neg = 1;
  int jobs = 1;
};

ablation_config load_ablation_config(const std::string& path);

const std::vector<std::string>& ablation_flags_for(task_kind task);

struct ablation_row_result {
  std::vector<std::string> flags;
  double f1 = 0.0;
};

struct ablation_grid {
  task_kind task = task_kind::qi;
  std::vector<ablation_row_result> rows;

  ordered_json to_json() const;
  std::string to_table() const;
};

ablation_grid run_ablation(const ablation_config& config);

}  // namespace relrefine
