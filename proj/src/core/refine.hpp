#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "core/corpus.hpp"
#include "core/lex.hpp"

namespace relrefine {

struct prediction {
  std::string id;
  double prob = 0.0;
  int pred_label = 0;
};

struct prediction_set {
  std::unordered_map<std::string, prediction> by_id;
  size_t duplicates = 0;

  const prediction* find(const std::string& id) const;
};

prediction_set load_predictions(const std::string& path);

struct thresholds {
  double sim_low = 0.0;
  double sim_high = 1.0;
  double prob_low = 0.0;
  double prob_high = 1.0;

  bool operator==(const thresholds&) const = default;
};

struct threshold_profile {
  std::map<std::string, thresholds> per_language;
  thresholds fallback;

  const thresholds& lookup(const std::string& language) const;

  ordered_json to_json() const;
  static threshold_profile from_json(const ordered_json& obj);
};

threshold_profile load_profile(const std::string& path);
void save_profile(const threshold_profile& profile, const std::string& path);

struct guard_sets {
  std::unordered_set<std::string> positive;
  std::unordered_set<std::string> negative;
};

struct guard_list {
  std::map<std::string, guard_sets> per_language;
};

guard_list load_guards(const std::string& path);

enum class guard_kind { none, positive, negative };

guard_kind guard_signal(const sample& s, const guard_list& guards);

double combined_similarity(const similarity_feature_pair& f);

struct tune_record {
  std::string language;
  int label = 0;
  double sim = 0.0;
  std::optional<double> prob;
};

// Grid search per the refinement rule: accept iff sim >= sim_high or
// prob >= prob_high. Highs maximize positive-class F1 (first grid point wins
// ties, i.e. smallest lexicographic pair); lows are the largest grid values
// no accepted positive falls below, capped so low <= high holds.
threshold_profile tune_thresholds(const std::vector<tune_record>& records,
                                  double grid_step = 0.05);

enum class verdict_kind { keep, remove };

enum class removal_reason { label_pos_low_evidence, label_neg_high_evidence, guard_override };

struct refinement_decision {
  std::string id;
  verdict_kind verdict = verdict_kind::keep;
  std::set<removal_reason> reasons;
  double combined_sim = 0.0;
};

refinement_decision flag_suspect(const sample& s, const similarity_feature_pair& f,
                                 const prediction* p, const threshold_profile& profile,
                                 const guard_list& guards);

struct language_refine_counts {
  size_t input = 0;
  size_t removed_pos_low = 0;
  size_t removed_neg_high = 0;
  size_t guard_overrides = 0;
  size_t kept = 0;
};

struct refinement_report {
  std::map<std::string, language_refine_counts> per_language;
  threshold_profile profile;
  size_t predictions_loaded = 0;
  size_t prediction_duplicates = 0;
  std::vector<std::string> unmatched_prediction_ids;

  ordered_json to_json() const;
};

struct refine_options {
  std::optional<std::string> predictions_path;
  std::optional<std::string> guards_path;
  std::optional<std::string> profile_out_path;
  double grid_step = 0.05;
  int jobs = 1;
};

struct refine_result {
  std::vector<sample> kept;
  std::vector<refinement_decision> decisions;
  refinement_report report;
};

refine_result refine_samples(task_kind task, const std::vector<sample>& samples,
                             const prediction_set& predictions, const guard_list& guards,
                             double grid_step, int jobs);

refinement_report refine_dataset(task_kind task, const std::string& in_path,
                                 const std::string& out_path, const std::string& report_path,
                                 const refine_options& options);

}  // namespace relrefine
