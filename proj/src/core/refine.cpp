#include "core/refine.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "core/eval.hpp"

namespace relrefine {

const prediction* prediction_set::find(const std::string& id) const {
  auto it = by_id.find(id);
  return it == by_id.end() ? nullptr : &it->second;
}

prediction_set load_predictions(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(errc::io, "cannot open predictions file: " + path);
  prediction_set set;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    ordered_json obj = ordered_json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) {
      fail(errc::parse, "line " + std::to_string(line_no) + ": malformed prediction object");
    }
    if (!obj.contains("id") || !obj.contains("prob")) {
      fail(errc::validation,
           "line " + std::to_string(line_no) + ": prediction needs 'id' and 'prob'");
    }
    prediction p;
    const ordered_json& id_value = obj["id"];
    if (id_value.is_string()) {
      p.id = id_value.get<std::string>();
    } else if (id_value.is_number_integer()) {
      p.id = std::to_string(id_value.get<int64_t>());
    } else {
      fail(errc::validation, "line " + std::to_string(line_no) + ": id must be a string or integer");
    }
    if (!obj["prob"].is_number()) {
      fail(errc::validation, "line " + std::to_string(line_no) + ": prob must be a number");
    }
    p.prob = obj["prob"].get<double>();
    if (p.prob < 0.0 || p.prob > 1.0) {
      fail(errc::validation,
           "line " + std::to_string(line_no) + ": prob must lie in [0,1], got " +
               std::to_string(p.prob));
    }
    p.pred_label = p.prob >= 0.5 ? 1 : 0;
    auto [it, inserted] = set.by_id.insert_or_assign(p.id, p);
    (void)it;
    if (!inserted) ++set.duplicates;
  }
  if (in.bad()) fail(errc::io, "read failed: " + path);
  return set;
}

const thresholds& threshold_profile::lookup(const std::string& language) const {
  auto it = per_language.find(language);
  return it == per_language.end() ? fallback : it->second;
}

namespace {

ordered_json thresholds_to_json(const thresholds& t) {
  ordered_json obj = ordered_json::object();
  obj["sim_low"] = t.sim_low;
  obj["sim_high"] = t.sim_high;
  obj["prob_low"] = t.prob_low;
  obj["prob_high"] = t.prob_high;
  return obj;
}

thresholds thresholds_from_json(const ordered_json& obj, const std::string& where) {
  if (!obj.is_object()) fail(errc::validation, where + ": thresholds must be an object");
  thresholds t;
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const std::string& key = it.key();
    if (!it.value().is_number()) {
      fail(errc::validation, where + ": threshold '" + key + "' must be a number");
    }
    double v = it.value().get<double>();
    if (key == "sim_low") t.sim_low = v;
    else if (key == "sim_high") t.sim_high = v;
    else if (key == "prob_low") t.prob_low = v;
    else if (key == "prob_high") t.prob_high = v;
    else fail(errc::validation, where + ": unknown threshold key '" + key + "'");
  }
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in_unit(t.sim_low) || !in_unit(t.sim_high) || !in_unit(t.prob_low) ||
      !in_unit(t.prob_high) || t.sim_low > t.sim_high || t.prob_low > t.prob_high) {
    fail(errc::validation, where + ": thresholds must satisfy 0 <= low <= high <= 1");
  }
  return t;
}

}  // namespace

ordered_json threshold_profile::to_json() const {
  ordered_json langs = ordered_json::object();
  for (const auto& [language, t] : per_language) {
    langs[language] = thresholds_to_json(t);
  }
  ordered_json obj = ordered_json::object();
  obj["per_language"] = langs;
  obj["default"] = thresholds_to_json(fallback);
  return obj;
}

threshold_profile threshold_profile::from_json(const ordered_json& obj) {
  if (!obj.is_object()) fail(errc::validation, "threshold profile must be a JSON object");
  threshold_profile profile;
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const std::string& key = it.key();
    if (key == "per_language") {
      if (!it.value().is_object()) {
        fail(errc::validation, "per_language must be an object");
      }
      for (auto lang_it = it.value().begin(); lang_it != it.value().end(); ++lang_it) {
        profile.per_language[lang_it.key()] =
            thresholds_from_json(lang_it.value(), "per_language." + lang_it.key());
      }
    } else if (key == "default") {
      profile.fallback = thresholds_from_json(it.value(), "default");
    } else {
      fail(errc::validation, "unknown threshold profile key '" + key + "'");
    }
  }
  return profile;
}

threshold_profile load_profile(const std::string& path) {
  ordered_json obj = ordered_json::parse(read_file(path), nullptr, false);
  if (obj.is_discarded()) fail(errc::parse, "malformed JSON in profile file: " + path);
  return threshold_profile::from_json(obj);
}

void save_profile(const threshold_profile& profile, const std::string& path) {
  write_file(path, profile.to_json().dump(2) + "\n");
}

guard_list load_guards(const std::string& path) {
  ordered_json obj = ordered_json::parse(read_file(path), nullptr, false);
  if (obj.is_discarded() || !obj.is_object()) {
    fail(errc::parse, "malformed JSON in guards file: " + path);
  }
  guard_list guards;
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const std::string& language = it.key();
    if (!it.value().is_object()) {
      fail(errc::validation, "guards for '" + language + "' must be an object");
    }
    guard_sets sets;
    for (auto set_it = it.value().begin(); set_it != it.value().end(); ++set_it) {
      const std::string& key = set_it.key();
      if (key != "positive" && key != "negative") {
        fail(errc::validation, "guards." + language + ": unknown key '" + key + "'");
      }
      if (!set_it.value().is_array()) {
        fail(errc::validation, "guards." + language + "." + key + " must be an array");
      }
      auto& target = key == "positive" ? sets.positive : sets.negative;
      for (const auto& entry : set_it.value()) {
        if (!entry.is_string()) {
          fail(errc::validation, "guards." + language + "." + key + " entries must be strings");
        }
        target.insert(fold_text(entry.get<std::string>()));
      }
    }
    for (const std::string& keyword : sets.positive) {
      if (sets.negative.count(keyword)) {
        fail(errc::validation, "guards." + language + ": keyword '" + keyword +
                                   "' appears in both positive and negative sets");
      }
    }
    guards.per_language[language] = std::move(sets);
  }
  return guards;
}

guard_kind guard_signal(const sample& s, const guard_list& guards) {
  auto it = guards.per_language.find(s.language);
  if (it == guards.per_language.end()) return guard_kind::none;
  const guard_sets& sets = it->second;
  if (sets.positive.empty() && sets.negative.empty()) return guard_kind::none;
  token_list query_tokens = tokenize(s.query, s.language);
  token_list target_tokens = tokenize(s.target.raw_text(), s.language);
  std::unordered_set<std::string> in_query(query_tokens.tokens.begin(), query_tokens.tokens.end());
  std::unordered_set<std::string> in_target(target_tokens.tokens.begin(),
                                            target_tokens.tokens.end());
  for (const std::string& keyword : sets.positive) {
    if (in_query.count(keyword) && in_target.count(keyword)) return guard_kind::positive;
  }
  for (const std::string& keyword : sets.negative) {
    if (in_query.count(keyword) || in_target.count(keyword)) return guard_kind::negative;
  }
  return guard_kind::none;
}

double combined_similarity(const similarity_feature_pair& f) {
  return 0.5 * f.tfidf_cosine + 0.5 * f.jaccard;
}

namespace {

long long grid_steps_for(double grid_step) {
  if (!(grid_step > 0.0 && grid_step <= 1.0)) {
    fail(errc::config, "grid_step must lie in (0,1], got " + std::to_string(grid_step));
  }
  long long steps = std::llround(1.0 / grid_step);
  if (steps < 1 || std::fabs(static_cast<double>(steps) * grid_step - 1.0) > 1e-9) {
    fail(errc::config, "grid_step must divide 1 evenly, got " + std::to_string(grid_step));
  }
  return steps;
}

double grid_value(long long index, long long steps) {
  return static_cast<double>(index) / static_cast<double>(steps);
}

double floor_to_grid(double x, long long steps) {
  long long idx = static_cast<long long>(std::floor(x * static_cast<double>(steps) + 1e-9));
  idx = std::clamp(idx, 0LL, steps);
  return grid_value(idx, steps);
}

struct record_view {
  const tune_record* records = nullptr;
  const size_t* indices = nullptr;
  size_t count = 0;
};

bool rule_accepts(const tune_record& r, double sim_high, double prob_high) {
  return r.sim >= sim_high || (r.prob && *r.prob >= prob_high);
}

thresholds tune_single(const std::vector<tune_record>& records,
                       const std::vector<size_t>& indices, long long steps) {
  double best_f1 = -1.0;
  long long best_i = 0, best_j = 0;
  for (long long i = 0; i <= steps; ++i) {
    double sh = grid_value(i, steps);
    for (long long j = 0; j <= steps; ++j) {
      double ph = grid_value(j, steps);
      size_t tp = 0, fp = 0, fn = 0;
      for (size_t idx : indices) {
        const tune_record& r = records[idx];
        bool accepted = rule_accepts(r, sh, ph);
        if (accepted) {
          if (r.label == 1) ++tp;
          else ++fp;
        } else if (r.label == 1) {
          ++fn;
        }
      }
      double f1 = f1_from_counts(tp, fp, fn);
      if (f1 > best_f1) {
        best_f1 = f1;
        best_i = i;
        best_j = j;
      }
    }
  }
  thresholds t;
  t.sim_high = grid_value(best_i, steps);
  t.prob_high = grid_value(best_j, steps);
  double min_sim = std::numeric_limits<double>::infinity();
  double min_prob = std::numeric_limits<double>::infinity();
  for (size_t idx : indices) {
    const tune_record& r = records[idx];
    if (r.label != 1 || !rule_accepts(r, t.sim_high, t.prob_high)) continue;
    min_sim = std::min(min_sim, r.sim);
    if (r.prob) min_prob = std::min(min_prob, *r.prob);
  }
  t.sim_low = std::min(std::isinf(min_sim) ? 1.0 : floor_to_grid(min_sim, steps), t.sim_high);
  t.prob_low = std::min(std::isinf(min_prob) ? 1.0 : floor_to_grid(min_prob, steps), t.prob_high);
  return t;
}

}  // namespace

threshold_profile tune_thresholds(const std::vector<tune_record>& records, double grid_step) {
  if (records.empty()) fail(errc::validation, "tune_thresholds requires at least one record");
  long long steps = grid_steps_for(grid_step);
  for (const tune_record& r : records) {
    if (r.label != 0 && r.label != 1) {
      fail(errc::validation, "tune_thresholds: label must be 0 or 1");
    }
  }
  std::map<std::string, std::vector<size_t>> by_language;
  std::vector<size_t> all(records.size());
  for (size_t i = 0; i < records.size(); ++i) {
    all[i] = i;
    by_language[records[i].language].push_back(i);
  }
  threshold_profile profile;
  profile.fallback = tune_single(records, all, steps);
  for (const auto& [language, indices] : by_language) {
    if (indices.size() < 2) continue;
    profile.per_language[language] = tune_single(records, indices, steps);
  }
  return profile;
}

refinement_decision flag_suspect(const sample& s, const similarity_feature_pair& f,
                                 const prediction* p, const threshold_profile& profile,
                                 const guard_list& guards) {
  if (!s.label) {
    fail(errc::validation,
         "sample '" + s.id + "' has no label; refinement requires labeled data");
  }
  const thresholds& th = profile.lookup(s.language);
  refinement_decision decision;
  decision.id = s.id;
  decision.combined_sim = combined_similarity(f);
  double sim = decision.combined_sim;
  if (*s.label == 1 && sim < th.sim_low && (!p || p->prob < th.prob_low)) {
    if (guard_signal(s, guards) == guard_kind::positive) {
      decision.reasons.insert(removal_reason::guard_override);
    } else {
      decision.verdict = verdict_kind::remove;
      decision.reasons.insert(removal_reason::label_pos_low_evidence);
    }
  } else if (*s.label == 0 && sim > th.sim_high && (!p || p->prob > th.prob_high)) {
    if (guard_signal(s, guards) == guard_kind::negative) {
      decision.reasons.insert(removal_reason::guard_override);
    } else {
      decision.verdict = verdict_kind::remove;
      decision.reasons.insert(removal_reason::label_neg_high_evidence);
    }
  }
  return decision;
}

ordered_json refinement_report::to_json() const {
  ordered_json langs = ordered_json::object();
  for (const auto& [language, counts] : per_language) {
    ordered_json entry = ordered_json::object();
    entry["input"] = counts.input;
    entry["removed_pos_low"] = counts.removed_pos_low;
    entry["removed_neg_high"] = counts.removed_neg_high;
    entry["guard_overrides"] = counts.guard_overrides;
    entry["kept"] = counts.kept;
    langs[language] = entry;
  }
  ordered_json predictions = ordered_json::object();
  predictions["loaded"] = predictions_loaded;
  predictions["duplicate_ids"] = prediction_duplicates;
  predictions["unmatched_count"] = unmatched_prediction_ids.size();
  ordered_json unmatched = ordered_json::array();
  size_t limit = std::min<size_t>(unmatched_prediction_ids.size(), 20);
  for (size_t i = 0; i < limit; ++i) unmatched.push_back(unmatched_prediction_ids[i]);
  predictions["unmatched_ids"] = unmatched;

  ordered_json obj = ordered_json::object();
  obj["per_language"] = langs;
  obj["thresholds"] = profile.to_json();
  obj["predictions"] = predictions;
  return obj;
}

refine_result refine_samples(task_kind task, const std::vector<sample>& samples,
                             const prediction_set& predictions, const guard_list& guards,
                             double grid_step, int jobs) {
  (void)task;
  for (const sample& s : samples) {
    if (!s.label) {
      fail(errc::validation,
           "sample '" + s.id + "' has no label; refinement requires labeled data");
    }
  }
  auto models = fit_models_per_language(samples);
  std::vector<similarity_feature_pair> features(samples.size());
  parallel_for(samples.size(), jobs, [&](size_t i) {
    const sample& s = samples[i];
    features[i] =
        similarity_features(s.query, s.target.raw_text(), s.language, models.at(s.language));
  });

  std::vector<tune_record> records(samples.size());
  for (size_t i = 0; i < samples.size(); ++i) {
    const sample& s = samples[i];
    tune_record r;
    r.language = s.language;
    r.label = *s.label;
    r.sim = combined_similarity(features[i]);
    if (const prediction* p = predictions.find(s.id)) r.prob = p->prob;
    records[i] = std::move(r);
  }

  refine_result result;
  result.report.profile = tune_thresholds(records, grid_step);
  result.decisions.resize(samples.size());
  parallel_for(samples.size(), jobs, [&](size_t i) {
    result.decisions[i] = flag_suspect(samples[i], features[i], predictions.find(samples[i].id),
                                       result.report.profile, guards);
  });

  for (size_t i = 0; i < samples.size(); ++i) {
    const sample& s = samples[i];
    const refinement_decision& decision = result.decisions[i];
    language_refine_counts& counts = result.report.per_language[s.language];
    ++counts.input;
    if (decision.verdict == verdict_kind::keep) {
      ++counts.kept;
      if (decision.reasons.count(removal_reason::guard_override)) ++counts.guard_overrides;
      result.kept.push_back(s);
    } else if (decision.reasons.count(removal_reason::label_pos_low_evidence)) {
      ++counts.removed_pos_low;
    } else {
      ++counts.removed_neg_high;
    }
  }

  result.report.predictions_loaded = predictions.by_id.size();
  result.report.prediction_duplicates = predictions.duplicates;
  std::unordered_set<std::string> sample_ids;
  sample_ids.reserve(samples.size());
  for (const sample& s : samples) sample_ids.insert(s.id);
  for (const auto& [id, p] : predictions.by_id) {
    if (!sample_ids.count(id)) result.report.unmatched_prediction_ids.push_back(id);
  }
  std::sort(result.report.unmatched_prediction_ids.begin(),
            result.report.unmatched_prediction_ids.end());
  return result;
}

refinement_report refine_dataset(task_kind task, const std::string& in_path,
                                 const std::string& out_path, const std::string& report_path,
                                 const refine_options& options) {
  std::vector<sample> samples = read_jsonl(in_path, task);
  prediction_set predictions;
  if (options.predictions_path) predictions = load_predictions(*options.predictions_path);
  guard_list guards;
  if (options.guards_path) guards = load_guards(*options.guards_path);

  refine_result result =
      refine_samples(task, samples, predictions, guards, options.grid_step, options.jobs);
  write_jsonl(result.kept, task, out_path);
  write_file(report_path, result.report.to_json().dump(2) + "\n");
  if (options.profile_out_path) save_profile(result.report.profile, *options.profile_out_path);
  return result.report;
}

}  // namespace relrefine
