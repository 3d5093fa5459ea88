#include "core/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "core/predict.hpp"
#include "core/prompt.hpp"
#include "core/refine.hpp"
#include "core/tagging.hpp"

namespace relrefine {

double f1_from_counts(size_t tp, size_t fp, size_t fn) {
  size_t denominator = 2 * tp + fp + fn;
  if (denominator == 0) return 1.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(denominator);
}

double f1_score(const std::vector<int>& preds, const std::vector<int>& labels) {
  if (preds.size() != labels.size()) {
    fail(errc::validation, "f1_score: " + std::to_string(preds.size()) + " predictions vs " +
                               std::to_string(labels.size()) + " labels");
  }
  size_t tp = 0, fp = 0, fn = 0;
  for (size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] == 1 && labels[i] == 1) ++tp;
    else if (preds[i] == 1) ++fp;
    else if (labels[i] == 1) ++fn;
  }
  return f1_from_counts(tp, fp, fn);
}

double overall_score(double f1_qc, double f1_qi) {
  if (f1_qc < 0.0 || f1_qc > 1.0 || f1_qi < 0.0 || f1_qi > 1.0) {
    fail(errc::validation, "overall_score inputs must lie in [0,1]");
  }
  double mean = 0.5 * (f1_qc + f1_qi);
  // Inputs are 4-decimal scores, so the mean sits on a 0.00005 lattice; the
  // epsilon only absorbs binary representation error, never a half step.
  return std::floor(mean * 10000.0 + 1e-7) / 10000.0;
}

ordered_json score_report_data::to_json() const {
  ordered_json obj = ordered_json::object();
  obj["task_f1"] = task_f1;
  ordered_json count_obj = ordered_json::object();
  count_obj["tp"] = counts.tp;
  count_obj["fp"] = counts.fp;
  count_obj["fn"] = counts.fn;
  count_obj["tn"] = counts.tn;
  obj["counts"] = count_obj;
  if (has_languages) {
    ordered_json langs = ordered_json::object();
    for (const auto& [language, f1] : per_language) langs[language] = f1;
    obj["per_language"] = langs;
  }
  return obj;
}

std::vector<int> read_submission(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(errc::io, "cannot open submission file: " + path);
  std::vector<int> preds;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string value = trim(line);
    if (value.empty()) continue;
    if (value == "0") {
      preds.push_back(0);
    } else if (value == "1") {
      preds.push_back(1);
    } else {
      fail(errc::validation,
           "line " + std::to_string(line_no) + ": submission lines must be 0 or 1, got '" +
               value + "'");
    }
  }
  if (in.bad()) fail(errc::io, "read failed: " + path);
  return preds;
}

namespace {

bool looks_like_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(errc::io, "cannot open labels file: " + path);
  char c;
  while (in.get(c)) {
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    return c == '{';
  }
  return false;
}

}  // namespace

score_report_data score_report(task_kind task, const std::string& preds_path,
                               const std::string& labels_path) {
  std::vector<int> preds = read_submission(preds_path);
  std::vector<int> labels;
  std::vector<std::string> languages;
  if (looks_like_jsonl(labels_path)) {
    std::vector<sample> samples = read_jsonl(labels_path, task);
    for (const sample& s : samples) {
      if (!s.label) {
        fail(errc::validation, "sample '" + s.id + "' has no label; cannot score against it");
      }
      labels.push_back(*s.label);
      languages.push_back(s.language);
    }
  } else {
    labels = read_submission(labels_path);
  }
  if (preds.size() != labels.size()) {
    fail(errc::validation, "prediction/label length mismatch: " + std::to_string(preds.size()) +
                               " vs " + std::to_string(labels.size()));
  }

  score_report_data report;
  report.has_languages = !languages.empty();
  std::map<std::string, confusion_counts> per_language;
  for (size_t i = 0; i < preds.size(); ++i) {
    confusion_counts* lang =
        report.has_languages ? &per_language[languages[i]] : nullptr;
    if (preds[i] == 1 && labels[i] == 1) {
      ++report.counts.tp;
      if (lang) ++lang->tp;
    } else if (preds[i] == 1) {
      ++report.counts.fp;
      if (lang) ++lang->fp;
    } else if (labels[i] == 1) {
      ++report.counts.fn;
      if (lang) ++lang->fn;
    } else {
      ++report.counts.tn;
      if (lang) ++lang->tn;
    }
  }
  report.task_f1 = f1_from_counts(report.counts.tp, report.counts.fp, report.counts.fn);
  for (const auto& [language, counts] : per_language) {
    report.per_language[language] = f1_from_counts(counts.tp, counts.fp, counts.fn);
  }
  return report;
}

// ---- ablation ----------------------------------------------------------------

const std::vector<std::string>& ablation_flags_for(task_kind task) {
  static const std::vector<std::string> qc_flags = {"QR", "LT", "HCT"};
  static const std::vector<std::string> qi_flags = {"QR", "LT", "SIT", "DG"};
  return task == task_kind::qc ? qc_flags : qi_flags;
}

ablation_config load_ablation_config(const std::string& path) {
  ordered_json obj = ordered_json::parse(read_file(path), nullptr, false);
  if (obj.is_discarded() || !obj.is_object()) {
    fail(errc::config, "malformed JSON in ablation grid file: " + path);
  }
  ablation_config config;
  bool saw_task = false, saw_train = false, saw_dev = false, saw_rows = false;
  auto expect_string = [&](const ordered_json& value, const std::string& key) {
    if (!value.is_string()) fail(errc::config, "key " + key + ": expected string");
    return value.get<std::string>();
  };
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const std::string& key = it.key();
    const ordered_json& value = it.value();
    if (key == "task") {
      config.task = parse_task(expect_string(value, key));
      saw_task = true;
    } else if (key == "train") {
      config.train_path = expect_string(value, key);
      saw_train = true;
    } else if (key == "dev") {
      config.dev_path = expect_string(value, key);
      saw_dev = true;
    } else if (key == "rows") {
      if (!value.is_array()) fail(errc::config, "key rows: expected array of flag arrays");
      for (const auto& row : value) {
        if (!row.is_array()) fail(errc::config, "key rows: expected array of flag arrays");
        std::vector<std::string> flags;
        for (const auto& flag : row) {
          flags.push_back(expect_string(flag, "rows"));
        }
        config.rows.push_back(std::move(flags));
      }
      saw_rows = true;
    } else if (key == "predictions") {
      config.predictions_path = expect_string(value, key);
    } else if (key == "guards") {
      config.guards_path = expect_string(value, key);
    } else if (key == "rules") {
      config.rules_path = expect_string(value, key);
    } else if (key == "gen_file") {
      config.gen_file_path = expect_string(value, key);
    } else if (key == "probs") {
      config.probs_path = expect_string(value, key);
    } else if (key == "grid_step") {
      if (!value.is_number()) fail(errc::config, "key grid_step: expected number");
      config.grid_step = value.get<double>();
    } else if (key == "icl_pos" || key == "icl_neg") {
      if (!value.is_number_integer()) fail(errc::config, "key " + key + ": expected integer");
      (key == "icl_pos" ? config.icl_pos : config.icl_neg) = value.get<int>();
    } else {
      fail(errc::config, "unknown key " + key);
    }
  }
  if (!saw_task || !saw_train || !saw_dev || !saw_rows) {
    fail(errc::config, "ablation grid needs task, train, dev and rows");
  }
  return config;
}

namespace {

std::vector<std::string> canonical_flags(const std::vector<std::string>& flags, task_kind task,
                                         size_t row_index) {
  const std::vector<std::string>& valid = ablation_flags_for(task);
  std::set<std::string> seen;
  for (const std::string& flag : flags) {
    if (std::find(valid.begin(), valid.end(), flag) == valid.end()) {
      fail(errc::validation, "row " + std::to_string(row_index) + ": flag '" + flag +
                                 "' is not valid for " + task_name(task) + " (valid: " +
                                 join(valid, ", ") + ")");
    }
    if (!seen.insert(flag).second) {
      fail(errc::validation,
           "row " + std::to_string(row_index) + ": duplicate flag '" + flag + "'");
    }
  }
  std::vector<std::string> ordered;
  for (const std::string& flag : valid) {
    if (seen.count(flag)) ordered.push_back(flag);
  }
  return ordered;
}

threshold_profile tune_similarity_profile(const std::vector<sample>& samples, double grid_step,
                                          int jobs) {
  auto models = fit_models_per_language(samples);
  std::vector<tune_record> records(samples.size());
  parallel_for(samples.size(), jobs, [&](size_t i) {
    const sample& s = samples[i];
    similarity_feature_pair features =
        similarity_features(s.query, s.target.raw_text(), s.language, models.at(s.language));
    tune_record r;
    r.language = s.language;
    r.label = *s.label;
    r.sim = combined_similarity(features);
    records[i] = std::move(r);
  });
  return tune_thresholds(records, grid_step);
}

double run_ablation_row(const ablation_config& config, const std::vector<std::string>& flags,
                        const std::vector<sample>& train, const std::vector<sample>& dev,
                        const std::vector<int>& dev_labels, const prediction_set& predictions,
                        const guard_list& guards, const rule_set& rules,
                        const description_generator& gen) {
  auto has = [&](const char* flag) {
    return std::find(flags.begin(), flags.end(), flag) != flags.end();
  };

  const std::vector<sample>* train_ptr = &train;
  std::vector<sample> refined;
  if (has("QR")) {
    refine_result result =
        refine_samples(config.task, train, predictions, guards, config.grid_step, config.jobs);
    refined = std::move(result.kept);
    train_ptr = &refined;
  }

  tag_config tags;
  tags.lt = has("LT");
  tags.hct = has("HCT");
  tags.sit = has("SIT");
  tags.dg = has("DG");

  std::vector<tagged_sample> pool(train_ptr->size());
  parallel_for(train_ptr->size(), config.jobs, [&](size_t i) {
    pool[i] = apply_tags((*train_ptr)[i], config.task, tags, rules, gen, nullptr);
  });

  prompt_template tmpl = builtin_template(config.task);
  std::vector<prompt_record> prompts(dev.size());
  parallel_for(dev.size(), config.jobs, [&](size_t i) {
    tagged_sample tagged = apply_tags(dev[i], config.task, tags, rules, gen, nullptr);
    std::vector<icl_example> icl =
        select_icl(dev[i], pool, config.icl_pos, config.icl_neg, tmpl);
    prompts[i] = build_prompt(tagged, tmpl, icl);
  });
  for (const prompt_record& record : prompts) {
    if (record.prompt.empty()) fail(errc::internal, "empty prompt for id '" + record.id + "'");
  }

  predictor p;
  if (config.probs_path) {
    p = load_external_predictor(*config.probs_path);
  } else {
    p = make_lexical_predictor(tune_similarity_profile(*train_ptr, config.grid_step, config.jobs));
  }
  std::vector<int> preds = predict_all(config.task, dev, p, config.jobs);
  return f1_score(preds, dev_labels);
}

}  // namespace

ablation_grid run_ablation(const ablation_config& config) {
  if (config.rows.empty()) fail(errc::validation, "ablation grid needs at least one row");

  std::vector<std::vector<std::string>> canonical_rows;
  std::set<std::vector<std::string>> unique_rows;
  for (size_t i = 0; i < config.rows.size(); ++i) {
    std::vector<std::string> flags = canonical_flags(config.rows[i], config.task, i);
    if (!unique_rows.insert(flags).second) {
      fail(errc::validation, "row " + std::to_string(i) + ": duplicate flag set {" +
                                 join(flags, ",") + "}");
    }
    canonical_rows.push_back(std::move(flags));
  }

  std::vector<sample> train = read_jsonl(config.train_path, config.task);
  std::vector<sample> dev = read_jsonl(config.dev_path, config.task);
  for (const std::vector<sample>* split : {&train, &dev}) {
    for (const sample& s : *split) {
      if (!s.label) {
        fail(errc::validation, "sample '" + s.id + "' has no label; ablation needs labeled splits");
      }
    }
  }
  std::vector<int> dev_labels;
  dev_labels.reserve(dev.size());
  for (const sample& s : dev) dev_labels.push_back(*s.label);

  prediction_set predictions;
  if (config.predictions_path) predictions = load_predictions(*config.predictions_path);
  guard_list guards;
  if (config.guards_path) guards = load_guards(*config.guards_path);
  rule_set rules = config.rules_path ? load_rule_set(*config.rules_path) : default_rule_set();
  description_generator gen =
      config.gen_file_path ? load_generation_file(*config.gen_file_path) : extractive_generator();

  ablation_grid grid;
  grid.task = config.task;
  for (size_t i = 0; i < canonical_rows.size(); ++i) {
    ablation_row_result row;
    row.flags = canonical_rows[i];
    try {
      row.f1 = run_ablation_row(config, row.flags, train, dev, dev_labels, predictions, guards,
                                rules, gen);
    } catch (const error& e) {
      fail(e.kind(), "row " + std::to_string(i) + " {" + join(row.flags, ",") + "}: " + e.what());
    }
    grid.rows.push_back(std::move(row));
  }
  return grid;
}

ordered_json ablation_grid::to_json() const {
  ordered_json obj = ordered_json::object();
  // Wire form is lowercase; task_name() is reserved for display strings.
  obj["task"] = task == task_kind::qc ? "qc" : "qi";
  ordered_json row_array = ordered_json::array();
  for (const ablation_row_result& row : rows) {
    ordered_json entry = ordered_json::object();
    entry["flags"] = row.flags;
    entry["f1"] = row.f1;
    row_array.push_back(entry);
  }
  obj["rows"] = row_array;
  return obj;
}

std::string ablation_grid::to_table() const {
  const std::vector<std::string>& columns = ablation_flags_for(task);
  std::ostringstream out;
  for (const std::string& column : columns) {
    out << column << "  ";
  }
  out << "F1\n";
  for (const ablation_row_result& row : rows) {
    for (const std::string& column : columns) {
      bool on = std::find(row.flags.begin(), row.flags.end(), column) != row.flags.end();
      std::string mark = on ? "+" : "-";
      out << mark << std::string(column.size() + 1, ' ');
    }
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%.4f", row.f1);
    out << buf << "\n";
  }
  return out.str();
}

}  // namespace relrefine
