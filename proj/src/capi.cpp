#include "relevance_refinery/relevance_refinery.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <new>
#include <string>
#include <string_view>
#include <vector>

#include "core/config.hpp"
#include "core/corpus.hpp"
#include "core/eval.hpp"
#include "core/predict.hpp"
#include "core/prompt.hpp"
#include "core/refine.hpp"
#include "core/tagging.hpp"
#include "core/util.hpp"

namespace rr = relrefine;

struct rr_context {
  rr::pipeline_config config;
  bool jobs_overridden = false;
  std::string last_error;
};

namespace {

rr_status map_errc(rr::errc kind) {
  switch (kind) {
    case rr::errc::io: return RR_ERR_IO;
    case rr::errc::parse: return RR_ERR_PARSE;
    case rr::errc::validation: return RR_ERR_VALIDATION;
    case rr::errc::config: return RR_ERR_CONFIG;
    case rr::errc::usage: return RR_ERR_USAGE;
    case rr::errc::internal: return RR_ERR_INTERNAL;
  }
  return RR_ERR_INTERNAL;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out != nullptr) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void set_out(char** slot, const std::string& value) {
  if (slot != nullptr) *slot = dup_string(value);
}

std::string require_arg(const char* value, const char* name) {
  if (value == nullptr) rr::fail(rr::errc::usage, std::string(name) + " must not be null");
  return value;
}

rr::task_kind to_task(rr_task task) {
  return task == RR_TASK_QC ? rr::task_kind::qc : rr::task_kind::qi;
}

template <typename Fn>
rr_status guarded(rr_context* ctx, Fn&& fn) {
  if (ctx == nullptr) return RR_ERR_USAGE;
  try {
    fn();
    ctx->last_error.clear();
    return RR_OK;
  } catch (const rr::error& e) {
    ctx->last_error = e.what();
    return map_errc(e.kind());
  } catch (const std::exception& e) {
    ctx->last_error = e.what();
    return RR_ERR_INTERNAL;
  }
}

}  // namespace

extern "C" {

const char* rr_version(void) { return RELREFINE_VERSION; }

rr_context* rr_context_new(void) { return new (std::nothrow) rr_context(); }

void rr_context_free(rr_context* ctx) { delete ctx; }

const char* rr_last_error(const rr_context* ctx) {
  return ctx == nullptr ? "" : ctx->last_error.c_str();
}

void rr_string_free(char* s) { std::free(s); }

rr_status rr_load_config(rr_context* ctx, const char* path) {
  return guarded(ctx, [&] {
    rr::pipeline_config loaded = rr::load_config(require_arg(path, "path"));
    if (ctx->jobs_overridden) loaded.jobs = ctx->config.jobs;
    ctx->config = loaded;
  });
}

rr_status rr_set_jobs(rr_context* ctx, int jobs) {
  return guarded(ctx, [&] {
    if (jobs < 1) rr::fail(rr::errc::usage, "jobs must be >= 1");
    ctx->config.jobs = jobs;
    ctx->jobs_overridden = true;
  });
}

rr_status rr_config_json(rr_context* ctx, char** out_json) {
  return guarded(ctx, [&] { set_out(out_json, ctx->config.to_json().dump(2)); });
}

rr_status rr_synth(rr_context* ctx, rr_task task, const char* languages_csv,
                   int per_language_count, double positive_ratio, double noise_rate,
                   double overlap_fraction, uint64_t seed, const char* out_path) {
  return guarded(ctx, [&] {
    rr::synth_config cfg;
    cfg.task = to_task(task);
    for (const std::string& lang : rr::split(require_arg(languages_csv, "languages_csv"), ','))
      if (!rr::trim(lang).empty()) cfg.languages.push_back(rr::trim(lang));
    cfg.per_language_count = per_language_count;
    cfg.positive_ratio = positive_ratio;
    cfg.noise_rate = noise_rate;
    cfg.overlap_fraction = overlap_fraction;
    cfg.seed = seed;
    std::vector<rr::sample> samples = rr::generate_synthetic(cfg);
    rr::write_jsonl(samples, cfg.task, require_arg(out_path, "out_path"));
  });
}

rr_status rr_stats(rr_context* ctx, rr_task task, const char* in_path, char** out_json) {
  return guarded(ctx, [&] {
    std::vector<rr::sample> samples =
        rr::read_jsonl(require_arg(in_path, "in_path"), to_task(task));
    set_out(out_json, rr::compute_stats(samples).to_json().dump(2));
  });
}

rr_status rr_refine(rr_context* ctx, rr_task task, const char* in_path, const char* out_path,
                    const char* predictions_path, const char* guards_path,
                    const char* report_path, const char* profile_out_path,
                    char** out_report_json) {
  return guarded(ctx, [&] {
    rr::refine_options options;
    if (predictions_path != nullptr) options.predictions_path = predictions_path;
    if (guards_path != nullptr) options.guards_path = guards_path;
    if (profile_out_path != nullptr) options.profile_out_path = profile_out_path;
    options.grid_step = ctx->config.grid_step;
    options.jobs = ctx->config.jobs;
    rr::refinement_report report =
        rr::refine_dataset(to_task(task), require_arg(in_path, "in_path"),
                           require_arg(out_path, "out_path"),
                           require_arg(report_path, "report_path"), options);
    set_out(out_report_json, report.to_json().dump(2));
  });
}

rr_status rr_tag(rr_context* ctx, rr_task task, const char* in_path, const char* out_path,
                 unsigned tag_flags, const char* rules_path, const char* gen_file_path) {
  return guarded(ctx, [&] {
    rr::task_kind kind = to_task(task);
    std::vector<rr::sample> samples = rr::read_jsonl(require_arg(in_path, "in_path"), kind);
    rr::rule_set rules =
        rules_path != nullptr ? rr::load_rule_set(rules_path) : rr::default_rule_set();
    rr::description_generator gen = gen_file_path != nullptr
                                        ? rr::load_generation_file(gen_file_path)
                                        : rr::extractive_generator();
    rr::tag_config cfg;
    cfg.lt = (tag_flags & RR_TAG_LT) != 0;
    cfg.hct = (tag_flags & RR_TAG_HCT) != 0;
    cfg.sit = (tag_flags & RR_TAG_SIT) != 0;
    cfg.dg = (tag_flags & RR_TAG_DG) != 0;
    std::vector<rr::tagged_sample> tagged(samples.size());
    rr::parallel_for(samples.size(), ctx->config.jobs, [&](size_t i) {
      tagged[i] = rr::apply_tags(samples[i], kind, cfg, rules, gen);
    });
    rr::write_tagged_jsonl(tagged, kind, require_arg(out_path, "out_path"));
  });
}

rr_status rr_prompt(rr_context* ctx, rr_task task, const char* in_path, const char* out_path,
                    const char* template_path, const char* icl_pool_path, int icl_pos,
                    int icl_neg, int training_export) {
  return guarded(ctx, [&] {
    rr::task_kind kind = to_task(task);
    std::vector<rr::tagged_sample> inputs =
        rr::read_tagged_jsonl(require_arg(in_path, "in_path"), kind);
    rr::prompt_template tmpl = template_path != nullptr ? rr::load_template(template_path)
                                                        : rr::builtin_template(kind);
    std::vector<rr::tagged_sample> pool;
    if (icl_pool_path != nullptr) pool = rr::read_tagged_jsonl(icl_pool_path, kind);
    if (icl_pos < 0 || icl_neg < 0)
      rr::fail(rr::errc::usage, "icl counts must be >= 0");
    std::vector<rr::prompt_record> records(inputs.size());
    rr::parallel_for(inputs.size(), ctx->config.jobs, [&](size_t i) {
      std::vector<rr::icl_example> icl;
      if (!pool.empty()) icl = rr::select_icl(inputs[i].base, pool, icl_pos, icl_neg, tmpl);
      records[i] = rr::build_prompt(inputs[i], tmpl, icl, ctx->config.max_prompt_chars);
    });
    if (training_export != 0)
      rr::export_training_file(records, require_arg(out_path, "out_path"));
    else
      rr::write_prompt_jsonl(records, require_arg(out_path, "out_path"));
  });
}

rr_status rr_predict(rr_context* ctx, rr_task task, const char* in_path, const char* predictor,
                     const char* profile_path, const char* probs_path, const char* out_path,
                     char** out_summary_json) {
  return guarded(ctx, [&] {
    std::string kind = require_arg(predictor, "predictor");
    rr::predictor p;
    if (kind == "lexical") {
      p = rr::make_lexical_predictor(
          rr::load_profile(require_arg(profile_path, "profile_path")));
    } else if (kind == "external") {
      p = rr::load_external_predictor(require_arg(probs_path, "probs_path"));
    } else {
      rr::fail(rr::errc::usage, "unknown predictor '" + kind + "'");
    }
    rr::predict_summary summary =
        rr::run_predict(to_task(task), require_arg(in_path, "in_path"), p,
                        require_arg(out_path, "out_path"), ctx->config.jobs);
    set_out(out_summary_json, summary.to_json().dump(2));
  });
}

rr_status rr_eval(rr_context* ctx, rr_task task, const char* preds_path,
                  const char* labels_path, char** out_report_json) {
  return guarded(ctx, [&] {
    rr::score_report_data report =
        rr::score_report(to_task(task), require_arg(preds_path, "preds_path"),
                         require_arg(labels_path, "labels_path"));
    set_out(out_report_json, report.to_json().dump(2));
  });
}

rr_status rr_ablate(rr_context* ctx, const char* grid_config_path, char** out_grid_json,
                    char** out_table) {
  return guarded(ctx, [&] {
    rr::ablation_config cfg =
        rr::load_ablation_config(require_arg(grid_config_path, "grid_config_path"));
    if (ctx->jobs_overridden) cfg.jobs = ctx->config.jobs;
    rr::ablation_grid grid = rr::run_ablation(cfg);
    set_out(out_grid_json, grid.to_json().dump(2));
    set_out(out_table, grid.to_table());
  });
}

double rr_overall_score(double f1_qc, double f1_qi) {
  try {
    return rr::overall_score(f1_qc, f1_qi);
  } catch (const std::exception&) {
    return std::nan("");
  }
}

rr_status rr_f1_score(rr_context* ctx, const int32_t* preds, const int32_t* labels, size_t n,
                      double* out_f1) {
  return guarded(ctx, [&] {
    if ((preds == nullptr || labels == nullptr) && n > 0)
      rr::fail(rr::errc::usage, "preds and labels must not be null");
    if (out_f1 == nullptr) rr::fail(rr::errc::usage, "out_f1 must not be null");
    std::vector<int> p(preds, preds + n), l(labels, labels + n);
    *out_f1 = rr::f1_score(p, l);
  });
}

rr_status rr_tag_language(rr_context* ctx, const char* language, const char* query, char** out) {
  return guarded(ctx, [&] {
    rr::sample s;
    s.language = require_arg(language, "language");
    s.query = require_arg(query, "query");
    set_out(out, rr::tag_language(s));
  });
}

rr_status rr_tag_category_path(rr_context* ctx, const char* joined_path, char** out) {
  return guarded(ctx, [&] {
    rr::category_path path =
        rr::category_path::parse(require_arg(joined_path, "joined_path"), 1);
    set_out(out, rr::tag_category(path));
  });
}

rr_status rr_sha256_hex(rr_context* ctx, const void* data, size_t len, char** out_hex) {
  return guarded(ctx, [&] {
    if (data == nullptr && len > 0) rr::fail(rr::errc::usage, "data must not be null");
    set_out(out_hex,
            rr::sha256_hex(std::string_view(static_cast<const char*>(data), len)));
  });
}

rr_status rr_file_sha256(rr_context* ctx, const char* path, char** out_hex) {
  return guarded(ctx, [&] {
    set_out(out_hex, rr::sha256_file(require_arg(path, "path")));
  });
}

}  // extern "C"
