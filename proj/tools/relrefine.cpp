// relrefine: command-line front end for the relevance refinery pipeline.
// Talks to the library exclusively through the C interface.
#include <relevance_refinery/relevance_refinery.h>

#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

namespace {

using ordered_json = nlohmann::ordered_json;

struct context_deleter {
  void operator()(rr_context* ctx) const { rr_context_free(ctx); }
};
using context_ptr = std::unique_ptr<rr_context, context_deleter>;

struct owned_string {
  char* value = nullptr;
  ~owned_string() { rr_string_free(value); }
  std::string str() const { return value == nullptr ? std::string() : std::string(value); }
};

// Library failure -> process exit code (0 success, 1 runtime, 2 usage).
int exit_code_for(rr_status status) { return status == RR_ERR_USAGE ? 2 : 1; }

struct cli_error {
  int code;
  std::string message;
};

void check(rr_context* ctx, rr_status status) {
  if (status != RR_OK) throw cli_error{exit_code_for(status), rr_last_error(ctx)};
}

rr_task parse_task_arg(const std::string& name) {
  std::string lower;
  for (char c : name) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "qc") return RR_TASK_QC;
  if (lower == "qi") return RR_TASK_QI;
  throw cli_error{2, "unknown task '" + name + "' (expected QC or QI)"};
}

const char* opt_path(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

int64_t manifest_epoch() {
  if (const char* sde = std::getenv("SOURCE_DATE_EPOCH"); sde != nullptr && *sde != '\0') {
    char* end = nullptr;
    long long value = std::strtoll(sde, &end, 10);
    if (end != nullptr && *end == '\0') return value;
  }
  return static_cast<int64_t>(std::time(nullptr));
}

std::string format_epoch(int64_t epoch) {
  std::time_t t = static_cast<std::time_t>(epoch);
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

std::string file_digest(rr_context* ctx, const std::string& path) {
  owned_string hex;
  check(ctx, rr_file_sha256(ctx, path.c_str(), &hex.value));
  return hex.str();
}

std::string config_digest(rr_context* ctx) {
  owned_string json;
  check(ctx, rr_config_json(ctx, &json.value));
  std::string text = json.str();
  owned_string hex;
  check(ctx, rr_sha256_hex(ctx, text.data(), text.size(), &hex.value));
  return hex.str();
}

// One manifest per mutating command, placed next to the primary output.
void write_manifest(rr_context* ctx, const std::vector<std::string>& argv,
                    const std::string& primary_out, const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs) {
  ordered_json manifest;
  manifest["tool"] = "relrefine";
  manifest["version"] = rr_version();
  manifest["command"] = argv;
  manifest["config_sha256"] = config_digest(ctx);
  ordered_json in_digests = ordered_json::object();
  for (const std::string& path : inputs) in_digests[path] = file_digest(ctx, path);
  manifest["inputs"] = in_digests;
  ordered_json out_digests = ordered_json::object();
  for (const std::string& path : outputs) out_digests[path] = file_digest(ctx, path);
  manifest["outputs"] = out_digests;
  manifest["timestamp"] = format_epoch(manifest_epoch());
  std::string path = primary_out + ".manifest.json";
  std::ofstream stream(path, std::ios::binary);
  stream << manifest.dump(2) << "\n";
  if (!stream) throw cli_error{1, "cannot write " + path};
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream stream(path, std::ios::binary);
  stream << text;
  if (!text.empty() && text.back() != '\n') stream << "\n";
  if (!stream) throw cli_error{1, "cannot write " + path};
}

// Shared flags: every stage takes an optional pipeline config and job count.
struct common_options {
  std::string config_path;
  int jobs = 1;
  CLI::Option* jobs_option = nullptr;
};

void add_common(CLI::App* cmd, common_options& common) {
  cmd->add_option("--config", common.config_path, "Pipeline config file (JSON or TOML)")
      ->check(CLI::ExistingFile);
  common.jobs_option = cmd->add_option("--jobs", common.jobs, "Worker thread count")
                           ->envname("RELEVANCE_REFINERY_JOBS")
                           ->check(CLI::PositiveNumber);
}

context_ptr make_context(const common_options& common) {
  context_ptr ctx(rr_context_new());
  if (!ctx) throw cli_error{1, "out of memory"};
  if (!common.config_path.empty()) check(ctx.get(), rr_load_config(ctx.get(), common.config_path.c_str()));
  if (common.jobs_option != nullptr && common.jobs_option->count() > 0)
    check(ctx.get(), rr_set_jobs(ctx.get(), common.jobs));
  return ctx;
}

std::vector<std::string> manifest_inputs(const common_options& common,
                                         std::vector<std::string> paths) {
  std::vector<std::string> inputs;
  if (!common.config_path.empty()) inputs.push_back(common.config_path);
  for (std::string& p : paths)
    if (!p.empty()) inputs.push_back(std::move(p));
  return inputs;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"relevance refinery: multilingual e-commerce search relevance data pipeline"};
  app.set_version_flag("--version", std::string(rr_version()));
  app.require_subcommand(1);
  app.footer(
      "There is no `train` subcommand: model fine-tuning is out of scope for this tool.\n"
      "Use `prompt --training-export` to build training files for an external trainer.");

  std::vector<std::string> argv_vec(argv + 1, argv + argc);

  // synth ---------------------------------------------------------------
  auto* synth = app.add_subcommand("synth", "Generate a seeded synthetic corpus");
  std::string synth_task, synth_langs, synth_out;
  int synth_count = 0;
  double synth_pos = 0.5, synth_noise = 0.0, synth_overlap = 0.0;
  uint64_t synth_seed = 0;
  common_options synth_common;
  synth->add_option("--task", synth_task, "Task: QC or QI")->required();
  synth->add_option("--languages", synth_langs, "Comma-separated language codes")->required();
  synth->add_option("--count", synth_count, "Samples per language")->required();
  synth->add_option("--positive-ratio", synth_pos, "Positive fraction")->capture_default_str();
  synth->add_option("--noise", synth_noise, "Label flip rate")->capture_default_str();
  synth->add_option("--overlap", synth_overlap, "Negative vocabulary overlap fraction")->capture_default_str();
  synth->add_option("--seed", synth_seed, "RNG seed")->capture_default_str();
  synth->add_option("--out", synth_out, "Output JSONL path")->required();
  add_common(synth, synth_common);

  // stats ---------------------------------------------------------------
  auto* stats = app.add_subcommand("stats", "Per-language corpus statistics");
  std::string stats_task, stats_in, stats_out;
  common_options stats_common;
  stats->add_option("--task", stats_task, "Task: QC or QI")->required();
  stats->add_option("--in", stats_in, "Input JSONL path")->required()->check(CLI::ExistingFile);
  stats->add_option("--out", stats_out, "Optional JSON report path");
  add_common(stats, stats_common);

  // refine --------------------------------------------------------------
  auto* refine = app.add_subcommand("refine", "Quality refinement: drop suspect labels");
  std::string refine_task, refine_in, refine_out, refine_report;
  std::string refine_preds, refine_guards, refine_profile_out;
  common_options refine_common;
  refine->add_option("--task", refine_task, "Task: QC or QI")->required();
  refine->add_option("--in", refine_in, "Labeled JSONL input")->required()->check(CLI::ExistingFile);
  refine->add_option("--out", refine_out, "Refined JSONL output")->required();
  refine->add_option("--report", refine_report, "Refinement report JSON path")->required();
  refine->add_option("--predictions", refine_preds, "Model probability JSONL (id, prob)")
      ->check(CLI::ExistingFile);
  refine->add_option("--guards", refine_guards, "Keyword guard JSON")->check(CLI::ExistingFile);
  refine->add_option("--profile-out", refine_profile_out, "Write tuned threshold profile here");
  add_common(refine, refine_common);

  // tag -----------------------------------------------------------------
  auto* tag = app.add_subcommand("tag", "Structured tagging (LT/HCT/SIT/DG)");
  std::string tag_task, tag_in, tag_out, tag_rules, tag_gen_file;
  bool tag_lt = false, tag_hct = false, tag_sit = false, tag_dg = false;
  common_options tag_common;
  tag->add_option("--task", tag_task, "Task: QC or QI")->required();
  tag->add_option("--in", tag_in, "Input JSONL path")->required()->check(CLI::ExistingFile);
  tag->add_option("--out", tag_out, "Tagged JSONL output")->required();
  tag->add_flag("--lt", tag_lt, "Language tagging");
  tag->add_flag("--hct", tag_hct, "Hierarchical category tagging (QC only)");
  tag->add_flag("--sit", tag_sit, "Semantic item tagging (QI only)");
  tag->add_flag("--dg", tag_dg, "Description generation (QI only)");
  tag->add_option("--rules", tag_rules, "Attribute rule table JSON")->check(CLI::ExistingFile);
  tag->add_option("--gen-file", tag_gen_file, "External generation JSONL (id, gen_tags, gen_desc)")
      ->check(CLI::ExistingFile);
  add_common(tag, tag_common);

  // prompt --------------------------------------------------------------
  auto* prompt = app.add_subcommand("prompt", "Build instruction prompts from tagged JSONL");
  std::string prompt_task, prompt_in, prompt_out, prompt_template, prompt_pool;
  int prompt_icl_pos = 1, prompt_icl_neg = 1;
  bool prompt_training = false;
  common_options prompt_common;
  prompt->add_option("--task", prompt_task, "Task: QC or QI")->required();
  prompt->add_option("--in", prompt_in, "Tagged JSONL input")->required()->check(CLI::ExistingFile);
  prompt->add_option("--out", prompt_out, "Prompt JSONL output")->required();
  prompt->add_option("--template", prompt_template, "Prompt template JSON")
      ->check(CLI::ExistingFile);
  prompt->add_option("--icl-pool", prompt_pool, "Labeled tagged JSONL pool for in-context examples")
      ->check(CLI::ExistingFile);
  prompt->add_option("--icl-pos", prompt_icl_pos, "Positive examples per prompt")->capture_default_str();
  prompt->add_option("--icl-neg", prompt_icl_neg, "Negative examples per prompt")->capture_default_str();
  prompt->add_flag("--training-export", prompt_training, "Require answers on every record");
  add_common(prompt, prompt_common);

  // predict -------------------------------------------------------------
  auto* predict = app.add_subcommand("predict", "Write a positional 0/1 submission file");
  std::string predict_task, predict_in, predict_kind = "lexical";
  std::string predict_profile, predict_probs, predict_out;
  common_options predict_common;
  predict->add_option("--task", predict_task, "Task: QC or QI")->required();
  predict->add_option("--in", predict_in, "Input JSONL path")->required()->check(CLI::ExistingFile);
  predict->add_option("--predictor", predict_kind, "Predictor: lexical or external")->capture_default_str();
  predict->add_option("--profile", predict_profile, "Threshold profile JSON (lexical)")
      ->check(CLI::ExistingFile);
  predict->add_option("--probs", predict_probs, "Probability JSONL (external)")
      ->check(CLI::ExistingFile);
  predict->add_option("--out", predict_out, "Submission file path")->required();
  add_common(predict, predict_common);

  // eval ----------------------------------------------------------------
  auto* eval = app.add_subcommand("eval", "Score a submission against labels");
  std::string eval_task, eval_preds, eval_labels, eval_out;
  common_options eval_common;
  eval->add_option("--task", eval_task, "Task: QC or QI")->required();
  eval->add_option("--preds", eval_preds, "Submission file")->required()->check(CLI::ExistingFile);
  eval->add_option("--labels", eval_labels, "Labeled JSONL or 0/1 line file")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--out", eval_out, "Optional JSON report path");
  add_common(eval, eval_common);

  // ablate --------------------------------------------------------------
  auto* ablate = app.add_subcommand("ablate", "Run an ablation grid");
  std::string ablate_task, ablate_config, ablate_out;
  common_options ablate_common;
  ablate->add_option("--task", ablate_task, "Task: QC or QI (checked against the grid config)");
  ablate->add_option("--grid", ablate_config, "Ablation grid config JSON")
      ->required()
      ->check(CLI::ExistingFile);
  ablate->add_option("--out", ablate_out, "Optional grid result JSON path");
  add_common(ablate, ablate_common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*synth) {
      context_ptr ctx = make_context(synth_common);
      check(ctx.get(), rr_synth(ctx.get(), parse_task_arg(synth_task), synth_langs.c_str(),
                                synth_count, synth_pos, synth_noise, synth_overlap, synth_seed,
                                synth_out.c_str()));
      write_manifest(ctx.get(), argv_vec, synth_out, manifest_inputs(synth_common, {}),
                     {synth_out});
    } else if (*stats) {
      context_ptr ctx = make_context(stats_common);
      owned_string report;
      check(ctx.get(), rr_stats(ctx.get(), parse_task_arg(stats_task), stats_in.c_str(),
                                &report.value));
      std::cout << report.str() << "\n";
      if (!stats_out.empty()) {
        write_text_file(stats_out, report.str());
        write_manifest(ctx.get(), argv_vec, stats_out, manifest_inputs(stats_common, {stats_in}),
                       {stats_out});
      }
    } else if (*refine) {
      context_ptr ctx = make_context(refine_common);
      owned_string report;
      check(ctx.get(),
            rr_refine(ctx.get(), parse_task_arg(refine_task), refine_in.c_str(),
                      refine_out.c_str(), opt_path(refine_preds), opt_path(refine_guards),
                      refine_report.c_str(), opt_path(refine_profile_out), &report.value));
      std::vector<std::string> outputs = {refine_out, refine_report};
      if (!refine_profile_out.empty()) outputs.push_back(refine_profile_out);
      write_manifest(ctx.get(), argv_vec, refine_out,
                     manifest_inputs(refine_common, {refine_in, refine_preds, refine_guards}),
                     outputs);
    } else if (*tag) {
      context_ptr ctx = make_context(tag_common);
      unsigned flags = 0;
      if (tag_lt) flags |= RR_TAG_LT;
      if (tag_hct) flags |= RR_TAG_HCT;
      if (tag_sit) flags |= RR_TAG_SIT;
      if (tag_dg) flags |= RR_TAG_DG;
      check(ctx.get(), rr_tag(ctx.get(), parse_task_arg(tag_task), tag_in.c_str(),
                              tag_out.c_str(), flags, opt_path(tag_rules),
                              opt_path(tag_gen_file)));
      write_manifest(ctx.get(), argv_vec, tag_out,
                     manifest_inputs(tag_common, {tag_in, tag_rules, tag_gen_file}), {tag_out});
    } else if (*prompt) {
      context_ptr ctx = make_context(prompt_common);
      check(ctx.get(), rr_prompt(ctx.get(), parse_task_arg(prompt_task), prompt_in.c_str(),
                                 prompt_out.c_str(), opt_path(prompt_template),
                                 opt_path(prompt_pool), prompt_icl_pos, prompt_icl_neg,
                                 prompt_training ? 1 : 0));
      write_manifest(ctx.get(), argv_vec, prompt_out,
                     manifest_inputs(prompt_common, {prompt_in, prompt_template, prompt_pool}),
                     {prompt_out});
    } else if (*predict) {
      context_ptr ctx = make_context(predict_common);
      owned_string summary;
      check(ctx.get(), rr_predict(ctx.get(), parse_task_arg(predict_task), predict_in.c_str(),
                                  predict_kind.c_str(), opt_path(predict_profile),
                                  opt_path(predict_probs), predict_out.c_str(), &summary.value));
      std::cout << summary.str() << "\n";
      write_manifest(ctx.get(), argv_vec, predict_out,
                     manifest_inputs(predict_common, {predict_in, predict_profile, predict_probs}),
                     {predict_out});
    } else if (*eval) {
      context_ptr ctx = make_context(eval_common);
      owned_string report;
      check(ctx.get(), rr_eval(ctx.get(), parse_task_arg(eval_task), eval_preds.c_str(),
                               eval_labels.c_str(), &report.value));
      std::cout << report.str() << "\n";
      if (!eval_out.empty()) {
        write_text_file(eval_out, report.str());
        write_manifest(ctx.get(), argv_vec, eval_out,
                       manifest_inputs(eval_common, {eval_preds, eval_labels}), {eval_out});
      }
    } else if (*ablate) {
      context_ptr ctx = make_context(ablate_common);
      if (!ablate_task.empty()) {
        ordered_json grid_cfg = ordered_json::parse(std::ifstream(ablate_config), nullptr, false);
        if (grid_cfg.is_object() && grid_cfg.contains("task") && grid_cfg["task"].is_string() &&
            parse_task_arg(grid_cfg["task"].get<std::string>()) != parse_task_arg(ablate_task))
          throw cli_error{2, "--task " + ablate_task + " does not match the grid config task"};
      }
      owned_string grid_json;
      owned_string table;
      check(ctx.get(), rr_ablate(ctx.get(), ablate_config.c_str(), &grid_json.value,
                                 &table.value));
      std::cout << table.str();
      if (!ablate_out.empty()) {
        write_text_file(ablate_out, grid_json.str());
        std::vector<std::string> inputs = manifest_inputs(ablate_common, {ablate_config});
        ordered_json grid_cfg = ordered_json::parse(std::ifstream(ablate_config), nullptr, false);
        if (grid_cfg.is_object()) {
          for (const char* key : {"train", "dev", "predictions", "guards", "rules", "gen_file",
                                  "probs"}) {
            if (grid_cfg.contains(key) && grid_cfg[key].is_string())
              inputs.push_back(grid_cfg[key].get<std::string>());
          }
        }
        write_manifest(ctx.get(), argv_vec, ablate_out, inputs, {ablate_out});
      }
    }
  } catch (const cli_error& e) {
    std::cerr << "relrefine: error: " << e.message << "\n";
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "relrefine: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
