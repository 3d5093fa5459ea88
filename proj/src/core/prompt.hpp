#pragma once

#include <optional>
#include <string>
#include <vector>

#include "core/corpus.hpp"
#include "core/tagging.hpp"

namespace relrefine {

struct prompt_template {
  std::string name;
  std::string instruction;
  std::vector<std::string> layout;
  std::string target_label;
};

prompt_template builtin_template(task_kind task);
prompt_template template_from_json(const ordered_json& obj);
prompt_template load_template(const std::string& path);

struct icl_example {
  std::string language;
  bool positive = false;
  std::string rendered_block;
};

std::string render_example_block(const tagged_sample& tagged, const prompt_template& tmpl);

std::vector<icl_example> select_icl(const sample& s, const std::vector<tagged_sample>& pool,
                                    int k_pos, int k_neg, const prompt_template& tmpl);

struct prompt_record {
  std::string id;
  std::string prompt;
  std::optional<std::string> answer;
};

prompt_record build_prompt(const tagged_sample& tagged, const prompt_template& tmpl,
                           const std::vector<icl_example>& icl, size_t max_chars = 0);

// Training export: every record must carry an answer.
void export_training_file(const std::vector<prompt_record>& records, const std::string& path);

// Lenient variant for test splits: answer key omitted when absent.
void write_prompt_jsonl(const std::vector<prompt_record>& records, const std::string& path);

std::vector<prompt_record> read_prompt_jsonl(const std::string& path);

}  // namespace relrefine
