#pragma once

#include <optional>
#include <regex>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "core/corpus.hpp"
#include "core/lex.hpp"

namespace relrefine {

std::string tag_language(const sample& s);

// Inverse of tag_language: ("[LANG=en] baking") -> {"en", "baking"}.
std::optional<std::pair<std::string, std::string>> strip_language_tag(std::string_view text);

std::string tag_category(const category_path& path);

std::optional<category_path> parse_category_tags(std::string_view text);

enum class rule_kind { pattern, lexicon, extra_field, brand_heuristic };

struct attribute_rule {
  std::string key;
  rule_kind kind = rule_kind::lexicon;
  std::string pattern_source;
  std::regex pattern;
  std::vector<std::string> lexicon;
  std::string extra_key;
  std::string language;  // empty = applies to any language
};

struct rule_set {
  std::vector<attribute_rule> rules;
};

rule_set default_rule_set();
rule_set load_rule_set(const std::string& path);

// Ordered (key, value) pairs; order is rule-firing order, keys unique.
using attribute_set = std::vector<std::pair<std::string, std::string>>;

bool attribute_present(const attribute_set& attrs, std::string_view key);
const std::string* attribute_value(const attribute_set& attrs, std::string_view key);

attribute_set extract_attributes(const std::string& title, const std::string& language,
                                 const rule_set& rules);

// Title rules plus extra_field rules resolved against the sample record.
attribute_set collect_attributes(const sample& s, const rule_set& rules);

std::string render_attr_block(const attribute_set& attrs);

struct description_generator {
  bool external = false;
  std::unordered_map<std::string, std::pair<std::string, std::string>> by_id;
};

description_generator extractive_generator();
description_generator load_generation_file(const std::string& path);

struct generated_description {
  std::string gen_tags;
  std::string gen_desc;
  bool used_fallback = false;
};

generated_description generate_description(const sample& s, const attribute_set& attrs,
                                           const description_generator& gen);

struct tag_config {
  bool lt = false;
  bool hct = false;
  bool sit = false;
  bool dg = false;
};

struct tagged_sample {
  sample base;
  std::string tagged_query;
  std::string tagged_target;
  std::optional<std::string> attr_block;
  std::optional<std::string> gen_tags;
  std::optional<std::string> gen_desc;
};

tagged_sample apply_tags(const sample& s, task_kind task, const tag_config& config,
                         const rule_set& rules, const description_generator& gen,
                         size_t* fallback_count = nullptr);

void write_tagged_jsonl(const std::vector<tagged_sample>& samples, task_kind task,
                        const std::string& path);
std::vector<tagged_sample> read_tagged_jsonl(const std::string& path, task_kind task);

}  // namespace relrefine
