#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "core/util.hpp"

namespace relrefine {

using ordered_json = nlohmann::ordered_json;

enum class task_kind { qc, qi };

task_kind parse_task(std::string_view name);
std::string task_name(task_kind task);

struct category_path {
  std::vector<std::string> levels;

  // ">"-joined wire form.
  std::string joined() const;
  static category_path parse(std::string_view joined, size_t line_no);

  bool operator==(const category_path&) const = default;
};

class target_field {
 public:
  static target_field category(category_path path);
  static target_field item(std::string title);

  bool is_category() const { return std::holds_alternative<category_path>(value_); }
  const category_path& path() const { return std::get<category_path>(value_); }
  const std::string& title() const { return std::get<std::string>(value_); }

  // Plain text view: ">"-joined path for QC, title for QI.
  std::string raw_text() const;

  bool operator==(const target_field&) const = default;

 private:
  std::variant<category_path, std::string> value_;
};

struct sample {
  std::string id;
  bool id_explicit = false;
  std::string language;
  std::string query;
  target_field target;
  std::optional<int> label;
  ordered_json extra = ordered_json::object();

  bool operator==(const sample& other) const;
};

sample parse_sample_line(const std::string& line, task_kind task, size_t line_no);
ordered_json sample_to_json(const sample& s, task_kind task);

std::vector<sample> read_jsonl(const std::string& path, task_kind task);
void write_jsonl(const std::vector<sample>& samples, task_kind task,
                 const std::string& path);

struct language_stats {
  size_t count = 0;
  size_t labeled = 0;
  size_t positives = 0;
};

struct dataset_stats {
  std::map<std::string, language_stats> per_language;
  size_t total = 0;

  ordered_json to_json() const;
};

dataset_stats compute_stats(const std::vector<sample>& samples);

struct synth_config {
  task_kind task = task_kind::qi;
  std::vector<std::string> languages;
  int per_language_count = 0;
  double positive_ratio = 0.5;
  double noise_rate = 0.0;
  uint64_t seed = 0;
  // Fraction of negatives sharing one query token (and overlap/4 of the
  // positives built weak). 0 keeps query and negative vocabularies disjoint.
  double overlap_fraction = 0.0;
};

const std::vector<std::string>& synth_supported_languages();

std::vector<sample> generate_synthetic(const synth_config& config);

}  // namespace relrefine
