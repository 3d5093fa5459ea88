#include "core/prompt.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace relrefine {

namespace {

constexpr const char* kQcInstruction =
    "You are given a user query and a product category.\n"
    "Decide if the category is relevant to the query.\n"
    "Relevant: matches user intent (correct category).\n"
    "Not relevant: unrelated or wrong category.\n"
    "Respond only with \"yes\" or \"no\".";

constexpr const char* kQiInstruction =
    "You are given a user query and a product title.\n"
    "Decide if the product is relevant to the query.\n"
    "Relevant: matches user intent (category/type match, brand/specs may differ).\n"
    "Not relevant: unrelated type or accessory instead of main item.\n"
    "Respond only with \"yes\" or \"no\".";

const std::vector<std::string>& known_slots() {
  static const std::vector<std::string> slots = {"query", "target", "answer", "options"};
  return slots;
}

void append_lines(std::vector<std::string>& lines, const std::string& text) {
  for (std::string& line : split(text, '\n')) lines.push_back(std::move(line));
}

void append_target_lines(std::vector<std::string>& lines, const tagged_sample& tagged,
                         const prompt_template& tmpl) {
  lines.push_back(tmpl.target_label + ": " + tagged.tagged_target);
  if (tagged.attr_block) lines.push_back(*tagged.attr_block);
  if (tagged.gen_tags) lines.push_back("[GEN_TAGS] " + *tagged.gen_tags);
  if (tagged.gen_desc) lines.push_back("[GEN_DESC] " + *tagged.gen_desc);
}

std::string answer_text(int label) { return label == 1 ? "yes" : "no"; }

}  // namespace

prompt_template builtin_template(task_kind task) {
  prompt_template tmpl;
  tmpl.layout = {"query", "target", "answer", "options"};
  if (task == task_kind::qc) {
    tmpl.name = "qc_default";
    tmpl.instruction = kQcInstruction;
    tmpl.target_label = "Category";
  } else {
    tmpl.name = "qi_default";
    tmpl.instruction = kQiInstruction;
    tmpl.target_label = "Product";
  }
  return tmpl;
}

prompt_template template_from_json(const ordered_json& obj) {
  if (!obj.is_object()) fail(errc::validation, "template must be a JSON object");
  prompt_template tmpl;
  bool saw_instruction = false, saw_layout = false, saw_target_label = false;
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const std::string& key = it.key();
    const ordered_json& value = it.value();
    if (key == "name") {
      if (!value.is_string()) fail(errc::validation, "template name must be a string");
      tmpl.name = value.get<std::string>();
    } else if (key == "instruction") {
      if (!value.is_string()) fail(errc::validation, "template instruction must be a string");
      tmpl.instruction = value.get<std::string>();
      saw_instruction = true;
    } else if (key == "layout") {
      if (!value.is_array()) fail(errc::validation, "template layout must be an array");
      for (const auto& slot : value) {
        if (!slot.is_string()) fail(errc::validation, "template layout entries must be strings");
        tmpl.layout.push_back(slot.get<std::string>());
      }
      saw_layout = true;
    } else if (key == "target_label") {
      if (!value.is_string()) fail(errc::validation, "template target_label must be a string");
      tmpl.target_label = value.get<std::string>();
      saw_target_label = true;
    } else {
      fail(errc::validation, "unknown template key '" + key + "'");
    }
  }
  if (!saw_instruction || !saw_layout || !saw_target_label) {
    fail(errc::validation, "template needs instruction, layout and target_label");
  }
  const auto& slots = known_slots();
  for (const std::string& slot : tmpl.layout) {
    if (std::find(slots.begin(), slots.end(), slot) == slots.end()) {
      fail(errc::validation, "unknown placeholder " + slot);
    }
  }
  if (tmpl.target_label != "Category" && tmpl.target_label != "Product") {
    fail(errc::validation, "target_label must be Category or Product, got '" +
                               tmpl.target_label + "'");
  }
  return tmpl;
}

prompt_template load_template(const std::string& path) {
  ordered_json obj = ordered_json::parse(read_file(path), nullptr, false);
  if (obj.is_discarded()) fail(errc::parse, "malformed JSON in template file: " + path);
  return template_from_json(obj);
}

std::string render_example_block(const tagged_sample& tagged, const prompt_template& tmpl) {
  if (!tagged.base.label) {
    fail(errc::validation, "example sample '" + tagged.base.id + "' has no label");
  }
  std::vector<std::string> lines;
  lines.push_back("Query: " + tagged.tagged_query);
  append_target_lines(lines, tagged, tmpl);
  lines.push_back("Answer: " + answer_text(*tagged.base.label));
  return join(lines, "\n");
}

std::vector<icl_example> select_icl(const sample& s, const std::vector<tagged_sample>& pool,
                                    int k_pos, int k_neg, const prompt_template& tmpl) {
  if (k_pos < 0 || k_neg < 0) fail(errc::validation, "icl counts must be non-negative");
  token_list query_tokens = tokenize(s.query, s.language);

  struct candidate {
    size_t index;
    double score;
    bool same_language;
  };
  std::vector<candidate> positives, negatives;
  for (size_t i = 0; i < pool.size(); ++i) {
    const tagged_sample& entry = pool[i];
    if (!entry.base.label) {
      fail(errc::validation, "icl pool sample '" + entry.base.id + "' has no label");
    }
    if (entry.base.id == s.id) continue;
    candidate c;
    c.index = i;
    c.score = jaccard(query_tokens, tokenize(entry.base.query, entry.base.language));
    c.same_language = entry.base.language == s.language;
    (*entry.base.label == 1 ? positives : negatives).push_back(c);
  }

  auto pick = [&](std::vector<candidate>& candidates, size_t k) {
    // Same-language candidates outrank the rest; within a tier, highest
    // Jaccard first, pool order breaking ties (stable sort).
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const candidate& a, const candidate& b) {
                       if (a.same_language != b.same_language) return a.same_language;
                       return a.score > b.score;
                     });
    if (candidates.size() > k) candidates.resize(k);
  };
  pick(positives, static_cast<size_t>(k_pos));
  pick(negatives, static_cast<size_t>(k_neg));

  std::vector<icl_example> examples;
  for (const std::vector<candidate>* group : {&positives, &negatives}) {
    for (const candidate& c : *group) {
      const tagged_sample& entry = pool[c.index];
      icl_example example;
      example.language = entry.base.language;
      example.positive = *entry.base.label == 1;
      example.rendered_block = render_example_block(entry, tmpl);
      examples.push_back(std::move(example));
    }
  }
  return examples;
}

prompt_record build_prompt(const tagged_sample& tagged, const prompt_template& tmpl,
                           const std::vector<icl_example>& icl, size_t max_chars) {
  std::vector<std::string> lines;
  lines.push_back("Instruction:");
  append_lines(lines, tmpl.instruction);
  lines.push_back("");
  for (const std::string& slot : tmpl.layout) {
    if (slot == "query") {
      lines.push_back("Query: " + tagged.tagged_query);
    } else if (slot == "target") {
      append_target_lines(lines, tagged, tmpl);
    } else if (slot == "answer") {
      if (tagged.base.label) {
        lines.push_back("Answer: " + answer_text(*tagged.base.label));
      } else {
        lines.push_back("Answer:");
      }
    } else if (slot == "options") {
      if (icl.empty()) continue;
      lines.push_back("Options:");
      for (size_t i = 0; i < icl.size(); ++i) {
        if (i > 0) lines.push_back("");
        append_lines(lines, icl[i].rendered_block);
      }
    } else {
      fail(errc::validation, "unknown placeholder " + slot);
    }
  }
  prompt_record record;
  record.id = tagged.base.id;
  record.prompt = join(lines, "\n");
  if (max_chars > 0 && record.prompt.size() > max_chars) {
    size_t cut = max_chars;
    while (cut > 0 && (static_cast<uint8_t>(record.prompt[cut]) & 0xC0) == 0x80) --cut;
    record.prompt.resize(cut);
  }
  if (tagged.base.label) record.answer = answer_text(*tagged.base.label);
  return record;
}

namespace {

void write_prompt_lines(const std::vector<prompt_record>& records, const std::string& path,
                        bool require_answer) {
  std::ostringstream out;
  for (const prompt_record& record : records) {
    if (require_answer && !record.answer) {
      fail(errc::validation, "record '" + record.id + "' has no answer; training export "
                             "requires labeled prompts");
    }
    ordered_json obj = ordered_json::object();
    obj["id"] = record.id;
    obj["prompt"] = record.prompt;
    if (record.answer) obj["answer"] = *record.answer;
    out << obj.dump() << '\n';
  }
  write_file(path, out.str());
}

}  // namespace

void export_training_file(const std::vector<prompt_record>& records, const std::string& path) {
  write_prompt_lines(records, path, true);
}

void write_prompt_jsonl(const std::vector<prompt_record>& records, const std::string& path) {
  write_prompt_lines(records, path, false);
}

std::vector<prompt_record> read_prompt_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(errc::io, "cannot open prompt file: " + path);
  std::vector<prompt_record> records;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    ordered_json obj = ordered_json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object() || !obj.contains("id") || !obj.contains("prompt")) {
      fail(errc::parse, "line " + std::to_string(line_no) + ": malformed prompt record");
    }
    prompt_record record;
    record.id = obj["id"].get<std::string>();
    record.prompt = obj["prompt"].get<std::string>();
    if (obj.contains("answer")) {
      std::string answer = obj["answer"].get<std::string>();
      if (answer != "yes" && answer != "no") {
        fail(errc::validation, "line " + std::to_string(line_no) + ": answer must be yes or no");
      }
      record.answer = answer;
    }
    records.push_back(std::move(record));
  }
  if (in.bad()) fail(errc::io, "read failed: " + path);
  return records;
}

}  // namespace relrefine
