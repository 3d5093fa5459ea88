#include "core/tagging.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace relrefine {

std::string tag_language(const sample& s) {
  return "[LANG=" + s.language + "] " + s.query;
}

std::optional<std::pair<std::string, std::string>> strip_language_tag(std::string_view text) {
  if (!starts_with(text, "[LANG=")) return std::nullopt;
  if (text.size() < 9 || text[8] != ']') return std::nullopt;
  std::string language(text.substr(6, 2));
  if (!(language[0] >= 'a' && language[0] <= 'z' && language[1] >= 'a' && language[1] <= 'z')) {
    return std::nullopt;
  }
  if (text.size() < 10 || text[9] != ' ') return std::nullopt;
  return std::make_pair(language, std::string(text.substr(10)));
}

std::string tag_category(const category_path& path) {
  if (path.levels.empty() || path.levels.size() > 5) {
    fail(errc::validation,
         "category path must have 1-5 levels, got " + std::to_string(path.levels.size()));
  }
  std::string out;
  for (size_t i = 0; i < path.levels.size(); ++i) {
    std::string depth = std::to_string(i + 1);
    if (i > 0) out += ' ';
    out += "[D" + depth + "] " + path.levels[i] + " [/D" + depth + "]";
  }
  return out;
}

std::optional<category_path> parse_category_tags(std::string_view text) {
  category_path path;
  size_t pos = 0;
  while (pos < text.size()) {
    std::string depth = std::to_string(path.levels.size() + 1);
    std::string open = "[D" + depth + "] ";
    std::string close = " [/D" + depth + "]";
    if (text.substr(pos, open.size()) != open) return std::nullopt;
    pos += open.size();
    size_t end = text.find(close, pos);
    if (end == std::string_view::npos) return std::nullopt;
    path.levels.emplace_back(text.substr(pos, end - pos));
    pos = end + close.size();
    if (pos < text.size()) {
      if (text[pos] != ' ') return std::nullopt;
      ++pos;
    }
  }
  if (path.levels.empty() || path.levels.size() > 5) return std::nullopt;
  return path;
}

namespace {

attribute_rule make_pattern_rule(std::string key, std::string pattern) {
  attribute_rule rule;
  rule.key = std::move(key);
  rule.kind = rule_kind::pattern;
  rule.pattern_source = std::move(pattern);
  try {
    rule.pattern = std::regex(rule.pattern_source, std::regex::ECMAScript);
  } catch (const std::regex_error& e) {
    fail(errc::config, "invalid pattern for attribute '" + rule.key + "': " + e.what());
  }
  return rule;
}

attribute_rule make_lexicon_rule(std::string key, std::vector<std::string> words,
                                 std::string language) {
  attribute_rule rule;
  rule.key = std::move(key);
  rule.kind = rule_kind::lexicon;
  rule.language = std::move(language);
  rule.lexicon.reserve(words.size());
  for (std::string& word : words) rule.lexicon.push_back(fold_text(word));
  return rule;
}

attribute_rule make_extra_field_rule(std::string key, std::string extra_key) {
  attribute_rule rule;
  rule.key = std::move(key);
  rule.kind = rule_kind::extra_field;
  rule.extra_key = std::move(extra_key);
  return rule;
}

attribute_rule make_brand_heuristic_rule(std::string key) {
  attribute_rule rule;
  rule.key = std::move(key);
  rule.kind = rule_kind::brand_heuristic;
  return rule;
}

bool is_ascii_digit(char32_t cp) { return cp >= '0' && cp <= '9'; }

// First raw-title token shaped like a proper noun: leading uppercase, the
// rest already lowercase, letters only, at least 3 characters.
std::optional<std::string> brand_candidate(const std::string& title) {
  std::vector<char32_t> cps = utf8_decode(title);
  std::vector<char32_t> token;
  for (char32_t cp : cps) {
    if (is_space_char(cp)) {
      if (!token.empty()) break;
      continue;
    }
    token.push_back(cp);
  }
  if (token.size() < 3) return std::nullopt;
  if (fold_char(token[0]) == token[0]) return std::nullopt;
  for (char32_t cp : token) {
    if (is_punct_char(cp) || is_ascii_digit(cp)) return std::nullopt;
  }
  for (size_t i = 1; i < token.size(); ++i) {
    if (fold_char(token[i]) != token[i]) return std::nullopt;
  }
  for (char32_t& cp : token) cp = fold_char(cp);
  return utf8_encode(token);
}

}  // namespace

rule_set default_rule_set() {
  rule_set rules;
  rules.rules.push_back(make_extra_field_rule("category", "category"));
  rules.rules.push_back(make_lexicon_rule(
      "brand",
      {"apexel", "canon", "nikon", "sony", "samsung", "xiaomi", "huawei", "bosch",
       "philips", "nike", "adidas", "puma", "asus", "acer", "logitech", "lenovo"},
      "en"));
  rules.rules.push_back(make_brand_heuristic_rule("brand"));
  rules.rules.push_back(make_lexicon_rule(
      "color",
      {"red", "blue", "green", "black", "white", "yellow", "orange", "pink", "purple",
       "brown", "grey", "gray", "silver", "gold", "golden", "beige", "navy", "teal",
       "maroon", "turquoise", "ivory", "khaki", "cyan", "violet"},
      "en"));
  rules.rules.push_back(make_pattern_rule(
      "size", "\\b\\d+(\\.\\d+)?(mm|cm|km|m|in|inch|ft|g|kg|ml|l|oz|lb)\\b"));
  rules.rules.push_back(make_pattern_rule("size", "\\b\\d+x\\b"));
  rules.rules.push_back(make_lexicon_rule(
      "material",
      {"cotton", "leather", "wool", "silk", "linen", "polyester", "nylon", "denim",
       "suede", "canvas", "rubber", "plastic", "metal", "steel", "aluminum", "wood",
       "wooden", "glass", "ceramic", "marble", "bamboo", "velvet", "satin", "lace",
       "fleece", "cashmere", "latex", "foam", "acrylic", "copper", "brass", "titanium"},
      "en"));
  rules.rules.push_back(make_lexicon_rule(
      "style",
      {"casual", "formal", "vintage", "retro", "modern", "classic", "elegant", "sporty",
       "bohemian", "minimalist", "luxury", "slim", "loose", "oversized", "chic", "gothic"},
      "en"));
  rules.rules.push_back(make_extra_field_rule("qc_leaf", "qc_leaf"));
  return rules;
}

rule_set load_rule_set(const std::string& path) {
  ordered_json obj = ordered_json::parse(read_file(path), nullptr, false);
  if (obj.is_discarded() || !obj.is_object()) {
    fail(errc::config, "malformed JSON in rule file: " + path);
  }
  rule_set rules;
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const std::string& key = it.key();
    if (!it.value().is_array()) {
      fail(errc::config, "rules for attribute '" + key + "' must be an array");
    }
    for (const auto& entry : it.value()) {
      if (!entry.is_object()) {
        fail(errc::config, "rule entries for '" + key + "' must be objects");
      }
      std::string language;
      if (entry.contains("language")) {
        if (!entry["language"].is_string()) {
          fail(errc::config, "rule language for '" + key + "' must be a string");
        }
        language = entry["language"].get<std::string>();
      }
      size_t recognized = entry.contains("language") ? 1u : 0u;
      if (entry.contains("pattern")) {
        if (!entry["pattern"].is_string()) {
          fail(errc::config, "pattern for '" + key + "' must be a string");
        }
        attribute_rule rule = make_pattern_rule(key, entry["pattern"].get<std::string>());
        rule.language = language;
        rules.rules.push_back(std::move(rule));
        ++recognized;
      } else if (entry.contains("lexicon")) {
        if (!entry["lexicon"].is_array()) {
          fail(errc::config, "lexicon for '" + key + "' must be an array");
        }
        std::vector<std::string> words;
        for (const auto& w : entry["lexicon"]) {
          if (!w.is_string()) {
            fail(errc::config, "lexicon entries for '" + key + "' must be strings");
          }
          words.push_back(w.get<std::string>());
        }
        rules.rules.push_back(make_lexicon_rule(key, std::move(words), language));
        ++recognized;
      } else if (entry.contains("extra_field")) {
        if (!entry["extra_field"].is_string()) {
          fail(errc::config, "extra_field for '" + key + "' must be a string");
        }
        rules.rules.push_back(make_extra_field_rule(key, entry["extra_field"].get<std::string>()));
        ++recognized;
      } else if (entry.contains("heuristic")) {
        if (!entry["heuristic"].is_string() ||
            entry["heuristic"].get<std::string>() != "capitalized_first_token") {
          fail(errc::config, "unknown heuristic for '" + key + "'");
        }
        attribute_rule rule = make_brand_heuristic_rule(key);
        rule.language = language;
        rules.rules.push_back(std::move(rule));
        ++recognized;
      } else {
        fail(errc::config, "rule entry for '" + key +
                               "' needs one of pattern/lexicon/extra_field/heuristic");
      }
      if (entry.size() != recognized) {
        fail(errc::config, "rule entry for '" + key + "' has unrecognized keys");
      }
    }
  }
  return rules;
}

bool attribute_present(const attribute_set& attrs, std::string_view key) {
  return attribute_value(attrs, key) != nullptr;
}

const std::string* attribute_value(const attribute_set& attrs, std::string_view key) {
  for (const auto& [k, v] : attrs) {
    if (k == key) return &v;
  }
  return nullptr;
}

namespace {

void apply_title_rule(const attribute_rule& rule, const std::string& title,
                      const std::string& folded_title, const token_list& tokens,
                      attribute_set& attrs) {
  if (!rule.language.empty() && rule.language != tokens.language) return;
  if (attribute_present(attrs, rule.key)) return;
  switch (rule.kind) {
    case rule_kind::pattern: {
      std::smatch match;
      if (std::regex_search(folded_title, match, rule.pattern)) {
        attrs.emplace_back(rule.key, match.str());
      }
      break;
    }
    case rule_kind::lexicon: {
      for (const std::string& token : tokens.tokens) {
        if (std::find(rule.lexicon.begin(), rule.lexicon.end(), token) != rule.lexicon.end()) {
          attrs.emplace_back(rule.key, token);
          break;
        }
      }
      break;
    }
    case rule_kind::brand_heuristic: {
      if (auto candidate = brand_candidate(title)) {
        attrs.emplace_back(rule.key, *candidate);
      }
      break;
    }
    case rule_kind::extra_field:
      break;  // resolved in collect_attributes
  }
}

}  // namespace

attribute_set extract_attributes(const std::string& title, const std::string& language,
                                 const rule_set& rules) {
  attribute_set attrs;
  std::string folded_title = fold_text(title);
  token_list tokens = tokenize(title, language);
  for (const attribute_rule& rule : rules.rules) {
    apply_title_rule(rule, title, folded_title, tokens, attrs);
  }
  return attrs;
}

attribute_set collect_attributes(const sample& s, const rule_set& rules) {
  attribute_set attrs;
  std::string title = s.target.raw_text();
  std::string folded_title = fold_text(title);
  token_list tokens = tokenize(title, s.language);
  for (const attribute_rule& rule : rules.rules) {
    if (rule.kind == rule_kind::extra_field) {
      if (!rule.language.empty() && rule.language != s.language) continue;
      if (attribute_present(attrs, rule.key)) continue;
      if (!s.extra.contains(rule.extra_key)) continue;
      const ordered_json& value = s.extra[rule.extra_key];
      if (value.is_string()) {
        attrs.emplace_back(rule.key, fold_text(value.get<std::string>()));
      } else if (value.is_number_integer()) {
        attrs.emplace_back(rule.key, std::to_string(value.get<int64_t>()));
      }
      continue;
    }
    apply_title_rule(rule, title, folded_title, tokens, attrs);
  }
  return attrs;
}

std::string render_attr_block(const attribute_set& attrs) {
  if (attrs.empty()) return "";
  std::string out = "[ATTR] ";
  for (size_t i = 0; i < attrs.size(); ++i) {
    if (i > 0) out += ", ";
    out += attrs[i].first + ": " + attrs[i].second;
  }
  return out;
}

description_generator extractive_generator() { return description_generator{}; }

description_generator load_generation_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(errc::io, "cannot open generation file: " + path);
  description_generator gen;
  gen.external = true;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    ordered_json obj = ordered_json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) {
      fail(errc::parse, "line " + std::to_string(line_no) + ": malformed generation object");
    }
    if (!obj.contains("id") || !obj["id"].is_string() || !obj.contains("gen_tags") ||
        !obj["gen_tags"].is_string() || !obj.contains("gen_desc") ||
        !obj["gen_desc"].is_string()) {
      fail(errc::validation, "line " + std::to_string(line_no) +
                                 ": generation entries need string id/gen_tags/gen_desc");
    }
    gen.by_id[obj["id"].get<std::string>()] = {obj["gen_tags"].get<std::string>(),
                                               obj["gen_desc"].get<std::string>()};
  }
  if (in.bad()) fail(errc::io, "read failed: " + path);
  return gen;
}

namespace {

generated_description extractive_description(const sample& s, const attribute_set& attrs) {
  generated_description out;
  token_list tokens = tokenize(s.target.raw_text(), s.language);

  const std::string* leaf = attribute_value(attrs, "qc_leaf");
  if (!leaf) leaf = attribute_value(attrs, "category");
  if (leaf) {
    out.gen_tags = *leaf + "_feature";
  } else if (!tokens.tokens.empty()) {
    // Two highest-TF tokens, ties resolved by first occurrence.
    std::vector<std::pair<std::string, size_t>> counts;
    for (const std::string& token : tokens.tokens) {
      auto it = std::find_if(counts.begin(), counts.end(),
                             [&](const auto& entry) { return entry.first == token; });
      if (it == counts.end()) {
        counts.emplace_back(token, 1);
      } else {
        ++it->second;
      }
    }
    std::stable_sort(counts.begin(), counts.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    out.gen_tags = counts[0].first;
    if (counts.size() > 1) out.gen_tags += "_" + counts[1].first;
  } else {
    out.gen_tags = "item_feature";
  }

  const std::string* size_value = attribute_value(attrs, "size");
  std::vector<std::string> words;
  words.push_back("A");
  if (size_value) words.push_back(*size_value);
  const std::string* category = attribute_value(attrs, "category");
  if (category) {
    std::string head = *category;
    std::replace(head.begin(), head.end(), '_', ' ');
    for (std::string& part : split(head, ' ')) {
      if (!part.empty()) words.push_back(std::move(part));
    }
  } else {
    size_t taken = 0;
    for (const std::string& token : tokens.tokens) {
      if (taken == 4) break;
      if (size_value && token == *size_value) continue;
      words.push_back(token);
      ++taken;
    }
    if (taken == 0) words.push_back("product");
  }
  words.push_back("for");
  size_t use_words = 0;
  for (size_t i = 4; i < tokens.tokens.size() && i < 8; ++i) {
    words.push_back(tokens.tokens[i]);
    ++use_words;
  }
  if (use_words == 0) {
    words.push_back("everyday");
    words.push_back("use");
  }
  if (words.size() > 20) words.resize(20);
  out.gen_desc = join(words, " ") + ".";
  return out;
}

}  // namespace

generated_description generate_description(const sample& s, const attribute_set& attrs,
                                           const description_generator& gen) {
  if (gen.external) {
    auto it = gen.by_id.find(s.id);
    if (it != gen.by_id.end()) {
      generated_description out;
      out.gen_tags = it->second.first;
      out.gen_desc = it->second.second;
      return out;
    }
    generated_description out = extractive_description(s, attrs);
    out.used_fallback = true;
    return out;
  }
  return extractive_description(s, attrs);
}

tagged_sample apply_tags(const sample& s, task_kind task, const tag_config& config,
                         const rule_set& rules, const description_generator& gen,
                         size_t* fallback_count) {
  if (config.hct && task != task_kind::qc) {
    fail(errc::config, "hct tagging applies to QC data only");
  }
  if ((config.sit || config.dg) && task != task_kind::qi) {
    fail(errc::config, "sit/dg tagging applies to QI data only");
  }
  tagged_sample tagged;
  tagged.base = s;
  tagged.tagged_query = config.lt ? tag_language(s) : s.query;
  if (task == task_kind::qc) {
    tagged.tagged_target = config.hct ? tag_category(s.target.path()) : s.target.raw_text();
    return tagged;
  }
  tagged.tagged_target = s.target.title();
  if (config.sit || config.dg) {
    attribute_set attrs = collect_attributes(s, rules);
    if (config.sit && !attrs.empty()) {
      tagged.attr_block = render_attr_block(attrs);
    }
    if (config.dg) {
      generated_description description = generate_description(s, attrs, gen);
      tagged.gen_tags = description.gen_tags;
      tagged.gen_desc = description.gen_desc;
      if (description.used_fallback && fallback_count) ++*fallback_count;
    }
  }
  return tagged;
}

void write_tagged_jsonl(const std::vector<tagged_sample>& samples, task_kind task,
                        const std::string& path) {
  std::ostringstream out;
  for (const tagged_sample& tagged : samples) {
    ordered_json obj = sample_to_json(tagged.base, task);
    obj["tagged_query"] = tagged.tagged_query;
    obj["tagged_target"] = tagged.tagged_target;
    if (tagged.attr_block) obj["attr_block"] = *tagged.attr_block;
    if (tagged.gen_tags) obj["gen_tags"] = *tagged.gen_tags;
    if (tagged.gen_desc) obj["gen_desc"] = *tagged.gen_desc;
    out << obj.dump() << '\n';
  }
  write_file(path, out.str());
}

std::vector<tagged_sample> read_tagged_jsonl(const std::string& path, task_kind task) {
  std::vector<sample> raw = read_jsonl(path, task);
  std::vector<tagged_sample> samples;
  samples.reserve(raw.size());
  for (sample& s : raw) {
    tagged_sample tagged;
    auto take_string = [&](const char* key) -> std::optional<std::string> {
      if (!s.extra.contains(key)) return std::nullopt;
      if (!s.extra[key].is_string()) {
        fail(errc::validation, "sample '" + s.id + "': " + key + " must be a string");
      }
      std::string value = s.extra[key].get<std::string>();
      s.extra.erase(key);
      return value;
    };
    std::optional<std::string> tagged_query = take_string("tagged_query");
    std::optional<std::string> tagged_target = take_string("tagged_target");
    tagged.attr_block = take_string("attr_block");
    tagged.gen_tags = take_string("gen_tags");
    tagged.gen_desc = take_string("gen_desc");
    tagged.base = std::move(s);
    tagged.tagged_query = tagged_query.value_or(tagged.base.query);
    tagged.tagged_target = tagged_target.value_or(tagged.base.target.raw_text());
    samples.push_back(std::move(tagged));
  }
  return samples;
}

}  // namespace relrefine
