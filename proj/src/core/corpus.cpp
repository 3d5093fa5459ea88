#include "core/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

namespace relrefine {

task_kind parse_task(std::string_view name) {
  std::string lowered;
  for (char c : name) lowered.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lowered == "qc") return task_kind::qc;
  if (lowered == "qi") return task_kind::qi;
  fail(errc::usage, "unknown task '" + std::string(name) + "' (expected QC or QI)");
}

std::string task_name(task_kind task) {
  return task == task_kind::qc ? "QC" : "QI";
}

std::string category_path::joined() const { return join(levels, ">"); }

category_path category_path::parse(std::string_view joined, size_t line_no) {
  category_path path;
  path.levels = split(joined, '>');
  if (path.levels.empty() || path.levels.size() > 5) {
    fail(errc::validation,
         "line " + std::to_string(line_no) + ": category_path must have 1-5 levels, got " +
             std::to_string(path.levels.size()));
  }
  for (const std::string& level : path.levels) {
    if (trim(level).empty()) {
      fail(errc::validation,
           "line " + std::to_string(line_no) + ": category_path level is empty or whitespace-only");
    }
  }
  return path;
}

target_field target_field::category(category_path path) {
  target_field f;
  f.value_ = std::move(path);
  return f;
}

target_field target_field::item(std::string title) {
  target_field f;
  f.value_ = std::move(title);
  return f;
}

std::string target_field::raw_text() const {
  return is_category() ? path().joined() : title();
}

bool sample::operator==(const sample& other) const {
  return id == other.id && id_explicit == other.id_explicit &&
         language == other.language && query == other.query &&
         target == other.target && label == other.label && extra == other.extra;
}

namespace {

void validate_language(const std::string& language, size_t line_no) {
  bool ok = language.size() == 2 && language[0] >= 'a' && language[0] <= 'z' &&
            language[1] >= 'a' && language[1] <= 'z';
  if (!ok) {
    fail(errc::validation, "line " + std::to_string(line_no) +
                               ": language must be a two-letter lowercase code, got '" +
                               language + "'");
  }
}

std::string json_to_id(const ordered_json& value, size_t line_no) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_number_integer()) return std::to_string(value.get<int64_t>());
  fail(errc::validation, "line " + std::to_string(line_no) + ": id must be a string or integer");
}

}  // namespace

sample parse_sample_line(const std::string& line, task_kind task, size_t line_no) {
  ordered_json obj = ordered_json::parse(line, nullptr, false);
  if (obj.is_discarded() || !obj.is_object()) {
    fail(errc::parse, "line " + std::to_string(line_no) + ": malformed JSON object");
  }
  sample s;
  bool saw_language = false, saw_query = false, saw_target = false;
  const char* target_key = task == task_kind::qc ? "category_path" : "item_title";
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const std::string& key = it.key();
    const ordered_json& value = it.value();
    if (key == "id") {
      s.id = json_to_id(value, line_no);
      s.id_explicit = true;
    } else if (key == "language") {
      if (!value.is_string()) {
        fail(errc::validation, "line " + std::to_string(line_no) + ": language must be a string");
      }
      s.language = value.get<std::string>();
      validate_language(s.language, line_no);
      saw_language = true;
    } else if (key == "query") {
      if (!value.is_string()) {
        fail(errc::validation, "line " + std::to_string(line_no) + ": query must be a string");
      }
      s.query = value.get<std::string>();
      saw_query = true;
    } else if (key == target_key) {
      if (!value.is_string()) {
        fail(errc::validation, "line " + std::to_string(line_no) + ": " + std::string(target_key) +
                                   " must be a string");
      }
      if (task == task_kind::qc) {
        s.target = target_field::category(category_path::parse(value.get<std::string>(), line_no));
      } else {
        s.target = target_field::item(value.get<std::string>());
      }
      saw_target = true;
    } else if (key == "label") {
      if (!value.is_number_integer() || (value.get<int64_t>() != 0 && value.get<int64_t>() != 1)) {
        fail(errc::validation, "line " + std::to_string(line_no) + ": label must be 0 or 1");
      }
      s.label = static_cast<int>(value.get<int64_t>());
    } else {
      s.extra[key] = value;
    }
  }
  if (!saw_language) {
    fail(errc::validation, "line " + std::to_string(line_no) + ": missing required key 'language'");
  }
  if (!saw_query) {
    fail(errc::validation, "line " + std::to_string(line_no) + ": missing required key 'query'");
  }
  if (!saw_target) {
    fail(errc::validation,
         "line " + std::to_string(line_no) + ": missing required key '" + target_key + "'");
  }
  if (!s.id_explicit) s.id = std::to_string(line_no - 1);
  return s;
}

ordered_json sample_to_json(const sample& s, task_kind task) {
  ordered_json obj = ordered_json::object();
  if (s.id_explicit) obj["id"] = s.id;
  obj["language"] = s.language;
  obj["query"] = s.query;
  if (task == task_kind::qc) {
    obj["category_path"] = s.target.path().joined();
  } else {
    obj["item_title"] = s.target.title();
  }
  if (s.label) obj["label"] = *s.label;
  for (auto it = s.extra.begin(); it != s.extra.end(); ++it) {
    obj[it.key()] = it.value();
  }
  return obj;
}

std::vector<sample> read_jsonl(const std::string& path, task_kind task) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(errc::io, "cannot open file: " + path);
  std::vector<sample> samples;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    sample s = parse_sample_line(line, task, line_no);
    if (!s.id_explicit) s.id = std::to_string(samples.size());
    samples.push_back(std::move(s));
  }
  if (in.bad()) fail(errc::io, "read failed: " + path);
  return samples;
}

void write_jsonl(const std::vector<sample>& samples, task_kind task,
                 const std::string& path) {
  std::ostringstream out;
  for (const sample& s : samples) {
    out << sample_to_json(s, task).dump() << '\n';
  }
  write_file(path, out.str());
}

ordered_json dataset_stats::to_json() const {
  ordered_json per_lang = ordered_json::object();
  for (const auto& [language, stats] : per_language) {
    ordered_json entry = ordered_json::object();
    entry["count"] = stats.count;
    if (stats.labeled > 0) {
      entry["positive_ratio"] =
          static_cast<double>(stats.positives) / static_cast<double>(stats.labeled);
    }
    per_lang[language] = entry;
  }
  ordered_json obj = ordered_json::object();
  obj["total"] = total;
  obj["per_language"] = per_lang;
  return obj;
}

dataset_stats compute_stats(const std::vector<sample>& samples) {
  dataset_stats stats;
  stats.total = samples.size();
  for (const sample& s : samples) {
    language_stats& lang = stats.per_language[s.language];
    ++lang.count;
    if (s.label) {
      ++lang.labeled;
      lang.positives += static_cast<size_t>(*s.label);
    }
  }
  return stats;
}

// ---- synthetic corpus --------------------------------------------------------

namespace {

struct synth_vocab {
  std::vector<std::string> query_words;
  std::vector<std::string> distractor_words;   // co-occur with query words in positives
  std::vector<std::string> negative_words;     // never co-occur with query vocabulary
};

constexpr size_t kQueryVocab = 80;
constexpr size_t kDistractorVocab = 220;
constexpr size_t kNegativeVocab = 220;

const std::map<std::string, std::vector<std::string>>& latin_syllables() {
  static const std::map<std::string, std::vector<std::string>> table = {
      {"en", {"ban", "cor", "dale", "fen", "grim", "hol", "ket", "lun", "mer",
              "nor", "pel", "quin", "rud", "sten", "tor", "wick"}},
      {"es", {"ca", "dor", "fue", "gri", "lla", "mon", "pas", "que", "rri",
              "sol", "ter", "vien", "zar", "bri", "ña", "lu"}},
      {"fr", {"beau", "cha", "den", "fleu", "gou", "jou", "lai", "mon", "nou",
              "pei", "quet", "rou", "seu", "tresse", "ver", "é"}},
      {"pt", {"bra", "cam", "dei", "fol", "gua", "lho", "mei", "nho", "pra",
              "quei", "ran", "sil", "tao", "vel", "ção", "zu"}},
      {"de", {"bach", "dorf", "fel", "gang", "hau", "kling", "lech", "mund",
              "nacht", "pfal", "rech", "schul", "turm", "wald", "zeug", "ü"}},
      {"it", {"bel", "cor", "dolce", "fiu", "gra", "lan", "mon", "net", "pra",
              "quar", "ros", "sta", "tre", "ven", "zza", "gio"}},
      {"pl", {"brz", "czy", "dza", "gło", "krze", "łom", "mysz", "nie", "prza",
              "rze", "szu", "tka", "wro", "zia", "ół", "sko"}},
      {"id", {"ban", "cit", "dar", "gun", "jal", "kam", "lum", "mas", "nus",
              "pan", "rak", "sur", "tan", "wan", "yat", "bu"}},
      {"vn", {"banh", "cuo", "dinh", "gao", "hoa", "khe", "lang", "minh",
              "ngoc", "phu", "quy", "soi", "thao", "vang", "xua", "yen"}},
  };
  return table;
}

std::vector<char32_t> char_alphabet(const std::string& language) {
  std::vector<char32_t> chars;
  if (language == "ja") {
    for (char32_t c = 0x30A2; c <= 0x30F3; ++c) chars.push_back(c);
  } else if (language == "ko") {
    for (int i = 0; i < 200; ++i) chars.push_back(0xAC00 + (i * 211) % 11172);
  } else if (language == "th") {
    for (char32_t c = 0x0E01; c <= 0x0E2E; ++c) chars.push_back(c);
  }
  return chars;
}

std::vector<std::string> arabic_syllables() {
  static const std::u32string letters = U"ابتثجحخدذرزسشصضطظعغفقكلمنهوي";
  std::vector<std::string> syllables;
  for (char32_t a : letters) {
    std::string s;
    utf8_append(s, a);
    syllables.push_back(s);
  }
  return syllables;
}

bool is_char_bigram_language(const std::string& language) {
  return language == "ja" || language == "ko" || language == "th";
}

std::string make_word(const std::string& language, rng_engine& rng,
                      const std::vector<std::string>& syllables,
                      const std::vector<char32_t>& alphabet) {
  std::string word;
  if (is_char_bigram_language(language)) {
    // Two distinct characters: the word tokenizes to exactly one bigram, so
    // pool disjointness carries over to token disjointness.
    char32_t a = alphabet[rng_below(rng, alphabet.size())];
    char32_t b = alphabet[rng_below(rng, alphabet.size())];
    while (b == a) b = alphabet[rng_below(rng, alphabet.size())];
    utf8_append(word, a);
    utf8_append(word, b);
  } else {
    size_t parts = 2 + rng_below(rng, 2);
    for (size_t i = 0; i < parts; ++i) {
      word += syllables[rng_below(rng, syllables.size())];
    }
  }
  return word;
}

synth_vocab build_vocab(const std::string& language) {
  // Seeded from the language only: the same vocabulary tables back every
  // generated corpus, whatever the config seed.
  rng_engine rng(stable_hash64(language) ^ 0x5EEDBA5Eu);
  std::vector<std::string> syllables;
  std::vector<char32_t> alphabet;
  if (is_char_bigram_language(language)) {
    alphabet = char_alphabet(language);
  } else if (language == "ar") {
    syllables = arabic_syllables();
  } else {
    syllables = latin_syllables().at(language);
  }
  std::unordered_set<std::string> used;
  auto draw = [&](size_t count) {
    std::vector<std::string> words;
    words.reserve(count);
    while (words.size() < count) {
      std::string w = make_word(language, rng, syllables, alphabet);
      if (used.insert(w).second) words.push_back(std::move(w));
    }
    return words;
  };
  synth_vocab vocab;
  vocab.query_words = draw(kQueryVocab);
  vocab.distractor_words = draw(kDistractorVocab);
  vocab.negative_words = draw(kNegativeVocab);
  return vocab;
}

std::vector<std::string> draw_distinct(const std::vector<std::string>& pool,
                                       size_t count, rng_engine& rng) {
  std::set<size_t> picked;
  while (picked.size() < count) picked.insert(rng_below(rng, pool.size()));
  std::vector<std::string> words;
  words.reserve(count);
  for (size_t idx : picked) words.push_back(pool[idx]);
  return words;
}

target_field pack_target(task_kind task, std::vector<std::string> tokens,
                         rng_engine& rng) {
  rng_shuffle(tokens, rng);
  if (task == task_kind::qi) {
    return target_field::item(join(tokens, " "));
  }
  category_path path;
  size_t level_count =
      tokens.size() == 1 ? 1 : std::min<size_t>(5, std::max<size_t>(2, (tokens.size() + 1) / 2));
  size_t base = tokens.size() / level_count;
  size_t rem = tokens.size() % level_count;
  size_t pos = 0;
  for (size_t lv = 0; lv < level_count; ++lv) {
    size_t take = base + (lv < rem ? 1 : 0);
    std::vector<std::string> level(tokens.begin() + pos, tokens.begin() + pos + take);
    path.levels.push_back(join(level, " "));
    pos += take;
  }
  return target_field::category(std::move(path));
}

}  // namespace

const std::vector<std::string>& synth_supported_languages() {
  static const std::vector<std::string> codes = {"en", "es", "fr", "pt", "de", "it",
                                                 "pl", "id", "vn", "ar", "ja", "ko", "th"};
  return codes;
}

std::vector<sample> generate_synthetic(const synth_config& config) {
  if (config.per_language_count < 1) {
    fail(errc::validation, "per_language_count must be >= 1");
  }
  for (double ratio : {config.positive_ratio, config.noise_rate, config.overlap_fraction}) {
    if (ratio < 0.0 || ratio > 1.0) {
      fail(errc::validation, "positive_ratio, noise_rate and overlap_fraction must lie in [0,1]");
    }
  }
  const auto& supported = synth_supported_languages();
  for (const std::string& language : config.languages) {
    if (std::find(supported.begin(), supported.end(), language) == supported.end()) {
      fail(errc::validation, "unsupported synthetic language '" + language +
                                 "' (supported: " + join(supported, ", ") + ")");
    }
  }

  rng_engine rng(config.seed);
  const double weak_rate = config.overlap_fraction / 4.0;
  std::vector<sample> samples;
  for (const std::string& language : config.languages) {
    synth_vocab vocab = build_vocab(language);
    size_t n = static_cast<size_t>(config.per_language_count);
    size_t n_pos = static_cast<size_t>(std::llround(config.positive_ratio * static_cast<double>(n)));
    std::vector<int> slots(n, 0);
    std::fill(slots.begin(), slots.begin() + std::min(n_pos, n), 1);
    rng_shuffle(slots, rng);
    for (size_t i = 0; i < n; ++i) {
      const std::string& q1 = vocab.query_words[rng_below(rng, vocab.query_words.size())];
      std::string q2 = vocab.query_words[rng_below(rng, vocab.query_words.size())];
      while (q2 == q1) q2 = vocab.query_words[rng_below(rng, vocab.query_words.size())];
      int clean = slots[i];
      std::vector<std::string> tokens;
      if (clean == 1) {
        if (rng_unit(rng) < weak_rate) {
          tokens.push_back(q1);
          for (auto& w : draw_distinct(vocab.distractor_words, 6 + rng_below(rng, 3), rng)) {
            tokens.push_back(std::move(w));
          }
        } else {
          tokens.push_back(q1);
          tokens.push_back(q2);
          for (auto& w : draw_distinct(vocab.distractor_words, 2 + rng_below(rng, 2), rng)) {
            tokens.push_back(std::move(w));
          }
        }
      } else {
        if (rng_unit(rng) < config.overlap_fraction) {
          tokens.push_back(q1);
          for (auto& w : draw_distinct(vocab.negative_words, 6 + rng_below(rng, 3), rng)) {
            tokens.push_back(std::move(w));
          }
        } else {
          for (auto& w : draw_distinct(vocab.negative_words, 4 + rng_below(rng, 5), rng)) {
            tokens.push_back(std::move(w));
          }
        }
      }
      sample s;
      s.language = language;
      s.query = q1 + " " + q2;
      s.target = pack_target(config.task, std::move(tokens), rng);
      s.label = clean;
      s.extra["clean_label"] = clean;
      samples.push_back(std::move(s));
    }
  }

  rng_shuffle(samples, rng);
  // Epsilon keeps ⌊r·n⌋ exact for decimal rates like 0.3 that have no finite
  // binary representation.
  size_t flips = static_cast<size_t>(
      std::floor(config.noise_rate * static_cast<double>(samples.size()) + 1e-9));
  std::vector<size_t> order(samples.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng_shuffle(order, rng);
  for (size_t k = 0; k < flips; ++k) {
    sample& s = samples[order[k]];
    s.label = 1 - *s.label;
  }
  for (size_t i = 0; i < samples.size(); ++i) {
    samples[i].id = std::to_string(i);
    samples[i].id_explicit = false;
  }
  return samples;
}

}  // namespace relrefine
