#include "core/lex.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace relrefine {

bool is_bigram_language(const std::string& language) {
  return language == "ja" || language == "ko" || language == "th";
}

token_list tokenize(std::string_view text, const std::string& language) {
  token_list out;
  out.language = language;
  std::vector<char32_t> cps = utf8_decode(text);
  std::vector<std::vector<char32_t>> runs;
  std::vector<char32_t> run;
  for (char32_t cp : cps) {
    char32_t folded = fold_char(cp);
    if (is_space_char(folded) || is_punct_char(folded)) {
      if (!run.empty()) {
        runs.push_back(std::move(run));
        run.clear();
      }
      continue;
    }
    run.push_back(folded);
  }
  if (!run.empty()) runs.push_back(std::move(run));

  if (is_bigram_language(language)) {
    for (const auto& r : runs) {
      if (r.size() == 1) {
        out.tokens.push_back(utf8_encode(r));
        continue;
      }
      for (size_t i = 0; i + 1 < r.size(); ++i) {
        std::string bigram;
        utf8_append(bigram, r[i]);
        utf8_append(bigram, r[i + 1]);
        out.tokens.push_back(std::move(bigram));
      }
    }
  } else {
    for (const auto& r : runs) out.tokens.push_back(utf8_encode(r));
  }
  return out;
}

tfidf_model fit_tfidf(const std::vector<token_list>& docs) {
  if (docs.empty()) fail(errc::validation, "fit_tfidf requires at least one document");
  tfidf_model model;
  model.doc_count = docs.size();
  std::vector<size_t> df;
  for (const token_list& doc : docs) {
    std::unordered_set<size_t> seen;
    for (const std::string& token : doc.tokens) {
      auto [it, inserted] = model.vocabulary.try_emplace(token, model.vocab_order.size());
      if (inserted) {
        model.vocab_order.push_back(token);
        df.push_back(0);
      }
      seen.insert(it->second);
    }
    for (size_t column : seen) ++df[column];
  }
  model.idf.resize(df.size());
  double n = static_cast<double>(model.doc_count);
  for (size_t i = 0; i < df.size(); ++i) {
    model.idf[i] = std::log((1.0 + n) / (1.0 + static_cast<double>(df[i]))) + 1.0;
  }
  return model;
}

tfidf_vector vectorize(const token_list& tokens, const tfidf_model& model) {
  tfidf_vector vec;
  vec.dim = model.vocab_order.size();
  std::unordered_map<size_t, double> counts;
  for (const std::string& token : tokens.tokens) {
    auto it = model.vocabulary.find(token);
    if (it != model.vocabulary.end()) counts[it->second] += 1.0;
  }
  if (counts.empty()) return vec;
  vec.entries.reserve(counts.size());
  for (const auto& [column, count] : counts) {
    vec.entries.emplace_back(column, count * model.idf[column]);
  }
  std::sort(vec.entries.begin(), vec.entries.end());
  double norm_sq = 0.0;
  for (const auto& [column, weight] : vec.entries) norm_sq += weight * weight;
  double norm = std::sqrt(norm_sq);
  if (norm > 0.0) {
    for (auto& [column, weight] : vec.entries) weight /= norm;
  }
  return vec;
}

double cosine(const tfidf_vector& u, const tfidf_vector& v) {
  if (u.dim != v.dim) {
    fail(errc::validation, "cosine: dimension mismatch (" + std::to_string(u.dim) +
                               " vs " + std::to_string(v.dim) + ")");
  }
  if (u.entries.empty() || v.entries.empty()) return 0.0;
  double dot = 0.0;
  size_t i = 0, j = 0;
  while (i < u.entries.size() && j < v.entries.size()) {
    if (u.entries[i].first == v.entries[j].first) {
      dot += u.entries[i].second * v.entries[j].second;
      ++i;
      ++j;
    } else if (u.entries[i].first < v.entries[j].first) {
      ++i;
    } else {
      ++j;
    }
  }
  return std::clamp(dot, 0.0, 1.0);
}

double jaccard(const token_list& a, const token_list& b) {
  std::unordered_set<std::string> sa(a.tokens.begin(), a.tokens.end());
  std::unordered_set<std::string> sb(b.tokens.begin(), b.tokens.end());
  if (sa.empty() && sb.empty()) return 0.0;
  size_t inter = 0;
  for (const std::string& t : sa) inter += sb.count(t);
  size_t uni = sa.size() + sb.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

similarity_feature_pair similarity_features(std::string_view query,
                                            std::string_view target,
                                            const std::string& language,
                                            const tfidf_model& model) {
  token_list q = tokenize(query, language);
  token_list t = tokenize(target, language);
  similarity_feature_pair features;
  features.tfidf_cosine = cosine(vectorize(q, model), vectorize(t, model));
  features.jaccard = jaccard(q, t);
  return features;
}

std::unordered_map<std::string, tfidf_model> fit_models_per_language(
    const std::vector<sample>& samples) {
  std::unordered_map<std::string, std::vector<token_list>> docs;
  for (const sample& s : samples) {
    auto& bucket = docs[s.language];
    bucket.push_back(tokenize(s.query, s.language));
    bucket.push_back(tokenize(s.target.raw_text(), s.language));
  }
  std::unordered_map<std::string, tfidf_model> models;
  for (auto& [language, bucket] : docs) {
    models.emplace(language, fit_tfidf(bucket));
  }
  return models;
}

void dump_model(const tfidf_model& model, const std::string& path) {
  ordered_json obj = ordered_json::object();
  obj["vocabulary"] = model.vocab_order;
  obj["idf"] = model.idf;
  obj["doc_count"] = model.doc_count;
  write_file(path, obj.dump(2) + "\n");
}

}  // namespace relrefine
