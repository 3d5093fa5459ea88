#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "core/corpus.hpp"
#include "core/util.hpp"

namespace relrefine {

struct token_list {
  std::vector<std::string> tokens;
  std::string language;
};

bool is_bigram_language(const std::string& language);

token_list tokenize(std::string_view text, const std::string& language);

struct tfidf_model {
  std::unordered_map<std::string, size_t> vocabulary;
  std::vector<std::string> vocab_order;
  std::vector<double> idf;
  size_t doc_count = 0;
};

tfidf_model fit_tfidf(const std::vector<token_list>& docs);

struct tfidf_vector {
  size_t dim = 0;
  // (column, weight) pairs sorted by column; L2-normalized unless empty.
  std::vector<std::pair<size_t, double>> entries;
};

tfidf_vector vectorize(const token_list& tokens, const tfidf_model& model);

double cosine(const tfidf_vector& u, const tfidf_vector& v);

double jaccard(const token_list& a, const token_list& b);

struct similarity_feature_pair {
  double tfidf_cosine = 0.0;
  double jaccard = 0.0;
};

similarity_feature_pair similarity_features(std::string_view query,
                                            std::string_view target,
                                            const std::string& language,
                                            const tfidf_model& model);

// Fits one model per language over the file's query and target documents, in
// file order (query doc then target doc per sample).
std::unordered_map<std::string, tfidf_model> fit_models_per_language(
    const std::vector<sample>& samples);

void dump_model(const tfidf_model& model, const std::string& path);

}  // namespace relrefine
