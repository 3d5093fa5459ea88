#include <doctest.h>

#include <optional>
#include <string>
#include <vector>

#include "core/refine.hpp"
#include "fuzzers.hpp"
#include "helpers.hpp"

using namespace relrefine;

static sample make_sample(const std::string& lang, const std::string& query,
                          const std::string& title, std::optional<int> label) {
  sample s;
  s.language = lang;
  s.query = query;
  s.target = target_field::item(title);
  s.label = label;
  return s;
}

static threshold_profile profile_with(thresholds t) {
  threshold_profile p;
  p.fallback = t;
  return p;
}

TEST_CASE("load_predictions basics") {
  testutil::temp_dir dir;
  std::string path = dir.file("preds.jsonl");
  testutil::spit(path,
                 "{\"id\":\"0\",\"prob\":0.91}\n"
                 "{\"id\":\"1\",\"prob\":0.5}\n"
                 "{\"id\":2,\"prob\":0.1}\n");
  prediction_set preds = load_predictions(path);
  REQUIRE(preds.by_id.size() == 3);
  CHECK(preds.by_id.at("0").pred_label == 1);
  CHECK(preds.by_id.at("1").pred_label == 1);  // 0.5 boundary inclusive
  CHECK(preds.by_id.at("2").pred_label == 0);
  CHECK(preds.duplicates == 0);
  CHECK(preds.find("0") != nullptr);
  CHECK(preds.find("99") == nullptr);
}

TEST_CASE("load_predictions duplicate ids: last wins, counted") {
  testutil::temp_dir dir;
  std::string path = dir.file("dups.jsonl");
  testutil::spit(path, "{\"id\":\"7\",\"prob\":0.2}\n{\"id\":\"7\",\"prob\":0.8}\n");
  prediction_set preds = load_predictions(path);
  CHECK(preds.by_id.at("7").prob == doctest::Approx(0.8));
  CHECK(preds.duplicates == 1);
}

TEST_CASE("load_predictions validation") {
  testutil::temp_dir dir;
  std::string path = dir.file("bad.jsonl");
  testutil::spit(path, "{\"id\":\"0\",\"prob\":1.2}\n");
  try {
    load_predictions(path);
    FAIL("expected error");
  } catch (const error& e) {
    CHECK(e.kind() == errc::validation);
    CHECK(std::string(e.what()).find("1") != std::string::npos);
  }
  std::string empty = dir.file("empty.jsonl");
  testutil::spit(empty, "");
  CHECK(load_predictions(empty).by_id.empty());
}

TEST_CASE("combined_similarity is the unweighted mean") {
  CHECK(combined_similarity({1.0, 1.0}) == doctest::Approx(1.0));
  CHECK(combined_similarity({0.0, 0.0}) == doctest::Approx(0.0));
  CHECK(combined_similarity({0.8, 0.2}) == doctest::Approx(0.5));
}

TEST_CASE("threshold_profile json round-trip and validation") {
  threshold_profile p;
  p.per_language["en"] = {0.1, 0.3, 0.2, 0.4};
  p.fallback = {0.0, 0.5, 0.0, 0.5};
  threshold_profile back = threshold_profile::from_json(p.to_json());
  CHECK(back.per_language.at("en") == p.per_language.at("en"));
  CHECK(back.fallback == p.fallback);
  CHECK(p.lookup("en") == p.per_language.at("en"));
  CHECK(p.lookup("xx") == p.fallback);

  ordered_json bad = p.to_json();
  bad["per_language"]["en"]["sim_low"] = 0.9;  // low > high
  CHECK_THROWS_AS(threshold_profile::from_json(bad), error);
  ordered_json unknown = p.to_json();
  unknown["per_language"]["en"]["sim_hgih"] = 0.1;
  CHECK_THROWS_AS(threshold_profile::from_json(unknown), error);
}

TEST_CASE("profile file save/load round-trip") {
  testutil::temp_dir dir;
  threshold_profile p;
  p.per_language["ja"] = {0.05, 0.2, 0.0, 1.0};
  p.fallback = {0.0, 0.15, 0.0, 0.95};
  std::string path = dir.file("profile.json");
  save_profile(p, path);
  threshold_profile back = load_profile(path);
  CHECK(back.per_language.at("ja") == p.per_language.at("ja"));
  CHECK(back.fallback == p.fallback);
}

TEST_CASE("guard files and guard_signal") {
  testutil::temp_dir dir;
  std::string path = dir.file("guards.json");
  testutil::spit(path, R"({"en": {"positive": ["Lens"], "negative": ["refurbished"]}})");
  guard_list guards = load_guards(path);

  sample both = make_sample("en", "telephoto lens", "67mm Lens Filter", 1);
  CHECK(guard_signal(both, guards) == guard_kind::positive);

  sample neg = make_sample("en", "refurbished phone", "case", 0);
  CHECK(guard_signal(neg, guards) == guard_kind::negative);

  // Positive wins when both fire.
  sample mixed = make_sample("en", "refurbished lens", "lens kit", 1);
  CHECK(guard_signal(mixed, guards) == guard_kind::positive);

  // Positive guard needs the keyword on both sides.
  sample one_side = make_sample("en", "telephoto lens", "tripod", 1);
  CHECK(guard_signal(one_side, guards) == guard_kind::none);

  sample other_lang = make_sample("de", "lens lens", "lens", 1);
  CHECK(guard_signal(other_lang, guards) == guard_kind::none);
  CHECK(guard_signal(both, guard_list{}) == guard_kind::none);
}

TEST_CASE("load_guards rejects conflicts and unknown keys") {
  testutil::temp_dir dir;
  std::string conflict = dir.file("conflict.json");
  testutil::spit(conflict, R"({"en": {"positive": ["a"], "negative": ["A"]}})");
  CHECK_THROWS_AS(load_guards(conflict), error);  // casefold collision

  std::string unknown = dir.file("unknown.json");
  testutil::spit(unknown, R"({"en": {"positiv": ["a"]}})");
  CHECK_THROWS_AS(load_guards(unknown), error);
}

TEST_CASE("flag_suspect: documented decision table") {
  threshold_profile p = profile_with({0.2, 0.9, 0.2, 0.9});
  guard_list no_guards;

  sample pos = make_sample("en", "alpha", "beta", 1);
  prediction low_prob{"0", 0.02, 0};
  refinement_decision d1 = flag_suspect(pos, {0.0, 0.0}, &low_prob, p, no_guards);
  CHECK(d1.verdict == verdict_kind::remove);
  CHECK(d1.reasons == std::set<removal_reason>{removal_reason::label_pos_low_evidence});
  CHECK(d1.combined_sim == doctest::Approx(0.0));

  sample neg = make_sample("en", "alpha", "alpha", 0);
  prediction high_prob{"1", 0.97, 1};
  refinement_decision d2 = flag_suspect(neg, {0.95, 0.95}, &high_prob, p, no_guards);
  CHECK(d2.verdict == verdict_kind::remove);
  CHECK(d2.reasons == std::set<removal_reason>{removal_reason::label_neg_high_evidence});

  // Prediction clause vacuous when absent.
  refinement_decision d3 = flag_suspect(pos, {0.0, 0.0}, nullptr, p, no_guards);
  CHECK(d3.verdict == verdict_kind::remove);

  // Disagreeing prediction suppresses removal.
  prediction confident{"0", 0.95, 1};
  refinement_decision d4 = flag_suspect(pos, {0.0, 0.0}, &confident, p, no_guards);
  CHECK(d4.verdict == verdict_kind::keep);
  CHECK(d4.reasons.empty());
}

TEST_CASE("flag_suspect: guard overrides record their reason") {
  testutil::temp_dir dir;
  std::string path = dir.file("guards.json");
  testutil::spit(path, R"({"en": {"positive": ["lens"], "negative": ["spam"]}})");
  guard_list guards = load_guards(path);
  threshold_profile p = profile_with({0.2, 0.9, 0.2, 0.9});

  sample pos = make_sample("en", "telephoto lens", "lens filter", 1);
  prediction low{"0", 0.02, 0};
  refinement_decision d = flag_suspect(pos, {0.0, 0.0}, &low, p, guards);
  CHECK(d.verdict == verdict_kind::keep);
  CHECK(d.reasons == std::set<removal_reason>{removal_reason::guard_override});

  sample neg = make_sample("en", "spam offer", "great spam deal", 0);
  prediction high{"1", 0.99, 1};
  refinement_decision d2 = flag_suspect(neg, {1.0, 1.0}, &high, p, guards);
  CHECK(d2.verdict == verdict_kind::keep);
  CHECK(d2.reasons == std::set<removal_reason>{removal_reason::guard_override});
}

TEST_CASE("flag_suspect: boundary thresholds remove nothing") {
  threshold_profile p = profile_with({0.0, 1.0, 0.0, 1.0});
  rng_engine rng(11);
  for (int i = 0; i < 200; ++i) {
    sample s = make_sample("en", "q", "t", static_cast<int>(rng_below(rng, 2)));
    similarity_feature_pair f{rng_unit(rng), rng_unit(rng)};
    prediction pr{"0", rng_unit(rng), 0};
    const prediction* pp = rng_below(rng, 2) == 0 ? &pr : nullptr;
    CHECK(flag_suspect(s, f, pp, p, guard_list{}).verdict == verdict_kind::keep);
  }
}

TEST_CASE("flag_suspect: removal is monotone in evidence") {
  threshold_profile p = profile_with({0.3, 0.7, 0.3, 0.7});
  rng_engine rng(13);
  for (int i = 0; i < 500; ++i) {
    double sim = rng_unit(rng);
    double prob = rng_unit(rng);
    sample pos = make_sample("en", "q", "t", 1);
    prediction pr{"0", prob, prob >= 0.5 ? 1 : 0};
    bool removed = flag_suspect(pos, {sim, sim}, &pr, p, guard_list{}).verdict ==
                   verdict_kind::remove;
    if (removed) {
      prediction weaker{"0", prob / 2, 0};
      CHECK(flag_suspect(pos, {sim / 2, sim / 2}, &weaker, p, guard_list{}).verdict ==
            verdict_kind::remove);
    }
  }
}

TEST_CASE("flag_suspect rejects unlabeled samples") {
  threshold_profile p = profile_with({0.2, 0.9, 0.2, 0.9});
  sample s = make_sample("en", "q", "t", std::nullopt);
  CHECK_THROWS_AS(flag_suspect(s, {0.5, 0.5}, nullptr, p, guard_list{}), error);
}

TEST_CASE("tune_thresholds: separable toy set") {
  std::vector<tune_record> records;
  for (int i = 0; i < 5; ++i) records.push_back({"en", 1, 0.9, std::nullopt});
  for (int i = 0; i < 5; ++i) records.push_back({"en", 0, 0.1, std::nullopt});
  threshold_profile p = tune_thresholds(records, 0.05);
  const thresholds& t = p.per_language.at("en");
  CHECK(t.sim_high > 0.1);
  CHECK(t.sim_high <= 0.9);
  // Smallest winning grid point.
  CHECK(t.sim_high == doctest::Approx(0.15));
  CHECK(t.prob_high == doctest::Approx(0.0));
  CHECK(t.sim_low <= t.sim_high);
  CHECK(p.fallback == t);  // single language pools to the same data
}

TEST_CASE("tune_thresholds: degenerate all-positive input accepts everything") {
  std::vector<tune_record> records;
  for (int i = 0; i < 4; ++i) records.push_back({"en", 1, 0.1 + 0.2 * i, std::nullopt});
  threshold_profile p = tune_thresholds(records, 0.05);
  CHECK(p.per_language.at("en").sim_high == doctest::Approx(0.0));
  CHECK(p.per_language.at("en").prob_high == doctest::Approx(0.0));
}

TEST_CASE("tune_thresholds: language below 2 samples falls back to default") {
  std::vector<tune_record> records;
  records.push_back({"ja", 1, 0.9, std::nullopt});  // single sample: no per-language entry
  for (int i = 0; i < 4; ++i) records.push_back({"en", i % 2, i % 2 ? 0.8 : 0.2, std::nullopt});
  threshold_profile p = tune_thresholds(records, 0.05);
  CHECK(p.per_language.count("ja") == 0);
  CHECK(p.per_language.count("en") == 1);
}

TEST_CASE("tune_thresholds input validation") {
  CHECK_THROWS_AS(tune_thresholds({}, 0.05), error);
  std::vector<tune_record> bad = {{"en", 2, 0.5, std::nullopt}};
  CHECK_THROWS_AS(tune_thresholds(bad, 0.05), error);
  std::vector<tune_record> ok = {{"en", 1, 0.5, std::nullopt}, {"en", 0, 0.1, std::nullopt}};
  CHECK_THROWS_AS(tune_thresholds(ok, 0.3), error);  // grid must divide 1 evenly
  CHECK_THROWS_AS(tune_thresholds(ok, 0.0), error);
}

TEST_CASE("tune_thresholds matches the exhaustive reference") {
  rng_engine rng(2718);
  for (int instance = 0; instance < 12; ++instance) {
    std::vector<tune_record> records = testutil::random_tune_instance(rng, 30);
    threshold_profile tuned = tune_thresholds(records, 0.25);
    threshold_profile ref = testutil::reference_tune(records, 4);
    REQUIRE(tuned.per_language.size() == ref.per_language.size());
    for (const auto& [lang, expected] : ref.per_language) {
      REQUIRE(tuned.per_language.count(lang) == 1);
      CHECK(tuned.per_language.at(lang) == expected);
    }
    CHECK(tuned.fallback == ref.fallback);
  }
}

TEST_CASE("tune_thresholds is deterministic and respects low<=high") {
  rng_engine rng(999);
  for (int i = 0; i < 10; ++i) {
    std::vector<tune_record> records = testutil::random_tune_instance(rng, 40);
    threshold_profile a = tune_thresholds(records, 0.05);
    threshold_profile b = tune_thresholds(records, 0.05);
    CHECK(a.to_json() == b.to_json());
    for (const auto& [lang, t] : a.per_language) {
      CHECK(t.sim_low <= t.sim_high);
      CHECK(t.prob_low <= t.prob_high);
    }
    CHECK(a.fallback.sim_low <= a.fallback.sim_high);
    CHECK(a.fallback.prob_low <= a.fallback.prob_high);
  }
}

static std::vector<sample> noisy_corpus(double noise, double overlap, uint64_t seed) {
  synth_config cfg;
  cfg.task = task_kind::qi;
  cfg.languages = {"en", "es"};
  cfg.per_language_count = 150;
  cfg.positive_ratio = 0.5;
  cfg.noise_rate = noise;
  cfg.seed = seed;
  cfg.overlap_fraction = overlap;
  return generate_synthetic(cfg);
}

TEST_CASE("refine_samples: clean separated corpus keeps everything") {
  std::vector<sample> corpus = noisy_corpus(0.0, 0.0, 21);
  refine_result result =
      refine_samples(task_kind::qi, corpus, prediction_set{}, guard_list{}, 0.05, 1);
  CHECK(result.kept.size() == corpus.size());
  for (const auto& [lang, counts] : result.report.per_language) {
    CHECK(counts.kept == counts.input);
    CHECK(counts.removed_pos_low == 0);
    CHECK(counts.removed_neg_high == 0);
  }
}

TEST_CASE("refine_samples: kept output is an unmutated subsequence") {
  std::vector<sample> corpus = noisy_corpus(0.2, 0.2, 22);
  refine_result result =
      refine_samples(task_kind::qi, corpus, prediction_set{}, guard_list{}, 0.05, 2);
  REQUIRE(result.decisions.size() == corpus.size());
  std::vector<sample> expected;
  for (size_t i = 0; i < corpus.size(); ++i)
    if (result.decisions[i].verdict == verdict_kind::keep) expected.push_back(corpus[i]);
  CHECK(result.kept == expected);
  // Parallelism does not change decisions.
  refine_result serial =
      refine_samples(task_kind::qi, corpus, prediction_set{}, guard_list{}, 0.05, 1);
  CHECK(serial.kept == result.kept);
}

TEST_CASE("refine_samples rejects unlabeled input") {
  std::vector<sample> corpus = {make_sample("en", "q", "t", std::nullopt)};
  CHECK_THROWS_AS(refine_samples(task_kind::qi, corpus, prediction_set{}, guard_list{}, 0.05, 1),
                  error);
}

TEST_CASE("refine_dataset writes subsequence output and a complete report") {
  testutil::temp_dir dir;
  std::vector<sample> corpus = noisy_corpus(0.2, 0.2, 23);
  std::string in = dir.file("in.jsonl");
  write_jsonl(corpus, task_kind::qi, in);

  // Stray prediction id is reported, not fatal.
  std::string preds = dir.file("preds.jsonl");
  testutil::spit(preds, "{\"id\":\"999999\",\"prob\":0.9}\n");

  refine_options options;
  options.predictions_path = preds;
  options.profile_out_path = dir.file("profile.json");
  refinement_report report = refine_dataset(task_kind::qi, in, dir.file("out.jsonl"),
                                            dir.file("report.json"), options);
  CHECK(report.predictions_loaded == 1);
  REQUIRE(report.unmatched_prediction_ids.size() == 1);
  CHECK(report.unmatched_prediction_ids[0] == "999999");

  // Output lines are a byte-level subsequence of input lines.
  std::vector<sample> kept = read_jsonl(dir.file("out.jsonl"), task_kind::qi);
  size_t cursor = 0;
  size_t matched = 0;
  std::vector<sample> original = read_jsonl(in, task_kind::qi);
  for (const sample& k : kept) {
    while (cursor < original.size()) {
      sample candidate = original[cursor++];
      candidate.id = k.id;  // ids are positional, not content
      if (candidate == k) {
        ++matched;
        break;
      }
    }
  }
  CHECK(matched == kept.size());

  ordered_json report_json = ordered_json::parse(testutil::slurp(dir.file("report.json")));
  for (const char* key : {"input", "removed_pos_low", "removed_neg_high", "guard_overrides",
                          "kept"})
    CHECK(report_json["per_language"]["en"].contains(key));
  CHECK(report_json.contains("thresholds"));

  threshold_profile saved = load_profile(dir.file("profile.json"));
  CHECK(saved.fallback == report.profile.fallback);
}

TEST_CASE("refine_dataset with empty predictions file still refines") {
  testutil::temp_dir dir;
  std::vector<sample> corpus = noisy_corpus(0.2, 0.0, 24);
  std::string in = dir.file("in.jsonl");
  write_jsonl(corpus, task_kind::qi, in);
  std::string preds = dir.file("empty.jsonl");
  testutil::spit(preds, "");
  refine_options options;
  options.predictions_path = preds;
  refinement_report report = refine_dataset(task_kind::qi, in, dir.file("out.jsonl"),
                                            dir.file("report.json"), options);
  size_t input = 0, kept = 0;
  for (const auto& [lang, counts] : report.per_language) {
    input += counts.input;
    kept += counts.kept;
  }
  CHECK(input == corpus.size());
  CHECK(kept < input);  // noisy corpus loses something
  CHECK(kept > input / 2);
}
