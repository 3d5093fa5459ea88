#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "core/eval.hpp"
#include "core/lex.hpp"
#include "core/predict.hpp"
#include "fuzzers.hpp"
#include "helpers.hpp"

using namespace relrefine;

TEST_CASE("f1_from_counts and f1_score") {
  CHECK(f1_from_counts(1, 1, 1) == doctest::Approx(0.5));
  CHECK(f1_from_counts(5, 0, 0) == doctest::Approx(1.0));
  CHECK(f1_from_counts(0, 3, 0) == doctest::Approx(0.0));
  CHECK(f1_from_counts(0, 0, 0) == doctest::Approx(1.0));  // degenerate: nothing to get wrong

  CHECK(f1_score({1, 1, 0, 0}, {1, 0, 1, 0}) == doctest::Approx(0.5));
  CHECK(f1_score({}, {}) == doctest::Approx(1.0));
  CHECK(f1_score({0, 0}, {0, 0}) == doctest::Approx(1.0));
  CHECK_THROWS_AS(f1_score({1}, {1, 0}), error);
}

TEST_CASE("f1_score is invariant under joint permutation") {
  rng_engine rng(3001);
  for (int trial = 0; trial < 50; ++trial) {
    size_t n = 1 + rng_below(rng, 40);
    std::vector<int> preds(n), labels(n);
    for (size_t i = 0; i < n; ++i) {
      preds[i] = static_cast<int>(rng_below(rng, 2));
      labels[i] = static_cast<int>(rng_below(rng, 2));
    }
    double base = f1_score(preds, labels);
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    rng_shuffle(order, rng);
    std::vector<int> preds2(n), labels2(n);
    for (size_t i = 0; i < n; ++i) {
      preds2[i] = preds[order[i]];
      labels2[i] = labels[order[i]];
    }
    CHECK(f1_score(preds2, labels2) == doctest::Approx(base));
  }
}

TEST_CASE("overall_score: fixed points and truncation") {
  CHECK(overall_score(0.8861, 0.8778) == doctest::Approx(0.8819));
  CHECK(overall_score(0.8213, 0.7936) == doctest::Approx(0.8074));
  CHECK(overall_score(0.8684, 0.8667) == doctest::Approx(0.8675));
  CHECK(overall_score(0.8607, 0.8487) == doctest::Approx(0.8547));
  CHECK(overall_score(1.0, 1.0) == doctest::Approx(1.0));
  CHECK(overall_score(0.0, 0.0) == doctest::Approx(0.0));
  CHECK_THROWS_AS(overall_score(-0.1, 0.5), error);
  CHECK_THROWS_AS(overall_score(0.5, 1.1), error);
}

TEST_CASE("overall_score properties on the 4-decimal lattice") {
  rng_engine rng(3100);
  for (int i = 0; i < 500; ++i) {
    double a = static_cast<double>(rng_below(rng, 10001)) / 10000.0;
    double b = static_cast<double>(rng_below(rng, 10001)) / 10000.0;
    double score = overall_score(a, b);
    CHECK(score == overall_score(b, a));
    double scaled = score * 10000.0;
    CHECK(std::abs(scaled - std::round(scaled)) < 1e-6);  // stays on the lattice
    double mean = 0.5 * (a + b);
    CHECK(score <= mean + 1e-9);
    CHECK(score > mean - 0.0001 - 1e-9);
    CHECK(overall_score(a, a) == doctest::Approx(a));  // truncation never moves lattice points
  }
}

TEST_CASE("read_submission is strict") {
  testutil::temp_dir dir;
  std::string path = dir.file("sub.txt");
  testutil::spit(path, "1\n0\n\n1\r\n");
  std::vector<int> preds = read_submission(path);
  CHECK(preds == std::vector<int>{1, 0, 1});

  testutil::spit(path, "1\n2\n");
  try {
    read_submission(path);
    FAIL("expected error");
  } catch (const error& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  testutil::spit(path, "01\n");
  CHECK_THROWS_AS(read_submission(path), error);
}

TEST_CASE("score_report against labeled JSONL") {
  testutil::temp_dir dir;
  std::string labels = dir.file("labels.jsonl");
  std::string body;
  int en_labels[] = {1, 0, 1, 0};
  int es_labels[] = {1, 0, 0, 1};
  for (int i = 0; i < 4; ++i) {
    body += "{\"language\":\"en\",\"query\":\"q\",\"item_title\":\"t\",\"label\":" +
            std::to_string(en_labels[i]) + "}\n";
  }
  for (int i = 0; i < 4; ++i) {
    body += "{\"language\":\"es\",\"query\":\"q\",\"item_title\":\"t\",\"label\":" +
            std::to_string(es_labels[i]) + "}\n";
  }
  testutil::spit(labels, body);
  std::string preds = dir.file("preds.txt");
  testutil::spit(preds, "1\n1\n0\n0\n1\n0\n1\n1\n");

  score_report_data report = score_report(task_kind::qi, preds, labels);
  CHECK(report.has_languages);
  CHECK(report.per_language.at("en") == doctest::Approx(0.5));
  CHECK(report.per_language.at("es") == doctest::Approx(0.8));
  CHECK(report.task_f1 == doctest::Approx(2.0 / 3.0));
  CHECK(report.counts.tp == 3);
  CHECK(report.counts.fp == 2);
  CHECK(report.counts.fn == 1);
  CHECK(report.counts.tn == 2);
  ordered_json js = report.to_json();
  CHECK(js.contains("per_language"));
  CHECK(js["counts"]["tp"] == 3);

  // Micro-average pools counts, so it differs from averaging the two F1s.
  CHECK(report.task_f1 != doctest::Approx(0.65));
}

TEST_CASE("score_report against a bare label file") {
  testutil::temp_dir dir;
  std::string preds = dir.file("preds.txt");
  std::string labels = dir.file("labels.txt");
  testutil::spit(preds, "1\n0\n1\n0\n");
  testutil::spit(labels, "1\n0\n0\n1\n");
  score_report_data report = score_report(task_kind::qi, preds, labels);
  CHECK(!report.has_languages);
  CHECK(report.task_f1 == doctest::Approx(0.5));
  CHECK(!report.to_json().contains("per_language"));

  testutil::spit(labels, "1\n0\n");
  CHECK_THROWS_AS(score_report(task_kind::qi, preds, labels), error);

  std::string unlabeled = dir.file("unlabeled.jsonl");
  testutil::spit(unlabeled,
                 "{\"language\":\"en\",\"query\":\"q\",\"item_title\":\"t\"}\n");
  testutil::spit(preds, "1\n");
  CHECK_THROWS_AS(score_report(task_kind::qi, preds, unlabeled), error);
}

TEST_CASE("load_ablation_config") {
  testutil::temp_dir dir;
  std::string path = dir.file("grid.json");
  testutil::spit(path, R"({
    "task": "QI",
    "train": "train.jsonl",
    "dev": "dev.jsonl",
    "rows": [[], ["QR"], ["QR", "LT", "SIT", "DG"]],
    "grid_step": 0.1,
    "icl_pos": 2,
    "icl_neg": 1
  })");
  ablation_config config = load_ablation_config(path);
  CHECK(config.task == task_kind::qi);
  CHECK(config.train_path == "train.jsonl");
  REQUIRE(config.rows.size() == 3);
  CHECK(config.rows[0].empty());
  CHECK(config.rows[2].size() == 4);
  CHECK(config.grid_step == doctest::Approx(0.1));
  CHECK(config.icl_pos == 2);

  testutil::spit(path, R"({"task": "QI", "train": "a", "dev": "b"})");
  try {
    load_ablation_config(path);
    FAIL("expected error");
  } catch (const error& e) {
    CHECK(std::string(e.what()) == "ablation grid needs task, train, dev and rows");
  }
  testutil::spit(path, R"({"task": "QI", "train": "a", "dev": "b", "rows": [[]], "jbos": 2})");
  try {
    load_ablation_config(path);
    FAIL("expected error");
  } catch (const error& e) {
    CHECK(std::string(e.what()) == "unknown key jbos");
  }
  testutil::spit(path, R"({"task": "QI", "train": "a", "dev": "b", "rows": "QR"})");
  CHECK_THROWS_AS(load_ablation_config(path), error);
  testutil::spit(path, R"({"task": "QI", "train": "a", "dev": "b", "rows": [[]],
                           "grid_step": "x"})");
  CHECK_THROWS_AS(load_ablation_config(path), error);
}

namespace {

ablation_config small_grid(testutil::temp_dir& dir) {
  synth_config train_cfg;
  train_cfg.task = task_kind::qi;
  train_cfg.languages = {"en", "fr"};
  train_cfg.per_language_count = 60;
  train_cfg.positive_ratio = 0.5;
  train_cfg.noise_rate = 0.25;
  train_cfg.seed = 404;
  train_cfg.overlap_fraction = 0.2;
  std::vector<sample> train = generate_synthetic(train_cfg);
  synth_config dev_cfg = train_cfg;
  dev_cfg.per_language_count = 30;
  dev_cfg.noise_rate = 0.0;
  dev_cfg.seed = 505;
  std::vector<sample> dev = generate_synthetic(dev_cfg);

  ablation_config config;
  config.task = task_kind::qi;
  config.train_path = dir.file("train.jsonl");
  config.dev_path = dir.file("dev.jsonl");
  write_jsonl(train, task_kind::qi, config.train_path);
  write_jsonl(dev, task_kind::qi, config.dev_path);
  config.rows = {{}, {"QR"}, {"QR", "LT", "SIT", "DG"}};
  return config;
}

}  // namespace

TEST_CASE("run_ablation: baseline row equals the direct pipeline") {
  testutil::temp_dir dir;
  ablation_config config = small_grid(dir);
  ablation_grid grid = run_ablation(config);
  REQUIRE(grid.rows.size() == 3);
  CHECK(grid.rows[0].flags.empty());
  CHECK(grid.rows[1].flags == std::vector<std::string>{"QR"});
  CHECK(grid.rows[2].flags == std::vector<std::string>{"QR", "LT", "SIT", "DG"});

  // Recompose the no-flag row from public pieces.
  std::vector<sample> train = read_jsonl(config.train_path, task_kind::qi);
  std::vector<sample> dev = read_jsonl(config.dev_path, task_kind::qi);
  auto models = fit_models_per_language(train);
  std::vector<tune_record> records;
  for (const sample& s : train) {
    similarity_feature_pair f =
        similarity_features(s.query, s.target.raw_text(), s.language, models.at(s.language));
    records.push_back({s.language, *s.label, combined_similarity(f), std::nullopt});
  }
  predictor p = make_lexical_predictor(tune_thresholds(records, config.grid_step));
  std::vector<int> preds = predict_all(task_kind::qi, dev, p, 1);
  std::vector<int> labels;
  for (const sample& s : dev) labels.push_back(*s.label);
  CHECK(grid.rows[0].f1 == doctest::Approx(f1_score(preds, labels)));

  // Refinement on noisy training data should not hurt on this corpus.
  CHECK(grid.rows[1].f1 >= grid.rows[0].f1 - 1e-9);

  // Deterministic, including across job counts.
  ablation_config parallel_config = config;
  parallel_config.jobs = 4;
  CHECK(run_ablation(parallel_config).to_json() == grid.to_json());
}

TEST_CASE("run_ablation rejects bad rows") {
  testutil::temp_dir dir;
  ablation_config config = small_grid(dir);
  config.rows = {{"QR", "HCT"}};  // HCT is a category-task flag
  try {
    run_ablation(config);
    FAIL("expected error");
  } catch (const error& e) {
    std::string message = e.what();
    CHECK(message.find("HCT") != std::string::npos);
    CHECK(message.find("row 0") != std::string::npos);
  }
  config.rows = {{"QR", "LT"}, {"LT", "QR"}};  // same set after canonicalization
  CHECK_THROWS_AS(run_ablation(config), error);
  config.rows = {};
  CHECK_THROWS_AS(run_ablation(config), error);
}

TEST_CASE("ablation table rendering") {
  ablation_grid grid;
  grid.task = task_kind::qi;
  grid.rows.push_back({{}, 0.5});
  grid.rows.push_back({{"QR", "SIT"}, 0.9123});
  std::string table = grid.to_table();
  CHECK(table.rfind("QR  LT  SIT  DG  F1\n", 0) == 0);
  CHECK(table.find("0.5000") != std::string::npos);
  CHECK(table.find("0.9123") != std::string::npos);
  CHECK(testutil::count_lines(table) == 3);

  ablation_grid qc_grid;
  qc_grid.task = task_kind::qc;
  qc_grid.rows.push_back({{"QR", "LT", "HCT"}, 1.0});
  CHECK(qc_grid.to_table().rfind("QR  LT  HCT  F1\n", 0) == 0);
  ordered_json js = qc_grid.to_json();
  CHECK(js["task"] == "qc");
  CHECK(js["rows"][0]["flags"].size() == 3);
}
