#include <doctest.h>

#include <string>
#include <vector>

#include "core/corpus.hpp"
#include "fuzzers.hpp"
#include "helpers.hpp"

using namespace relrefine;

TEST_CASE("parse_task accepts both cases") {
  CHECK(parse_task("QC") == task_kind::qc);
  CHECK(parse_task("qi") == task_kind::qi);
  CHECK_THROWS_AS(parse_task("QX"), error);
}

TEST_CASE("category_path joined/parse are inverse") {
  category_path path{{"food", "grocery", "flour", "baking and cooking", "decorations"}};
  CHECK(path.joined() == "food>grocery>flour>baking and cooking>decorations");
  CHECK(category_path::parse(path.joined(), 1) == path);
}

TEST_CASE("category_path validation") {
  CHECK_THROWS_AS(category_path::parse("a>b>c>d>e>f", 3), error);  // 6 levels
  CHECK_THROWS_AS(category_path::parse("", 3), error);
  CHECK_THROWS_AS(category_path::parse("a>  >c", 3), error);  // whitespace-only level
  CHECK(category_path::parse("solo", 1).levels == std::vector<std::string>{"solo"});
}

TEST_CASE("parse_sample_line reads the documented QC schema") {
  sample s = parse_sample_line(
      R"({"language":"en","query":"baking","category_path":"food>grocery>flour>baking and cooking>decorations","label":1})",
      task_kind::qc, 1);
  CHECK(s.language == "en");
  CHECK(s.query == "baking");
  REQUIRE(s.target.is_category());
  CHECK(s.target.path().levels.size() == 5);
  CHECK(s.label == 1);
  CHECK_FALSE(s.id_explicit);
  CHECK(s.id == "0");  // synthesized 0-based index
}

TEST_CASE("parse_sample_line QI schema with extras preserved in order") {
  sample s = parse_sample_line(
      R"({"language":"ja","query":"q","item_title":"t","label":0,"source":"log","rank":3})",
      task_kind::qi, 5);
  CHECK(s.target.title() == "t");
  REQUIRE(s.extra.size() == 2);
  auto it = s.extra.begin();
  CHECK(it.key() == "source");
  ++it;
  CHECK(it.key() == "rank");
}

TEST_CASE("parse_sample_line coerces integer ids") {
  sample s = parse_sample_line(R"({"id":7,"language":"en","query":"q","item_title":"t"})",
                               task_kind::qi, 1);
  CHECK(s.id == "7");
  CHECK(s.id_explicit);
}

TEST_CASE("parse_sample_line error cases carry line numbers") {
  auto expect_error = [](const std::string& line, task_kind task, errc kind) {
    try {
      parse_sample_line(line, task, 12);
      FAIL("expected error for: ", line);
    } catch (const error& e) {
      CHECK(e.kind() == kind);
      CHECK(std::string(e.what()).find("12") != std::string::npos);
    }
  };
  expect_error("{oops", task_kind::qi, errc::parse);
  expect_error(R"({"language":"EN","query":"q","item_title":"t"})", task_kind::qi,
               errc::validation);
  expect_error(R"({"language":"eng","query":"q","item_title":"t"})", task_kind::qi,
               errc::validation);
  expect_error(R"({"language":"en","query":"q","item_title":"t","label":2})", task_kind::qi,
               errc::validation);
  expect_error(R"({"language":"en","query":"q"})", task_kind::qi, errc::validation);
  expect_error(R"({"language":"en","query":"q","category_path":"a>b>c>d>e>f"})", task_kind::qc,
               errc::validation);
}

TEST_CASE("sample json round-trip preserves structure") {
  rng_engine rng(2024);
  for (int i = 0; i < 300; ++i) {
    task_kind task = i % 2 == 0 ? task_kind::qc : task_kind::qi;
    sample s = testutil::random_sample(rng, task, static_cast<size_t>(i));
    ordered_json line = sample_to_json(s, task);
    sample back = parse_sample_line(line.dump(), task, 1);
    CHECK(back == s);
    // Serialization is idempotent at the byte level.
    CHECK(sample_to_json(back, task).dump() == line.dump());
  }
}

TEST_CASE("read_jsonl/write_jsonl file round-trip and synthesized ids") {
  testutil::temp_dir dir;
  std::string path = dir.file("data.jsonl");
  testutil::spit(path,
                 R"({"language":"en","query":"a","item_title":"x"})"
                 "\n"
                 R"({"language":"es","query":"b","item_title":"y","label":1})"
                 "\n"
                 R"({"language":"de","query":"c","item_title":"z","label":0,"source":"log"})"
                 "\n");
  std::vector<sample> samples = read_jsonl(path, task_kind::qi);
  REQUIRE(samples.size() == 3);
  CHECK(samples[0].id == "0");
  CHECK(samples[1].id == "1");
  CHECK(samples[2].id == "2");
  CHECK(samples[2].extra["source"] == "log");

  std::string out = dir.file("out.jsonl");
  write_jsonl(samples, task_kind::qi, out);
  CHECK(read_jsonl(out, task_kind::qi) == samples);
  // Passthrough field survives on the wire.
  CHECK(testutil::slurp(out).find("\"source\":\"log\"") != std::string::npos);
}

TEST_CASE("read_jsonl empty file and malformed line") {
  testutil::temp_dir dir;
  std::string path = dir.file("empty.jsonl");
  testutil::spit(path, "");
  CHECK(read_jsonl(path, task_kind::qc).empty());

  std::string bad = dir.file("bad.jsonl");
  testutil::spit(bad, "{\"language\":\"en\",\"query\":\"a\",\"item_title\":\"x\"}\nnot json\n");
  try {
    read_jsonl(bad, task_kind::qi);
    FAIL("expected parse error");
  } catch (const error& e) {
    CHECK(e.kind() == errc::parse);
    CHECK(std::string(e.what()).find("2") != std::string::npos);
  }
}

TEST_CASE("compute_stats counts and ratios") {
  std::vector<sample> samples;
  for (int label : {1, 1, 0, 1}) {
    sample s;
    s.language = "en";
    s.query = "q";
    s.target = target_field::item("t");
    s.label = label;
    samples.push_back(s);
  }
  dataset_stats stats = compute_stats(samples);
  CHECK(stats.total == 4);
  CHECK(stats.per_language.at("en").count == 4);
  CHECK(stats.per_language.at("en").labeled == 4);
  CHECK(stats.per_language.at("en").positives == 3);
  ordered_json j = stats.to_json();
  CHECK(j["per_language"]["en"]["positive_ratio"].get<double>() == doctest::Approx(0.75));

  CHECK(compute_stats({}).total == 0);
  CHECK(compute_stats({}).per_language.empty());
}

TEST_CASE("compute_stats omits ratio for unlabeled languages") {
  sample s;
  s.language = "fr";
  s.query = "q";
  s.target = target_field::item("t");
  dataset_stats stats = compute_stats({s});
  ordered_json j = stats.to_json();
  CHECK_FALSE(j["per_language"]["fr"].contains("positive_ratio"));
}

static synth_config base_synth(task_kind task) {
  synth_config cfg;
  cfg.task = task;
  cfg.languages = {"en", "es"};
  cfg.per_language_count = 100;
  cfg.positive_ratio = 0.5;
  cfg.noise_rate = 0.0;
  cfg.seed = 7;
  return cfg;
}

TEST_CASE("generate_synthetic determinism and counts") {
  synth_config cfg = base_synth(task_kind::qi);
  std::vector<sample> a = generate_synthetic(cfg);
  std::vector<sample> b = generate_synthetic(cfg);
  CHECK(a == b);
  dataset_stats stats = compute_stats(a);
  CHECK(stats.per_language.at("en").count == 100);
  CHECK(stats.per_language.at("es").count == 100);

  cfg.seed = 8;
  CHECK(generate_synthetic(cfg) != a);
}

TEST_CASE("generate_synthetic noise accounting is exact") {
  synth_config cfg = base_synth(task_kind::qi);
  cfg.languages = {"en", "es", "ar"};
  cfg.per_language_count = 500;
  cfg.noise_rate = 0.3;
  std::vector<sample> samples = generate_synthetic(cfg);
  size_t flips = 0;
  for (const sample& s : samples) {
    REQUIRE(s.extra.contains("clean_label"));
    if (s.extra["clean_label"].get<int>() != *s.label) ++flips;
  }
  CHECK(flips == 450);  // exactly floor(r*n) under exact arithmetic
}

TEST_CASE("generate_synthetic noise 0 keeps labels clean") {
  std::vector<sample> samples = generate_synthetic(base_synth(task_kind::qc));
  for (const sample& s : samples) CHECK(s.extra["clean_label"].get<int>() == *s.label);
}

TEST_CASE("generate_synthetic QC paths and bigram languages") {
  synth_config cfg = base_synth(task_kind::qc);
  cfg.languages = {"ja", "th"};
  std::vector<sample> samples = generate_synthetic(cfg);
  for (const sample& s : samples) {
    REQUIRE(s.target.is_category());
    size_t levels = s.target.path().levels.size();
    CHECK(levels >= 1);
    CHECK(levels <= 5);
  }
}

TEST_CASE("generate_synthetic rejects unsupported languages") {
  synth_config cfg = base_synth(task_kind::qi);
  cfg.languages = {"zz"};
  try {
    generate_synthetic(cfg);
    FAIL("expected error");
  } catch (const error& e) {
    // Error names the supported codes.
    CHECK(std::string(e.what()).find("en") != std::string::npos);
  }
}

TEST_CASE("generate_synthetic output survives file round-trip") {
  synth_config cfg = base_synth(task_kind::qi);
  cfg.noise_rate = 0.2;
  std::vector<sample> samples = generate_synthetic(cfg);
  testutil::temp_dir dir;
  std::string path = dir.file("synth.jsonl");
  write_jsonl(samples, task_kind::qi, path);
  std::vector<sample> back = read_jsonl(path, task_kind::qi);
  CHECK(back == samples);
}
