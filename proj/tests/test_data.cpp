#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "mmlogic/data.hpp"

using namespace mmlogic;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("mmlogic_data_test_" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

std::string minimal_meta = R"({"z": 1, "f": 2, "labels": ["NonRumor", "Rumor"]})";

}  // namespace

TEST_CASE("window edges") {
  auto edges = window_edges(3, 2);
  CHECK(edges == std::vector<std::pair<int, int>>{{0, 1}, {0, 2}, {1, 2}});
  for (const auto& [i, j] : edges) CHECK(i != j);
  CHECK(window_edges(1, 2).empty());
}

TEST_CASE("synthetic spec validation") {
  SyntheticSpec bad;
  bad.trigger_token = 99;
  bad.vocab = 50;
  CHECK_THROWS_AS(bad.validate(), DataError);

  SyntheticSpec noisy;
  noisy.noise = 0.5;
  CHECK_THROWS_AS(noisy.validate(), DataError);

  SyntheticSpec ok;
  CHECK_NOTHROW(ok.validate());
}

TEST_CASE("noise-free generation satisfies the planted rule") {
  SyntheticSpec spec;
  spec.noise = 0.0;
  spec.seed = 21;
  Dataset ds = generate_synthetic(spec, 200);
  CHECK(ds.samples.size() == 200);
  for (const auto& s : ds.samples) {
    const bool positive = s.label == spec.positive_label;
    CHECK(rule_holds(spec, s) == positive);
    CHECK(static_cast<int>(s.patches.size()) == spec.z * spec.z);
    CHECK(static_cast<int>(s.tokens.size()) >= spec.min_tokens);
    CHECK(static_cast<int>(s.tokens.size()) <= spec.max_tokens);
  }
}

TEST_CASE("generation is deterministic in the seed") {
  SyntheticSpec spec;
  spec.seed = 77;
  Dataset a = generate_synthetic(spec, 50);
  Dataset b = generate_synthetic(spec, 50);
  REQUIRE(a.samples.size() == b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(a.samples[i].tokens == b.samples[i].tokens);
    CHECK(a.samples[i].patches == b.samples[i].patches);
    CHECK(a.samples[i].label == b.samples[i].label);
  }
}

TEST_CASE("class balance stays inside the binomial 99% interval") {
  SyntheticSpec spec;
  spec.noise = 0.0;
  spec.balance = 0.5;
  spec.seed = 5;
  Dataset ds = generate_synthetic(spec, 1000);
  long positives = std::count_if(ds.samples.begin(), ds.samples.end(), [&](const auto& s) {
    return s.label == spec.positive_label;
  });
  CHECK(positives >= 500 - 41);
  CHECK(positives <= 500 + 41);
}

TEST_CASE("round trip through jsonl") {
  TempDir tmp;
  SyntheticSpec spec;
  spec.z = 2;
  spec.f = 3;
  spec.seed = 9;
  Dataset ds = generate_synthetic(spec, 20);
  const std::string path = tmp.file("ds.jsonl");
  save_dataset(ds, path);
  Dataset loaded = load_dataset(path);

  CHECK(loaded.meta.z == ds.meta.z);
  CHECK(loaded.meta.f == ds.meta.f);
  CHECK(loaded.meta.labels == ds.meta.labels);
  REQUIRE(loaded.samples.size() == ds.samples.size());
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    CHECK(loaded.samples[i].id == ds.samples[i].id);
    CHECK(loaded.samples[i].tokens == ds.samples[i].tokens);
    CHECK(loaded.samples[i].token_surface == ds.samples[i].token_surface);
    CHECK(loaded.samples[i].dep_edges == ds.samples[i].dep_edges);
    CHECK(loaded.samples[i].patches == ds.samples[i].patches);  // bitwise
    CHECK(loaded.samples[i].label == ds.samples[i].label);
  }

  // second round trip is byte-identical
  const std::string path2 = tmp.file("ds2.jsonl");
  save_dataset(loaded, path2);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  std::string c1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string c2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(c1 == c2);
}

TEST_CASE("window fallback applies only without explicit edges") {
  TempDir tmp;
  const std::string path = tmp.file("win.jsonl");
  write_file(path + ".meta.json", minimal_meta);
  write_file(path,
             R"({"id": "a", "tokens": [4, 5, 6], "patches": [[0.0, 1.0]], "label": "Rumor"})"
             "\n"
             R"({"id": "b", "tokens": [4, 5, 6], "dep_edges": [[0, 2]], "patches": [[0.0, 1.0]], "label": "NonRumor"})"
             "\n");
  Dataset ds = load_dataset(path, 2);
  REQUIRE(ds.samples.size() == 2);
  CHECK(ds.samples[0].dep_edges ==
        std::vector<std::pair<int, int>>{{0, 1}, {0, 2}, {1, 2}});
  CHECK(ds.samples[1].dep_edges == std::vector<std::pair<int, int>>{{0, 2}});
}

TEST_CASE("loader error reporting") {
  TempDir tmp;

  SUBCASE("malformed line includes the line number") {
    const std::string path = tmp.file("bad.jsonl");
    write_file(path + ".meta.json", minimal_meta);
    write_file(path,
               R"({"id": "a", "tokens": [1], "patches": [[0.0, 1.0]], "label": "Rumor"})"
               "\nnot json\n");
    try {
      load_dataset(path);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }
  }

  SUBCASE("unknown label lists the label space") {
    const std::string path = tmp.file("lbl.jsonl");
    write_file(path + ".meta.json", minimal_meta);
    write_file(path, R"({"id": "a", "tokens": [1], "patches": [[0.0, 1.0]], "label": "Nope"})"
                     "\n");
    try {
      load_dataset(path);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("NonRumor") != std::string::npos);
      CHECK(msg.find("Rumor") != std::string::npos);
    }
  }

  SUBCASE("missing patches rejected") {
    const std::string path = tmp.file("nopatch.jsonl");
    write_file(path + ".meta.json", minimal_meta);
    write_file(path, R"({"id": "a", "tokens": [1], "label": "Rumor"})"
                     "\n");
    CHECK_THROWS_AS(load_dataset(path), DataError);
  }

  SUBCASE("wrong patch count rejected") {
    const std::string path = tmp.file("patchcount.jsonl");
    write_file(path + ".meta.json", minimal_meta);
    write_file(path,
               R"({"id": "a", "tokens": [1], "patches": [[0.0, 1.0], [0.0, 1.0]], "label": "Rumor"})"
               "\n");
    CHECK_THROWS_AS(load_dataset(path), DataError);
  }

  SUBCASE("empty file loads as an empty dataset") {
    const std::string path = tmp.file("empty.jsonl");
    write_file(path + ".meta.json", minimal_meta);
    write_file(path, "");
    Dataset ds = load_dataset(path);
    CHECK(ds.samples.empty());
  }
}

TEST_CASE("string tokens map through the sidecar vocabulary") {
  TempDir tmp;
  const std::string path = tmp.file("str.jsonl");
  write_file(path + ".meta.json",
             R"({"z": 1, "f": 2, "labels": ["NonRumor", "Rumor"], "vocab": {"hello": 3, "world": 4}})");
  write_file(path,
             R"({"id": "a", "tokens": ["hello", "unknown", "world"], "patches": [[0.5, 0.25]], "label": "Rumor"})"
             "\n");
  Dataset ds = load_dataset(path);
  REQUIRE(ds.samples.size() == 1);
  CHECK(ds.samples[0].tokens == std::vector<int>{3, 0, 4});
  CHECK(ds.samples[0].token_surface == std::vector<std::string>{"hello", "unknown", "world"});
}

TEST_CASE("kv config parsing") {
  TempDir tmp;
  const std::string path = tmp.file("spec.cfg");
  write_file(path, "# comment\nvocab = 30\nnoise=0.1\n trigger_token = 3 \n");
  auto kv = read_kv_file(path);
  CHECK(kv.at("vocab") == "30");
  CHECK(kv.at("noise") == "0.1");
  CHECK(kv.at("trigger_token") == "3");

  SyntheticSpec spec = parse_synthetic_spec(kv);
  CHECK(spec.vocab == 30);
  CHECK(spec.trigger_token == 3);
  CHECK(spec.noise == doctest::Approx(0.1));

  write_file(path, "vocab 30\n");
  CHECK_THROWS_AS(read_kv_file(path), DataError);
}
