#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <random>

#include "slotfill/text.hpp"

using namespace slotfill;

TEST_CASE("preprocess: sample sentences") {
  CHECK(preprocess("Search for flights to Philly one - way with promo code 54ZFHK33") ==
        std::vector<std::string>{"search", "for", "flights", "to", "philly", "one", "-", "way",
                                 "with", "promo", "code", "##zfhk##"});
  CHECK(preprocess("I need a table at Sun Penang on December 24th") ==
        std::vector<std::string>{"i", "need", "a", "table", "at", "sun", "penang", "on",
                                 "december", "##th"});
  CHECK(preprocess("") == std::vector<std::string>{});
  CHECK(preprocess("   \t  \n ") == std::vector<std::string>{});
}

TEST_CASE("preprocess: punctuation detachment") {
  CHECK(preprocess("bus from St . Petersburg to Concord.") ==
        std::vector<std::string>{"bus", "from", "st", ".", "petersburg", "to", "concord", "."});
  CHECK(preprocess("(hello!)") == std::vector<std::string>{"(", "hello", "!", ")"});
  // internal punctuation stays attached
  CHECK(preprocess("check-in 3 / 23") ==
        std::vector<std::string>{"check-in", "#", "/", "##"});
}

TEST_CASE("preprocess: idempotent, never emits uppercase or digits") {
  std::mt19937_64 rng(0);
  const std::string alphabet = "aAzZ09 .,-#()!x?";
  for (int iter = 0; iter < 200; ++iter) {
    std::string s;
    std::uniform_int_distribution<std::size_t> len(0, 30);
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
    std::size_t n = len(rng);
    for (std::size_t i = 0; i < n; ++i) s.push_back(alphabet[pick(rng)]);

    auto once = preprocess(s);
    auto twice = preprocess(join_tokens(once));
    CHECK(once == twice);
    for (const auto& tok : once)
      for (unsigned char c : tok) {
        CHECK_FALSE(std::isupper(c));
        CHECK_FALSE(std::isdigit(c));
      }
  }
}

namespace {
struct TempFile {
  std::string path;
  explicit TempFile(const std::string& content) {
    path = "test_text_tmp_" + std::to_string((std::uintptr_t)this) + ".txt";
    std::ofstream out(path);
    out << content;
  }
  ~TempFile() { std::remove(path.c_str()); }
};
}  // namespace

TEST_CASE("load_embeddings: basic, header, oov row") {
  TempFile f("hello 1 2 3\nworld 4 5 6\n");
  auto table = load_embeddings(f.path);
  CHECK(table.dim == 3);
  CHECK(table.entries.size() == 2);
  CHECK(table.entries.at("hello") == std::vector<double>{1, 2, 3});

  TempFile g("2 3\nhello 1 2 3\n_OOV_ 9 9 9\n");
  auto t2 = load_embeddings(g.path);
  CHECK(t2.dim == 3);
  CHECK(t2.oov_vector == std::vector<double>{9, 9, 9});
  CHECK(t2.vector_for("zzz_unknown") == std::vector<double>{9, 9, 9});
}

TEST_CASE("load_embeddings: error paths name the line") {
  TempFile bad_width("hello 1 2 3\nshort 1 2\n");
  CHECK_THROWS_WITH_AS(load_embeddings(bad_width.path), doctest::Contains("line 2"), DataError);

  TempFile dup("a 1 2\na 3 4\n");
  CHECK_THROWS_WITH_AS(load_embeddings(dup.path), doctest::Contains("duplicate"), DataError);

  TempFile empty("");
  CHECK_THROWS_AS(load_embeddings(empty.path), DataError);
}

TEST_CASE("embeddings round trip") {
  auto table = make_random_table({"alpha", "beta", "gamma"}, 5, 123);
  TempFile f("");
  save_embeddings(table, f.path);
  auto reloaded = load_embeddings(f.path);
  CHECK(reloaded.dim == table.dim);
  CHECK(reloaded.entries == table.entries);
  CHECK(reloaded.oov_vector == table.oov_vector);
}

TEST_CASE("lookup: known, oov, pointwise") {
  auto table = make_random_table({"a", "b"}, 4, 0);
  auto out = lookup({"a", "zzz_unknown", "a"}, table);
  REQUIRE(out.size() == 3);
  CHECK(out[0].data == table.entries.at("a"));
  CHECK(out[1].data == table.oov_vector);
  CHECK(out[2].data == out[0].data);
  CHECK_THROWS_AS(lookup({}, table), DataError);
}

TEST_CASE("fingerprint changes with content") {
  TempFile a("content one");
  TempFile b("content two");
  CHECK(file_fingerprint(a.path) != file_fingerprint(b.path));
  CHECK(file_fingerprint(a.path) == file_fingerprint(a.path));
}
