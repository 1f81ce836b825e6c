#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include "slotfill/corpus.hpp"

using namespace slotfill;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& content, const char* ext = ".json") {
    path = "test_corpus_tmp_" + std::to_string((std::uintptr_t)this) + ext;
    std::ofstream out(path);
    out << content;
  }
  ~TempFile() { std::remove(path.c_str()); }
};

DomainSchema tiny_schema() {
  DomainSchema s;
  s.domain = "flights";
  s.slots = {{"from_city", "departure city"}, {"to_city", "destination city"}};
  return s;
}

std::vector<TaggedUtterance> numbered(std::size_t n) {
  std::vector<TaggedUtterance> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({{"u" + std::to_string(i)}, {"O"}});
  return out;
}

}  // namespace

TEST_CASE("parse_tag / format_tag") {
  CHECK(parse_tag("O").kind == 'O');
  auto b = parse_tag("B-from_city");
  CHECK(b.kind == 'B');
  CHECK(b.slot == "from_city");
  CHECK(format_tag(parse_tag("I-to_city")) == "I-to_city");
  CHECK_THROWS_AS(parse_tag("X-foo"), DataError);
  CHECK_THROWS_AS(parse_tag("B-"), DataError);
  CHECK_THROWS_AS(parse_tag(""), DataError);
}

TEST_CASE("validate_iob: strict vs lenient") {
  std::vector<std::string> good = {"O", "B-a", "I-a", "O", "B-a"};
  CHECK(validate_iob(good, IobMode::Strict).tags == good);
  CHECK(validate_iob(good, IobMode::Strict).warnings.empty());

  std::vector<std::string> orphan = {"O", "I-a", "I-a"};
  CHECK_THROWS_AS(validate_iob(orphan, IobMode::Strict), DataError);
  auto fixed = validate_iob(orphan, IobMode::Lenient);
  CHECK(fixed.tags == std::vector<std::string>{"O", "B-a", "I-a"});
  CHECK(fixed.warnings.size() == 1);

  // I after a different slot's span is also an orphan
  std::vector<std::string> cross = {"B-a", "I-b"};
  CHECK_THROWS_AS(validate_iob(cross, IobMode::Strict), DataError);
  CHECK(validate_iob(cross, IobMode::Lenient).tags ==
        std::vector<std::string>{"B-a", "B-b"});
}

TEST_CASE("project_slot and reconstruction") {
  std::vector<std::string> tags = {"O", "B-a", "I-a", "B-b", "O"};
  auto pa = project_slot(tags, "a");
  CHECK(pa.positive);
  CHECK(pa.labels == std::vector<Bio>{Bio::O, Bio::B, Bio::I, Bio::O, Bio::O});
  auto pb = project_slot(tags, "b");
  CHECK(pb.positive);
  CHECK(pb.labels == std::vector<Bio>{Bio::O, Bio::O, Bio::O, Bio::B, Bio::O});
  auto pc = project_slot(tags, "absent");
  CHECK_FALSE(pc.positive);
  CHECK(std::all_of(pc.labels.begin(), pc.labels.end(), [](Bio x) { return x == Bio::O; }));

  // property: projections over all mentioned slots reconstruct the original tags
  std::vector<std::string> rebuilt(tags.size(), "O");
  for (const std::string& slot : {std::string("a"), std::string("b")}) {
    auto p = project_slot(tags, slot);
    for (std::size_t i = 0; i < tags.size(); ++i) {
      if (p.labels[i] == Bio::B) rebuilt[i] = "B-" + slot;
      if (p.labels[i] == Bio::I) rebuilt[i] = "I-" + slot;
    }
  }
  CHECK(rebuilt == tags);
}

TEST_CASE("split_dev sizes and order") {
  auto s100 = split_dev(numbered(100));
  CHECK(s100.train_part.size() == 80);
  CHECK(s100.dev_part.size() == 20);
  CHECK(s100.train_part.front().tokens[0] == "u0");
  CHECK(s100.dev_part.front().tokens[0] == "u80");

  auto s5 = split_dev(numbered(5));
  CHECK(s5.train_part.size() == 4);
  CHECK(s5.dev_part.size() == 1);

  auto s0 = split_dev(numbered(0));
  CHECK(s0.train_part.empty());
  CHECK(s0.dev_part.empty());

  auto s1 = split_dev(numbered(1));  // floor(0.2) == 0 -> everything stays train
  CHECK(s1.train_part.size() == 1);
  CHECK(s1.dev_part.empty());
}

TEST_CASE("subsample: rotating blocks") {
  auto train = numbered(100);
  auto r0 = subsample(train, 10, 0, 10);
  CHECK(r0.size() == 10);
  CHECK(r0.front().tokens[0] == "u0");
  CHECK(r0.back().tokens[0] == "u9");
  auto r1 = subsample(train, 10, 1, 10);
  CHECK(r1.front().tokens[0] == "u10");
  CHECK(r1.back().tokens[0] == "u19");

  // wrap-around
  auto r9 = subsample(train, 15, 9, 10);
  CHECK(r9.size() == 15);
  CHECK(r9.front().tokens[0] == "u90");
  CHECK(r9.back().tokens[0] == "u4");

  // n >= |train| returns everything
  CHECK(subsample(train, 200, 3, 10).size() == 100);

  // property: runs with disjoint offsets select different blocks
  std::set<std::string> firsts;
  for (std::size_t run = 0; run < 10; ++run)
    firsts.insert(subsample(train, 10, run, 10).front().tokens[0]);
  CHECK(firsts.size() == 10);
}

TEST_CASE("subsample_shuffled: deterministic, n capped") {
  auto train = numbered(50);
  auto a = subsample_shuffled(train, 10, 7);
  auto b = subsample_shuffled(train, 10, 7);
  REQUIRE(a.size() == 10);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].tokens == b[i].tokens);
  auto c = subsample_shuffled(train, 10, 8);
  bool same = true;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].tokens != c[i].tokens) same = false;
  CHECK_FALSE(same);
}

TEST_CASE("schema round trip and validation") {
  auto s = tiny_schema();
  TempFile f("");
  save_schema(s, f.path);
  auto loaded = load_schema(f.path);
  CHECK(loaded.domain == "flights");
  REQUIRE(loaded.slots.size() == 2);
  CHECK(loaded.slots[1].description == "destination city");
  CHECK(loaded.find_slot("from_city") != nullptr);
  CHECK(loaded.find_slot("nope") == nullptr);

  TempFile dup(R"({"domain":"d","slots":[{"name":"a","description":"x"},{"name":"a","description":"y"}]})");
  CHECK_THROWS_WITH_AS(load_schema(dup.path), doctest::Contains("duplicate"), DataError);

  TempFile empty_desc(R"({"domain":"d","slots":[{"name":"a","description":""}]})");
  CHECK_THROWS_AS(load_schema(empty_desc.path), DataError);
}

TEST_CASE("parse_dataset: valid lines, mismatches, bad tags") {
  auto schema = tiny_schema();
  TempFile ok(
      R"({"tokens":["fly","to","boston"],"tags":["O","O","B-to_city"]})"
      "\n"
      R"({"tokens":["from","new","york"],"tags":["O","B-from_city","I-from_city"]})"
      "\n",
      ".jsonl");
  auto data = parse_dataset(ok.path, schema);
  REQUIRE(data.size() == 2);
  CHECK(data[0].tokens == std::vector<std::string>{"fly", "to", "boston"});
  CHECK(data[1].tags[2] == "I-from_city");

  TempFile mismatch(R"({"tokens":["a","b"],"tags":["O"]})" "\n", ".jsonl");
  CHECK_THROWS_WITH_AS(parse_dataset(mismatch.path, schema), doctest::Contains("record 0"),
                       DataError);

  TempFile unknown_slot(R"({"tokens":["a"],"tags":["B-zzz"]})" "\n", ".jsonl");
  CHECK_THROWS_AS(parse_dataset(unknown_slot.path, schema), DataError);

  TempFile orphan(R"({"tokens":["a","b"],"tags":["O","I-to_city"]})" "\n", ".jsonl");
  CHECK_THROWS_AS(parse_dataset(orphan.path, schema), DataError);
}

TEST_CASE("dataset round trip") {
  auto schema = tiny_schema();
  std::vector<TaggedUtterance> data = {
      {{"fly", "to", "boston"}, {"O", "O", "B-to_city"}},
      {{"hi"}, {"O"}},
  };
  TempFile f("", ".jsonl");
  save_dataset(data, f.path);
  auto back = parse_dataset(f.path, schema);
  REQUIRE(back.size() == 2);
  CHECK(back[0].tokens == data[0].tokens);
  CHECK(back[0].tags == data[0].tags);
  CHECK(back[1].tokens == data[1].tokens);
}

TEST_CASE("synth_generate: determinism, tags by construction, errors") {
  DomainSchema schema = tiny_schema();
  SynthGrammar g;
  g.templates = {"book a flight from {from_city} to {to_city}", "show flights to {to_city}"};
  g.lexicons = {{"from_city", {"boston", "new york"}}, {"to_city", {"denver", "salt lake city"}}};

  auto a = synth_generate(g, schema, 11, 20);
  auto b = synth_generate(g, schema, 11, 20);
  REQUIRE(a.size() == 20);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].tokens == b[i].tokens);
    CHECK(a[i].tags == b[i].tags);
    CHECK_NOTHROW(validate_iob(a[i].tags, IobMode::Strict));
    CHECK(a[i].tokens.size() == a[i].tags.size());
  }
  auto c = synth_generate(g, schema, 12, 20);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].tokens != c[i].tokens) any_diff = true;
  CHECK(any_diff);

  // multi-token fills are tagged B then I
  bool saw_multi = false;
  for (const auto& u : a)
    for (std::size_t i = 0; i + 1 < u.tags.size(); ++i)
      if (u.tags[i] == "B-to_city" && u.tags[i + 1] == "I-to_city") saw_multi = true;
  CHECK(saw_multi);

  SynthGrammar missing = g;
  missing.lexicons.erase("to_city");
  CHECK_THROWS_AS(synth_generate(missing, schema, 0, 5), DataError);

  SynthGrammar empty_lex = g;
  empty_lex.lexicons["to_city"].clear();
  CHECK_THROWS_AS(synth_generate(empty_lex, schema, 0, 5), DataError);

  SynthGrammar bad_ph = g;
  bad_ph.templates.push_back("go via {nowhere}");
  CHECK_THROWS_AS(synth_generate(bad_ph, schema, 0, 5), DataError);
}

TEST_CASE("grammar_vocabulary covers templates, lexicons and descriptions") {
  DomainSchema schema = tiny_schema();
  SynthGrammar g;
  g.templates = {"fly to {to_city}"};
  g.lexicons = {{"from_city", {"boston"}}, {"to_city", {"New York"}}};
  auto vocab = grammar_vocabulary(g, schema);
  std::set<std::string> v(vocab.begin(), vocab.end());
  CHECK(v.count("fly"));
  CHECK(v.count("new"));     // lexicon values preprocessed (lowercased)
  CHECK(v.count("york"));
  CHECK(v.count("departure"));  // description words
  CHECK(v.count("destination"));
  CHECK(std::is_sorted(vocab.begin(), vocab.end()));
}
