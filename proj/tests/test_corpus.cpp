#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <set>
#include <sstream>

#include "support/fixtures.hpp"
#include "taxoseq/corpus.hpp"
#include "taxoseq/errors.hpp"

using namespace taxoseq;
using test::TempDir;

TEST_CASE("tokenize lowercases and separates punctuation") {
  CHECK(tokenize("Deep Learning, today.") ==
        std::vector<std::string>{"deep", "learning", ",", "today", "."});
  CHECK(tokenize("").empty());
  CHECK(tokenize("   \t\n ").empty());
  CHECK(tokenize("a-b") == std::vector<std::string>{"a", "-", "b"});
  CHECK(tokenize("Hello world") ==  // non-breaking space
        std::vector<std::string>{"hello", "world"});
  CHECK(tokenize("café") == std::vector<std::string>{"café"});
}

TEST_CASE("tokenize is idempotent over re-joined output") {
  const auto join = [](const std::vector<std::string>& tokens) {
    std::string out;
    for (const auto& t : tokens) {
      if (!out.empty()) out += ' ';
      out += t;
    }
    return out;
  };
  Rng rng(5);
  const std::string alphabet = "aA zZ.,!x9-\t";
  for (int trial = 0; trial < 200; ++trial) {
    std::string text;
    const auto len = rng.below(30);
    for (std::uint64_t i = 0; i < len; ++i) {
      text += alphabet[rng.below(alphabet.size())];
    }
    const auto once = tokenize(text);
    CHECK(tokenize(join(once)) == once);
  }
}

TEST_CASE("load_dataset accepts well-formed rows and reports bad ones") {
  TempDir dir("corpus");
  const Taxonomy taxonomy = test::tiny_taxonomy({2, 3});
  const auto path = test::write_file(
      dir.file("data.tsv"),
      "d1\tsome Text here\tl1_c0\tl2_c1\n"
      "d2\tmore text\tl1_c1\tl2_c2\n"
      "d3\tthree labels\tl1_c0\tl2_c0\tl2_c1\n"   // arity != M
      "d4\t\tl1_c0\tl2_c0\n"                      // empty text
      "d5\tunknown class\tl1_c0\tnope\n"          // unknown class
      "d6\tfine again\tl1_c1\tl2_c0\n");
  const auto result = load_dataset(path, taxonomy);
  CHECK(result.documents.size() == 3);
  REQUIRE(result.rejected.size() == 3);
  CHECK(result.rejected[0].line_number == 3);
  CHECK(result.rejected[1].line_number == 4);
  CHECK(result.rejected[2].line_number == 5);
  CHECK(result.documents[0].id == "d1");
  CHECK(result.documents[0].tokens ==
        std::vector<std::string>{"some", "text", "here"});
  CHECK(result.documents[0].labels == LabelPath{{0, 0}, {1, 1}});
  // Order preserved, deterministic across loads.
  const auto again = load_dataset(path, taxonomy);
  CHECK(again.documents.size() == 3);
  CHECK(again.documents[2].id == "d6");
  CHECK_THROWS_AS(load_dataset(dir.file("missing.tsv"), taxonomy), DataError);
}

TEST_CASE("load_dataset handles a 46,985-row file") {
  TempDir dir("corpus_big");
  const Taxonomy taxonomy = test::wos_shaped_taxonomy();
  std::ostringstream content;
  Rng rng(7);
  const int rows = 46985;
  for (int i = 0; i < rows; ++i) {
    content << "doc" << i << "\tsample text " << i << "\tl1_c"
            << rng.below(7) << "\tl2_c" << rng.below(143) << '\n';
  }
  const auto path = test::write_file(dir.file("wos.tsv"), content.str());
  const auto result = load_dataset(path, taxonomy);
  CHECK(result.documents.size() == rows);
  CHECK(result.rejected.empty());
}

TEST_CASE("fuzzed malformed rows never produce documents") {
  TempDir dir("corpus_fuzz");
  const Taxonomy taxonomy = test::tiny_taxonomy({2, 2});
  Rng rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    std::ostringstream content;
    int good = 0;
    for (int row = 0; row < 20; ++row) {
      switch (rng.below(5)) {
        case 0:
          content << "ok" << row << "\ttext\tl1_c0\tl2_c1\n";
          ++good;
          break;
        case 1: content << "bad\tonly three\tl1_c0\n"; break;
        case 2: content << "bad\t\tl1_c0\tl2_c0\n"; break;
        case 3: content << "bad\ttext\tzzz\tl2_c0\n"; break;
        case 4: content << "bad\ttext\tl1_c0\tl2_c0\textra\n"; break;
      }
    }
    const auto path = test::write_file(dir.file("fuzz.tsv"), content.str());
    const auto result = load_dataset(path, taxonomy);
    CHECK(static_cast<int>(result.documents.size()) == good);
    for (const auto& doc : result.documents) {
      CHECK(taxonomy.path_is_valid(doc.labels));
      CHECK_FALSE(doc.tokens.empty());
    }
  }
}

namespace {

std::vector<Document> make_docs(int count) {
  std::vector<Document> docs;
  for (int i = 0; i < count; ++i) {
    docs.push_back({"doc" + std::to_string(i), {"text"}, {{0, 0}, {1, 0}}});
  }
  return docs;
}

}  // namespace

TEST_CASE("split produces exact, deterministic, disjoint splits") {
  const auto docs = make_docs(100);
  const auto split = split_dataset(docs, {0.8, 0.1, 0.1}, 7);
  CHECK(split.train.size() == 80);
  CHECK(split.validation.size() == 10);
  CHECK(split.test.size() == 10);

  const auto again = split_dataset(docs, {0.8, 0.1, 0.1}, 7);
  for (std::size_t i = 0; i < split.train.size(); ++i) {
    CHECK(split.train[i].id == again.train[i].id);
  }
  const auto other = split_dataset(docs, {0.8, 0.1, 0.1}, 8);
  bool any_difference = false;
  for (std::size_t i = 0; i < split.train.size(); ++i) {
    any_difference = any_difference || split.train[i].id != other.train[i].id;
  }
  CHECK(any_difference);

  // Partition: union equals the input multiset, pairwise disjoint ids.
  std::multiset<std::string> seen;
  for (const auto* part : {&split.train, &split.validation, &split.test}) {
    for (const auto& doc : *part) seen.insert(doc.id);
  }
  std::multiset<std::string> expected;
  for (const auto& doc : docs) expected.insert(doc.id);
  CHECK(seen == expected);
}

TEST_CASE("split rejects bad ratios and empty splits") {
  const auto docs = make_docs(10);
  CHECK_THROWS_AS(split_dataset(docs, {0.5, 0.2, 0.2}, 1), ConfigError);
  CHECK_THROWS_AS(split_dataset(docs, {0.98, 0.01, 0.01}, 1), DataError);
}

TEST_CASE("split sizes stay within one document of exact") {
  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 3 + static_cast<int>(rng.below(200));
    double a = 0.2 + rng.uniform() * 0.6;
    double b = (1.0 - a) * (0.2 + rng.uniform() * 0.6);
    const std::array<double, 3> ratios{a, b, 1.0 - a - b};
    const auto docs = make_docs(n);
    SplitDataset split;
    try {
      split = split_dataset(docs, ratios, trial);
    } catch (const DataError&) {
      continue;  // an empty split is a legitimate outcome for tiny n
    }
    CHECK(std::abs(static_cast<double>(split.train.size()) - ratios[0] * n) <=
          1.0);
    CHECK(std::abs(static_cast<double>(split.validation.size()) -
                   ratios[1] * n) <= 1.0);
    CHECK(std::abs(static_cast<double>(split.test.size()) - ratios[2] * n) <=
          1.0);
  }
}

TEST_CASE("load_definitions covers classes and reports the rest") {
  TempDir dir("defs");
  const Taxonomy taxonomy = test::tiny_taxonomy({2, 3});

  SUBCASE("full coverage") {
    const auto path = test::write_file(dir.file("defs.tsv"),
                                       "0\tl1_c0\tfirst parent class\n"
                                       "0\tl1_c1\tsecond parent class\n"
                                       "1\tl2_c0\ta child\n"
                                       "1\tl2_c1\tanother child\n"
                                       "1\tl2_c2\tlast child\n");
    const auto result = load_definitions(path, taxonomy);
    CHECK(result.store.size() == 5);
    CHECK(result.missing.empty());
    CHECK(result.warnings.empty());
    CHECK(*result.store.find(1, "l2_c1") == "another child");
  }

  SUBCASE("missing one class") {
    const auto path = test::write_file(dir.file("defs.tsv"),
                                       "0\tl1_c0\tfirst\n"
                                       "0\tl1_c1\tsecond\n"
                                       "1\tl2_c0\tchild\n"
                                       "1\tl2_c2\tchild\n");
    const auto result = load_definitions(path, taxonomy);
    CHECK(result.store.size() == 4);
    REQUIRE(result.missing.size() == 1);
    CHECK(result.missing[0] == ClassId{1, 1});
  }

  SUBCASE("duplicate entries: last wins with a warning") {
    const auto path = test::write_file(dir.file("defs.tsv"),
                                       "0\tl1_c0\tfirst try\n"
                                       "0\tl1_c0\tlast wins\n");
    const auto result = load_definitions(path, taxonomy);
    CHECK(*result.store.find(0, "l1_c0") == "last wins");
    REQUIRE(result.warnings.size() == 1);
    CHECK(result.warnings[0].find("duplicate") != std::string::npos);
  }

  SUBCASE("unknown class entries warn and are skipped") {
    const auto path =
        test::write_file(dir.file("defs.tsv"), "0\tmystery\tsomething\n");
    const auto result = load_definitions(path, taxonomy);
    CHECK(result.store.size() == 0);
    CHECK(result.warnings.size() == 1);
  }

  SUBCASE("malformed records are fatal") {
    const auto two_cols =
        test::write_file(dir.file("two.tsv"), "0\tl1_c0 no definition\n");
    CHECK_THROWS_AS(load_definitions(two_cols, taxonomy), DataError);
    const auto bad_level =
        test::write_file(dir.file("lvl.tsv"), "x\tl1_c0\tdefinition\n");
    CHECK_THROWS_AS(load_definitions(bad_level, taxonomy), DataError);
    const auto out_of_range =
        test::write_file(dir.file("range.tsv"), "7\tl1_c0\tdefinition\n");
    CHECK_THROWS_AS(load_definitions(out_of_range, taxonomy), DataError);
  }
}
