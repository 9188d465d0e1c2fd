#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "support/fixtures.hpp"
#include "taxoseq/errors.hpp"
#include "taxoseq/metrics.hpp"

using namespace taxoseq;

TEST_CASE("perfect predictions score 1.0 everywhere") {
  const Taxonomy taxonomy = test::tiny_taxonomy({2, 3});
  const std::vector<LabelPath> gold{{{0, 0}, {1, 1}}, {{0, 1}, {1, 2}}};
  const EvalReport report = evaluate(gold, gold, taxonomy);
  CHECK(report.document_count == 2);
  CHECK(report.level_accuracy(0) == 1.0);
  CHECK(report.level_accuracy(1) == 1.0);
  CHECK(report.path_accuracy() == 1.0);
}

TEST_CASE("one wrong level shows up in that level and the path accuracy") {
  const Taxonomy taxonomy = test::tiny_taxonomy({2, 3});
  const std::vector<LabelPath> gold{{{0, 0}, {1, 1}}, {{0, 1}, {1, 2}}};
  std::vector<LabelPath> predictions = gold;
  predictions[1][1].index = 0;  // wrong only at level 2
  const EvalReport report = evaluate(predictions, gold, taxonomy);
  CHECK(report.level_accuracy(0) == 1.0);
  CHECK(report.level_accuracy(1) == 0.5);
  CHECK(report.path_accuracy() == 0.5);
  CHECK(report.confusion[1][2][0] == 1);  // gold l2_c2 predicted as l2_c0
}

TEST_CASE("random instance matches an independent tally") {
  const Taxonomy taxonomy = test::tiny_taxonomy({3, 4});
  Rng rng(401);
  std::vector<LabelPath> gold, predictions;
  for (int i = 0; i < 50; ++i) {
    LabelPath g, p;
    for (int j = 0; j < 2; ++j) {
      g.push_back({j, static_cast<int>(rng.below(taxonomy.level_size(j)))});
      p.push_back({j, static_cast<int>(rng.below(taxonomy.level_size(j)))});
    }
    gold.push_back(g);
    predictions.push_back(p);
  }
  const EvalReport report = evaluate(predictions, gold, taxonomy);

  // Second, independent tally with a different loop structure.
  for (int j = 0; j < 2; ++j) {
    long correct = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      if (gold[i][j].index == predictions[i][j].index) ++correct;
    }
    CHECK(report.level_correct[j] == correct);
    // counts consistent: correct + incorrect == documents
    long confusion_total = 0, diagonal = 0;
    for (int g = 0; g < taxonomy.level_size(j); ++g) {
      for (int p = 0; p < taxonomy.level_size(j); ++p) {
        confusion_total += report.confusion[j][g][p];
        if (g == p) diagonal += report.confusion[j][g][p];
      }
    }
    CHECK(confusion_total == 50);
    CHECK(diagonal == correct);
  }
  long paths = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] == predictions[i]) ++paths;
  }
  CHECK(report.path_correct == paths);
}

TEST_CASE("path accuracy never exceeds any per-level accuracy") {
  const Taxonomy taxonomy = test::tiny_taxonomy({2, 2, 2});
  Rng rng(409);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<LabelPath> gold, predictions;
    const int n = 1 + static_cast<int>(rng.below(40));
    for (int i = 0; i < n; ++i) {
      LabelPath g, p;
      for (int j = 0; j < 3; ++j) {
        g.push_back({j, static_cast<int>(rng.below(2))});
        p.push_back({j, static_cast<int>(rng.below(2))});
      }
      gold.push_back(g);
      predictions.push_back(p);
    }
    const EvalReport report = evaluate(predictions, gold, taxonomy);
    for (int j = 0; j < 3; ++j) {
      CHECK(report.path_accuracy() <= report.level_accuracy(j) + 1e-15);
    }
  }
}

TEST_CASE("evaluate is permutation-invariant over document order") {
  const Taxonomy taxonomy = test::tiny_taxonomy({2, 3});
  Rng rng(419);
  std::vector<LabelPath> gold, predictions;
  for (int i = 0; i < 20; ++i) {
    gold.push_back({{0, static_cast<int>(rng.below(2))},
                    {1, static_cast<int>(rng.below(3))}});
    predictions.push_back({{0, static_cast<int>(rng.below(2))},
                           {1, static_cast<int>(rng.below(3))}});
  }
  const EvalReport base = evaluate(predictions, gold, taxonomy);
  std::vector<std::size_t> perm(gold.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  rng.shuffle(perm);
  std::vector<LabelPath> gold2, pred2;
  for (const auto i : perm) {
    gold2.push_back(gold[i]);
    pred2.push_back(predictions[i]);
  }
  const EvalReport shuffled = evaluate(pred2, gold2, taxonomy);
  CHECK(base.path_correct == shuffled.path_correct);
  CHECK(base.level_correct == shuffled.level_correct);
}

TEST_CASE("length mismatches and invalid paths are rejected") {
  const Taxonomy taxonomy = test::tiny_taxonomy({2, 2});
  const std::vector<LabelPath> one{{{0, 0}, {1, 0}}};
  CHECK_THROWS_AS(evaluate(one, {}, taxonomy), DataError);
  const std::vector<LabelPath> short_path{{{0, 0}}};
  CHECK_THROWS_AS(evaluate(short_path, one, taxonomy), DataError);
  const std::vector<LabelPath> bad_level{{{0, 0}, {0, 0}}};
  CHECK_THROWS_AS(evaluate(bad_level, one, taxonomy), DataError);
}

TEST_CASE("reports render text and machine-readable summaries") {
  const Taxonomy taxonomy = test::tiny_taxonomy({2, 2});
  const std::vector<LabelPath> gold{{{0, 0}, {1, 1}}};
  const EvalReport report = evaluate(gold, gold, taxonomy);
  const std::string text = report.to_text(taxonomy);
  CHECK(text.find("path accuracy: 1.0000") != std::string::npos);
  const auto doc = report.summary_json();
  CHECK(doc.at("path_accuracy").get<double>() == 1.0);
  CHECK(doc.at("documents").get<std::size_t>() == 1);
  const auto full = report.full_json(taxonomy);
  CHECK(full.contains("confusion"));
}
