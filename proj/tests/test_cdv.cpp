#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "support/fixtures.hpp"
#include "taxoseq/cdv.hpp"
#include "taxoseq/errors.hpp"

using namespace taxoseq;
using test::TempDir;

namespace {

DefinitionStore store_with(
    const std::vector<std::tuple<int, std::string, std::string>>& entries) {
  DefinitionStore store;
  for (const auto& [level, name, text] : entries) {
    store.insert(level, name, text);
  }
  return store;
}

}  // namespace

TEST_CASE("CDV is the mean of the definition token vectors") {
  TempDir dir("cdv");
  const Taxonomy taxonomy = test::tiny_taxonomy({2, 2});
  const auto table = test::make_table(dir, {{"up", {2, 0}}, {"right", {0, 2}}});
  const auto defs = store_with({{0, "l1_c0", "up right"},
                                {0, "l1_c1", "up up"},
                                {1, "l2_c0", "right"}});
  const CdvStore store = CdvStore::build(taxonomy, defs, table);

  const Eigen::VectorXd mixed = store.vector_for(ClassId{0, 0});
  CHECK(mixed[0] == doctest::Approx(1.0));
  CHECK(mixed[1] == doctest::Approx(1.0));
  CHECK(store.has_definition(ClassId{0, 0}));

  // Class without a definition: zero vector, flagged.
  CHECK_FALSE(store.has_definition(ClassId{1, 1}));
  CHECK(store.vector_for(ClassId{1, 1}).isZero(0.0));
  REQUIRE(store.classes_without_definition().size() == 1);
  CHECK(store.classes_without_definition()[0] == ClassId{1, 1});

  // Identical definition text gives identical CDVs.
  const auto defs2 = store_with({{0, "l1_c0", "same words here"},
                                 {1, "l2_c0", "same words here"}});
  const CdvStore store2 = CdvStore::build(taxonomy, defs2, table);
  CHECK(store2.vector_for(ClassId{0, 0}) == store2.vector_for(ClassId{1, 0}));
}

TEST_CASE("CDV construction is permutation-invariant in token order") {
  TempDir dir("cdv");
  const Taxonomy taxonomy = test::tiny_taxonomy({2, 2});
  const auto table = test::make_table(
      dir, {{"a", {1, 2}}, {"b", {-3, 5}}, {"c", {0.5, 0.25}}});
  const auto forward = store_with({{0, "l1_c0", "a b c"}});
  const auto backward = store_with({{0, "l1_c0", "c b a"}});
  const auto s1 = CdvStore::build(taxonomy, forward, table);
  const auto s2 = CdvStore::build(taxonomy, backward, table);
  CHECK((s1.vector_for(ClassId{0, 0}) - s2.vector_for(ClassId{0, 0}))
            .lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("cosine similarity identities") {
  Eigen::VectorXd a(2), b(2), zero(2);
  a << 3, 4;
  b << 0, 1;
  zero.setZero();
  CHECK(cosine_similarity(a, a) == doctest::Approx(1.0).epsilon(1e-9));
  Eigen::VectorXd e1(2), e2(2);
  e1 << 1, 0;
  e2 << 0, 1;
  CHECK(cosine_similarity(e1, e2) == 0.0);
  CHECK(cosine_similarity(a, zero) == 0.0);
  CHECK(cosine_similarity(zero, zero) == 0.0);
  CHECK_THROWS_AS(cosine_similarity(a, Eigen::VectorXd::Zero(3)), DataError);
}

TEST_CASE("cosine similarity is symmetric and scale-invariant") {
  Rng rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const int dim = 2 + static_cast<int>(rng.below(5));
    Eigen::VectorXd a(dim), b(dim);
    for (int k = 0; k < dim; ++k) {
      a[k] = rng.uniform(-1, 1);
      b[k] = rng.uniform(-1, 1);
    }
    const double cos_ab = cosine_similarity(a, b);
    CHECK(cosine_similarity(b, a) == doctest::Approx(cos_ab).epsilon(1e-12));
    const double alpha = 0.01 + rng.uniform() * 10.0;
    const double beta = 0.01 + rng.uniform() * 10.0;
    CHECK(cosine_similarity(alpha * a, beta * b) ==
          doctest::Approx(cos_ab).epsilon(1e-9));
    CHECK(cos_ab >= -1.0 - 1e-12);
    CHECK(cos_ab <= 1.0 + 1e-12);
  }
}

TEST_CASE("cd_score scales the cosine by lambda") {
  TempDir dir("cdv");
  const Taxonomy taxonomy = test::tiny_taxonomy({3, 2});
  const auto table = test::make_table(
      dir, {{"x", {1, 0}}, {"y", {0, 1}}, {"xy", {1, 1}}});
  const auto defs = store_with(
      {{0, "l1_c0", "x"}, {0, "l1_c1", "y"}, {0, "l1_c2", "xy"}});
  const CdvStore store = CdvStore::build(taxonomy, defs, table);

  SentenceVector doc;
  doc.values = Eigen::VectorXd(2);
  doc.values << 1, 0;
  doc.source_token_count = 1;

  // lambda = 0 switches the term off for every candidate.
  for (int c = 0; c < 3; ++c) {
    CHECK(cd_score(store, ClassId{0, c}, doc, 0.0) == 0.0);
  }
  // candidate CDV == doc vector, lambda = 1 -> exactly 1.
  CHECK(cd_score(store, ClassId{0, 0}, doc, 1.0) ==
        doctest::Approx(1.0).epsilon(1e-9));
  // negated sign flips it.
  CHECK(cd_score(store, ClassId{0, 0}, doc, 1.0, CdSign::kNegated) ==
        doctest::Approx(-1.0).epsilon(1e-9));

  // Scalar-loop recomputation of every cosine (independent oracle).
  for (int c = 0; c < 3; ++c) {
    const Eigen::VectorXd cdv = store.vector_for(ClassId{0, c});
    double dot = 0, na = 0, nb = 0;
    for (int k = 0; k < 2; ++k) {
      dot += cdv[k] * doc.values[k];
      na += cdv[k] * cdv[k];
      nb += doc.values[k] * doc.values[k];
    }
    const double expected = dot / (std::sqrt(na) * std::sqrt(nb));
    CHECK(cd_score(store, ClassId{0, c}, doc, 0.7) ==
          doctest::Approx(0.7 * expected).epsilon(1e-12));
  }
  CHECK_THROWS_AS(cd_score(store, ClassId{0, 0},
                           SentenceVector{Eigen::VectorXd::Zero(5), 1}, 1.0),
                  DataError);
}

TEST_CASE("cd_score stays within [-lambda, lambda]") {
  TempDir dir("cdv");
  Rng rng(29);
  const Taxonomy taxonomy = test::tiny_taxonomy({4, 3});
  const auto table = test::random_table(dir, rng, 10, 4, "v.txt");
  DefinitionStore defs;
  for (int j = 0; j < 2; ++j) {
    for (int c = 0; c < taxonomy.level_size(j); ++c) {
      defs.insert(j, taxonomy.classes(j)[c],
                  "tok" + std::to_string(rng.below(10)) + " tok" +
                      std::to_string(rng.below(10)));
    }
  }
  const CdvStore store = CdvStore::build(taxonomy, defs, table);
  for (int trial = 0; trial < 100; ++trial) {
    SentenceVector doc = mean_pool(table, test::random_tokens(rng, table));
    const double lambda = rng.uniform() * 3;
    const int level = static_cast<int>(rng.below(2));
    const int index =
        static_cast<int>(rng.below(taxonomy.level_size(level)));
    const double score = cd_score(store, ClassId{level, index}, doc, lambda);
    CHECK(score >= -lambda - 1e-12);
    CHECK(score <= lambda + 1e-12);
  }
}

TEST_CASE("store save/load round-trips bit-exact") {
  TempDir dir("cdv");
  Rng rng(31);
  const Taxonomy taxonomy = test::tiny_taxonomy({3, 4});
  const auto table = test::random_table(dir, rng, 15, 6, "v.txt");
  DefinitionStore defs;
  for (int c = 0; c < 3; ++c) {
    defs.insert(0, taxonomy.classes(0)[c],
                "tok" + std::to_string(rng.below(15)));
  }
  defs.insert(1, "l2_c0", "tok1 tok2 tok3");
  // l2_c1..3 left without definitions on purpose.
  const CdvStore store = CdvStore::build(taxonomy, defs, table);
  store.save(dir.file("store.tsv"), taxonomy);
  const CdvStore reloaded = CdvStore::load(dir.file("store.tsv"), taxonomy);
  for (int g = 0; g < taxonomy.union_size(); ++g) {
    CHECK(reloaded.vector_for(g) == store.vector_for(g));  // bit-exact
    CHECK(reloaded.has_definition(g) == store.has_definition(g));
  }

  // A different taxonomy must be rejected.
  const Taxonomy other = test::tiny_taxonomy({3, 5});
  CHECK_THROWS_AS(CdvStore::load(dir.file("store.tsv"), other), DataError);
  CHECK_THROWS_AS(store.save(dir.file("x.tsv"), other), DataError);
}
