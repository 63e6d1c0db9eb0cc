#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "helpers.hpp"
#include "skssl/eval.hpp"
#include "skssl/rng.hpp"

using namespace skssl;

namespace {

FeatureSet make_set(std::vector<std::size_t> shape, std::vector<float> values,
                    std::vector<int> labels) {
  FeatureSet fs;
  fs.rows = Tensor<float>(std::move(shape), std::move(values));
  fs.labels = std::move(labels);
  return fs;
}

// Reference ranking: 32-bit differences squared into a double accumulator
// (the same convention the library uses), lexicographic tie on index.
std::vector<std::size_t> naive_rank(const std::vector<float>& q,
                                    const FeatureSet& gallery) {
  const std::size_t G = gallery.rows.dim(0), D = gallery.rows.dim(1);
  std::vector<std::pair<double, std::size_t>> keyed(G);
  for (std::size_t g = 0; g < G; ++g) {
    double acc = 0;
    for (std::size_t d = 0; d < D; ++d) {
      const float diff = q[d] - gallery.rows.at2(g, d);
      acc += double(diff) * double(diff);
    }
    keyed[g] = {acc, g};
  }
  std::sort(keyed.begin(), keyed.end());
  std::vector<std::size_t> order(G);
  for (std::size_t g = 0; g < G; ++g) order[g] = keyed[g].second;
  return order;
}

double naive_ap(const std::vector<std::size_t>& ranking, int query_label,
                const std::vector<int>& gallery_labels) {
  std::size_t R = 0;
  for (int l : gallery_labels) R += l == query_label;
  if (R == 0) return 0.0;
  double ap = 0;
  std::size_t hits = 0;
  for (std::size_t k = 0; k < std::min<std::size_t>(10, ranking.size()); ++k) {
    if (gallery_labels[ranking[k]] == query_label) {
      ++hits;
      ap += double(hits) / double(k + 1);
    }
  }
  return ap / double(std::min<std::size_t>(10, R));
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("gallery ranking orders by distance with stable ties") {
  const FeatureSet g = make_set({2, 2}, {1, 0, 3, 0}, {0, 0});
  const std::vector<float> q = {0, 0};
  CHECK(rank_gallery(q.data(), g.rows) == std::vector<std::size_t>({0, 1}));

  // Duplicate rows tie; the lower index wins.
  const FeatureSet dup = make_set({3, 2}, {2, 0, 2, 0, 1, 1}, {0, 0, 0});
  CHECK(rank_gallery(q.data(), dup.rows) == std::vector<std::size_t>({2, 0, 1}));

  const Tensor<float> flat({4}, {1, 2, 3, 4});
  CHECK_THROWS_AS(rank_gallery(q.data(), flat), ValidationError);
  const Tensor<float> empty({0, 2});
  CHECK_THROWS_AS(rank_gallery(q.data(), empty), ValidationError);
}

TEST_CASE("average precision closed forms") {
  // Hits at ranks 1 and 3 of four items, two relevant: (1/1 + 2/3) / 2.
  const std::vector<int> labels = {1, 0, 1, 0};
  const std::vector<std::size_t> ranking = {0, 1, 2, 3};
  CHECK(average_precision_at10(ranking, 1, labels) == doctest::Approx(5.0 / 6.0));

  // No relevant gallery item scores zero.
  CHECK(average_precision_at10(ranking, 9, labels) == 0.0);

  // All 12 items relevant and perfectly ranked: every P@k is 1, denominator 10.
  std::vector<int> all_rel(12, 5);
  std::vector<std::size_t> ident(12);
  std::iota(ident.begin(), ident.end(), 0);
  CHECK(average_precision_at10(ident, 5, all_rel) == doctest::Approx(1.0));

  // Relevant mass beyond position 10 cannot contribute.
  std::vector<int> back_loaded(12, 0);
  back_loaded[10] = back_loaded[11] = 7;
  CHECK(average_precision_at10(ident, 7, back_loaded) == 0.0);

  // One relevant item at the last scored position.
  std::vector<int> tail(10, 0);
  tail[9] = 3;
  std::vector<std::size_t> ident10(10);
  std::iota(ident10.begin(), ident10.end(), 0);
  CHECK(average_precision_at10(ident10, 3, tail) == doctest::Approx(0.1));
}

TEST_CASE("top-1 accuracy counts first-rank label matches") {
  const std::vector<int> gallery_labels = {0, 1, 2};
  const std::vector<std::vector<std::size_t>> rankings = {
      {0, 1, 2}, {1, 0, 2}, {2, 1, 0}};
  CHECK(acc_top1(rankings, {0, 1, 0}, gallery_labels) == doctest::Approx(2.0 / 3.0));
  CHECK(acc_top1(rankings, {0, 1, 2}, gallery_labels) == 1.0);
  CHECK_THROWS_AS(acc_top1(rankings, {0, 1}, gallery_labels), ValidationError);
  CHECK_THROWS_AS(acc_top1({}, {}, gallery_labels), ValidationError);
}

TEST_CASE("retrieval metrics agree with a naive reference on random sets") {
  Rng rng = make_rng(17, "eval/naive");
  std::uniform_real_distribution<float> u(-2.0f, 2.0f);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t G = 1 + rng() % 12, Q = 1 + rng() % 6, D = 1 + rng() % 5;
    FeatureSet gallery, query;
    gallery.rows = Tensor<float>({G, D});
    query.rows = Tensor<float>({Q, D});
    for (auto& v : gallery.rows.data) v = u(rng);
    for (auto& v : query.rows.data) v = u(rng);
    for (std::size_t g = 0; g < G; ++g) gallery.labels.push_back(int(rng() % 3));
    for (std::size_t q = 0; q < Q; ++q) query.labels.push_back(int(rng() % 3));

    const RetrievalReport rep = retrieval_eval(query, gallery);
    double ap_sum = 0;
    std::size_t hits = 0;
    for (std::size_t q = 0; q < Q; ++q) {
      std::vector<float> qrow(query.rows.data.begin() + q * D,
                              query.rows.data.begin() + (q + 1) * D);
      const auto order = naive_rank(qrow, gallery);
      hits += gallery.labels[order[0]] == query.labels[q];
      ap_sum += naive_ap(order, query.labels[q], gallery.labels);
    }
    CHECK(rep.acc_top1 == doctest::Approx(double(hits) / double(Q)));
    CHECK(rep.map_top10 == doctest::Approx(ap_sum / double(Q)).epsilon(1e-12));
    CHECK(rep.query_count == Q);
    CHECK(rep.gallery_count == G);
    CHECK(rep.acc_top1 >= 0.0);
    CHECK(rep.acc_top1 <= 1.0);
    CHECK(rep.map_top10 >= 0.0);
    CHECK(rep.map_top10 <= 1.0);
  }
}

TEST_CASE("retrieval metrics are invariant to translation and axis permutation") {
  Rng rng = make_rng(18, "eval/iso");
  const std::size_t G = 10, Q = 5, D = 4;
  // Integer-valued coordinates keep the transformed distances exact.
  FeatureSet gallery, query;
  gallery.rows = Tensor<float>({G, D});
  query.rows = Tensor<float>({Q, D});
  for (auto& v : gallery.rows.data) v = float(int(rng() % 16));
  for (auto& v : query.rows.data) v = float(int(rng() % 16));
  for (std::size_t g = 0; g < G; ++g) gallery.labels.push_back(int(rng() % 2));
  for (std::size_t q = 0; q < Q; ++q) query.labels.push_back(int(rng() % 2));

  const RetrievalReport base = retrieval_eval(query, gallery);

  const std::size_t perm[4] = {2, 0, 3, 1};
  auto transform = [&](const FeatureSet& fs) {
    FeatureSet out = fs;
    for (std::size_t i = 0; i < fs.rows.dim(0); ++i)
      for (std::size_t d = 0; d < D; ++d)
        out.rows.at2(i, perm[d]) = fs.rows.at2(i, d) + 8.0f;
    return out;
  };
  const RetrievalReport moved = retrieval_eval(transform(query), transform(gallery));
  CHECK(moved.acc_top1 == base.acc_top1);
  CHECK(moved.map_top10 == base.map_top10);
}

TEST_CASE("a linear probe separates well-spaced blobs perfectly") {
  Rng rng = make_rng(19, "eval/blobs");
  std::normal_distribution<double> noise(0.0, 0.5);
  const double centers[3][2] = {{10, 0}, {0, 10}, {-10, -10}};
  auto sample_set = [&](std::size_t per_class) {
    FeatureSet fs;
    fs.rows = Tensor<float>({3 * per_class, 2});
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t i = 0; i < per_class; ++i) {
        const std::size_t row = c * per_class + i;
        fs.rows.at2(row, 0) = float(centers[c][0] + noise(rng));
        fs.rows.at2(row, 1) = float(centers[c][1] + noise(rng));
        fs.labels.push_back(int(c));
      }
    }
    return fs;
  };
  const FeatureSet train = sample_set(10);
  const FeatureSet test = sample_set(5);
  const ProbeReport rep = linear_probe(train, test);
  CHECK(rep.accuracy == 1.0);
  REQUIRE(rep.classes.size() == 3);
  for (const auto& st : rep.classes) {
    CHECK(st.train_count == 10);
    CHECK(st.test_count == 5);
    CHECK(st.accuracy == 1.0);
  }
  CHECK(rep.untrained_labels.empty());
  CHECK(std::isfinite(rep.final_train_loss));
}

TEST_CASE("a probe on shuffled labels scores near chance") {
  Rng rng = make_rng(20, "eval/chance");
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  const std::size_t N = 200, D = 8, C = 4;
  auto random_set = [&] {
    FeatureSet fs;
    fs.rows = Tensor<float>({N, D});
    for (auto& v : fs.rows.data) v = u(rng);
    for (std::size_t i = 0; i < N; ++i) fs.labels.push_back(int(rng() % C));
    return fs;
  };
  const ProbeReport rep = linear_probe(random_set(), random_set());
  CHECK(std::abs(rep.accuracy - 0.25) < 0.1);
}

TEST_CASE("labels absent from probe training are flagged and scored wrong") {
  // All training rows carry label 7; test mixes 7 with never-seen 3.
  FeatureSet train = make_set({4, 2}, {1, 1, 1, 2, 2, 1, 2, 2}, {7, 7, 7, 7});
  FeatureSet test = make_set({5, 2}, {1, 1, 2, 2, 1, 2, 9, 9, 8, 8}, {7, 7, 3, 3, 7});
  const ProbeReport rep = linear_probe(train, test);

  // A single-class probe always predicts that class.
  CHECK(rep.accuracy == doctest::Approx(3.0 / 5.0));
  CHECK(rep.untrained_labels == std::vector<int>({3}));
  REQUIRE(rep.classes.size() == 2);
  CHECK(rep.classes[0].label == 3);  // ascending label order
  CHECK(rep.classes[1].label == 7);
  CHECK(rep.classes[0].train_count == 0);
  CHECK(rep.classes[0].test_count == 2);
  CHECK(rep.classes[0].accuracy == 0.0);
  CHECK(rep.classes[1].train_count == 4);
  CHECK(rep.classes[1].test_count == 3);
  CHECK(rep.classes[1].accuracy == 1.0);
}

TEST_CASE("feature set validation") {
  FeatureSet ok = make_set({2, 2}, {1, 2, 3, 4}, {0, 1});
  CHECK_NOTHROW(validate_feature_set(ok));

  FeatureSet flat;
  flat.rows = Tensor<float>({4}, {1, 2, 3, 4});
  flat.labels = {0, 1, 0, 1};
  CHECK_THROWS_AS(validate_feature_set(flat), ValidationError);

  FeatureSet empty;
  empty.rows = Tensor<float>({0, 2});
  CHECK_THROWS_AS(validate_feature_set(empty), ValidationError);

  FeatureSet short_labels = make_set({2, 2}, {1, 2, 3, 4}, {0});
  CHECK_THROWS_AS(validate_feature_set(short_labels), ValidationError);

  FeatureSet poisoned = make_set({2, 2}, {1, 2, 3, 4}, {0, 1});
  poisoned.rows.data[2] = std::nanf("");
  CHECK_THROWS_AS(validate_feature_set(poisoned), DivergenceError);

  // Dim mismatches are caught at the aggregate entry points.
  FeatureSet wide = make_set({2, 3}, {1, 2, 3, 4, 5, 6}, {0, 1});
  CHECK_THROWS_AS(retrieval_eval(ok, wide), ValidationError);
  CHECK_THROWS_AS(linear_probe(ok, wide), ValidationError);
  ProbeConfig zero;
  zero.epochs = 0;
  CHECK_THROWS_AS(linear_probe(ok, ok, zero), ValidationError);
}

}  // TEST_SUITE
