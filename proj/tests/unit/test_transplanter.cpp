// Copyright 2026 The Graft Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>

#include "graft/error.hpp"
#include "graft/transplanter.hpp"
#include "oracles.hpp"

using namespace graft;

namespace {

SubwordVectors make_vectors(const Vocabulary& v, std::size_t dim, std::vector<float> values) {
  SubwordVectors sv{v, DenseMatrix(v.size(), dim, std::move(values)), std::vector<std::uint8_t>(v.size(), 0)};
  for (std::size_t r = 0; r < v.size(); ++r) {
    for (float x : sv.matrix.row(r)) sv.covered[r] |= (x != 0.0f);
  }
  return sv;
}

SubwordVectors scaled(const SubwordVectors& sv, float a) {
  SubwordVectors out = sv;
  for (auto& x : out.matrix.data()) x *= a;
  return out;
}

}  // namespace

TEST_CASE("config validation") {
  CHECK_NOTHROW(TransplantConfig{}.validate());
  CHECK_THROWS_AS((TransplantConfig{0, 0.1, 0}.validate()), ConfigError);
  CHECK_THROWS_AS((TransplantConfig{10, 0.0, 0}.validate()), ConfigError);
  CHECK_THROWS_AS((TransplantConfig{10, -1.0, 0}.validate()), ConfigError);
  CHECK_THROWS_AS((TransplantConfig{10, std::nan(""), 0}.validate()), ConfigError);
}

TEST_CASE("partition_vocab") {
  SUBCASE("overlap") {
    const auto p = partition_vocab(Vocabulary({"a", "b"}), Vocabulary({"b", "c"}));
    CHECK(p.shared == std::vector<std::pair<std::size_t, std::size_t>>{{0, 1}});
    CHECK(p.fresh == std::vector<std::size_t>{1});
  }
  SUBCASE("identical") {
    const Vocabulary v({"x", "y", "z"});
    const auto p = partition_vocab(v, v);
    CHECK(p.shared.size() == 3);
    CHECK(p.fresh.empty());
  }
  SUBCASE("disjoint") {
    const auto p = partition_vocab(Vocabulary({"a"}), Vocabulary({"b", "c"}));
    CHECK(p.shared.empty());
    CHECK(p.fresh == std::vector<std::size_t>{0, 1});
  }
  SUBCASE("marker bytes are significant") {
    const auto p = partition_vocab(Vocabulary({"\xE2\x96\x81" "a"}), Vocabulary({"a"}));
    CHECK(p.shared.empty());
  }
}

TEST_CASE("neighbor weights") {
  const TransplantConfig cfg{10, 0.1, 0};
  SUBCASE("single candidate gets weight exactly one") {
    const auto src = make_vectors(Vocabulary({"a", "b"}), 2, {0, 0, 1, 1});
    const std::vector<float> y{1.0f, 0.0f};
    const auto w = neighbor_weights(y, src, cfg);
    REQUIRE(w.size() == 1);
    CHECK(w[0].source_index == 1);
    CHECK(w[0].weight == 1.0);
  }
  SUBCASE("two candidates with similarities 1.0 and 0.5") {
    const std::vector<ScoredCandidate> top{{0, 1.0}, {1, 0.5}};
    const auto w = softmax_weights(top, 0.1);
    const double sigma = 1.0 / (1.0 + std::exp(-5.0));
    CHECK(w[0].weight == doctest::Approx(sigma).epsilon(1e-12));
    CHECK(w[1].weight == doctest::Approx(1.0 - sigma).epsilon(1e-12));
    CHECK(w[0].weight == doctest::Approx(0.99331).epsilon(1e-5));
  }
  SUBCASE("fewer candidates than k") {
    const auto src = make_vectors(Vocabulary({"a", "b", "c"}), 2, {1, 0, 0, 1, 1, 1});
    const std::vector<float> y{1.0f, 0.2f};
    const auto w = neighbor_weights(y, src, cfg);
    REQUIRE(w.size() == 3);
    double sum = 0.0;
    for (const auto& n : w) sum += n.weight;
    CHECK(std::abs(sum - 1.0) <= 1e-6);
  }
  SUBCASE("no candidates") {
    const auto src = make_vectors(Vocabulary({"a"}), 2, {0, 0});
    const std::vector<float> y{1.0f, 0.0f};
    CHECK(neighbor_weights(y, src, cfg).empty());
  }
  SUBCASE("zero query is an error") {
    const auto src = make_vectors(Vocabulary({"a"}), 2, {1, 0});
    const std::vector<float> y{0.0f, 0.0f};
    CHECK_THROWS_AS(neighbor_weights(y, src, cfg), Error);
  }
  SUBCASE("ties rank the smaller source index first") {
    const auto src = make_vectors(Vocabulary({"a", "b", "c", "d"}), 2, {0, 1, 2, 0, 1, 0, 3, 0});
    const std::vector<float> y{1.0f, 0.0f};
    const auto w = neighbor_weights(y, src, TransplantConfig{2, 0.1, 0});
    REQUIRE(w.size() == 2);
    CHECK(w[0].source_index == 1);
    CHECK(w[1].source_index == 2);
    CHECK(w[0].weight == doctest::Approx(0.5));
  }
  SUBCASE("huge logits stay finite") {
    const std::vector<ScoredCandidate> top{{0, 1.0}, {1, -1.0}};
    const auto w = softmax_weights(top, 1e-6);
    CHECK(w[0].weight == 1.0);
    CHECK(w[1].weight == 0.0);
  }
}

TEST_CASE("hand-built similarity example") {
  // Unit vectors whose cosines with (1, 0) are 0.9, 0.1 and -0.5.
  const Vocabulary src_vocab({"s0", "s1", "s2"});
  const Vocabulary tgt_vocab({"new"});
  const auto src = make_vectors(src_vocab, 2,
                                {0.9f, static_cast<float>(std::sqrt(1 - 0.81)), 0.1f,
                                 static_cast<float>(std::sqrt(1 - 0.01)), -0.5f, static_cast<float>(std::sqrt(0.75))});
  const auto tgt = make_vectors(tgt_vocab, 2, {1.0f, 0.0f});
  const DenseMatrix fs(3, 2, {1.0f, 2.0f, -3.0f, 4.0f, 100.0f, 100.0f});

  const auto result = transplant(fs, src, tgt, src_vocab, tgt_vocab, TransplantConfig{2, 0.1, 0});
  const double w1 = std::exp(9.0) / (std::exp(9.0) + std::exp(1.0));
  const double w2 = 1.0 - w1;
  CHECK(result.report.n_similarity == 1);
  CHECK(std::abs(result.coordinates(0, 0) - (w1 * 1.0 + w2 * -3.0)) <= 1e-6);
  CHECK(std::abs(result.coordinates(0, 1) - (w1 * 2.0 + w2 * 4.0)) <= 1e-6);
  const auto& nb = result.report.provenance[0].neighbors;
  REQUIRE(nb.size() == 2);
  CHECK(nb[0].source_index == 0);
  CHECK(nb[1].source_index == 1);
  CHECK(nb[0].weight == doctest::Approx(w1).epsilon(1e-6));
}

TEST_CASE("identical vocabularies copy every row bitwise") {
  oracle::Rng rng(1);
  const Vocabulary v({"a", "b", "c", "d"});
  const auto u = make_vectors(v, 3, {1, 0, 0, 0, 0, 0, 0, 1, 0, 2, 2, 2});
  auto fs = oracle::random_matrix(4, 5, rng);
  fs(1, 1) = -0.0f;
  const auto result = transplant(fs, u, u, v, v, TransplantConfig{});
  CHECK(bitwise_equal(result.coordinates, fs));
  CHECK(result.report.n_copied == 4);
  CHECK(result.report.n_similarity == 0);
  CHECK(result.report.n_random == 0);
  CHECK(result.report.coverage() == 1.0);
}

TEST_CASE("source statistics") {
  SUBCASE("two rows") {
    const auto s = compute_source_stats(DenseMatrix(2, 2, {0, 0, 2, 2}));
    CHECK(s.mean == std::vector<double>{1.0, 1.0});
    CHECK(s.var == std::vector<double>{1.0, 1.0});
  }
  SUBCASE("identical rows give zero variance and a constant fallback row") {
    const auto s = compute_source_stats(DenseMatrix(3, 2, {5, -1, 5, -1, 5, -1}));
    CHECK(s.var == std::vector<double>{0.0, 0.0});
    std::vector<float> row(2);
    gaussian_row(s, 7, 3, row);
    CHECK(row == std::vector<float>{5.0f, -1.0f});
  }
  SUBCASE("two-pass oracle") {
    oracle::Rng rng(2);
    const auto f = oracle::random_matrix(100, 4, rng, 10.0);
    const auto s = compute_source_stats(f);
    for (std::size_t c = 0; c < 4; ++c) {
      double mean = 0.0;
      for (std::size_t r = 0; r < 100; ++r) mean += f(r, c);
      mean /= 100.0;
      double var = 0.0;
      for (std::size_t r = 0; r < 100; ++r) var += (f(r, c) - mean) * (f(r, c) - mean);
      var /= 100.0;
      CHECK(std::abs(s.mean[c] - mean) <= 1e-10);
      CHECK(std::abs(s.var[c] - var) <= 1e-10);
    }
  }
  SUBCASE("one row is rejected") { CHECK_THROWS_AS(compute_source_stats(DenseMatrix(1, 2, {1, 2})), Error); }
}

TEST_CASE("property: oracle equivalence, simplex, convex hull, determinism") {
  oracle::Rng rng(3);
  std::uniform_int_distribution<std::uint64_t> seed_dist;
  std::uniform_int_distribution<std::size_t> k_dist(1, 12);
  for (int trial = 0; trial < 200; ++trial) {
    const auto inst = oracle::random_instance(rng, 50, 8, 8);
    const TransplantConfig cfg{k_dist(rng), 0.1, seed_dist(rng)};
    const auto got = transplant(inst.source_coordinates, inst.source_vectors, inst.target_vectors, inst.source_vocab,
                                inst.target_vocab, cfg, 1);
    const auto ref = oracle::naive_transplant(inst.source_coordinates, inst.source_vectors, inst.target_vectors,
                                              inst.source_vocab, inst.target_vocab, cfg.k, cfg.tau, cfg.seed);
    REQUIRE(oracle::max_abs_diff(got.coordinates, ref.coordinates) <= 1e-6);
    const auto counts = oracle::classify(inst.source_vectors, inst.target_vectors, inst.source_vocab, inst.target_vocab);
    CHECK(got.report.n_copied == counts.copied);
    CHECK(got.report.n_similarity == counts.similarity);
    CHECK(got.report.n_random == counts.random);
    CHECK(got.report.total() == inst.target_vocab.size());

    for (std::size_t t = 0; t < inst.target_vocab.size(); ++t) {
      const auto& prov = got.report.provenance[t];
      CHECK(prov.mode == ref.modes[t]);
      if (prov.mode == InitMode::copied) {
        const auto a = got.coordinates.row(t);
        const auto b = inst.source_coordinates.row(prov.source_index);
        CHECK(std::memcmp(a.data(), b.data(), a.size_bytes()) == 0);
      }
      if (prov.mode != InitMode::similarity) continue;
      REQUIRE(prov.neighbors.size() == ref.neighbors[t].size());
      double sum = 0.0;
      for (std::size_t i = 0; i < prov.neighbors.size(); ++i) {
        CHECK(prov.neighbors[i].source_index == ref.neighbors[t][i].first);
        CHECK(std::abs(prov.neighbors[i].weight - ref.neighbors[t][i].second) <= 1e-9);
        CHECK(prov.neighbors[i].weight > 0.0);
        sum += prov.neighbors[i].weight;
      }
      CHECK(std::abs(sum - 1.0) <= 1e-6);
      for (std::size_t c = 0; c < got.coordinates.cols(); ++c) {
        float lo = std::numeric_limits<float>::infinity(), hi = -lo;
        for (const auto& n : prov.neighbors) {
          lo = std::min(lo, inst.source_coordinates(n.source_index, c));
          hi = std::max(hi, inst.source_coordinates(n.source_index, c));
        }
        CHECK(got.coordinates(t, c) >= lo - 1e-5);
        CHECK(got.coordinates(t, c) <= hi + 1e-5);
      }
    }

    const auto parallel = transplant(inst.source_coordinates, inst.source_vectors, inst.target_vectors,
                                     inst.source_vocab, inst.target_vocab, cfg, 6);
    CHECK(bitwise_equal(parallel.coordinates, got.coordinates));
  }
}

TEST_CASE("property: scale invariance of word vectors") {
  oracle::Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const auto inst = oracle::random_instance(rng, 40, 6, 6);
    const TransplantConfig cfg{5, 0.1, 9};
    const auto base = transplant(inst.source_coordinates, inst.source_vectors, inst.target_vectors, inst.source_vocab,
                                 inst.target_vocab, cfg);
    const auto base_json = report_to_json(base.report, cfg, inst.source_vocab, inst.target_vocab, true);
    for (float a : {1e-3f, 7.0f, 1e3f}) {
      const auto s = transplant(inst.source_coordinates, scaled(inst.source_vectors, a),
                                scaled(inst.target_vectors, a), inst.source_vocab, inst.target_vocab, cfg);
      CHECK(oracle::max_abs_diff(s.coordinates, base.coordinates) <= 1e-6);
      const auto json = report_to_json(s.report, cfg, inst.source_vocab, inst.target_vocab, true);
      CHECK(json["counts"] == base_json["counts"]);
      for (std::size_t t = 0; t < base.report.provenance.size(); ++t) {
        const auto& p = base.report.provenance[t];
        const auto& q = s.report.provenance[t];
        CHECK(p.mode == q.mode);
        REQUIRE(p.neighbors.size() == q.neighbors.size());
        for (std::size_t i = 0; i < p.neighbors.size(); ++i) {
          CHECK(p.neighbors[i].source_index == q.neighbors[i].source_index);
          CHECK(std::abs(p.neighbors[i].weight - q.neighbors[i].weight) <= 1e-6);
        }
      }
    }
  }
}

TEST_CASE("temperature limit selects the argmax") {
  oracle::Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto inst = oracle::random_instance(rng, 30, 5, 4);
    const auto r = transplant(inst.source_coordinates, inst.source_vectors, inst.target_vectors, inst.source_vocab,
                              inst.target_vocab, TransplantConfig{10, 1e-6, 0});
    for (const auto& p : r.report.provenance) {
      if (p.mode != InitMode::similarity || p.neighbors.size() < 2) continue;
      if (p.neighbors[0].similarity == p.neighbors[1].similarity) continue;
      CHECK(p.neighbors[0].weight >= 1.0 - 1e-3);
    }
  }
}

TEST_CASE("Gaussian fallback statistics") {
  SourceStats stats{{1.5, -20.0, 0.0}, {4.0, 0.25, 9.0}};
  const std::size_t n = 20000;
  std::vector<double> sum(3, 0.0), sq(3, 0.0);
  std::vector<float> row(3);
  for (std::size_t r = 0; r < n; ++r) {
    gaussian_row(stats, 123, r, row);
    for (std::size_t c = 0; c < 3; ++c) {
      sum[c] += row[c];
      sq[c] += static_cast<double>(row[c]) * row[c];
    }
  }
  for (std::size_t c = 0; c < 3; ++c) {
    const double mean = sum[c] / n;
    const double var = sq[c] / n - mean * mean;
    CHECK(std::abs(mean - stats.mean[c]) <= 0.05 * std::max(1.0, std::abs(stats.mean[c])));
    CHECK(std::abs(var - stats.var[c]) <= 0.05 * stats.var[c]);
  }
  std::vector<float> a(3), b(3);
  gaussian_row(stats, 1, 0, a);
  gaussian_row(stats, 2, 0, b);
  CHECK(a != b);
}

TEST_CASE("input validation") {
  const Vocabulary v({"a", "b"});
  const auto u = make_vectors(v, 2, {1, 0, 0, 1});
  CHECK_THROWS_AS(transplant(DenseMatrix(3, 2), u, u, v, v, TransplantConfig{}), DimensionError);
  const auto u3 = make_vectors(v, 3, {1, 0, 0, 0, 1, 0});
  CHECK_THROWS_AS(transplant(DenseMatrix(2, 2), u, u3, v, v, TransplantConfig{}), DimensionError);
  const Vocabulary empty(std::vector<std::string>{});
  const SubwordVectors ue{empty, DenseMatrix(0, 2), {}};
  CHECK_THROWS_AS(transplant(DenseMatrix(0, 2), ue, u, empty, v, TransplantConfig{}), Error);
}

TEST_CASE("report JSON") {
  const Vocabulary src({"a", "b", "c"});
  const Vocabulary tgt({"a", "x", "y"});
  const auto us = make_vectors(src, 2, {1, 0, 0, 1, 1, 1});
  const auto ut = make_vectors(tgt, 2, {1, 0, 1, 0.1f, 0, 0});
  const DenseMatrix fs(3, 2, {1, 2, 3, 4, 5, 6});
  const TransplantConfig cfg{2, 0.1, 5};
  const auto r = transplant(fs, us, ut, src, tgt, cfg);
  const auto j = report_to_json(r.report, cfg, src, tgt, true);
  CHECK(j["counts"]["copied"] == 1);
  CHECK(j["counts"]["similarity"] == 1);
  CHECK(j["counts"]["random"] == 1);
  CHECK(j["counts"]["total"] == 3);
  CHECK(j["coverage"].get<double>() == doctest::Approx(2.0 / 3.0));
  CHECK(j["config"]["k"] == 2);
  CHECK(j["config"]["seed"] == 5);
  CHECK(j["provenance"][0]["token"] == "a");
  CHECK(j["provenance"][0]["mode"] == "copied");
  CHECK(j["provenance"][0]["source"] == "a");
  CHECK(j["provenance"][1]["mode"] == "similarity");
  CHECK(j["provenance"][1]["neighbors"].size() == 2);
  CHECK(j["provenance"][1]["neighbors"][0]["token"] == "a");
  CHECK(j["provenance"][2]["mode"] == "random");
  CHECK_FALSE(report_to_json(r.report, cfg, src, tgt, false).contains("provenance"));
}
