// Copyright 2026 The Graft Authors
// SPDX-License-Identifier: Apache-2.0

#include "graft/transplanter.hpp"

#include <Eigen/Dense>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "graft/counter_rng.hpp"
#include "graft/error.hpp"
#include "graft/parallel.hpp"

namespace graft {

namespace {

constexpr std::size_t kQueryBlock = 32;
constexpr std::size_t kCandidateBlock = 4096;
constexpr std::size_t kRowBlock = 1024;

using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

double squared_norm(std::span<const float> v) {
  double s = 0.0;
  for (float x : v) s += static_cast<double>(x) * x;
  return s;
}

// Strict "ranks before": higher similarity, then smaller source index.
bool ranks_before(const ScoredCandidate& a, const ScoredCandidate& b) {
  return a.similarity > b.similarity || (a.similarity == b.similarity && a.source_index < b.source_index);
}

void offer(std::vector<ScoredCandidate>& top, std::size_t k, ScoredCandidate c) {
  if (top.size() == k) {
    if (!ranks_before(c, top.back())) return;
    top.pop_back();
  }
  top.insert(std::upper_bound(top.begin(), top.end(), c, ranks_before), c);
}

}  // namespace

void TransplantConfig::validate() const {
  if (k < 1) throw ConfigError("k", "must be at least 1");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("tau", fmt::format("must be positive, got {}", tau));
}

std::string_view to_string(InitMode mode) noexcept {
  switch (mode) {
    case InitMode::copied:
      return "copied";
    case InitMode::similarity:
      return "similarity";
    case InitMode::random:
      return "random";
  }
  return "?";
}

double TransplantReport::coverage() const noexcept {
  const auto n = total();
  return n == 0 ? 0.0 : static_cast<double>(n_copied + n_similarity) / static_cast<double>(n);
}

VocabPartition partition_vocab(const Vocabulary& source, const Vocabulary& target) {
  VocabPartition p;
  for (std::size_t t = 0; t < target.size(); ++t) {
    if (auto s = source.find(target.token(t))) {
      p.shared.emplace_back(t, *s);
    } else {
      p.fresh.push_back(t);
    }
  }
  return p;
}

// ---------------------------------------------------------------------------
// Neighbor search

NeighborSearch::NeighborSearch(const SubwordVectors& source) : dim_(source.matrix.cols()) {
  for (std::size_t x = 0; x < source.matrix.rows(); ++x) {
    if (!source.covered[x]) continue;
    const auto row = source.matrix.row(x);
    const double norm = std::sqrt(squared_norm(row));
    if (norm == 0.0) continue;
    ids_.push_back(x);
    for (float v : row) unit_.push_back(static_cast<double>(v) / norm);
  }
}

std::vector<std::vector<ScoredCandidate>> NeighborSearch::top_k(const DenseMatrix& queries,
                                                                std::span<const std::size_t> rows, std::size_t k,
                                                                unsigned threads) const {
  if (queries.cols() != dim_) {
    throw DimensionError(fmt::format("query dimension {} does not match source dimension {}", queries.cols(), dim_));
  }
  std::vector<std::vector<ScoredCandidate>> result(rows.size());
  if (ids_.empty() || k == 0) return result;

  const auto d = static_cast<Eigen::Index>(dim_);
  const Eigen::Map<const RowMatrixXd> candidates(unit_.data(), static_cast<Eigen::Index>(ids_.size()), d);

  parallel_for_blocks(block_count(rows.size(), kQueryBlock), threads, [&](std::size_t b) {
    const std::size_t begin = b * kQueryBlock;
    const std::size_t end = std::min(rows.size(), begin + kQueryBlock);
    const auto nq = static_cast<Eigen::Index>(end - begin);

    RowMatrixXd q(nq, d);
    for (std::size_t i = begin; i < end; ++i) {
      const auto row = queries.row(rows[i]);
      const double norm = std::sqrt(squared_norm(row));
      if (norm == 0.0) throw Error(fmt::format("query row {} is the zero vector", rows[i]));
      for (std::size_t j = 0; j < dim_; ++j) q(static_cast<Eigen::Index>(i - begin), static_cast<Eigen::Index>(j)) = row[j] / norm;
    }

    RowMatrixXd scores;
    for (std::size_t c0 = 0; c0 < ids_.size(); c0 += kCandidateBlock) {
      const auto nc = static_cast<Eigen::Index>(std::min(kCandidateBlock, ids_.size() - c0));
      scores.noalias() = q * candidates.middleRows(static_cast<Eigen::Index>(c0), nc).transpose();
      for (Eigen::Index i = 0; i < nq; ++i) {
        auto& top = result[begin + static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < nc; ++j) {
          offer(top, k, {ids_[c0 + static_cast<std::size_t>(j)], scores(i, j)});
        }
      }
    }
  });
  return result;
}

std::vector<WeightedNeighbor> softmax_weights(std::span<const ScoredCandidate> top, double tau) {
  std::vector<WeightedNeighbor> out;
  if (top.empty()) return out;
  double peak = -std::numeric_limits<double>::infinity();
  for (const auto& c : top) peak = std::max(peak, c.similarity);
  double total = 0.0;
  out.reserve(top.size());
  for (const auto& c : top) {
    const double e = std::exp((c.similarity - peak) / tau);
    out.push_back({c.source_index, c.similarity, e});
    total += e;
  }
  for (auto& n : out) n.weight /= total;
  return out;
}

std::vector<WeightedNeighbor> neighbor_weights(std::span<const float> query, const SubwordVectors& source,
                                               const TransplantConfig& cfg) {
  cfg.validate();
  if (squared_norm(query) == 0.0) throw Error("neighbor_weights: query vector is zero");
  const NeighborSearch search(source);
  const DenseMatrix q(1, query.size(), std::vector<float>(query.begin(), query.end()));
  const std::size_t row = 0;
  const auto top = search.top_k(q, std::span(&row, 1), cfg.k);
  return softmax_weights(top[0], cfg.tau);
}

// ---------------------------------------------------------------------------
// Gaussian fallback

SourceStats compute_source_stats(const DenseMatrix& coordinates) {
  if (coordinates.rows() < 2) {
    throw Error(fmt::format("source statistics need at least 2 rows, got {}", coordinates.rows()));
  }
  const std::size_t d = coordinates.cols();
  const auto n = static_cast<double>(coordinates.rows());
  SourceStats stats{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  for (std::size_t r = 0; r < coordinates.rows(); ++r) {
    const auto row = coordinates.row(r);
    for (std::size_t j = 0; j < d; ++j) stats.mean[j] += row[j];
  }
  for (auto& m : stats.mean) m /= n;
  for (std::size_t r = 0; r < coordinates.rows(); ++r) {
    const auto row = coordinates.row(r);
    for (std::size_t j = 0; j < d; ++j) {
      const double dev = row[j] - stats.mean[j];
      stats.var[j] += dev * dev;
    }
  }
  for (auto& v : stats.var) v /= n;
  return stats;
}

void gaussian_row(const SourceStats& stats, std::uint64_t seed, std::uint64_t row, std::span<float> out) {
  if (out.size() != stats.mean.size()) {
    throw DimensionError(fmt::format("fallback row has {} dims, statistics have {}", out.size(), stats.mean.size()));
  }
  for (std::size_t j = 0; j < out.size(); ++j) {
    out[j] = static_cast<float>(stats.mean[j] + std::sqrt(stats.var[j]) * standard_normal(seed, row, j));
  }
}

// ---------------------------------------------------------------------------
// Transplant

TransplantResult transplant(const DenseMatrix& source_coordinates, const SubwordVectors& source_vectors,
                            const SubwordVectors& target_vectors, const Vocabulary& source_vocab,
                            const Vocabulary& target_vocab, const TransplantConfig& cfg, unsigned threads) {
  cfg.validate();
  if (source_vocab.empty()) throw Error("transplant: empty source vocabulary");
  if (source_coordinates.rows() != source_vocab.size()) {
    throw DimensionError(fmt::format("source coordinates have {} rows, source vocabulary has {} tokens",
                                     source_coordinates.rows(), source_vocab.size()));
  }
  if (source_vectors.matrix.rows() != source_vocab.size() || source_vectors.covered.size() != source_vocab.size()) {
    throw DimensionError(fmt::format("source subword vectors have {} rows, source vocabulary has {} tokens",
                                     source_vectors.matrix.rows(), source_vocab.size()));
  }
  if (target_vectors.matrix.rows() != target_vocab.size() || target_vectors.covered.size() != target_vocab.size()) {
    throw DimensionError(fmt::format("target subword vectors have {} rows, target vocabulary has {} tokens",
                                     target_vectors.matrix.rows(), target_vocab.size()));
  }
  if (source_vectors.matrix.cols() != target_vectors.matrix.cols()) {
    throw DimensionError(fmt::format("source subword vectors are {}-dimensional, target ones {}-dimensional",
                                     source_vectors.matrix.cols(), target_vectors.matrix.cols()));
  }

  const std::size_t d = source_coordinates.cols();
  TransplantResult result{DenseMatrix(target_vocab.size(), d), {}};
  auto& report = result.report;
  report.provenance.resize(target_vocab.size());

  const auto partition = partition_vocab(source_vocab, target_vocab);
  for (auto [t, s] : partition.shared) {
    const auto src = source_coordinates.row(s);
    std::copy(src.begin(), src.end(), result.coordinates.row(t).begin());
    report.provenance[t] = {InitMode::copied, s, {}};
  }

  const NeighborSearch search(source_vectors);
  std::vector<std::size_t> similar;
  std::vector<std::size_t> fallback;
  for (auto t : partition.fresh) {
    const bool usable = search.candidate_count() > 0 && target_vectors.covered[t] &&
                        squared_norm(target_vectors.matrix.row(t)) > 0.0;
    (usable ? similar : fallback).push_back(t);
  }

  const auto top = search.top_k(target_vectors.matrix, similar, cfg.k, threads);
  parallel_for_blocks(block_count(similar.size(), kRowBlock), threads, [&](std::size_t b) {
    std::vector<double> acc(d);
    const std::size_t end = std::min(similar.size(), (b + 1) * kRowBlock);
    for (std::size_t i = b * kRowBlock; i < end; ++i) {
      auto neighbors = softmax_weights(top[i], cfg.tau);
      std::fill(acc.begin(), acc.end(), 0.0);
      for (const auto& n : neighbors) {
        const auto src = source_coordinates.row(n.source_index);
        for (std::size_t j = 0; j < d; ++j) acc[j] += n.weight * static_cast<double>(src[j]);
      }
      auto dst = result.coordinates.row(similar[i]);
      for (std::size_t j = 0; j < d; ++j) dst[j] = static_cast<float>(acc[j]);
      report.provenance[similar[i]] = {InitMode::similarity, 0, std::move(neighbors)};
    }
  });

  if (!fallback.empty()) {
    const auto stats = compute_source_stats(source_coordinates);
    parallel_for_blocks(block_count(fallback.size(), kRowBlock), threads, [&](std::size_t b) {
      const std::size_t end = std::min(fallback.size(), (b + 1) * kRowBlock);
      for (std::size_t i = b * kRowBlock; i < end; ++i) {
        gaussian_row(stats, cfg.seed, fallback[i], result.coordinates.row(fallback[i]));
        report.provenance[fallback[i]] = {InitMode::random, 0, {}};
      }
    });
  }

  report.n_copied = partition.shared.size();
  report.n_similarity = similar.size();
  report.n_random = fallback.size();
  return result;
}

nlohmann::json report_to_json(const TransplantReport& report, const TransplantConfig& cfg,
                              const Vocabulary& source_vocab, const Vocabulary& target_vocab, bool with_provenance) {
  nlohmann::json j = {
      {"config", {{"k", cfg.k}, {"tau", cfg.tau}, {"seed", cfg.seed}}},
      {"counts",
       {{"copied", report.n_copied},
        {"similarity", report.n_similarity},
        {"random", report.n_random},
        {"total", report.total()}}},
      {"coverage", report.coverage()},
  };
  if (!with_provenance) return j;

  auto records = nlohmann::json::array();
  for (std::size_t t = 0; t < report.provenance.size(); ++t) {
    const auto& p = report.provenance[t];
    nlohmann::json rec = {{"token", target_vocab.token(t)}, {"mode", to_string(p.mode)}};
    if (p.mode == InitMode::copied) rec["source"] = source_vocab.token(p.source_index);
    if (p.mode == InitMode::similarity) {
      auto ns = nlohmann::json::array();
      for (const auto& n : p.neighbors) {
        ns.push_back({{"token", source_vocab.token(n.source_index)}, {"similarity", n.similarity}, {"weight", n.weight}});
      }
      rec["neighbors"] = std::move(ns);
    }
    records.push_back(std::move(rec));
  }
  j["provenance"] = std::move(records);
  return j;
}

}  // namespace graft
