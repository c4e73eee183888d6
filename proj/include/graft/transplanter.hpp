// Copyright 2026 The Graft Authors
// SPDX-License-Identifier: Apache-2.0
//
// Initialization of target-vocabulary coordinates from source coordinates.
//
// Every target subword is initialized by the first rule that applies:
//   1. copied      the same string exists in the source vocabulary;
//   2. similarity  its subword vector is non-zero and at least one source
//                  subword has a non-zero vector: softmax(cos / tau) weighted
//                  mean of the source coordinates of its k most similar
//                  source subwords;
//   3. random      per-dimension Normal(mean, var) of the source coordinates,
//                  drawn from a counter-based generator keyed by
//                  (seed, target index, dimension).

#pragma once

#include <json.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "graft/subword_space.hpp"
#include "graft/tensor_store.hpp"

namespace graft {

struct TransplantConfig {
  std::size_t k = 10;
  double tau = 0.1;
  std::uint64_t seed = 0;

  /// Throws ConfigError when k == 0 or tau is not a positive finite number.
  void validate() const;
};

enum class InitMode : std::uint8_t { copied, similarity, random };

std::string_view to_string(InitMode mode) noexcept;

struct ScoredCandidate {
  std::size_t source_index = 0;
  double similarity = 0.0;
};

struct WeightedNeighbor {
  std::size_t source_index = 0;
  double similarity = 0.0;
  double weight = 0.0;
};

struct TokenProvenance {
  InitMode mode = InitMode::random;
  /// Matching source row for copied tokens.
  std::size_t source_index = 0;
  /// Non-empty only for similarity tokens, best neighbor first.
  std::vector<WeightedNeighbor> neighbors;
};

struct TransplantReport {
  std::size_t n_copied = 0;
  std::size_t n_similarity = 0;
  std::size_t n_random = 0;
  /// One entry per target token, in target vocabulary order.
  std::vector<TokenProvenance> provenance;

  std::size_t total() const noexcept { return n_copied + n_similarity + n_random; }
  /// (copied + similarity) / total; 0 for an empty target vocabulary.
  double coverage() const noexcept;
};

struct VocabPartition {
  /// (target index, source index) for byte-identical tokens, by target index.
  std::vector<std::pair<std::size_t, std::size_t>> shared;
  /// Target indices absent from the source vocabulary, ascending.
  std::vector<std::size_t> fresh;
};

VocabPartition partition_vocab(const Vocabulary& source, const Vocabulary& target);

/// Exact cosine k-nearest-neighbor search over the non-zero covered rows of a
/// set of source subword vectors. Ties rank the smaller source index first.
class NeighborSearch {
 public:
  explicit NeighborSearch(const SubwordVectors& source);

  std::size_t candidate_count() const noexcept { return ids_.size(); }
  std::size_t dim() const noexcept { return dim_; }

  /// Top-k candidates for each listed row of `queries`, best first. Rows
  /// must have non-zero norm. Queries are processed in fixed-size blocks,
  /// so results do not depend on `threads`.
  std::vector<std::vector<ScoredCandidate>> top_k(const DenseMatrix& queries, std::span<const std::size_t> rows,
                                                  std::size_t k, unsigned threads = 1) const;

 private:
  std::vector<std::size_t> ids_;
  std::vector<double> unit_;  // candidate_count x dim, unit-norm rows
  std::size_t dim_ = 0;
};

/// Temperature softmax over similarities, computed with max subtraction.
std::vector<WeightedNeighbor> softmax_weights(std::span<const ScoredCandidate> top, double tau);

/// Neighbors and convex weights for a single query vector. Returns an empty
/// list when the source has no usable candidate (caller falls back to random).
/// Throws Error if the query is the zero vector.
std::vector<WeightedNeighbor> neighbor_weights(std::span<const float> query, const SubwordVectors& source,
                                               const TransplantConfig& cfg);

/// Per-dimension mean and population variance of the rows of F.
struct SourceStats {
  std::vector<double> mean;
  std::vector<double> var;
};

SourceStats compute_source_stats(const DenseMatrix& coordinates);

/// Fills `out` with the random-fallback row for target index `row`.
void gaussian_row(const SourceStats& stats, std::uint64_t seed, std::uint64_t row, std::span<float> out);

struct TransplantResult {
  DenseMatrix coordinates;
  TransplantReport report;
};

TransplantResult transplant(const DenseMatrix& source_coordinates, const SubwordVectors& source_vectors,
                            const SubwordVectors& target_vectors, const Vocabulary& source_vocab,
                            const Vocabulary& target_vocab, const TransplantConfig& cfg, unsigned threads = 1);

/// JSON form of a report: {config, counts, coverage[, provenance]}.
nlohmann::json report_to_json(const TransplantReport& report, const TransplantConfig& cfg,
                              const Vocabulary& source_vocab, const Vocabulary& target_vocab, bool with_provenance);

}  // namespace graft
