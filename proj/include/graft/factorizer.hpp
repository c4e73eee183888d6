// Copyright 2026 The Graft Authors
// SPDX-License-Identifier: Apache-2.0
//
// Low-rank factorization of an embedding matrix E (|V| x D) into coordinates
// F (|V| x D') and orthonormal primitive embeddings P (D' x D) with E ~ F P.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "graft/tensor_store.hpp"

namespace graft {

inline constexpr const char* kSignConvention = "max-abs-positive";

struct FactorizedEmbedding {
  DenseMatrix primitives;   // P, d_prime x d_model, orthonormal rows
  DenseMatrix coordinates;  // F, vocab x d_prime
  /// True when no factorization was applied: F = E and P = I.
  bool identity = false;

  std::size_t d_prime() const noexcept { return primitives.rows(); }
  std::size_t d_model() const noexcept { return primitives.cols(); }
  std::size_t vocab_size() const noexcept { return coordinates.rows(); }
};

/// Truncated SVD: F = U_k S_k, P = V_k^T. Each right singular vector is
/// flipped so that its largest-magnitude entry (earliest on ties) is positive.
/// Throws ConfigError unless 1 <= d_prime <= min(rows, cols).
FactorizedEmbedding factorize(const DenseMatrix& embeddings, std::size_t d_prime, unsigned threads = 1);

/// The no-factorization baseline: F = E, P = I.
FactorizedEmbedding identity_factorization(const DenseMatrix& embeddings);

/// coordinates[rows] * primitives with double accumulation (all rows when
/// `rows` is nullopt). With `identity` set the selected rows are copied
/// through bit-for-bit.
DenseMatrix up_project(const DenseMatrix& coordinates, const DenseMatrix& primitives, bool identity,
                       std::optional<std::span<const std::size_t>> rows = std::nullopt, unsigned threads = 1);

/// F[rows] * P for a factorized embedding.
DenseMatrix reconstruct(const FactorizedEmbedding& fe, std::optional<std::span<const std::size_t>> rows = std::nullopt,
                        unsigned threads = 1);

/// Singular values of `m`, descending, computed in double precision.
std::vector<double> singular_values(const DenseMatrix& m);

struct SpectrumReport {
  /// All singular values of the column-centred matrix, descending.
  std::vector<double> singular_values;
  /// explained_variance[i] is the fraction of variance kept by the first i+1 components.
  std::vector<double> explained_variance;
  /// Frobenius norm of the centred matrix.
  double frobenius_norm = 0.0;
};

/// PCA spectrum: centres columns, then reports cumulative sigma^2 / sum(sigma^2)
/// for 1..max_components. Requires rows >= 2 and max_components <= min(rows - 1, cols).
SpectrumReport explained_variance(const DenseMatrix& embeddings, std::size_t max_components);

struct ParamCount {
  std::uint64_t embedding_params = 0;
  std::string note;
};

/// |V| * D without factorization, |V| * D' + D' * D with it.
ParamCount count_params(std::uint64_t vocab_size, std::uint64_t d_model, std::optional<std::uint64_t> d_prime);

/// Writes p.ofat, f_s.ofat and factorization.json into `dir`.
void save_factorization(const FactorizedEmbedding& fe, const std::filesystem::path& dir);
FactorizedEmbedding load_factorization(const std::filesystem::path& dir);

}  // namespace graft
