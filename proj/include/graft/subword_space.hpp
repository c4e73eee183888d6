// Copyright 2026 The Graft Authors
// SPDX-License-Identifier: Apache-2.0
//
// Word/subword bipartite graph and the subword vectors derived from it. A
// subword's vector is the mean of the external vectors of every word whose
// segmentation contains it; subwords no word reaches get a zero row.

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "graft/segmenter.hpp"
#include "graft/tensor_store.hpp"

namespace graft {

/// neighbors[c] lists the word indices whose segmentation contains subword c,
/// unique and ascending.
struct SubwordOccurrenceIndex {
  std::vector<std::vector<std::uint32_t>> neighbors;

  std::size_t subword_count() const noexcept { return neighbors.size(); }
  std::size_t edge_count() const noexcept;
};

struct SubwordVectors {
  Vocabulary vocab;
  DenseMatrix matrix;
  /// covered[c] != 0 iff subword c has at least one neighboring word.
  std::vector<std::uint8_t> covered;

  std::size_t covered_count() const noexcept;
};

SubwordOccurrenceIndex build_occurrence_index(const WordVectors& words, const Segmenter& segmenter,
                                              const Vocabulary& subvocab, unsigned threads = 1);

/// Means are accumulated in double over ascending word order, then rounded.
SubwordVectors build_subword_vectors(const SubwordOccurrenceIndex& index, const WordVectors& words,
                                     const Vocabulary& subvocab, unsigned threads = 1);

/// Writes `<prefix>.ofat` and `<prefix>.coverage` (one "0"/"1" per line).
void save_subword_vectors(const SubwordVectors& vectors, const std::filesystem::path& prefix);
SubwordVectors load_subword_vectors(const std::filesystem::path& prefix, Vocabulary vocab);

std::vector<std::uint8_t> parse_coverage(std::string_view text, const std::string& source = "<memory>");

std::filesystem::path with_suffix(const std::filesystem::path& prefix, std::string_view suffix);

}  // namespace graft
