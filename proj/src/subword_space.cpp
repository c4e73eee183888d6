// Copyright 2026 The Graft Authors
// SPDX-License-Identifier: Apache-2.0

#include "graft/subword_space.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <limits>
#include <numeric>
#include <utility>

#include "graft/error.hpp"
#include "graft/parallel.hpp"

namespace graft {

namespace {

constexpr std::size_t kWordBlock = 4096;
constexpr std::size_t kSubwordBlock = 1024;

}  // namespace

std::size_t SubwordOccurrenceIndex::edge_count() const noexcept {
  std::size_t n = 0;
  for (const auto& list : neighbors) n += list.size();
  return n;
}

std::size_t SubwordVectors::covered_count() const noexcept {
  return static_cast<std::size_t>(std::count(covered.begin(), covered.end(), std::uint8_t{1}));
}

SubwordOccurrenceIndex build_occurrence_index(const WordVectors& words, const Segmenter& segmenter,
                                              const Vocabulary& subvocab, unsigned threads) {
  const std::size_t n_words = words.vocab.size();
  if (n_words > std::numeric_limits<std::uint32_t>::max()) throw Error("too many words for a 32-bit index");

  // If the segmenter's vocabulary is the subword vocabulary, ids map through
  // unchanged; otherwise translate piece strings.
  const bool same_vocab = &segmenter.vocab() == &subvocab || segmenter.vocab().tokens() == subvocab.tokens();

  // Each block records (subword, word) edges for its word range.
  const std::size_t n_blocks = block_count(n_words, kWordBlock);
  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> edges(n_blocks);
  parallel_for_blocks(n_blocks, threads, [&](std::size_t b) {
    auto& out = edges[b];
    const std::size_t end = std::min(n_words, (b + 1) * kWordBlock);
    std::vector<std::size_t> ids;
    for (std::size_t w = b * kWordBlock; w < end; ++w) {
      ids.clear();
      if (same_vocab) {
        ids = segmenter.segment_ids(words.vocab.token(w));
      } else {
        for (const auto& piece : segmenter.segment(words.vocab.token(w))) {
          if (auto id = subvocab.find(piece)) ids.push_back(*id);
        }
      }
      std::sort(ids.begin(), ids.end());
      ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
      for (auto c : ids) out.emplace_back(static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(w));
    }
  });

  SubwordOccurrenceIndex index;
  index.neighbors.resize(subvocab.size());
  // Blocks are visited in word order, so every list comes out ascending.
  for (const auto& block : edges) {
    for (auto [c, w] : block) index.neighbors[c].push_back(w);
  }
  return index;
}

SubwordVectors build_subword_vectors(const SubwordOccurrenceIndex& index, const WordVectors& words,
                                     const Vocabulary& subvocab, unsigned threads) {
  if (index.subword_count() != subvocab.size()) {
    throw DimensionError(
        fmt::format("occurrence index has {} subwords, vocabulary has {}", index.subword_count(), subvocab.size()));
  }
  const std::size_t dim = words.dim();
  SubwordVectors out{subvocab, DenseMatrix(subvocab.size(), dim), std::vector<std::uint8_t>(subvocab.size(), 0)};

  parallel_for_blocks(block_count(subvocab.size(), kSubwordBlock), threads, [&](std::size_t b) {
    std::vector<double> acc(dim);
    const std::size_t end = std::min(subvocab.size(), (b + 1) * kSubwordBlock);
    for (std::size_t c = b * kSubwordBlock; c < end; ++c) {
      const auto& list = index.neighbors[c];
      if (list.empty()) continue;
      std::fill(acc.begin(), acc.end(), 0.0);
      for (auto w : list) {
        if (w >= words.vocab.size()) throw DimensionError(fmt::format("word index {} out of range", w));
        const auto row = words.matrix.row(w);
        for (std::size_t j = 0; j < dim; ++j) acc[j] += row[j];
      }
      const double inv = 1.0 / static_cast<double>(list.size());
      auto dst = out.matrix.row(c);
      for (std::size_t j = 0; j < dim; ++j) dst[j] = static_cast<float>(acc[j] * inv);
      out.covered[c] = 1;
    }
  });
  return out;
}

std::filesystem::path with_suffix(const std::filesystem::path& prefix, std::string_view suffix) {
  auto p = prefix;
  p += suffix;
  return p;
}

void save_subword_vectors(const SubwordVectors& vectors, const std::filesystem::path& prefix) {
  save_matrix(vectors.matrix, with_suffix(prefix, ".ofat"));
  std::string bits;
  bits.reserve(vectors.covered.size() * 2);
  for (auto c : vectors.covered) {
    bits += c ? '1' : '0';
    bits += '\n';
  }
  write_file(with_suffix(prefix, ".coverage"), bits);
}

std::vector<std::uint8_t> parse_coverage(std::string_view text, const std::string& source) {
  std::vector<std::uint8_t> bits;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    ++line_no;
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line == "0" || line == "1") {
      bits.push_back(line == "1" ? 1 : 0);
    } else {
      throw FormatError(source, FormatError::Unit::line, line_no, fmt::format("expected 0 or 1, got '{}'", line));
    }
  }
  return bits;
}

SubwordVectors load_subword_vectors(const std::filesystem::path& prefix, Vocabulary vocab) {
  auto matrix = load_matrix(with_suffix(prefix, ".ofat"));
  const auto coverage_path = with_suffix(prefix, ".coverage");
  auto covered = parse_coverage(read_file(coverage_path), coverage_path.string());
  if (matrix.rows() != vocab.size() || covered.size() != vocab.size()) {
    throw DimensionError(fmt::format("subword vectors '{}': {} rows, {} coverage flags, {} vocabulary entries",
                                     prefix.string(), matrix.rows(), covered.size(), vocab.size()));
  }
  for (std::size_t c = 0; c < covered.size(); ++c) {
    if (covered[c]) continue;
    for (float v : matrix.row(c)) {
      if (v != 0.0f) throw Error(fmt::format("subword vectors '{}': uncovered row {} is not zero", prefix.string(), c));
    }
  }
  return SubwordVectors{std::move(vocab), std::move(matrix), std::move(covered)};
}

}  // namespace graft
