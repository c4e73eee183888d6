// Copyright 2026 The Graft Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "graft/tensor_store.hpp"

namespace graft {

/// Word -> subword list, as produced by some external tokenizer.
using ExternalSegmentations = std::unordered_map<std::string, std::vector<std::string>>;

/// Word-boundary marker used by SentencePiece vocabularies (U+2581).
inline constexpr std::string_view kDefaultBoundaryMarker = "\xE2\x96\x81";

/// Deterministic word -> subword segmentation over a fixed vocabulary.
///
/// Greedy mode prepends the boundary marker to the word and repeatedly takes
/// the longest vocabulary token that prefixes the remaining bytes. A word with
/// an uncoverable position segments to the empty list. External mode looks the
/// word up in a precomputed table instead.
class Segmenter {
 public:
  enum class Mode { greedy, external };

  static Segmenter greedy(Vocabulary vocab, std::string boundary_marker = std::string(kDefaultBoundaryMarker));
  static Segmenter external(Vocabulary vocab, ExternalSegmentations table);

  Mode mode() const noexcept { return mode_; }
  const Vocabulary& vocab() const noexcept { return vocab_; }
  const std::string& boundary_marker() const noexcept { return marker_; }

  std::vector<std::string> segment(std::string_view word) const;

  /// Vocabulary indices of the pieces of `word`. In external mode, pieces
  /// missing from the vocabulary are dropped.
  std::vector<std::size_t> segment_ids(std::string_view word) const;

 private:
  Segmenter(Mode mode, Vocabulary vocab, std::string marker, ExternalSegmentations table);

  Mode mode_;
  Vocabulary vocab_;
  std::string marker_;
  ExternalSegmentations table_;
};

/// Parses "word<TAB>piece piece ..." lines; later lines for the same word win.
ExternalSegmentations parse_external_segmentations(std::string_view text, const std::string& source = "<memory>");
ExternalSegmentations load_external_segmentations(const std::filesystem::path& path);

}  // namespace graft
