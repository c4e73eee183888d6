// Copyright 2026 The Graft Authors
// SPDX-License-Identifier: Apache-2.0

#include "graft/segmenter.hpp"

#include <fmt/format.h>

#include <algorithm>

#include "graft/error.hpp"

namespace graft {

Segmenter::Segmenter(Mode mode, Vocabulary vocab, std::string marker, ExternalSegmentations table)
    : mode_(mode), vocab_(std::move(vocab)), marker_(std::move(marker)), table_(std::move(table)) {}

Segmenter Segmenter::greedy(Vocabulary vocab, std::string boundary_marker) {
  return Segmenter(Mode::greedy, std::move(vocab), std::move(boundary_marker), {});
}

Segmenter Segmenter::external(Vocabulary vocab, ExternalSegmentations table) {
  return Segmenter(Mode::external, std::move(vocab), std::string(kDefaultBoundaryMarker), std::move(table));
}

std::vector<std::size_t> Segmenter::segment_ids(std::string_view word) const {
  std::vector<std::size_t> ids;
  if (word.empty()) return ids;

  if (mode_ == Mode::external) {
    auto it = table_.find(std::string(word));
    if (it == table_.end()) return ids;
    for (const auto& piece : it->second) {
      if (auto id = vocab_.find(piece)) ids.push_back(*id);
    }
    return ids;
  }

  std::string text;
  text.reserve(marker_.size() + word.size());
  text += marker_;
  text += word;
  const std::string_view rest_all(text);
  const std::size_t longest = vocab_.max_token_bytes();

  std::size_t pos = 0;
  while (pos < rest_all.size()) {
    const std::size_t remaining = rest_all.size() - pos;
    bool matched = false;
    for (std::size_t len = std::min(longest, remaining); len > 0; --len) {
      if (auto id = vocab_.find(rest_all.substr(pos, len))) {
        ids.push_back(*id);
        pos += len;
        matched = true;
        break;
      }
    }
    if (!matched) return {};
  }
  return ids;
}

std::vector<std::string> Segmenter::segment(std::string_view word) const {
  if (mode_ == Mode::external) {
    if (word.empty()) return {};
    auto it = table_.find(std::string(word));
    return it == table_.end() ? std::vector<std::string>{} : it->second;
  }
  std::vector<std::string> pieces;
  for (auto id : segment_ids(word)) pieces.push_back(vocab_.token(id));
  return pieces;
}

ExternalSegmentations parse_external_segmentations(std::string_view text, const std::string& source) {
  ExternalSegmentations table;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    ++line_no;
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;

    const std::size_t tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw FormatError(source, FormatError::Unit::line, line_no, "expected 'word<TAB>pieces'");
    }
    const std::string_view word = line.substr(0, tab);
    const std::string_view pieces = line.substr(tab + 1);
    if (word.empty()) throw FormatError(source, FormatError::Unit::line, line_no, "empty word");
    if (pieces.find('\t') != std::string_view::npos) {
      throw FormatError(source, FormatError::Unit::line, line_no, "more than one TAB");
    }

    std::vector<std::string> list;
    std::size_t i = 0;
    while (i < pieces.size()) {
      while (i < pieces.size() && pieces[i] == ' ') ++i;
      if (i == pieces.size()) break;
      std::size_t j = pieces.find(' ', i);
      if (j == std::string_view::npos) j = pieces.size();
      list.emplace_back(pieces.substr(i, j - i));
      i = j;
    }
    table.insert_or_assign(std::string(word), std::move(list));
  }
  return table;
}

ExternalSegmentations load_external_segmentations(const std::filesystem::path& path) {
  return parse_external_segmentations(read_file(path), path.string());
}

}  // namespace graft
