// Copyright 2026 The Graft Authors
// SPDX-License-Identifier: Apache-2.0
//
// In-memory matrix / vocabulary types and their on-disk formats.
//
// OFAT binary matrix layout (all integers and floats little-endian):
//
//   offset  size  field
//   0       4     magic "OFAT"
//   4       4     format version (u32, currently 1)
//   8       8     rows (u64)
//   16      8     cols (u64)
//   24      1     dtype code (u8, 1 = f32)
//   25      ...   rows * cols f32 values, row-major
//
// Vocabulary files hold one token per line; line i (0-based) is token i.
// Word vectors use the ".vec" text convention: a "N dim" header followed by
// N lines of "word v1 ... vdim".

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace graft {

/// Row-major matrix of 32-bit floats.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  /// Zero-filled rows x cols matrix.
  DenseMatrix(std::size_t rows, std::size_t cols);
  /// Takes ownership of `data`; throws DimensionError unless data.size() == rows * cols.
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<float> data);

  static DenseMatrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  float& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  float operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<float> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const float> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }

  /// Index of the first non-finite value, if any.
  std::optional<std::size_t> first_non_finite() const noexcept;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<float> data_;
};

/// Same shape and identical bit patterns (distinguishes -0.0 from 0.0, NaN payloads).
bool bitwise_equal(const DenseMatrix& a, const DenseMatrix& b) noexcept;

/// Ordered list of unique tokens with a reverse index.
class Vocabulary {
 public:
  Vocabulary() = default;
  /// Throws Error on duplicate tokens.
  explicit Vocabulary(std::vector<std::string> tokens);

  std::size_t size() const noexcept { return tokens_.size(); }
  bool empty() const noexcept { return tokens_.empty(); }
  const std::string& token(std::size_t i) const { return tokens_.at(i); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  std::optional<std::size_t> find(std::string_view token) const;
  bool contains(std::string_view token) const { return find(token).has_value(); }

  /// Length in bytes of the longest token.
  std::size_t max_token_bytes() const noexcept { return max_token_bytes_; }

 private:
  struct StringHash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept { return std::hash<std::string_view>{}(s); }
  };

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t, StringHash, std::equal_to<>> index_;
  std::size_t max_token_bytes_ = 0;
};

/// External word vectors: matrix row i is the vector of vocab token i.
struct WordVectors {
  Vocabulary vocab;
  DenseMatrix matrix;

  WordVectors() = default;
  /// Throws DimensionError unless matrix.rows() == vocab.size().
  WordVectors(Vocabulary vocab, DenseMatrix matrix);

  std::size_t dim() const noexcept { return matrix.cols(); }
};

// OFAT matrices.
inline constexpr std::uint32_t kOfatVersion = 1;
inline constexpr std::uint8_t kDtypeF32 = 1;
inline constexpr std::size_t kOfatHeaderBytes = 25;

std::string encode_matrix(const DenseMatrix& m);
/// `source` names the buffer in error messages.
DenseMatrix decode_matrix(std::string_view bytes, const std::string& source = "<memory>");
void save_matrix(const DenseMatrix& m, const std::filesystem::path& path);
DenseMatrix load_matrix(const std::filesystem::path& path);

// Plain-text vocabularies.
Vocabulary parse_vocab(std::string_view text, const std::string& source = "<memory>");
Vocabulary load_vocab(const std::filesystem::path& path);
void save_vocab(const Vocabulary& vocab, const std::filesystem::path& path);

// ".vec" word vectors.
WordVectors parse_word_vectors(std::string_view text, const std::string& source = "<memory>");
WordVectors load_word_vectors(const std::filesystem::path& path);
void save_word_vectors(const WordVectors& wv, const std::filesystem::path& path);

// Small file helpers shared across modules.
std::string read_file(const std::filesystem::path& path);
/// Writes through a temporary sibling and renames over `path`.
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace graft
