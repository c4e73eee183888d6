// Copyright 2026 The Graft Authors
// SPDX-License-Identifier: Apache-2.0

#include "graft/tensor_store.hpp"

#include <fmt/format.h>

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <system_error>

#include "graft/error.hpp"

namespace graft {

FormatError::FormatError(std::string path, Unit unit, std::uint64_t location, const std::string& message)
    : Error(fmt::format("{}: {} {}: {}", path, unit == Unit::byte ? "byte offset" : "line", location, message)),
      path_(std::move(path)),
      unit_(unit),
      location_(location) {}

namespace {

FormatError byte_error(const std::string& source, std::uint64_t offset, const std::string& message) {
  return FormatError(source, FormatError::Unit::byte, offset, message);
}

FormatError line_error(const std::string& source, std::uint64_t line, const std::string& message) {
  return FormatError(source, FormatError::Unit::line, line, message);
}

template <typename T>
void put_le(std::string& out, T value) {
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>(u & 0xFFu));
    u = static_cast<U>(u >> 8);
  }
}

template <typename T>
T get_le(std::string_view bytes, std::size_t offset) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<T>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
  }
  return value;
}

// Splits text into lines on '\n'. A trailing newline does not produce an
// extra empty line; a trailing '\r' is dropped from each line.
std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    if (i == line.size()) break;
    std::size_t j = line.find(' ', i);
    if (j == std::string_view::npos) j = line.size();
    fields.push_back(line.substr(i, j - i));
    i = j;
  }
  return fields;
}

template <typename T>
std::optional<T> parse_number(std::string_view field) {
  T value{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size()) return std::nullopt;
  return value;
}

}  // namespace

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0f) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<float> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw DimensionError(fmt::format("matrix data has {} values, expected {}x{}", data_.size(), rows, cols));
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0f;
  return m;
}

std::optional<std::size_t> DenseMatrix::first_non_finite() const noexcept {
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) return i;
  }
  return std::nullopt;
}

bool bitwise_equal(const DenseMatrix& a, const DenseMatrix& b) noexcept {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return a.size() == 0 || std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(float)) == 0;
}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    auto [it, inserted] = index_.emplace(tokens_[i], i);
    if (!inserted) {
      throw Error(fmt::format("duplicate token '{}' at positions {} and {}", tokens_[i], it->second, i));
    }
    max_token_bytes_ = std::max(max_token_bytes_, tokens_[i].size());
  }
}

std::optional<std::size_t> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

WordVectors::WordVectors(Vocabulary v, DenseMatrix m) : vocab(std::move(v)), matrix(std::move(m)) {
  if (matrix.rows() != vocab.size()) {
    throw DimensionError(fmt::format("word vectors: {} rows for {} words", matrix.rows(), vocab.size()));
  }
}

// ---------------------------------------------------------------------------
// OFAT

std::string encode_matrix(const DenseMatrix& m) {
  std::string out;
  out.reserve(kOfatHeaderBytes + m.size() * 4);
  out.append("OFAT", 4);
  put_le<std::uint32_t>(out, kOfatVersion);
  put_le<std::uint64_t>(out, m.rows());
  put_le<std::uint64_t>(out, m.cols());
  put_le<std::uint8_t>(out, kDtypeF32);
  if constexpr (std::endian::native == std::endian::little) {
    out.append(reinterpret_cast<const char*>(m.data().data()), m.size() * sizeof(float));
  } else {
    for (float v : m.data()) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

DenseMatrix decode_matrix(std::string_view bytes, const std::string& source) {
  if (bytes.size() < 4 || bytes.substr(0, 4) != "OFAT") throw byte_error(source, 0, "bad magic, expected \"OFAT\"");
  if (bytes.size() < kOfatHeaderBytes) throw byte_error(source, bytes.size(), "truncated header");
  const auto version = get_le<std::uint32_t>(bytes, 4);
  if (version != kOfatVersion) throw byte_error(source, 4, fmt::format("unsupported format version {}", version));
  const auto rows = get_le<std::uint64_t>(bytes, 8);
  const auto cols = get_le<std::uint64_t>(bytes, 16);
  const auto dtype = get_le<std::uint8_t>(bytes, 24);
  if (dtype != kDtypeF32) throw byte_error(source, 24, fmt::format("unsupported dtype code {}", dtype));

  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  if (cols != 0 && rows > kMax / cols / 4) throw byte_error(source, 8, "rows * cols overflows");
  const std::uint64_t payload = rows * cols * 4;
  const std::uint64_t actual = bytes.size() - kOfatHeaderBytes;
  if (actual < payload) {
    throw byte_error(source, bytes.size(),
                     fmt::format("truncated payload: header declares {} bytes, file has {}", payload, actual));
  }
  if (actual > payload) {
    throw byte_error(source, kOfatHeaderBytes + payload,
                     fmt::format("payload length mismatch: header declares {} bytes, file has {}", payload, actual));
  }

  std::vector<float> data(rows * cols);
  if constexpr (std::endian::native == std::endian::little) {
    if (!data.empty()) std::memcpy(data.data(), bytes.data() + kOfatHeaderBytes, payload);
  } else {
    for (std::size_t i = 0; i < data.size(); ++i) {
      data[i] = std::bit_cast<float>(get_le<std::uint32_t>(bytes, kOfatHeaderBytes + 4 * i));
    }
  }
  DenseMatrix m(rows, cols, std::move(data));
  if (auto bad = m.first_non_finite()) {
    throw byte_error(source, kOfatHeaderBytes + 4 * *bad,
                     fmt::format("non-finite value at row {}, col {}", *bad / cols, *bad % cols));
  }
  return m;
}

void save_matrix(const DenseMatrix& m, const std::filesystem::path& path) { write_file(path, encode_matrix(m)); }

DenseMatrix load_matrix(const std::filesystem::path& path) { return decode_matrix(read_file(path), path.string()); }

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary parse_vocab(std::string_view text, const std::string& source) {
  const auto lines = split_lines(text);
  std::vector<std::string> tokens;
  tokens.reserve(lines.size());
  std::unordered_map<std::string_view, std::size_t> seen;
  seen.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) throw line_error(source, i + 1, "empty token");
    auto [it, inserted] = seen.emplace(lines[i], i);
    if (!inserted) {
      throw line_error(source, i + 1,
                       fmt::format("duplicate token '{}' (first seen on line {})", lines[i], it->second + 1));
    }
    tokens.emplace_back(lines[i]);
  }
  return Vocabulary(std::move(tokens));
}

Vocabulary load_vocab(const std::filesystem::path& path) { return parse_vocab(read_file(path), path.string()); }

void save_vocab(const Vocabulary& vocab, const std::filesystem::path& path) {
  std::string out;
  for (const auto& t : vocab.tokens()) {
    out += t;
    out += '\n';
  }
  write_file(path, out);
}

// ---------------------------------------------------------------------------
// Word vectors

WordVectors parse_word_vectors(std::string_view text, const std::string& source) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw line_error(source, 1, "missing \"N dim\" header");
  const auto header = split_spaces(lines[0]);
  std::optional<std::size_t> count, dim;
  if (header.size() == 2) {
    count = parse_number<std::size_t>(header[0]);
    dim = parse_number<std::size_t>(header[1]);
  }
  if (!count || !dim) throw line_error(source, 1, fmt::format("malformed header '{}'", lines[0]));

  std::vector<std::string> words;
  words.reserve(*count);
  std::vector<float> values;
  values.reserve(*count * *dim);
  std::unordered_map<std::string_view, std::size_t> seen;
  seen.reserve(*count);

  std::size_t line_no = 1;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    line_no = i + 1;
    if (lines[i].empty()) continue;
    if (words.size() == *count) throw line_error(source, line_no, fmt::format("more than {} vectors", *count));
    const auto fields = split_spaces(lines[i]);
    if (fields.size() != *dim + 1) {
      throw line_error(source, line_no,
                       fmt::format("dimension mismatch: expected {} values, found {}", *dim,
                                   fields.empty() ? 0 : fields.size() - 1));
    }
    auto [it, inserted] = seen.emplace(fields[0], line_no);
    if (!inserted) {
      throw line_error(source, line_no, fmt::format("duplicate word '{}' (first seen on line {})", fields[0], it->second));
    }
    for (std::size_t j = 1; j < fields.size(); ++j) {
      auto v = parse_number<float>(fields[j]);
      if (!v) throw line_error(source, line_no, fmt::format("unparsable float '{}'", fields[j]));
      if (!std::isfinite(*v)) throw line_error(source, line_no, fmt::format("non-finite value '{}'", fields[j]));
      values.push_back(*v);
    }
    words.emplace_back(fields[0]);
  }
  if (words.size() != *count) {
    throw line_error(source, line_no, fmt::format("header declares {} vectors, found {}", *count, words.size()));
  }
  const std::size_t n = words.size();
  return WordVectors(Vocabulary(std::move(words)), DenseMatrix(n, *dim, std::move(values)));
}

WordVectors load_word_vectors(const std::filesystem::path& path) {
  return parse_word_vectors(read_file(path), path.string());
}

void save_word_vectors(const WordVectors& wv, const std::filesystem::path& path) {
  std::string out = fmt::format("{} {}\n", wv.vocab.size(), wv.dim());
  char buf[64];
  for (std::size_t i = 0; i < wv.vocab.size(); ++i) {
    out += wv.vocab.token(i);
    for (float v : wv.matrix.row(i)) {
      auto res = std::to_chars(buf, buf + sizeof(buf), v);
      out += ' ';
      out.append(buf, res.ptr);
    }
    out += '\n';
  }
  write_file(path, out);
}

// ---------------------------------------------------------------------------
// Files

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open '{}' for reading", path.string()));
  std::string bytes;
  in.seekg(0, std::ios::end);
  const auto size = in.tellg();
  in.seekg(0, std::ios::beg);
  bytes.resize(static_cast<std::size_t>(size));
  if (size > 0 && !in.read(bytes.data(), size)) throw Error(fmt::format("failed reading '{}'", path.string()));
  return bytes;
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(fmt::format("cannot open '{}' for writing", tmp.string()));
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(fmt::format("failed writing '{}'", tmp.string()));
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace graft
