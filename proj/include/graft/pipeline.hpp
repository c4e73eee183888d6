// Copyright 2026 The Graft Authors
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end orchestration: factorize -> subword vectors (source and target)
// -> transplant -> assemble. Each stage reads and writes files, so running
// the stages one at a time produces the same bytes as a single `run`.

#pragma once

#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "graft/assembler.hpp"
#include "graft/transplanter.hpp"

namespace graft {

struct PipelineConfig {
  std::filesystem::path source_embeddings;
  std::filesystem::path source_vocab;
  std::filesystem::path target_vocab;
  std::filesystem::path word_vectors;
  std::optional<std::filesystem::path> source_segmentations;
  std::optional<std::filesystem::path> target_segmentations;
  std::filesystem::path out;

  /// Absent means no factorization (F_s = E_s, P = I).
  std::optional<std::size_t> d_prime;
  TransplantConfig transplant;
  bool emit_provenance = false;
  AssemblyMode mode = AssemblyMode::full;
  std::string boundary_marker = "\xE2\x96\x81";
  unsigned threads = 1;

  /// Reads the JSON config document. Relative paths resolve against `base_dir`.
  /// Unknown keys and wrongly-typed values raise ConfigError naming the key.
  static PipelineConfig from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);

  /// Checks required fields and that input files exist; throws ConfigError.
  void validate() const;
};

/// Stage progress lines ("stage=... rows=... wall=...s") and the summary record.
class StageLog {
 public:
  explicit StageLog(std::ostream* sink) : sink_(sink) {}

  void record(const std::string& stage, std::size_t rows, std::chrono::steady_clock::duration wall);
  const nlohmann::json& stages() const noexcept { return stages_; }

 private:
  std::ostream* sink_;
  nlohmann::json stages_ = nlohmann::json::array();
};

/// Layout of the intermediate files `run` writes under <out>/stages.
struct StagePaths {
  std::filesystem::path factorization;
  std::filesystem::path source_subwords;
  std::filesystem::path target_subwords;
  std::filesystem::path transplant;

  static StagePaths under(const std::filesystem::path& out);
};

void factorize_stage(const std::filesystem::path& embeddings, std::optional<std::size_t> d_prime,
                     const std::filesystem::path& out_dir, unsigned threads, StageLog& log);

/// Writes <out_prefix>.ofat and <out_prefix>.coverage.
void subword_vectors_stage(const WordVectors& words, const std::filesystem::path& vocab,
                           const std::optional<std::filesystem::path>& segmentations,
                           const std::string& boundary_marker, const std::filesystem::path& out_prefix,
                           unsigned threads, StageLog& log, const std::string& label = "subword-vectors");

/// Writes f_t.ofat and report.json into out_dir and returns the report JSON.
nlohmann::json transplant_stage(const std::filesystem::path& factorization_dir, const std::filesystem::path& source_vocab,
                                const std::filesystem::path& target_vocab,
                                const std::filesystem::path& source_subwords,
                                const std::filesystem::path& target_subwords, const TransplantConfig& cfg,
                                bool emit_provenance, const std::filesystem::path& out_dir, unsigned threads,
                                StageLog& log);

/// Writes the assembled artifact plus a copy of report.json into out_dir.
void assemble_stage(const std::filesystem::path& factorization_dir, const std::filesystem::path& transplant_dir,
                    AssemblyMode mode, const std::filesystem::path& out_dir, unsigned threads, StageLog& log);

/// Runs every stage; returns the summary document.
nlohmann::json run_pipeline(const PipelineConfig& cfg, StageLog& log);

}  // namespace graft
