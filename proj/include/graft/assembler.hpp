// Copyright 2026 The Graft Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <json.hpp>

#include <filesystem>
#include <string_view>

#include "graft/factorizer.hpp"
#include "graft/tensor_store.hpp"

namespace graft {

enum class AssemblyMode { factorized, full };

std::string_view to_string(AssemblyMode mode) noexcept;
/// Accepts "factorized" or "full"; throws ConfigError("mode") otherwise.
AssemblyMode parse_assembly_mode(std::string_view text);

/// Final target embedding artifact.
///
/// Factorized mode carries the target coordinates F_t and primitives P;
/// full mode carries the up-projected E_t = F_t P. The manifest records the
/// shapes, the transplant config, and SHA-256 digests of every input.
struct AssembledEmbedding {
  AssemblyMode mode = AssemblyMode::full;
  DenseMatrix coordinates;  // factorized mode
  DenseMatrix primitives;   // factorized mode
  DenseMatrix embeddings;   // full mode
  nlohmann::json manifest;
};

/// `config` is echoed into the manifest; `report_json` is the serialized
/// transplant report whose digest the manifest records.
AssembledEmbedding assemble(const DenseMatrix& target_coordinates, const FactorizedEmbedding& fe, AssemblyMode mode,
                            const nlohmann::json& config, std::string_view report_json, unsigned threads = 1);

/// Writes manifest.json plus f_t.ofat and p.ofat (factorized) or e_t.ofat (full).
void write_assembled(const AssembledEmbedding& assembled, const std::filesystem::path& dir);

}  // namespace graft
