// Copyright 2026 The Graft Authors
// SPDX-License-Identifier: Apache-2.0

#include "graft/assembler.hpp"

#include <fmt/format.h>

#include "graft/digest.hpp"
#include "graft/error.hpp"

namespace graft {

std::string_view to_string(AssemblyMode mode) noexcept {
  return mode == AssemblyMode::full ? "full" : "factorized";
}

AssemblyMode parse_assembly_mode(std::string_view text) {
  if (text == "full") return AssemblyMode::full;
  if (text == "factorized") return AssemblyMode::factorized;
  throw ConfigError("mode", fmt::format("expected \"factorized\" or \"full\", got \"{}\"", text));
}

AssembledEmbedding assemble(const DenseMatrix& target_coordinates, const FactorizedEmbedding& fe, AssemblyMode mode,
                            const nlohmann::json& config, std::string_view report_json, unsigned threads) {
  if (target_coordinates.cols() != fe.d_prime()) {
    throw DimensionError(fmt::format("target coordinates have {} columns, primitives have {} rows",
                                     target_coordinates.cols(), fe.d_prime()));
  }

  const std::string coords_bytes = encode_matrix(target_coordinates);
  const std::string prims_bytes = encode_matrix(fe.primitives);
  const std::string config_text = config.dump();

  Sha256 inputs;
  for (std::string_view part : {std::string_view(coords_bytes), std::string_view(prims_bytes),
                                std::string_view(config_text), report_json}) {
    // Length-prefix each part so that moving bytes between parts changes the digest.
    inputs.update(std::to_string(part.size())).update(":").update(part);
  }

  AssembledEmbedding out;
  out.mode = mode;
  nlohmann::json files;
  if (mode == AssemblyMode::full) {
    out.embeddings = up_project(target_coordinates, fe.primitives, fe.identity, std::nullopt, threads);
    files["e_t"] = {{"path", "e_t.ofat"}, {"sha256", sha256_hex(encode_matrix(out.embeddings))}};
  } else {
    out.coordinates = target_coordinates;
    out.primitives = fe.primitives;
    files["f_t"] = {{"path", "f_t.ofat"}, {"sha256", sha256_hex(coords_bytes)}};
    files["p"] = {{"path", "p.ofat"}, {"sha256", sha256_hex(prims_bytes)}};
  }

  out.manifest = {
      {"format", "graft-assembled"},
      {"format_version", 1},
      {"mode", to_string(mode)},
      {"vocab_size", target_coordinates.rows()},
      {"d_model", fe.d_model()},
      {"d_prime", fe.d_prime()},
      {"identity_factorization", fe.identity},
      {"tie_word_embeddings", true},
      {"config", config},
      {"report_sha256", sha256_hex(report_json)},
      {"inputs_sha256", inputs.hex()},
      {"files", std::move(files)},
  };
  return out;
}

void write_assembled(const AssembledEmbedding& assembled, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  // Drop matrices left over from a run in the other mode.
  for (const char* stale : {"e_t.ofat", "f_t.ofat", "p.ofat"}) std::filesystem::remove(dir / stale);
  if (assembled.mode == AssemblyMode::full) {
    save_matrix(assembled.embeddings, dir / "e_t.ofat");
  } else {
    save_matrix(assembled.coordinates, dir / "f_t.ofat");
    save_matrix(assembled.primitives, dir / "p.ofat");
  }
  write_file(dir / "manifest.json", assembled.manifest.dump(2) + "\n");
}

}  // namespace graft
