// Copyright 2026 The Graft Authors
// SPDX-License-Identifier: Apache-2.0

#include "graft/pipeline.hpp"

#include <fmt/format.h>

#include <set>

#include "graft/error.hpp"
#include "graft/factorizer.hpp"
#include "graft/segmenter.hpp"
#include "graft/subword_space.hpp"

namespace graft {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "source_embeddings", "source_vocab", "target_vocab", "word_vectors", "source_segmentations",
      "target_segmentations", "out", "d_prime", "k", "tau", "seed", "emit_provenance", "mode",
      "boundary_marker", "threads"};
  return keys;
}

template <typename T>
T get_field(const nlohmann::json& doc, const std::string& key) {
  try {
    return doc.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(key, fmt::format("invalid value: {}", e.what()));
  }
}

fs::path resolve(const fs::path& base, const fs::path& p) { return p.is_absolute() || base.empty() ? p : base / p; }

void require_file(const std::string& field, const fs::path& p) {
  if (p.empty()) throw ConfigError(field, "required path is missing");
  if (!fs::is_regular_file(p)) throw ConfigError(field, fmt::format("file not found: '{}'", p.string()));
}

}  // namespace

PipelineConfig PipelineConfig::from_json(const nlohmann::json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) throw ConfigError("config", "top level must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (!known_keys().contains(key)) throw ConfigError(key, "unknown config key");
  }

  PipelineConfig cfg;
  auto path_field = [&](const char* key, fs::path& dst) {
    if (doc.contains(key)) dst = resolve(base_dir, get_field<std::string>(doc, key));
  };
  path_field("source_embeddings", cfg.source_embeddings);
  path_field("source_vocab", cfg.source_vocab);
  path_field("target_vocab", cfg.target_vocab);
  path_field("word_vectors", cfg.word_vectors);
  path_field("out", cfg.out);
  for (const char* key : {"source_segmentations", "target_segmentations"}) {
    if (doc.contains(key) && !doc.at(key).is_null()) {
      auto p = resolve(base_dir, get_field<std::string>(doc, key));
      (std::string(key) == "source_segmentations" ? cfg.source_segmentations : cfg.target_segmentations) = p;
    }
  }
  if (doc.contains("d_prime") && !doc.at("d_prime").is_null()) {
    const auto v = get_field<std::int64_t>(doc, "d_prime");
    if (v < 1) throw ConfigError("d_prime", "must be positive");
    cfg.d_prime = static_cast<std::size_t>(v);
  }
  if (doc.contains("k")) {
    const auto v = get_field<std::int64_t>(doc, "k");
    if (v < 1) throw ConfigError("k", "must be at least 1");
    cfg.transplant.k = static_cast<std::size_t>(v);
  }
  if (doc.contains("tau")) cfg.transplant.tau = get_field<double>(doc, "tau");
  if (doc.contains("seed")) cfg.transplant.seed = get_field<std::uint64_t>(doc, "seed");
  if (doc.contains("emit_provenance")) cfg.emit_provenance = get_field<bool>(doc, "emit_provenance");
  if (doc.contains("mode")) cfg.mode = parse_assembly_mode(get_field<std::string>(doc, "mode"));
  if (doc.contains("boundary_marker")) cfg.boundary_marker = get_field<std::string>(doc, "boundary_marker");
  if (doc.contains("threads")) {
    const auto v = get_field<std::int64_t>(doc, "threads");
    if (v < 1) throw ConfigError("threads", "must be at least 1");
    cfg.threads = static_cast<unsigned>(v);
  }
  return cfg;
}

void PipelineConfig::validate() const {
  require_file("source_embeddings", source_embeddings);
  require_file("source_vocab", source_vocab);
  require_file("target_vocab", target_vocab);
  require_file("word_vectors", word_vectors);
  if (source_segmentations) require_file("source_segmentations", *source_segmentations);
  if (target_segmentations) require_file("target_segmentations", *target_segmentations);
  if (out.empty()) throw ConfigError("out", "required output directory is missing");
  if (threads < 1) throw ConfigError("threads", "must be at least 1");
  if (boundary_marker.empty() && !(source_segmentations && target_segmentations)) {
    throw ConfigError("boundary_marker", "must not be empty");
  }
  transplant.validate();
}

void StageLog::record(const std::string& stage, std::size_t rows, Clock::duration wall) {
  const double seconds = std::chrono::duration<double>(wall).count();
  if (sink_) *sink_ << fmt::format("[graft] stage={} rows={} wall={:.3f}s\n", stage, rows, seconds);
  stages_.push_back({{"stage", stage}, {"rows", rows}, {"wall_seconds", seconds}});
}

StagePaths StagePaths::under(const fs::path& out) {
  const auto stages = out / "stages";
  return {stages / "factorization", stages / "source_subwords", stages / "target_subwords", stages / "transplant"};
}

void factorize_stage(const fs::path& embeddings, std::optional<std::size_t> d_prime, const fs::path& out_dir,
                     unsigned threads, StageLog& log) {
  const auto start = Clock::now();
  const auto e = load_matrix(embeddings);
  const auto fe = d_prime ? factorize(e, *d_prime, threads) : identity_factorization(e);
  save_factorization(fe, out_dir);
  log.record("factorize", e.rows(), Clock::now() - start);
}

void subword_vectors_stage(const WordVectors& words, const fs::path& vocab_path,
                           const std::optional<fs::path>& segmentations, const std::string& boundary_marker,
                           const fs::path& out_prefix, unsigned threads, StageLog& log, const std::string& label) {
  const auto start = Clock::now();
  auto vocab = load_vocab(vocab_path);
  const auto segmenter = segmentations ? Segmenter::external(vocab, load_external_segmentations(*segmentations))
                                       : Segmenter::greedy(vocab, boundary_marker);
  const auto index = build_occurrence_index(words, segmenter, vocab, threads);
  const auto vectors = build_subword_vectors(index, words, vocab, threads);
  save_subword_vectors(vectors, out_prefix);
  log.record(label, vocab.size(), Clock::now() - start);
}

nlohmann::json transplant_stage(const fs::path& factorization_dir, const fs::path& source_vocab_path,
                                const fs::path& target_vocab_path, const fs::path& source_subwords,
                                const fs::path& target_subwords, const TransplantConfig& cfg, bool emit_provenance,
                                const fs::path& out_dir, unsigned threads, StageLog& log) {
  const auto start = Clock::now();
  const auto fe = load_factorization(factorization_dir);
  auto source_vocab = load_vocab(source_vocab_path);
  auto target_vocab = load_vocab(target_vocab_path);
  const auto source_vectors = load_subword_vectors(source_subwords, source_vocab);
  const auto target_vectors = load_subword_vectors(target_subwords, target_vocab);

  const auto result =
      transplant(fe.coordinates, source_vectors, target_vectors, source_vocab, target_vocab, cfg, threads);
  auto report = report_to_json(result.report, cfg, source_vocab, target_vocab, emit_provenance);
  save_matrix(result.coordinates, out_dir / "f_t.ofat");
  write_file(out_dir / "report.json", report.dump(2) + "\n");
  log.record("transplant", target_vocab.size(), Clock::now() - start);
  return report;
}

void assemble_stage(const fs::path& factorization_dir, const fs::path& transplant_dir, AssemblyMode mode,
                    const fs::path& out_dir, unsigned threads, StageLog& log) {
  const auto start = Clock::now();
  const auto fe = load_factorization(factorization_dir);
  const auto coordinates = load_matrix(transplant_dir / "f_t.ofat");
  const auto report_path = transplant_dir / "report.json";
  const std::string report_text = read_file(report_path);
  nlohmann::json report;
  try {
    report = nlohmann::json::parse(report_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(fmt::format("{}: {}", report_path.string(), e.what()));
  }
  const nlohmann::json config = report.value("config", nlohmann::json::object());

  const auto assembled = assemble(coordinates, fe, mode, config, report_text, threads);
  write_assembled(assembled, out_dir);
  write_file(out_dir / "report.json", report_text);
  log.record("assemble", coordinates.rows(), Clock::now() - start);
}

nlohmann::json run_pipeline(const PipelineConfig& cfg, StageLog& log) {
  cfg.validate();
  const auto paths = StagePaths::under(cfg.out);

  factorize_stage(cfg.source_embeddings, cfg.d_prime, paths.factorization, cfg.threads, log);

  const auto load_start = Clock::now();
  const auto words = load_word_vectors(cfg.word_vectors);
  log.record("load-word-vectors", words.vocab.size(), Clock::now() - load_start);
  subword_vectors_stage(words, cfg.source_vocab, cfg.source_segmentations, cfg.boundary_marker,
                        paths.source_subwords, cfg.threads, log, "source-subword-vectors");
  subword_vectors_stage(words, cfg.target_vocab, cfg.target_segmentations, cfg.boundary_marker,
                        paths.target_subwords, cfg.threads, log, "target-subword-vectors");

  const auto report = transplant_stage(paths.factorization, cfg.source_vocab, cfg.target_vocab,
                                       paths.source_subwords, paths.target_subwords, cfg.transplant,
                                       cfg.emit_provenance, paths.transplant, cfg.threads, log);
  assemble_stage(paths.factorization, paths.transplant, cfg.mode, cfg.out, cfg.threads, log);

  return {
      {"out", cfg.out.string()},
      {"mode", to_string(cfg.mode)},
      {"d_prime", cfg.d_prime ? nlohmann::json(*cfg.d_prime) : nlohmann::json(nullptr)},
      {"counts", report.at("counts")},
      {"coverage", report.at("coverage")},
      {"stages", log.stages()},
  };
}

}  // namespace graft
