// Copyright 2026 The Graft Authors
// SPDX-License-Identifier: Apache-2.0

#include "graft/cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include <optional>

#include "graft/error.hpp"
#include "graft/factorizer.hpp"
#include "graft/pipeline.hpp"

namespace graft {

namespace fs = std::filesystem;

namespace {

struct Options {
  unsigned threads = 1;
  std::optional<fs::path> summary;

  // factorize / analyze
  fs::path embeddings;
  std::optional<std::size_t> d_prime;
  std::size_t components = 0;
  bool as_json = false;

  // subword-vectors
  fs::path word_vectors;
  fs::path vocab;
  std::optional<fs::path> segmentations;
  std::string marker = "\xE2\x96\x81";

  // transplant / assemble
  fs::path factorization;
  fs::path source_vocab;
  fs::path target_vocab;
  fs::path source_subwords;
  fs::path target_subwords;
  fs::path transplant_dir;
  std::size_t k = 10;
  double tau = 0.1;
  std::uint64_t seed = 0;
  bool provenance = false;
  std::string mode = "full";

  // params
  std::uint64_t vocab_size = 0;
  std::uint64_t dim = 0;
  std::optional<std::uint64_t> latent;

  fs::path out;
};

// Overrides given on the command line for `run`.
struct RunOverrides {
  std::optional<fs::path> config;
  std::optional<std::string> source_embeddings, source_vocab, target_vocab, word_vectors, source_segmentations,
      target_segmentations, out, mode, marker;
  std::optional<std::size_t> d_prime, k;
  std::optional<double> tau;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  bool provenance = false;
};

void write_summary(const std::optional<fs::path>& path, const nlohmann::json& summary) {
  if (path) write_file(*path, summary.dump(2) + "\n");
}

PipelineConfig build_run_config(const RunOverrides& o) {
  PipelineConfig cfg;
  if (o.config) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(read_file(*o.config));
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError("config", fmt::format("'{}' is not valid JSON: {}", o.config->string(), e.what()));
    } catch (const Error& e) {
      throw ConfigError("config", e.what());
    }
    cfg = PipelineConfig::from_json(doc, o.config->parent_path());
  }
  if (o.source_embeddings) cfg.source_embeddings = *o.source_embeddings;
  if (o.source_vocab) cfg.source_vocab = *o.source_vocab;
  if (o.target_vocab) cfg.target_vocab = *o.target_vocab;
  if (o.word_vectors) cfg.word_vectors = *o.word_vectors;
  if (o.source_segmentations) cfg.source_segmentations = fs::path(*o.source_segmentations);
  if (o.target_segmentations) cfg.target_segmentations = fs::path(*o.target_segmentations);
  if (o.out) cfg.out = *o.out;
  if (o.mode) cfg.mode = parse_assembly_mode(*o.mode);
  if (o.marker) cfg.boundary_marker = *o.marker;
  if (o.d_prime) cfg.d_prime = *o.d_prime;
  if (o.k) cfg.transplant.k = *o.k;
  if (o.tau) cfg.transplant.tau = *o.tau;
  if (o.seed) cfg.transplant.seed = *o.seed;
  if (o.threads) cfg.threads = *o.threads;
  if (o.provenance) cfg.emit_provenance = true;
  return cfg;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Transplant subword embeddings onto an extended vocabulary", "graft"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "graft 0.1.0");

  Options o;
  RunOverrides r;

  auto add_threads = [&](CLI::App* cmd) {
    cmd->add_option("--threads", o.threads, "Worker threads (does not change results)")->check(CLI::PositiveNumber);
  };
  auto add_summary = [&](CLI::App* cmd) {
    cmd->add_option("--summary", o.summary, "Write a machine-readable JSON summary to this file");
  };

  auto* factorize_cmd = app.add_subcommand("factorize", "Factorize source embeddings into P and F_s");
  factorize_cmd->add_option("--embeddings", o.embeddings, "Source embedding matrix (OFAT)")->required();
  factorize_cmd->add_option("--d-prime", o.d_prime, "Latent dimension; omit for no factorization");
  factorize_cmd->add_option("--out", o.out, "Output directory")->required();
  add_threads(factorize_cmd);
  add_summary(factorize_cmd);

  auto* subword_cmd = app.add_subcommand("subword-vectors", "Average word vectors into subword vectors");
  subword_cmd->add_option("--word-vectors", o.word_vectors, "External word vectors (.vec text)")->required();
  subword_cmd->add_option("--vocab", o.vocab, "Subword vocabulary (one token per line)")->required();
  subword_cmd->add_option("--segmentations", o.segmentations, "Precomputed word<TAB>pieces file");
  subword_cmd->add_option("--marker", o.marker, "Word-boundary marker for greedy segmentation");
  subword_cmd->add_option("--out", o.out, "Output prefix (writes <prefix>.ofat and <prefix>.coverage)")->required();
  add_threads(subword_cmd);
  add_summary(subword_cmd);

  auto* transplant_cmd = app.add_subcommand("transplant", "Initialize target coordinates");
  transplant_cmd->add_option("--factorization", o.factorization, "Directory written by `factorize`")->required();
  transplant_cmd->add_option("--source-vocab", o.source_vocab)->required();
  transplant_cmd->add_option("--target-vocab", o.target_vocab)->required();
  transplant_cmd->add_option("--source-subwords", o.source_subwords, "Prefix written by `subword-vectors`")
      ->required();
  transplant_cmd->add_option("--target-subwords", o.target_subwords, "Prefix written by `subword-vectors`")
      ->required();
  transplant_cmd->add_option("--k", o.k, "Neighbors per target subword")->check(CLI::PositiveNumber);
  transplant_cmd->add_option("--tau", o.tau, "Softmax temperature");
  transplant_cmd->add_option("--seed", o.seed, "Seed for the random fallback");
  transplant_cmd->add_flag("--provenance", o.provenance, "Include per-token provenance in report.json");
  transplant_cmd->add_option("--out", o.out, "Output directory")->required();
  add_threads(transplant_cmd);
  add_summary(transplant_cmd);

  auto* assemble_cmd = app.add_subcommand("assemble", "Assemble the target embedding artifact");
  assemble_cmd->add_option("--factorization", o.factorization, "Directory written by `factorize`")->required();
  assemble_cmd->add_option("--transplant", o.transplant_dir, "Directory written by `transplant`")->required();
  assemble_cmd->add_option("--mode", o.mode, "factorized or full");
  assemble_cmd->add_option("--out", o.out, "Output directory")->required();
  add_threads(assemble_cmd);
  add_summary(assemble_cmd);

  auto* run_cmd = app.add_subcommand("run", "Run every stage from a JSON config");
  run_cmd->add_option("--config", r.config, "Pipeline config (JSON); flags override its fields");
  run_cmd->add_option("--source-embeddings", r.source_embeddings);
  run_cmd->add_option("--source-vocab", r.source_vocab);
  run_cmd->add_option("--target-vocab", r.target_vocab);
  run_cmd->add_option("--word-vectors", r.word_vectors);
  run_cmd->add_option("--source-segmentations", r.source_segmentations);
  run_cmd->add_option("--target-segmentations", r.target_segmentations);
  run_cmd->add_option("--out", r.out);
  run_cmd->add_option("--mode", r.mode);
  run_cmd->add_option("--marker", r.marker);
  run_cmd->add_option("--d-prime", r.d_prime);
  run_cmd->add_option("--k", r.k)->check(CLI::PositiveNumber);
  run_cmd->add_option("--tau", r.tau);
  run_cmd->add_option("--seed", r.seed);
  run_cmd->add_option("--threads", r.threads)->check(CLI::PositiveNumber);
  run_cmd->add_flag("--provenance", r.provenance);
  add_summary(run_cmd);

  auto* analyze_cmd = app.add_subcommand("analyze", "PCA explained-variance curve of an embedding matrix");
  analyze_cmd->add_option("--embeddings", o.embeddings, "Embedding matrix (OFAT)")->required();
  analyze_cmd->add_option("--components", o.components, "Number of components to report")->required();
  analyze_cmd->add_flag("--json", o.as_json, "Print JSON instead of a table");

  auto* params_cmd = app.add_subcommand("params", "Embedding parameter count");
  params_cmd->add_option("--vocab", o.vocab_size, "Vocabulary size")->required()->check(CLI::PositiveNumber);
  params_cmd->add_option("--dim", o.dim, "Model hidden size D")->required()->check(CLI::PositiveNumber);
  params_cmd->add_option("--latent", o.latent, "Latent dimension D'; omit for no factorization")
      ->check(CLI::PositiveNumber);
  params_cmd->add_flag("--json", o.as_json, "Print JSON");

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitConfig;
  }

  StageLog log(&err);
  try {
    if (*factorize_cmd) {
      factorize_stage(o.embeddings, o.d_prime, o.out, o.threads, log);
      write_summary(o.summary, {{"stages", log.stages()}});
    } else if (*subword_cmd) {
      const auto words = load_word_vectors(o.word_vectors);
      subword_vectors_stage(words, o.vocab, o.segmentations, o.marker, o.out, o.threads, log);
      write_summary(o.summary, {{"stages", log.stages()}});
    } else if (*transplant_cmd) {
      const TransplantConfig cfg{o.k, o.tau, o.seed};
      const auto report = transplant_stage(o.factorization, o.source_vocab, o.target_vocab, o.source_subwords,
                                           o.target_subwords, cfg, o.provenance, o.out, o.threads, log);
      write_summary(o.summary,
                    {{"counts", report.at("counts")}, {"coverage", report.at("coverage")}, {"stages", log.stages()}});
    } else if (*assemble_cmd) {
      assemble_stage(o.factorization, o.transplant_dir, parse_assembly_mode(o.mode), o.out, o.threads, log);
      write_summary(o.summary, {{"stages", log.stages()}});
    } else if (*run_cmd) {
      const auto cfg = build_run_config(r);
      const auto summary = run_pipeline(cfg, log);
      write_summary(o.summary, summary);
    } else if (*analyze_cmd) {
      const auto report = explained_variance(load_matrix(o.embeddings), o.components);
      if (o.as_json) {
        out << nlohmann::json{{"singular_values", report.singular_values},
                              {"explained_variance", report.explained_variance},
                              {"frobenius_norm", report.frobenius_norm}}
                   .dump(2)
            << "\n";
      } else {
        out << "components\texplained_variance\n";
        for (std::size_t i = 0; i < report.explained_variance.size(); ++i) {
          out << fmt::format("{}\t{:.6f}\n", i + 1, report.explained_variance[i]);
        }
      }
    } else if (*params_cmd) {
      const auto count = count_params(o.vocab_size, o.dim, o.latent);
      if (o.as_json) {
        out << nlohmann::json{{"embedding_params", count.embedding_params}, {"note", count.note}}.dump() << "\n";
      } else {
        out << count.embedding_params << "\n";
      }
    }
  } catch (const ConfigError& e) {
    err << "graft: config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "graft: error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace graft
