// Copyright 2026 The Graft Authors
// SPDX-License-Identifier: Apache-2.0

#include "graft/factorizer.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "graft/error.hpp"
#include "graft/parallel.hpp"

namespace graft {

namespace {

constexpr std::size_t kRowBlock = 1024;

// Copies rows [begin, end) of m into dst as doubles, optionally subtracting column means.
void load_rows(const DenseMatrix& m, std::size_t begin, std::size_t end, const std::vector<double>* means,
               Eigen::Ref<Eigen::MatrixXd> dst) {
  for (std::size_t r = begin; r < end; ++r) {
    const auto row = m.row(r);
    const auto i = static_cast<Eigen::Index>(r - begin);
    for (std::size_t c = 0; c < m.cols(); ++c) {
      dst(i, static_cast<Eigen::Index>(c)) = static_cast<double>(row[c]) - (means ? (*means)[c] : 0.0);
    }
  }
}

// Upper-triangular R with R^T R = A^T A, built by streaming row blocks of A
// through repeated QR of [R; block]. Only O(cols^2 + block * cols) memory.
Eigen::MatrixXd triangular_factor(const DenseMatrix& m, const std::vector<double>* means) {
  const auto n = static_cast<Eigen::Index>(m.cols());
  const std::size_t block = std::max<std::size_t>(4 * m.cols(), 1024);
  Eigen::MatrixXd r(0, n);
  for (std::size_t start = 0; start < m.rows(); start += block) {
    const std::size_t end = std::min(m.rows(), start + block);
    Eigen::MatrixXd stack(r.rows() + static_cast<Eigen::Index>(end - start), n);
    stack.topRows(r.rows()) = r;
    load_rows(m, start, end, means, stack.bottomRows(static_cast<Eigen::Index>(end - start)));
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(stack);
    const Eigen::Index keep = std::min(stack.rows(), n);
    r = qr.matrixQR().topRows(keep).triangularView<Eigen::Upper>();
  }
  return r;
}

struct RightSingularSystem {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;  // cols x rank, columns are right singular vectors
};

RightSingularSystem right_singular_system(const DenseMatrix& m, const std::vector<double>* means, bool with_vectors) {
  const Eigen::MatrixXd r = triangular_factor(m, means);
  RightSingularSystem out;
  if (r.rows() == 0) {
    out.vectors = Eigen::MatrixXd::Identity(r.cols(), 0);
    return out;
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(r, with_vectors ? Eigen::ComputeThinV : 0);
  if (svd.info() != Eigen::Success) {
    throw Error(fmt::format("SVD did not converge on {}x{} matrix (R is {}x{}, |R|_F = {})", m.rows(), m.cols(),
                            r.rows(), r.cols(), r.norm()));
  }
  out.values = svd.singularValues();
  if (with_vectors) out.vectors = svd.matrixV();
  return out;
}

// Flip so that the largest-magnitude entry is positive; ties go to the earliest index.
void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (std::abs(v(i)) > std::abs(v(best))) best = i;
  }
  if (v.size() > 0 && v(best) < 0) v = -v;
}

void check_finite(const DenseMatrix& m, const char* what) {
  if (auto bad = m.first_non_finite()) {
    throw Error(fmt::format("{} has a non-finite value at row {}, col {}", what, *bad / m.cols(), *bad % m.cols()));
  }
}

}  // namespace

FactorizedEmbedding factorize(const DenseMatrix& embeddings, std::size_t d_prime, unsigned threads) {
  const std::size_t limit = std::min(embeddings.rows(), embeddings.cols());
  if (d_prime < 1 || d_prime > limit) {
    throw ConfigError("d_prime", fmt::format("must be in [1, {}] for a {}x{} matrix, got {}", limit,
                                             embeddings.rows(), embeddings.cols(), d_prime));
  }
  check_finite(embeddings, "embedding matrix");

  auto system = right_singular_system(embeddings, nullptr, true);
  const auto k = static_cast<Eigen::Index>(d_prime);
  Eigen::MatrixXd basis = system.vectors.leftCols(k);
  for (Eigen::Index j = 0; j < k; ++j) fix_sign(basis.col(j));

  const std::size_t d_model = embeddings.cols();
  FactorizedEmbedding fe;
  fe.primitives = DenseMatrix(d_prime, d_model);
  for (std::size_t i = 0; i < d_prime; ++i) {
    for (std::size_t c = 0; c < d_model; ++c) {
      fe.primitives(i, c) = static_cast<float>(basis(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(i)));
    }
  }

  // F = E V_k, which equals U_k S_k.
  fe.coordinates = DenseMatrix(embeddings.rows(), d_prime);
  parallel_for_blocks(block_count(embeddings.rows(), kRowBlock), threads, [&](std::size_t b) {
    const std::size_t begin = b * kRowBlock;
    const std::size_t end = std::min(embeddings.rows(), begin + kRowBlock);
    Eigen::MatrixXd rows(static_cast<Eigen::Index>(end - begin), static_cast<Eigen::Index>(d_model));
    load_rows(embeddings, begin, end, nullptr, rows);
    const Eigen::MatrixXd coords = rows * basis;
    for (std::size_t r = begin; r < end; ++r) {
      auto dst = fe.coordinates.row(r);
      for (std::size_t j = 0; j < d_prime; ++j) {
        dst[j] = static_cast<float>(coords(static_cast<Eigen::Index>(r - begin), static_cast<Eigen::Index>(j)));
      }
    }
  });
  return fe;
}

FactorizedEmbedding identity_factorization(const DenseMatrix& embeddings) {
  check_finite(embeddings, "embedding matrix");
  return FactorizedEmbedding{DenseMatrix::identity(embeddings.cols()), embeddings, true};
}

DenseMatrix up_project(const DenseMatrix& coordinates, const DenseMatrix& primitives, bool identity,
                       std::optional<std::span<const std::size_t>> rows, unsigned threads) {
  if (coordinates.cols() != primitives.rows()) {
    throw DimensionError(fmt::format("coordinates have {} columns, primitives have {} rows", coordinates.cols(),
                                     primitives.rows()));
  }
  std::vector<std::size_t> all;
  if (!rows) {
    all.resize(coordinates.rows());
    std::iota(all.begin(), all.end(), std::size_t{0});
    rows = all;
  }
  for (auto r : *rows) {
    if (r >= coordinates.rows()) {
      throw DimensionError(fmt::format("row {} out of range for {} coordinates", r, coordinates.rows()));
    }
  }

  const std::size_t n = rows->size();
  const std::size_t k = primitives.rows();
  const std::size_t d = primitives.cols();
  DenseMatrix out(n, d);
  if (identity) {
    if (k != d) throw DimensionError(fmt::format("identity primitives must be square, got {}x{}", k, d));
    for (std::size_t i = 0; i < n; ++i) {
      const auto src = coordinates.row((*rows)[i]);
      std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
  }

  parallel_for_blocks(block_count(n, kRowBlock), threads, [&](std::size_t b) {
    std::vector<double> acc(d);
    const std::size_t end = std::min(n, (b + 1) * kRowBlock);
    for (std::size_t i = b * kRowBlock; i < end; ++i) {
      std::fill(acc.begin(), acc.end(), 0.0);
      const auto f = coordinates.row((*rows)[i]);
      for (std::size_t j = 0; j < k; ++j) {
        const double w = f[j];
        const auto p = primitives.row(j);
        for (std::size_t c = 0; c < d; ++c) acc[c] += w * static_cast<double>(p[c]);
      }
      auto dst = out.row(i);
      for (std::size_t c = 0; c < d; ++c) dst[c] = static_cast<float>(acc[c]);
    }
  });
  return out;
}

DenseMatrix reconstruct(const FactorizedEmbedding& fe, std::optional<std::span<const std::size_t>> rows,
                        unsigned threads) {
  return up_project(fe.coordinates, fe.primitives, fe.identity, rows, threads);
}

std::vector<double> singular_values(const DenseMatrix& m) {
  check_finite(m, "matrix");
  const auto system = right_singular_system(m, nullptr, false);
  return {system.values.data(), system.values.data() + system.values.size()};
}

SpectrumReport explained_variance(const DenseMatrix& embeddings, std::size_t max_components) {
  if (embeddings.rows() < 2) throw ConfigError("rows", "explained variance needs at least 2 rows");
  const std::size_t limit = std::min(embeddings.rows() - 1, embeddings.cols());
  if (max_components < 1 || max_components > limit) {
    throw ConfigError("max_components", fmt::format("must be in [1, {}], got {}", limit, max_components));
  }
  check_finite(embeddings, "embedding matrix");

  std::vector<double> means(embeddings.cols(), 0.0);
  for (std::size_t r = 0; r < embeddings.rows(); ++r) {
    const auto row = embeddings.row(r);
    for (std::size_t c = 0; c < embeddings.cols(); ++c) means[c] += row[c];
  }
  for (auto& m : means) m /= static_cast<double>(embeddings.rows());

  double sum_sq = 0.0;
  for (std::size_t r = 0; r < embeddings.rows(); ++r) {
    const auto row = embeddings.row(r);
    for (std::size_t c = 0; c < embeddings.cols(); ++c) {
      const double x = row[c] - means[c];
      sum_sq += x * x;
    }
  }

  const auto system = right_singular_system(embeddings, &means, false);
  SpectrumReport report;
  report.singular_values.assign(system.values.data(), system.values.data() + system.values.size());
  report.frobenius_norm = std::sqrt(sum_sq);

  double total = 0.0;
  for (double s : report.singular_values) total += s * s;
  report.explained_variance.reserve(max_components);
  double running = 0.0;
  for (std::size_t i = 0; i < max_components; ++i) {
    if (i < report.singular_values.size()) running += report.singular_values[i] * report.singular_values[i];
    report.explained_variance.push_back(total > 0.0 ? std::min(1.0, running / total) : 1.0);
  }
  return report;
}

ParamCount count_params(std::uint64_t vocab_size, std::uint64_t d_model, std::optional<std::uint64_t> d_prime) {
  if (!d_prime) {
    return {vocab_size * d_model, fmt::format("full: {} x {}", vocab_size, d_model)};
  }
  return {vocab_size * *d_prime + *d_prime * d_model,
          fmt::format("factorized: {} x {} + {} x {}", vocab_size, *d_prime, *d_prime, d_model)};
}

void save_factorization(const FactorizedEmbedding& fe, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_matrix(fe.primitives, dir / "p.ofat");
  save_matrix(fe.coordinates, dir / "f_s.ofat");
  nlohmann::json manifest = {
      {"d_prime", fe.d_prime()},
      {"d_model", fe.d_model()},
      {"vocab_size", fe.vocab_size()},
      {"identity", fe.identity},
      {"sign_convention", kSignConvention},
  };
  write_file(dir / "factorization.json", manifest.dump(2) + "\n");
}

FactorizedEmbedding load_factorization(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "factorization.json";
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(fmt::format("{}: {}", manifest_path.string(), e.what()));
  }
  FactorizedEmbedding fe;
  fe.primitives = load_matrix(dir / "p.ofat");
  fe.coordinates = load_matrix(dir / "f_s.ofat");
  fe.identity = manifest.value("identity", false);
  const auto d_prime = manifest.at("d_prime").get<std::size_t>();
  const auto d_model = manifest.at("d_model").get<std::size_t>();
  const auto vocab_size = manifest.at("vocab_size").get<std::size_t>();
  if (fe.primitives.rows() != d_prime || fe.primitives.cols() != d_model || fe.coordinates.cols() != d_prime ||
      fe.coordinates.rows() != vocab_size) {
    throw DimensionError(fmt::format("{}: matrices do not match manifest (P {}x{}, F {}x{}, manifest d'={} D={} V={})",
                                     dir.string(), fe.primitives.rows(), fe.primitives.cols(), fe.coordinates.rows(),
                                     fe.coordinates.cols(), d_prime, d_model, vocab_size));
  }
  return fe;
}

}  // namespace graft
