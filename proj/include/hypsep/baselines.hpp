#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <queue>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hypsep/error.hpp"
#include "hypsep/features.hpp"
#include "hypsep/hyphc.hpp"
#include "hypsep/log.hpp"

/// Comparison reducers: PCA, feature agglomeration (Ward), spectral embedding.
namespace hypsep::baselines {

enum class Method { pca, fa, se };

struct ReducerSpec {
  Method method = Method::pca;
  std::size_t dim = 60;
  std::size_t se_neighbors = 10;
  std::uint64_t seed = 0;  ///< for the SE bandwidth sample
};

inline std::string_view method_name(Method m) {
  switch (m) {
    case Method::pca: return "pca";
    case Method::fa: return "fa";
    case Method::se: return "se";
  }
  return "?";
}

inline Method parse_method(std::string_view s) {
  if (s == "pca") return Method::pca;
  if (s == "fa") return Method::fa;
  if (s == "se") return Method::se;
  throw UsageError("unknown reducer '" + std::string(s) + "' (expected pca, fa or se)");
}

/// Flips each column so that its largest-magnitude entry is positive (first such entry on ties).
inline void fix_signs(Eigen::MatrixXd& vectors) {
  for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
    Eigen::Index arg = 0;
    vectors.col(c).cwiseAbs().maxCoeff(&arg);
    if (vectors(arg, c) < 0) vectors.col(c) *= -1.0;
  }
}

struct PcaResult {
  Eigen::MatrixXd projected;   ///< n x d scores
  Eigen::MatrixXd components;  ///< m x d loadings, columns unit norm
  Eigen::VectorXd variances;   ///< covariance eigenvalues, descending
};

/// Projection onto the top-d eigenvectors of the sample covariance.
inline PcaResult pca(const Eigen::MatrixXd& x, std::size_t d) {
  const Eigen::Index n = x.rows(), m = x.cols(), dim = static_cast<Eigen::Index>(d);
  if (d < 1) throw InvalidConfig("pca: dimension must be at least 1");
  if (n < 2) throw DegenerateData("pca: need at least two rows");
  const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const Eigen::VectorXd evals = eig.eigenvalues().reverse();
  Eigen::MatrixXd evecs = eig.eigenvectors().rowwise().reverse();

  const double tol = std::max(1.0, evals.size() ? evals(0) : 0.0) * 1e-10 * static_cast<double>(m);
  Eigen::Index rank = 0;
  while (rank < evals.size() && evals(rank) > tol) ++rank;

  PcaResult out;
  const Eigen::Index keep = std::min(dim, rank);
  out.components = Eigen::MatrixXd::Zero(m, dim);
  out.components.leftCols(keep) = evecs.leftCols(keep);
  Eigen::MatrixXd kept = out.components.leftCols(keep);
  fix_signs(kept);
  out.components.leftCols(keep) = kept;
  out.variances = Eigen::VectorXd::Zero(dim);
  out.variances.head(keep) = evals.head(keep);
  if (keep < dim)
    log::warn("pca: requested " + std::to_string(d) + " components but data rank is " + std::to_string(rank) +
              "; padding with zero columns");
  out.projected = centered * out.components;
  return out;
}

inline Eigen::MatrixXd pca_reduce(const Eigen::MatrixXd& x, std::size_t d) { return pca(x, d).projected; }

// ---------------------------------------------------------------------------
// Feature agglomeration
// ---------------------------------------------------------------------------

struct Merge {
  std::size_t a, b;  ///< cluster ids (smallest member column); the merged cluster keeps id a < b
  double cost;       ///< Ward increase in within-cluster sum of squares
  bool operator==(const Merge&) const = default;
};

struct Agglomeration {
  std::vector<Merge> merges;
  std::vector<std::size_t> labels;  ///< column -> output cluster index (clusters ordered by first column)
  std::size_t clusters = 0;
};

/// Ward clustering of the columns of x down to d clusters, via Lance-Williams updates.
/// Ties in merge cost go to the lexicographically smallest (a, b).
inline Agglomeration ward_columns(const Eigen::MatrixXd& x, std::size_t d) {
  const auto m = static_cast<std::size_t>(x.cols());
  if (d < 1 || d > m) throw InvalidConfig("feature agglomeration: need 1 <= d <= columns");
  // delta(i, j) = |A||B| / (|A| + |B|) |c_A - c_B|^2
  Eigen::MatrixXd delta(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i; j < m; ++j) {
      const double v = 0.5 * (x.col(static_cast<Eigen::Index>(i)) - x.col(static_cast<Eigen::Index>(j))).squaredNorm();
      delta(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      delta(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
    }
  std::vector<std::size_t> size(m, 1), owner(m);
  std::iota(owner.begin(), owner.end(), 0);
  std::vector<std::size_t> active(m);
  std::iota(active.begin(), active.end(), 0);

  Agglomeration out;
  while (active.size() > d) {
    std::size_t best_a = 0, best_b = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < active.size(); ++p)
      for (std::size_t q = p + 1; q < active.size(); ++q) {
        const double v = delta(static_cast<Eigen::Index>(active[p]), static_cast<Eigen::Index>(active[q]));
        if (v < best) {
          best = v;
          best_a = active[p];
          best_b = active[q];
        }
      }
    out.merges.push_back({best_a, best_b, best});
    const double na = static_cast<double>(size[best_a]), nb = static_cast<double>(size[best_b]);
    for (auto k : active) {
      if (k == best_a || k == best_b) continue;
      const double nk = static_cast<double>(size[k]);
      const auto ik = static_cast<Eigen::Index>(k), ia = static_cast<Eigen::Index>(best_a), ib = static_cast<Eigen::Index>(best_b);
      const double v = ((na + nk) * delta(ik, ia) + (nb + nk) * delta(ik, ib) - nk * best) / (na + nb + nk);
      delta(ik, ia) = delta(ia, ik) = v;
    }
    size[best_a] += size[best_b];
    for (auto& o : owner)
      if (o == best_b) o = best_a;
    active.erase(std::find(active.begin(), active.end(), best_b));
  }
  out.clusters = active.size();
  out.labels.resize(m);
  for (std::size_t c = 0; c < m; ++c)
    out.labels[c] = static_cast<std::size_t>(std::find(active.begin(), active.end(), owner[c]) - active.begin());
  return out;
}

/// Each output column is the mean of one Ward cluster of input columns.
inline Eigen::MatrixXd feature_agglomeration(const Eigen::MatrixXd& x, std::size_t d) {
  const auto agg = ward_columns(x, d);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(x.rows(), static_cast<Eigen::Index>(agg.clusters));
  std::vector<double> count(agg.clusters, 0.0);
  for (std::size_t c = 0; c < agg.labels.size(); ++c) {
    out.col(static_cast<Eigen::Index>(agg.labels[c])) += x.col(static_cast<Eigen::Index>(c));
    count[agg.labels[c]] += 1.0;
  }
  for (std::size_t k = 0; k < agg.clusters; ++k) out.col(static_cast<Eigen::Index>(k)) /= count[k];
  return out;
}

// ---------------------------------------------------------------------------
// Spectral embedding
// ---------------------------------------------------------------------------

/// Symmetric k-NN affinity: union of directed k-NN edges with Gaussian weights.
inline Eigen::MatrixXd knn_affinity(const Eigen::MatrixXd& x, std::size_t k, double sigma) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd sq(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j) sq(i, j) = sq(j, i) = (x.row(i) - x.row(j)).squaredNorm();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  const double inv = 1.0 / (2.0 * sigma * sigma);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  const auto kk = std::min<std::size_t>(k, static_cast<std::size_t>(n - 1));
  for (Eigen::Index i = 0; i < n; ++i) {
    std::iota(order.begin(), order.end(), 0);
    auto closer = [&](Eigen::Index a, Eigen::Index b) { return sq(i, a) != sq(i, b) ? sq(i, a) < sq(i, b) : a < b; };
    // slot 0 holds the point itself; neighbors are ranked among the rest
    std::swap(order[0], order[static_cast<std::size_t>(i)]);
    std::partial_sort(order.begin() + 1, order.begin() + 1 + static_cast<std::ptrdiff_t>(kk), order.end(), closer);
    for (std::size_t r = 1; r <= kk; ++r) {
      const auto j = order[r];
      w(i, j) = w(j, i) = std::exp(-sq(i, j) * inv);
    }
  }
  return w;
}

inline std::vector<std::size_t> connected_components(const Eigen::MatrixXd& w, std::size_t& count) {
  const auto n = static_cast<std::size_t>(w.rows());
  std::vector<std::size_t> comp(n, static_cast<std::size_t>(-1));
  count = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (comp[s] != static_cast<std::size_t>(-1)) continue;
    std::queue<std::size_t> q;
    q.push(s);
    comp[s] = count;
    while (!q.empty()) {
      const auto v = q.front();
      q.pop();
      for (std::size_t u = 0; u < n; ++u)
        if (w(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(u)) > 0 && comp[u] == static_cast<std::size_t>(-1)) {
          comp[u] = count;
          q.push(u);
        }
    }
    ++count;
  }
  return comp;
}

struct SpectralResult {
  Eigen::MatrixXd embedding;   ///< n x d, orthonormal columns
  Eigen::VectorXd eigenvalues; ///< of the normalized Laplacian, ascending
  std::size_t components = 1;
};

/// Laplacian eigenmap on the symmetric-normalized Laplacian I - D^-1/2 W D^-1/2 of the k-NN graph.
/// The trivial eigenvector D^1/2 1 is dropped. A disconnected graph is decomposed per component;
/// its zero eigenspace contributes deterministic contrast vectors between components, followed by
/// the nonzero spectra of all components merged in ascending order.
inline SpectralResult spectral_embedding(const Eigen::MatrixXd& x, std::size_t d, std::size_t k,
                                         std::uint64_t seed = 0, double sigma = 0) {
  const Eigen::Index n = x.rows();
  if (d < 1) throw InvalidConfig("spectral embedding: dimension must be at least 1");
  if (k < 1) throw InvalidConfig("spectral embedding: neighbors must be at least 1");
  if (static_cast<std::size_t>(n) <= d + 1) throw DegenerateData("spectral embedding: need more than d + 1 rows");
  if (!(sigma > 0)) sigma = hyphc::median_heuristic_sigma(x, 10000, seed);

  const Eigen::MatrixXd w = knn_affinity(x, k, sigma);
  const Eigen::VectorXd deg = w.rowwise().sum();
  const Eigen::VectorXd sqrt_deg = deg.cwiseSqrt();

  std::size_t ncomp = 0;
  const auto comp = connected_components(w, ncomp);
  if (ncomp > 1)
    log::warn("spectral embedding: k-NN graph has " + std::to_string(ncomp) +
              " connected components; embedding them independently");

  struct Pair {
    double value;
    std::size_t order;  // tie-break: contrast vectors first, then component order
    Eigen::VectorXd vec;
  };
  std::vector<Pair> pairs;

  // zero eigenspace: component indicators weighted by D^1/2, minus the global trivial vector
  {
    std::vector<Eigen::VectorXd> basis;
    Eigen::VectorXd trivial = sqrt_deg.normalized();
    basis.push_back(trivial);
    for (std::size_t c = 0; c < ncomp; ++c) {
      Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
      for (Eigen::Index i = 0; i < n; ++i)
        if (comp[static_cast<std::size_t>(i)] == c) v(i) = sqrt_deg(i);
      for (const auto& b : basis) v -= b.dot(v) * b;
      if (v.norm() < 1e-10) continue;
      v.normalize();
      basis.push_back(v);
      pairs.push_back({0.0, pairs.size(), v});
    }
  }
  for (std::size_t c = 0; c < ncomp; ++c) {
    std::vector<Eigen::Index> members;
    for (Eigen::Index i = 0; i < n; ++i)
      if (comp[static_cast<std::size_t>(i)] == c) members.push_back(i);
    const auto sz = static_cast<Eigen::Index>(members.size());
    if (sz < 2) continue;
    Eigen::MatrixXd lap(sz, sz);
    for (Eigen::Index a = 0; a < sz; ++a)
      for (Eigen::Index b = 0; b < sz; ++b) {
        const auto i = members[static_cast<std::size_t>(a)], j = members[static_cast<std::size_t>(b)];
        lap(a, b) = (a == b ? 1.0 : 0.0) - w(i, j) / (sqrt_deg(i) * sqrt_deg(j));
      }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(lap);
    const auto take = std::min<Eigen::Index>(sz - 1, static_cast<Eigen::Index>(d));
    for (Eigen::Index e = 1; e <= take; ++e) {
      Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
      for (Eigen::Index a = 0; a < sz; ++a) v(members[static_cast<std::size_t>(a)]) = eig.eigenvectors()(a, e);
      pairs.push_back({std::max(0.0, eig.eigenvalues()(e)), pairs.size(), std::move(v)});
    }
  }
  std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.value < b.value; });

  SpectralResult out;
  out.components = ncomp;
  out.embedding = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(d));
  out.eigenvalues = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
  const auto have = std::min(pairs.size(), d);
  if (have < d) log::warn("spectral embedding: only " + std::to_string(have) + " eigenvectors available; padding with zeros");
  for (std::size_t c = 0; c < have; ++c) {
    out.embedding.col(static_cast<Eigen::Index>(c)) = pairs[c].vec;
    out.eigenvalues(static_cast<Eigen::Index>(c)) = pairs[c].value;
  }
  Eigen::MatrixXd kept = out.embedding.leftCols(static_cast<Eigen::Index>(have));
  fix_signs(kept);
  out.embedding.leftCols(static_cast<Eigen::Index>(have)) = kept;
  return out;
}

/// Runs one reducer on a standardized matrix and labels the output columns.
inline FeatureMatrix reduce(const FeatureMatrix& standardized, const ReducerSpec& spec) {
  if (spec.dim < 1) throw InvalidConfig("reducer dimension must be at least 1");
  if (spec.dim >= standardized.cols())
    throw InvalidConfig("reducer dimension must be below the input dimension");
  FeatureMatrix out;
  out.row_ids = standardized.row_ids;
  switch (spec.method) {
    case Method::pca: out.values = pca_reduce(standardized.values, spec.dim); break;
    case Method::fa: out.values = feature_agglomeration(standardized.values, spec.dim); break;
    case Method::se:
      out.values = spectral_embedding(standardized.values, spec.dim, spec.se_neighbors, spec.seed).embedding;
      break;
  }
  for (std::size_t c = 0; c < spec.dim; ++c) out.columns.push_back(feature_label("e_", c + 1));
  return out;
}

}  // namespace hypsep::baselines
