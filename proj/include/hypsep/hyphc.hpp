#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hypsep/error.hpp"
#include "hypsep/features.hpp"
#include "hypsep/hyperbolic.hpp"
#include "hypsep/log.hpp"
#include "hypsep/parallel.hpp"
#include "hypsep/random.hpp"

/// Hyperbolic hierarchical clustering: leaves embedded in the Poincare ball, trained on a
/// continuous relaxation of Dasgupta's cost, decoded back to a binary tree.
namespace hypsep::hyphc {

// ---------------------------------------------------------------------------
// Similarities
// ---------------------------------------------------------------------------

struct SimilarityConfig {
  double sigma = 0.0;  ///< kernel bandwidth; <= 0 selects the median heuristic
  std::size_t sample_size = 10000;
  std::uint64_t seed = 0;
};

/// Gaussian kernel exp(-|a - b|^2 / (2 sigma^2)).
template <typename A, typename B>
double gaussian_similarity(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b, double sigma) {
  return std::exp(-(a - b).squaredNorm() / (2.0 * sigma * sigma));
}

/// Median Euclidean distance over `sample_size` seeded row pairs, or over every pair when that is
/// no more than the sample size.
inline double median_heuristic_sigma(const Eigen::MatrixXd& m, std::size_t sample_size = 10000,
                                     std::uint64_t seed = 0) {
  const auto n = static_cast<std::size_t>(m.rows());
  if (n < 2) throw DegenerateData("median heuristic needs at least two rows");
  std::vector<double> d;
  const std::size_t all_pairs = n * (n - 1) / 2;
  if (all_pairs <= sample_size) {
    d.reserve(all_pairs);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        d.push_back((m.row(static_cast<Eigen::Index>(i)) - m.row(static_cast<Eigen::Index>(j))).norm());
  } else {
    Engine eng(derive_seed(seed, 0x51a));
    d.reserve(sample_size);
    while (d.size() < sample_size) {
      const auto i = uniform_index(eng, n), j = uniform_index(eng, n);
      if (i == j) continue;
      d.push_back((m.row(static_cast<Eigen::Index>(i)) - m.row(static_cast<Eigen::Index>(j))).norm());
    }
  }
  const std::size_t mid = d.size() / 2;
  std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid), d.end());
  double med = d[mid];
  if (d.size() % 2 == 0) med = 0.5 * (med + *std::max_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid)));
  if (!(med > 0.0)) throw DegenerateData("median pairwise distance is zero: sampled rows are identical");
  return med;
}

/// Gaussian similarities between rows of a standardized matrix, evaluated on demand.
class GaussianWeights {
 public:
  GaussianWeights(const Eigen::MatrixXd& rows, double sigma) : rows_(&rows), inv_two_sigma_sq_(1.0 / (2.0 * sigma * sigma)) {}
  double operator()(std::size_t i, std::size_t j) const {
    return std::exp(-(rows_->row(static_cast<Eigen::Index>(i)) - rows_->row(static_cast<Eigen::Index>(j))).squaredNorm() *
                    inv_two_sigma_sq_);
  }

 private:
  const Eigen::MatrixXd* rows_;
  double inv_two_sigma_sq_;
};

/// Explicit symmetric weight matrix.
class MatrixWeights {
 public:
  explicit MatrixWeights(const Eigen::MatrixXd& w) : w_(&w) {}
  double operator()(std::size_t i, std::size_t j) const {
    return (*w_)(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }

 private:
  const Eigen::MatrixXd* w_;
};

// ---------------------------------------------------------------------------
// Continuous cost
// ---------------------------------------------------------------------------

using Triplet = std::array<std::size_t, 3>;
/// (w_ij, w_ik, w_jk) for a triplet (i, j, k)
using TripletWeights = std::array<double, 3>;

template <typename WeightFn>
TripletWeights triplet_weights(const Triplet& t, const WeightFn& w) {
  return {w(t[0], t[1]), w(t[0], t[2]), w(t[1], t[2])};
}

namespace detail {

inline constexpr std::array<std::array<int, 2>, 3> kPairs = {{{0, 1}, {0, 2}, {1, 2}}};

inline std::array<double, 3> softmax(const std::array<double, 3>& z, double tau) {
  const double top = std::max({z[0], z[1], z[2]});
  std::array<double, 3> s{};
  double sum = 0;
  for (int m = 0; m < 3; ++m) sum += s[m] = std::exp((z[m] - top) / tau);
  for (auto& v : s) v /= sum;
  return s;
}

struct TripletTerm {
  double cost = 0;
  std::array<Eigen::VectorXd, 3> grad;  // w.r.t. points t[0], t[1], t[2]
};

/// cost = w_ij + w_ik + w_jk - <w, softmax(depths / tau)>
inline double triplet_cost(const Eigen::MatrixXd& pts, const Triplet& t, const TripletWeights& w, double tau) {
  std::array<double, 3> depth{};
  for (int m = 0; m < 3; ++m)
    depth[m] = poincare::lca_depth(pts.row(static_cast<Eigen::Index>(t[kPairs[m][0]])).transpose(),
                                   pts.row(static_cast<Eigen::Index>(t[kPairs[m][1]])).transpose());
  const auto s = softmax(depth, tau);
  return w[0] + w[1] + w[2] - (w[0] * s[0] + w[1] * s[1] + w[2] * s[2]);
}

inline void triplet_cost_grad(const Eigen::MatrixXd& pts, const Triplet& t, const TripletWeights& w, double tau,
                              TripletTerm& out) {
  std::array<poincare::LcaDepth, 3> lca;
  std::array<double, 3> depth{};
  for (int m = 0; m < 3; ++m) {
    lca[m] = poincare::lca_depth_with_grad(pts.row(static_cast<Eigen::Index>(t[kPairs[m][0]])).transpose(),
                                           pts.row(static_cast<Eigen::Index>(t[kPairs[m][1]])).transpose());
    depth[m] = lca[m].value;
  }
  const auto s = softmax(depth, tau);
  const double mean_w = w[0] * s[0] + w[1] * s[1] + w[2] * s[2];
  out.cost = w[0] + w[1] + w[2] - mean_w;
  for (auto& g : out.grad) g.setZero(pts.cols());
  for (int m = 0; m < 3; ++m) {
    // d cost / d depth_m = -(1/tau) s_m (w_m - <w, s>)
    const double coef = -s[m] * (w[m] - mean_w) / tau;
    if (coef == 0.0) continue;
    out.grad[kPairs[m][0]] += coef * lca[m].grad_x;
    out.grad[kPairs[m][1]] += coef * lca[m].grad_y;
  }
}

}  // namespace detail

/// Sum of relaxed triplet costs. The additive constant 2 * sum(w_ij) of the discrete identity is omitted.
inline double continuous_cost(const Eigen::MatrixXd& points, std::span<const Triplet> triplets,
                              std::span<const TripletWeights> weights, double tau) {
  double total = 0;
  for (std::size_t b = 0; b < triplets.size(); ++b) total += detail::triplet_cost(points, triplets[b], weights[b], tau);
  return total;
}

/// continuous_cost and its Euclidean gradient (same shape as points).
inline double continuous_cost_grad(const Eigen::MatrixXd& points, std::span<const Triplet> triplets,
                                   std::span<const TripletWeights> weights, double tau, Eigen::MatrixXd& grad) {
  grad.setZero(points.rows(), points.cols());
  double total = 0;
  detail::TripletTerm term;
  for (std::size_t b = 0; b < triplets.size(); ++b) {
    detail::triplet_cost_grad(points, triplets[b], weights[b], tau, term);
    total += term.cost;
    for (int m = 0; m < 3; ++m) grad.row(static_cast<Eigen::Index>(triplets[b][m])) += term.grad[m].transpose();
  }
  return total;
}

// ---------------------------------------------------------------------------
// Optimization
// ---------------------------------------------------------------------------

enum class Optimizer { sgd, adam };

struct Config {
  std::size_t dim = 60;
  double tau = 1.0;
  double anneal_factor = 0.3;  ///< tau multiplier applied after each third of training
  std::size_t epochs = 50;
  std::size_t triplets_per_epoch = 0;  ///< 0 means 50 * n
  std::size_t batch_size = 64;
  double learning_rate = 1e-2;
  std::uint64_t seed = 0;
  double ball_eps = poincare::kDefaultBallEps;
  double init_radius = 0.5;
  std::size_t threads = 1;
  Optimizer optimizer = Optimizer::adam;
  double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;

  void validate() const {
    if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) throw InvalidConfig("hyphc: Adam betas must lie in [0, 1)");
    if (dim < 2) throw InvalidConfig("hyphc: dimension must be at least 2");
    if (!(tau > 0)) throw InvalidConfig("hyphc: temperature must be positive");
    if (epochs < 1) throw InvalidConfig("hyphc: epochs must be at least 1");
    if (batch_size < 1) throw InvalidConfig("hyphc: batch size must be at least 1");
    if (!(learning_rate > 0)) throw InvalidConfig("hyphc: learning rate must be positive");
    if (!(ball_eps > 0 && ball_eps < 1)) throw InvalidConfig("hyphc: ball epsilon must lie in (0, 1)");
    if (!(init_radius > 0 && init_radius < 1)) throw InvalidConfig("hyphc: init radius must lie in (0, 1)");
    if (!(anneal_factor > 0)) throw InvalidConfig("hyphc: anneal factor must be positive");
  }
};

/// Leaf embedding: one ball point per row.
struct BallEmbedding {
  std::vector<std::string> ids;
  Eigen::MatrixXd points;
  std::size_t size() const noexcept { return static_cast<std::size_t>(points.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(points.cols()); }
};

struct EpochLog {
  std::size_t epoch;
  double loss;  ///< mean relaxed triplet cost over the epoch
  double tau;
};

struct TrainResult {
  BallEmbedding embedding;
  std::vector<EpochLog> log;
  double final_loss = 0;
  bool loss_trend_ok = true;
};

/// Uniform draw from the ball of the given radius.
inline Eigen::MatrixXd init_points(std::size_t n, std::size_t dim, double radius, std::uint64_t seed) {
  Engine eng(derive_seed(seed, 0x1417));
  std::normal_distribution<double> normal;
  Eigen::MatrixXd pts(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(dim));
    do {
      for (auto& c : v) c = normal(eng);
    } while (v.norm() == 0.0);
    const double r = radius * std::pow(uniform01(eng), 1.0 / static_cast<double>(dim));
    pts.row(i) = (r / v.norm()) * v.transpose();
  }
  return pts;
}

inline Triplet sample_triplet(Engine& eng, std::size_t n) {
  const auto i = uniform_index(eng, n);
  std::size_t j, k;
  do j = uniform_index(eng, n);
  while (j == i);
  do k = uniform_index(eng, n);
  while (k == i || k == j);
  return {i, j, k};
}

/// True when the 10-epoch moving average of the loss never rises by more than `rel_tol`, which
/// absorbs the noise of per-epoch triplet sampling.
inline bool moving_average_nonincreasing(const std::vector<EpochLog>& log, std::size_t window = 10,
                                         double rel_tol = 1e-2) {
  if (log.size() < window + 1) return true;
  double sum = 0;
  for (std::size_t e = 0; e < window; ++e) sum += log[e].loss;
  double prev = sum / static_cast<double>(window);
  for (std::size_t e = window; e < log.size(); ++e) {
    sum += log[e].loss - log[e - window].loss;
    const double cur = sum / static_cast<double>(window);
    if (cur > prev + rel_tol * std::abs(prev)) return false;
    prev = cur;
  }
  return true;
}

/// Projected Riemannian SGD or sparse Riemannian Adam on sampled triplets. A pure function of
/// (n, weights, config).
template <typename WeightFn>
TrainResult optimize_weights(std::size_t n, const WeightFn& weight, const Config& cfg) {
  cfg.validate();
  if (n < 3) throw DegenerateData("hyphc needs at least three points");

  TrainResult result;
  Eigen::MatrixXd pts = init_points(n, cfg.dim, cfg.init_radius, cfg.seed);
  Engine eng(derive_seed(cfg.seed, 0x7219));
  const std::size_t per_epoch = cfg.triplets_per_epoch ? cfg.triplets_per_epoch : 50 * n;
  const std::size_t third = std::max<std::size_t>(1, cfg.epochs / 3);

  std::vector<Triplet> batch;
  std::vector<TripletWeights> batch_w;
  std::vector<detail::TripletTerm> terms;
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(pts.rows(), pts.cols());
  std::vector<std::size_t> touched;
  std::vector<char> is_touched(n, 0);
  double tau = cfg.tau;
  // Adam state, updated lazily for the points a batch touches
  Eigen::MatrixXd m1, m2;
  std::vector<std::uint32_t> steps;
  if (cfg.optimizer == Optimizer::adam) {
    m1 = Eigen::MatrixXd::Zero(pts.rows(), pts.cols());
    m2 = Eigen::MatrixXd::Zero(pts.rows(), pts.cols());
    steps.assign(n, 0);
  }

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (epoch > 0 && epoch % third == 0 && epoch / third <= 2) tau *= cfg.anneal_factor;
    double epoch_cost = 0;
    for (std::size_t done = 0; done < per_epoch;) {
      const std::size_t b = std::min(cfg.batch_size, per_epoch - done);
      batch.resize(b);
      batch_w.resize(b);
      terms.resize(b);
      for (std::size_t q = 0; q < b; ++q) batch[q] = sample_triplet(eng, n);
      parallel_for(b, cfg.threads, [&](std::size_t q) {
        batch_w[q] = triplet_weights(batch[q], weight);
        detail::triplet_cost_grad(pts, batch[q], batch_w[q], tau, terms[q]);
      });
      // reduce in fixed index order
      for (std::size_t q = 0; q < b; ++q) {
        epoch_cost += terms[q].cost;
        for (int m = 0; m < 3; ++m) {
          const auto idx = batch[q][m];
          grad.row(static_cast<Eigen::Index>(idx)) += terms[q].grad[m].transpose();
          if (!is_touched[idx]) {
            is_touched[idx] = 1;
            touched.push_back(idx);
          }
        }
      }
      for (auto idx : touched) {
        const auto r = static_cast<Eigen::Index>(idx);
        const double f = 0.5 * (1.0 - pts.row(r).squaredNorm());  // 1 / conformal factor
        if (cfg.optimizer == Optimizer::sgd) {
          pts.row(r) -= cfg.learning_rate * (f * f) * grad.row(r);
        } else {
          // second moment in the metric norm, so each step has hyperbolic length about lr
          m1.row(r) = cfg.beta1 * m1.row(r) + (1 - cfg.beta1) * (f * f) * grad.row(r);
          m2.row(r) = cfg.beta2 * m2.row(r) + (1 - cfg.beta2) * (f * grad.row(r)).array().square().matrix();
          const auto t = static_cast<double>(++steps[idx]);
          const double c1 = 1 - std::pow(cfg.beta1, t), c2 = 1 - std::pow(cfg.beta2, t);
          pts.row(r).array() -=
              cfg.learning_rate * (m1.row(r).array() / c1) / ((m2.row(r).array() / c2).sqrt() + cfg.adam_eps);
        }
        const double norm = pts.row(r).norm(), max_norm = 1.0 - cfg.ball_eps;
        if (norm > max_norm) pts.row(r) *= max_norm / norm;
        grad.row(r).setZero();
        is_touched[idx] = 0;
      }
      touched.clear();
      done += b;
    }
    result.log.push_back({epoch, epoch_cost / static_cast<double>(per_epoch), tau});
  }
  result.final_loss = result.log.back().loss;
  result.loss_trend_ok = moving_average_nonincreasing(result.log);
  if (!result.loss_trend_ok) log::warn("hyphc: 10-epoch moving average of the training loss increased");
  result.embedding.points = std::move(pts);
  return result;
}

/// Embeds the rows of a standardized feature matrix using Gaussian similarities.
inline TrainResult optimize(const FeatureMatrix& standardized, const SimilarityConfig& sim, const Config& cfg) {
  const double sigma =
      sim.sigma > 0 ? sim.sigma : median_heuristic_sigma(standardized.values, sim.sample_size, sim.seed);
  auto result = optimize_weights(standardized.rows(), GaussianWeights(standardized.values, sigma), cfg);
  result.embedding.ids = standardized.row_ids;
  return result;
}

// ---------------------------------------------------------------------------
// Trees
// ---------------------------------------------------------------------------

/// Full binary tree over n leaves. Nodes 0..n-1 are leaves, n..2n-2 internal in merge order;
/// the root is the last node.
class BinaryTree {
 public:
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  explicit BinaryTree(std::size_t leaves)
      : leaves_(leaves), parent_(leaves ? 2 * leaves - 1 : 0, kNone), leaf_count_(parent_.size(), 1) {}

  /// Joins two current roots under a new internal node and returns its id.
  std::size_t merge(std::size_t a, std::size_t b) {
    const std::size_t node = leaves_ + children_.size();
    if (node >= parent_.size()) throw std::logic_error("BinaryTree: too many merges");
    if (parent_[a] != kNone || parent_[b] != kNone || a == b) throw std::logic_error("BinaryTree: invalid merge");
    parent_[a] = parent_[b] = node;
    children_.push_back({a, b});
    leaf_count_[node] = leaf_count_[a] + leaf_count_[b];
    return node;
  }

  std::size_t leaves() const noexcept { return leaves_; }
  std::size_t nodes() const noexcept { return parent_.size(); }
  std::size_t root() const noexcept { return parent_.size() - 1; }
  bool complete() const noexcept { return leaves_ >= 1 && children_.size() + 1 == leaves_; }
  std::size_t parent(std::size_t node) const { return parent_[node]; }
  const std::array<std::size_t, 2>& children(std::size_t internal) const { return children_[internal - leaves_]; }
  std::size_t leaf_count(std::size_t node) const { return leaf_count_[node]; }

  /// Leaves under each node, listed for every node (used for cost evaluation and comparisons).
  std::vector<std::vector<std::size_t>> leaf_sets() const {
    std::vector<std::vector<std::size_t>> sets(nodes());
    for (std::size_t i = 0; i < leaves_; ++i) sets[i] = {i};
    for (std::size_t k = 0; k < children_.size(); ++k) {
      auto& s = sets[leaves_ + k];
      s = sets[children_[k][0]];
      s.insert(s.end(), sets[children_[k][1]].begin(), sets[children_[k][1]].end());
      std::sort(s.begin(), s.end());
    }
    return sets;
  }

 private:
  std::size_t leaves_;
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> leaf_count_;
  std::vector<std::array<std::size_t, 2>> children_;
};

/// Greedy decoding: single linkage on LCA depth. Repeatedly joins the two clusters holding the
/// deepest-LCA leaf pair. Implemented as a maximum spanning tree (Prim, O(n^2)) whose edges are
/// replayed from deepest to shallowest.
inline BinaryTree decode_tree(const Eigen::MatrixXd& points) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (n < 2) throw DegenerateData("decode_tree needs at least two points");

  struct Edge {
    double depth;
    std::size_t a, b;
  };
  std::vector<Edge> edges;
  edges.reserve(n - 1);
  std::vector<char> in_tree(n, 0);
  std::vector<double> best(n, -std::numeric_limits<double>::infinity());
  std::vector<std::size_t> link(n, 0);
  std::size_t current = 0;
  in_tree[0] = 1;
  for (std::size_t step = 1; step < n; ++step) {
    const Eigen::VectorXd c = points.row(static_cast<Eigen::Index>(current)).transpose();
    std::size_t next = BinaryTree::kNone;
    for (std::size_t v = 0; v < n; ++v) {
      if (in_tree[v]) continue;
      const double d = poincare::lca_depth(c, points.row(static_cast<Eigen::Index>(v)).transpose());
      if (d > best[v]) {
        best[v] = d;
        link[v] = current;
      }
      if (next == BinaryTree::kNone || best[v] > best[next]) next = v;
    }
    in_tree[next] = 1;
    edges.push_back({best[next], std::min(next, link[next]), std::max(next, link[next])});
    current = next;
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) {
    if (x.depth != y.depth) return x.depth > y.depth;
    return x.a != y.a ? x.a < y.a : x.b < y.b;
  });

  std::vector<std::size_t> uf(n), top(n);
  std::iota(uf.begin(), uf.end(), 0);
  std::iota(top.begin(), top.end(), 0);
  auto find = [&](std::size_t v) {
    while (uf[v] != v) v = uf[v] = uf[uf[v]];
    return v;
  };
  BinaryTree tree(n);
  for (const auto& e : edges) {
    const auto ra = find(e.a), rb = find(e.b);
    const auto node = tree.merge(top[ra], top[rb]);
    uf[rb] = ra;
    top[ra] = node;
  }
  return tree;
}

/// Dasgupta cost: sum over leaf pairs of w_ij times the number of leaves under their LCA.
template <typename WeightFn>
double dasgupta_cost(const BinaryTree& tree, const WeightFn& weight) {
  const auto sets = tree.leaf_sets();
  double cost = 0;
  for (std::size_t node = tree.leaves(); node < tree.nodes(); ++node) {
    const auto& [l, r] = tree.children(node);
    double across = 0;
    for (auto a : sets[l])
      for (auto b : sets[r]) across += weight(a, b);
    cost += across * static_cast<double>(tree.leaf_count(node));
  }
  return cost;
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

inline FeatureMatrix export_embedding(const BallEmbedding& emb) {
  FeatureMatrix fm;
  fm.row_ids = emb.ids;
  for (std::size_t c = 0; c < emb.dim(); ++c) fm.columns.push_back(feature_label("e_", c + 1));
  fm.values = emb.points;
  return fm;
}

inline BallEmbedding import_embedding(const FeatureMatrix& fm) {
  BallEmbedding emb{fm.row_ids, fm.values};
  for (Eigen::Index r = 0; r < emb.points.rows(); ++r)
    if (!(emb.points.row(r).squaredNorm() < 1.0)) throw NumericDomain("embedding row " + fm.row_ids[static_cast<std::size_t>(r)] + " lies outside the ball");
  return emb;
}

inline std::string training_log_csv(const std::vector<EpochLog>& log) {
  std::string out = "epoch,loss,tau\n";
  for (const auto& e : log)
    out += std::to_string(e.epoch) + ',' + csv::format_double(e.loss) + ',' + csv::format_double(e.tau) + '\n';
  return out;
}

}  // namespace hypsep::hyphc
