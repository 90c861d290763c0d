#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hypsep/error.hpp"
#include "hypsep/features.hpp"
#include "hypsep/ingest.hpp"
#include "hypsep/log.hpp"
#include "hypsep/parallel.hpp"
#include "hypsep/random.hpp"

namespace hypsep::learn {

/// Feature rows with integer labels indexing class_names (kept in lexicographic order).
struct LabeledDataset {
  Eigen::MatrixXd x;
  std::vector<int> y;
  std::vector<std::string> class_names;

  std::size_t size() const noexcept { return y.size(); }

  LabeledDataset subset(const std::vector<std::size_t>& rows) const {
    LabeledDataset out;
    out.class_names = class_names;
    out.x.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
    out.y.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      out.x.row(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(rows[r]));
      out.y.push_back(y[rows[r]]);
    }
    return out;
  }
};

inline std::vector<std::size_t> class_counts(std::span<const int> y, std::size_t classes) {
  std::vector<std::size_t> counts(classes, 0);
  for (int v : y) ++counts[static_cast<std::size_t>(v)];
  return counts;
}

/// Fisher-Yates with the project's portable index draw.
template <typename T>
void shuffle(std::vector<T>& v, Engine& eng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_index(eng, i)]);
}

// ---------------------------------------------------------------------------
// SMOTE
// ---------------------------------------------------------------------------

struct SyntheticOrigin {
  std::size_t base;      ///< row of the minority sample a
  std::size_t neighbor;  ///< row of its neighbor b
  double lambda;         ///< synthetic = a + lambda (b - a)
};

struct SmoteResult {
  LabeledDataset data;  ///< original rows first, synthetic rows appended
  std::vector<SyntheticOrigin> origins;
};

/// Indices of the k nearest rows (Euclidean, ties by index) among `pool`, excluding `self`.
inline std::vector<std::size_t> nearest_within(const Eigen::MatrixXd& x, const std::vector<std::size_t>& pool,
                                               std::size_t self, std::size_t k) {
  std::vector<std::pair<double, std::size_t>> d;
  d.reserve(pool.size());
  for (auto j : pool)
    if (j != self)
      d.emplace_back((x.row(static_cast<Eigen::Index>(self)) - x.row(static_cast<Eigen::Index>(j))).squaredNorm(), j);
  k = std::min(k, d.size());
  std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < k; ++r) out.push_back(d[r].second);
  return out;
}

/// Upsamples every class to the majority count by interpolating between a sample and one of its
/// k nearest same-class neighbors.
inline SmoteResult smote(const LabeledDataset& data, std::size_t k, std::uint64_t seed) {
  if (k < 1) throw InvalidConfig("smote: k must be at least 1");
  const std::size_t classes = data.class_names.size();
  const auto counts = class_counts(data.y, classes);
  const std::size_t majority = counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end());

  SmoteResult out;
  std::size_t extra = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    if (counts[c] == majority || counts[c] == 0) continue;
    if (counts[c] <= k)
      throw InsufficientMinority("smote: class '" + data.class_names[c] + "' has " + std::to_string(counts[c]) +
                                 " samples, needs more than k=" + std::to_string(k));
    extra += majority - counts[c];
  }
  out.data.class_names = data.class_names;
  out.data.x.resize(data.x.rows() + static_cast<Eigen::Index>(extra), data.x.cols());
  out.data.x.topRows(data.x.rows()) = data.x;
  out.data.y = data.y;
  Eigen::Index next = data.x.rows();

  for (std::size_t c = 0; c < classes; ++c) {
    if (counts[c] == majority || counts[c] == 0) continue;
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < data.y.size(); ++i)
      if (static_cast<std::size_t>(data.y[i]) == c) members.push_back(i);
    std::vector<std::vector<std::size_t>> neighbors(members.size());
    for (std::size_t m = 0; m < members.size(); ++m) neighbors[m] = nearest_within(data.x, members, members[m], k);

    Engine eng(derive_seed(seed, c));
    for (std::size_t s = 0; s < majority - counts[c]; ++s) {
      const auto m = uniform_index(eng, members.size());
      const auto& nb = neighbors[m];
      const auto b = nb[uniform_index(eng, nb.size())];
      const double lambda = uniform01(eng);
      const auto a = members[m];
      out.data.x.row(next++) = data.x.row(static_cast<Eigen::Index>(a)) +
                               lambda * (data.x.row(static_cast<Eigen::Index>(b)) - data.x.row(static_cast<Eigen::Index>(a)));
      out.data.y.push_back(static_cast<int>(c));
      out.origins.push_back({a, b, lambda});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Splitting
// ---------------------------------------------------------------------------

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Per-class shuffled split; each class contributes round(fraction * count) test rows.
inline Split stratified_split(const LabeledDataset& data, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0 && test_fraction < 1)) throw InvalidConfig("test fraction must lie in (0, 1)");
  Split out;
  for (std::size_t c = 0; c < data.class_names.size(); ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < data.y.size(); ++i)
      if (static_cast<std::size_t>(data.y[i]) == c) members.push_back(i);
    Engine eng(derive_seed(seed, 0x5b17 + c));
    shuffle(members, eng);
    const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(members.size())));
    out.test.insert(out.test.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_test));
    out.train.insert(out.train.end(), members.begin() + static_cast<std::ptrdiff_t>(n_test), members.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

/// Stratified k-fold: fold f is the test set of split f.
inline std::vector<Split> stratified_folds(const LabeledDataset& data, std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw InvalidConfig("cross-validation needs at least two folds");
  std::vector<std::size_t> fold_of(data.size());
  for (std::size_t c = 0; c < data.class_names.size(); ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < data.y.size(); ++i)
      if (static_cast<std::size_t>(data.y[i]) == c) members.push_back(i);
    Engine eng(derive_seed(seed, 0xf01d + c));
    shuffle(members, eng);
    for (std::size_t r = 0; r < members.size(); ++r) fold_of[members[r]] = r % folds;
  }
  std::vector<Split> out(folds);
  for (std::size_t i = 0; i < data.size(); ++i)
    for (std::size_t f = 0; f < folds; ++f) (fold_of[i] == f ? out[f].test : out[f].train).push_back(i);
  return out;
}

// ---------------------------------------------------------------------------
// Random forest
// ---------------------------------------------------------------------------

enum class FeatureRule { sqrt, log2, all };

struct ForestConfig {
  std::size_t trees = 200;
  std::size_t max_depth = 0;  ///< 0 means unlimited
  std::size_t min_samples_leaf = 2;
  FeatureRule features = FeatureRule::sqrt;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

inline std::size_t features_per_split(FeatureRule rule, std::size_t m) {
  switch (rule) {
    case FeatureRule::sqrt: return std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(m))));
    case FeatureRule::log2: return std::max<std::size_t>(1, static_cast<std::size_t>(std::log2(static_cast<double>(m))));
    case FeatureRule::all: return m;
  }
  return m;
}

/// CART classification tree grown on Gini impurity.
class DecisionTree {
 public:
  struct Node {
    int feature = -1;  ///< -1 marks a leaf
    double threshold = 0;
    std::uint32_t left = 0, right = 0;
    int label = 0;
  };

  void fit(const Eigen::MatrixXd& x, std::span<const int> y, std::size_t classes, std::vector<std::size_t> rows,
           const ForestConfig& cfg, Engine& eng) {
    nodes_.clear();
    classes_ = classes;
    mtry_ = features_per_split(cfg.features, static_cast<std::size_t>(x.cols()));
    build(x, y, rows, 0, rows.size(), 0, cfg, eng);
  }

  int predict(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
    std::uint32_t v = 0;
    while (nodes_[v].feature >= 0) v = row(nodes_[v].feature) <= nodes_[v].threshold ? nodes_[v].left : nodes_[v].right;
    return nodes_[v].label;
  }

  std::size_t node_count() const noexcept { return nodes_.size(); }

 private:
  static double gini_sum(const std::vector<double>& counts, double total) {
    // total * gini = total - sum(c^2) / total
    double sq = 0;
    for (double c : counts) sq += c * c;
    return total - sq / total;
  }

  std::uint32_t make_leaf(std::span<const int> y, const std::vector<std::size_t>& rows, std::size_t lo, std::size_t hi) {
    std::vector<std::size_t> counts(classes_, 0);
    for (std::size_t r = lo; r < hi; ++r) ++counts[static_cast<std::size_t>(y[rows[r]])];
    Node leaf;
    leaf.label = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    nodes_.push_back(leaf);
    return static_cast<std::uint32_t>(nodes_.size() - 1);
  }

  std::uint32_t build(const Eigen::MatrixXd& x, std::span<const int> y, std::vector<std::size_t>& rows, std::size_t lo,
                      std::size_t hi, std::size_t depth, const ForestConfig& cfg, Engine& eng) {
    const std::size_t n = hi - lo;
    std::vector<double> total(classes_, 0.0);
    for (std::size_t r = lo; r < hi; ++r) total[static_cast<std::size_t>(y[rows[r]])] += 1;
    const bool pure = std::count_if(total.begin(), total.end(), [](double c) { return c > 0; }) <= 1;
    if (pure || n < 2 * cfg.min_samples_leaf || (cfg.max_depth && depth >= cfg.max_depth)) return make_leaf(y, rows, lo, hi);

    const double parent = gini_sum(total, static_cast<double>(n));
    const auto m = static_cast<std::size_t>(x.cols());
    std::vector<std::size_t> feats(m);
    std::iota(feats.begin(), feats.end(), 0);

    int best_feature = -1;
    double best_score = parent - 1e-12, best_threshold = 0;
    std::vector<std::pair<double, int>> vals(n);
    std::vector<double> left(classes_);
    std::size_t visited = 0;
    for (std::size_t f = 0; f < m; ++f) {
      if (visited >= mtry_ && best_feature >= 0) break;
      std::swap(feats[f], feats[f + uniform_index(eng, m - f)]);
      const auto col = static_cast<Eigen::Index>(feats[f]);
      for (std::size_t r = 0; r < n; ++r) vals[r] = {x(static_cast<Eigen::Index>(rows[lo + r]), col), y[rows[lo + r]]};
      std::sort(vals.begin(), vals.end());
      if (vals.front().first == vals.back().first) continue;  // constant here; does not count toward mtry
      ++visited;
      std::fill(left.begin(), left.end(), 0.0);
      for (std::size_t r = 0; r + 1 < n; ++r) {
        left[static_cast<std::size_t>(vals[r].second)] += 1;
        const std::size_t nl = r + 1, nr = n - nl;
        if (vals[r].first == vals[r + 1].first) continue;
        if (nl < cfg.min_samples_leaf || nr < cfg.min_samples_leaf) continue;
        double sl = 0, sr = 0;
        for (std::size_t c = 0; c < classes_; ++c) {
          sl += left[c] * left[c];
          const double rc = total[c] - left[c];
          sr += rc * rc;
        }
        const double score = (static_cast<double>(nl) - sl / static_cast<double>(nl)) +
                             (static_cast<double>(nr) - sr / static_cast<double>(nr));
        if (score < best_score) {
          best_score = score;
          best_feature = static_cast<int>(feats[f]);
          best_threshold = 0.5 * (vals[r].first + vals[r + 1].first);
          if (best_threshold == vals[r + 1].first) best_threshold = vals[r].first;
        }
      }
    }
    if (best_feature < 0) return make_leaf(y, rows, lo, hi);

    const auto mid = static_cast<std::size_t>(
        std::partition(rows.begin() + static_cast<std::ptrdiff_t>(lo), rows.begin() + static_cast<std::ptrdiff_t>(hi),
                       [&](std::size_t r) { return x(static_cast<Eigen::Index>(r), best_feature) <= best_threshold; }) -
        rows.begin());
    const auto self = static_cast<std::uint32_t>(nodes_.size());
    nodes_.push_back(Node{best_feature, best_threshold, 0, 0, 0});
    const auto l = build(x, y, rows, lo, mid, depth + 1, cfg, eng);
    const auto r = build(x, y, rows, mid, hi, depth + 1, cfg, eng);
    nodes_[self].left = l;
    nodes_[self].right = r;
    return self;
  }

  std::vector<Node> nodes_;
  std::size_t classes_ = 0;
  std::size_t mtry_ = 1;
};

/// Bagged Gini trees with majority vote (ties go to the smaller class index).
class RandomForest {
 public:
  void fit(const LabeledDataset& train, const ForestConfig& cfg) {
    if (train.size() == 0) throw DegenerateData("random forest: empty training set");
    if (cfg.trees < 1) throw InvalidConfig("random forest: need at least one tree");
    classes_ = train.class_names.size();
    trees_.assign(cfg.trees, DecisionTree{});
    const std::size_t n = train.size();
    parallel_for(cfg.trees, cfg.threads, [&](std::size_t t) {
      Engine eng(derive_seed(cfg.seed, t));
      std::vector<std::size_t> rows(n);
      for (auto& r : rows) r = uniform_index(eng, n);
      trees_[t].fit(train.x, train.y, classes_, std::move(rows), cfg, eng);
    });
  }

  std::vector<int> predict(const Eigen::MatrixXd& x, std::size_t threads = 1) const {
    std::vector<int> out(static_cast<std::size_t>(x.rows()));
    parallel_for(out.size(), threads, [&](std::size_t i) {
      std::vector<std::size_t> votes(classes_, 0);
      for (const auto& t : trees_) ++votes[static_cast<std::size_t>(t.predict(x.row(static_cast<Eigen::Index>(i))))];
      out[i] = static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
    });
    return out;
  }

  std::size_t size() const noexcept { return trees_.size(); }

 private:
  std::vector<DecisionTree> trees_;
  std::size_t classes_ = 0;
};

inline RandomForest train_forest(const LabeledDataset& train, const ForestConfig& cfg) {
  RandomForest f;
  f.fit(train, cfg);
  return f;
}

// ---------------------------------------------------------------------------
// Scoring and separations
// ---------------------------------------------------------------------------

/// Positive-class F1; 0 when precision + recall is 0.
template <typename Label>
double f1(std::span<const Label> truth, std::span<const Label> predicted, const Label& positive) {
  if (truth.size() != predicted.size()) throw RowMismatch("f1: label vectors differ in length");
  double tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool t = truth[i] == positive, p = predicted[i] == positive;
    tp += t && p;
    fp += !t && p;
    fn += t && !p;
  }
  return tp == 0 ? 0.0 : 2 * tp / (2 * tp + fp + fn);
}

inline double f1(const std::vector<int>& truth, const std::vector<int>& predicted, int positive) {
  return f1<int>(std::span<const int>(truth), std::span<const int>(predicted), positive);
}

enum class SeparationMode { one_vs_two, one_vs_one };

struct SeparationSpec {
  SeparationMode mode = SeparationMode::one_vs_two;
  UserClass positive = UserClass::deleted;
  UserClass negative = UserClass::regular;  ///< one_vs_one only

  std::string name() const {
    if (mode == SeparationMode::one_vs_two) return std::string(to_string(positive)) + "_vs_rest";
    return std::string(to_string(positive)) + "_vs_" + std::string(to_string(negative));
  }
  bool includes(UserClass c) const { return mode == SeparationMode::one_vs_two || c == positive || c == negative; }
  void validate() const {
    if (mode == SeparationMode::one_vs_one && positive == negative)
      throw InvalidConfig("separation classes must differ");
  }
};

/// The six separations in results-table order.
inline const std::array<SeparationSpec, 6>& standard_separations() {
  using enum UserClass;
  static const std::array<SeparationSpec, 6> specs = {{
      {SeparationMode::one_vs_two, deleted, regular},
      {SeparationMode::one_vs_two, suspended, regular},
      {SeparationMode::one_vs_two, regular, deleted},
      {SeparationMode::one_vs_one, deleted, suspended},
      {SeparationMode::one_vs_one, suspended, regular},
      {SeparationMode::one_vs_one, regular, deleted},
  }};
  return specs;
}

struct SeparationOptions {
  double test_fraction = 0.2;
  std::size_t smote_k = 5;
  std::size_t cv_folds = 0;  ///< > 1 switches from a single split to stratified k-fold (mean F1)
};

/// Binary dataset for a separation: class 1 is the positive class, class 0 the rest.
inline LabeledDataset separation_dataset(const FeatureMatrix& features, const LabelMap& labels,
                                         const SeparationSpec& spec) {
  spec.validate();
  LabeledDataset data;
  data.class_names = {"negative", "positive"};
  std::vector<std::size_t> rows;
  std::size_t unlabeled = 0;
  for (std::size_t r = 0; r < features.rows(); ++r) {
    auto it = labels.find(features.row_ids[r]);
    if (it == labels.end()) {
      ++unlabeled;
      continue;
    }
    if (!spec.includes(it->second)) continue;
    rows.push_back(r);
    data.y.push_back(it->second == spec.positive ? 1 : 0);
  }
  if (unlabeled) log::warn(std::to_string(unlabeled) + " users have no label and were skipped");
  data.x.resize(static_cast<Eigen::Index>(rows.size()), features.values.cols());
  for (std::size_t r = 0; r < rows.size(); ++r)
    data.x.row(static_cast<Eigen::Index>(r)) = features.values.row(static_cast<Eigen::Index>(rows[r]));
  return data;
}

struct SeparationResult {
  std::string separation;
  std::string feature_set;
  double f1 = 0;
  std::size_t train_rows = 0;  ///< before balancing
  std::size_t test_rows = 0;
};

/// Train on one fold (standardized on train statistics, SMOTE-balanced) and score the other.
inline double fit_and_score(const LabeledDataset& data, const Split& split, const ForestConfig& forest,
                            const SeparationOptions& opt, std::uint64_t seed) {
  LabeledDataset train = data.subset(split.train);
  LabeledDataset test = data.subset(split.test);
  // standardize with training statistics so SMOTE neighborhoods are not dominated by raw counts
  const Eigen::RowVectorXd mean = train.x.colwise().mean();
  Eigen::RowVectorXd sd = ((train.x.rowwise() - mean).array().square().colwise().sum() / static_cast<double>(train.size())).sqrt();
  for (auto& v : sd)
    if (!(v > 1e-12)) v = 1.0;
  train.x = (train.x.rowwise() - mean).array().rowwise() / sd.array();
  test.x = (test.x.rowwise() - mean).array().rowwise() / sd.array();

  const auto balanced = smote(train, opt.smote_k, derive_seed(seed, 0x5307));
  ForestConfig cfg = forest;
  cfg.seed = derive_seed(seed, 0xf0e5);
  const auto model = train_forest(balanced.data, cfg);
  return f1(test.y, model.predict(test.x, cfg.threads), 1);
}

/// One cell of the results table. Feature sets are looked up by name.
inline SeparationResult run_separation(const std::map<std::string, FeatureMatrix>& features_by_name,
                                       const LabelMap& labels, const std::string& feature_set,
                                       const SeparationSpec& spec, const ForestConfig& forest, std::uint64_t seed,
                                       const SeparationOptions& opt = {}) {
  auto it = features_by_name.find(feature_set);
  if (it == features_by_name.end()) throw UnknownFeatureSet("unknown feature set '" + feature_set + "'");
  const auto data = separation_dataset(it->second, labels, spec);

  SeparationResult res{spec.name(), feature_set, 0.0, 0, 0};
  if (opt.cv_folds > 1) {
    const auto folds = stratified_folds(data, opt.cv_folds, seed);
    for (std::size_t f = 0; f < folds.size(); ++f) res.f1 += fit_and_score(data, folds[f], forest, opt, derive_seed(seed, f));
    res.f1 /= static_cast<double>(folds.size());
    res.train_rows = data.size() - folds[0].test.size();
    res.test_rows = folds[0].test.size();
  } else {
    const auto split = stratified_split(data, opt.test_fraction, seed);
    res.f1 = fit_and_score(data, split, forest, opt, seed);
    res.train_rows = split.train.size();
    res.test_rows = split.test.size();
  }
  return res;
}

}  // namespace hypsep::learn
