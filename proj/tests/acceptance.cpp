// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "hypsep/baselines.hpp"
#include "hypsep/eval.hpp"
#include "hypsep/hyperbolic.hpp"
#include "hypsep/hyphc.hpp"
#include "hypsep/learn.hpp"
#include "hypsep/log.hpp"
#include "hypsep/synth.hpp"
#include "support/oracles.hpp"
#include "support/tree_oracles.hpp"

using namespace hypsep;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  std::string failures;
  void require(bool ok, const std::string& what) {
    if (ok) return;
    pass = false;
    failures += (failures.empty() ? "" : ", ") + what;
  }
};

bool bit_equal(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         (a.size() == 0 || std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0);
}

Eigen::MatrixXd gaussian_matrix(std::uint64_t seed, Eigen::Index rows, Eigen::Index cols) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd m(rows, cols);
  for (auto& v : m.reshaped()) v = normal(g);
  return m;
}

// 1 -------------------------------------------------------------------------------------------

void feature_oracle(Outcome& o) {
  log::ScopedSink quiet([](const std::string&) {});
  std::size_t corpora = 0, matrices = 0;
  for (std::uint64_t seed = 1000; seed < 1025; ++seed, ++corpora) {
    const auto tweets = testing::random_corpus(seed, 200);
    for (std::size_t p : {1, 4, 10}) {
      const Corpus c(tweets);
      const auto set = select_top_influencers(compute_rt_scores(c), p);
      const auto f = build_feature_matrix(c, build_user_set(c, set), set, kDefaultSentinel, 1);
      const auto naive = testing::naive_interaction_features(tweets, p, kDefaultSentinel);
      o.require(f.row_ids == naive.users && bit_equal(f.values, naive.values),
                "seed " + std::to_string(seed) + " p " + std::to_string(p));
      ++matrices;
    }
  }
  o.detail << corpora << " corpora, " << matrices << " matrices bit-identical";
}

// 2 -------------------------------------------------------------------------------------------

void micro_dasgupta(Outcome& o) {
  hyphc::Config cfg;
  cfg.dim = 8;
  std::mt19937_64 g(42);
  std::uniform_real_distribution<double> u(0, 1);
  int within = 0, below_mean = 0;
  double worst = 0;
  log::ScopedSink quiet([](const std::string&) {});
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = 4 + static_cast<std::size_t>(trial % 4);
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = i + 1; j < w.rows(); ++j) w(i, j) = w(j, i) = u(g);
    const hyphc::MatrixWeights weights(w);
    const double best = testing::exhaustive_min_cost(n, weights);
    cfg.seed = static_cast<std::uint64_t>(trial);
    const auto res = hyphc::optimize_weights(n, weights, cfg);
    const double cost = hyphc::dasgupta_cost(hyphc::decode_tree(res.embedding.points), weights);
    double mean = 0;
    for (int r = 0; r < 100; ++r) mean += hyphc::dasgupta_cost(testing::random_binary_tree(n, g), weights);
    mean /= 100;
    worst = std::max(worst, cost / best);
    within += cost <= 1.05 * best;
    below_mean += cost < mean;
  }
  o.require(within == 25, "within 1.05 of optimum on " + std::to_string(within) + "/25");
  o.require(below_mean >= 24, "below random mean on " + std::to_string(below_mean) + "/25");
  o.detail << "within 1.05x optimum " << within << "/25, worst ratio " << worst << ", below random-tree mean "
           << below_mean << "/25";
}

// 3 -------------------------------------------------------------------------------------------

void geometry(Outcome& o) {
  using namespace poincare;
  std::mt19937_64 g(3);
  std::uniform_real_distribution<double> u(0, 1);
  double radial = 0, additive = 0, lca = 0;
  int violations = 0;
  for (int k = 0; k < 1000; ++k) {
    const auto x = testing::random_ball_point(g, 5, 0.99);
    radial = std::max(radial, std::abs(distance(Vector::Zero(5), x) - 2 * std::atanh(x.norm())));
  }
  for (int k = 0; k < 1000; ++k) {
    const auto x = testing::random_ball_point(g, 4, 0.95), y = testing::random_ball_point(g, 4, 0.95);
    const auto m = geodesic_point(x, y, u(g));
    additive = std::max(additive, std::abs(distance(x, m) + distance(m, y) - distance(x, y)));
  }
  for (int k = 0; k < 50; ++k) {
    const auto x = testing::random_ball_point(g, 3, 0.97), y = testing::random_ball_point(g, 3, 0.97);
    double best = std::numeric_limits<double>::infinity();
    for (int s = 0; s <= 100000; ++s) best = std::min(best, distance_to_origin(geodesic_point(x, y, s / 100000.0)));
    lca = std::max(lca, std::abs(lca_depth(x, y) - best));
  }
  for (int k = 0; k < 10000; ++k) {
    const auto x = testing::random_ball_point(g, 3, 0.99), y = testing::random_ball_point(g, 3, 0.99),
               z = testing::random_ball_point(g, 3, 0.99);
    violations += distance(x, z) > distance(x, y) + distance(y, z) + 1e-9;
  }
  o.require(radial <= 1e-10, "radial");
  o.require(additive <= 1e-9, "additivity");
  o.require(lca <= 1e-4, "lca grid");
  o.require(violations == 0, "triangle");
  o.detail << "radial err " << radial << ", additivity err " << additive << ", lca vs 1e5 grid err " << lca
           << ", triangle violations " << violations << "/10000";
}

// 4 -------------------------------------------------------------------------------------------

void gradient_check(Outcome& o) {
  std::mt19937_64 g(4);
  std::uniform_real_distribution<double> u(0, 1);
  const double h = 1e-5;
  double worst = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 4 + static_cast<std::size_t>(trial % 4);
    const Eigen::Index d = 2 + trial % 3;
    Eigen::MatrixXd pts(static_cast<Eigen::Index>(n), d);
    for (Eigen::Index i = 0; i < pts.rows(); ++i) pts.row(i) = testing::random_ball_point(g, d, 0.9).transpose();
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(pts.rows(), pts.rows());
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = i + 1; j < w.rows(); ++j) w(i, j) = w(j, i) = u(g);
    std::vector<hyphc::Triplet> trips;
    std::vector<hyphc::TripletWeights> tw;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        for (std::size_t k = j + 1; k < n; ++k) {
          trips.push_back({i, j, k});
          tw.push_back(hyphc::triplet_weights(trips.back(), hyphc::MatrixWeights(w)));
        }
    const double tau = 0.1 + u(g);
    Eigen::MatrixXd grad;
    hyphc::continuous_cost_grad(pts, trips, tw, tau, grad);
    Eigen::MatrixXd fd(pts.rows(), pts.cols());
    for (Eigen::Index r = 0; r < pts.rows(); ++r)
      for (Eigen::Index c = 0; c < pts.cols(); ++c) {
        Eigen::MatrixXd plus = pts, minus = pts;
        plus(r, c) += h;
        minus(r, c) -= h;
        fd(r, c) = (hyphc::continuous_cost(plus, trips, tw, tau) - hyphc::continuous_cost(minus, trips, tw, tau)) / (2 * h);
      }
    worst = std::max(worst, (grad - fd).norm() / std::max(fd.norm(), 1e-12));
  }
  o.require(worst <= 1e-4, "relative error");
  o.detail << "50 configurations, worst relative error " << worst;
}

// 5 and 6 -------------------------------------------------------------------------------------

struct Experiment {
  eval::ExperimentResult result;
  std::size_t users = 0;
};

const Experiment& default_experiment() {
  static const Experiment e = [] {
    const auto data = synth::generate(synth::SynthConfig{});
    ProfileMap profiles;
    for (const auto& p : data.profiles) profiles[p.user_id] = p;
    eval::ExperimentConfig cfg;
    cfg.p = 20;
    cfg.dim = 8;
    log::ScopedSink quiet([](const std::string&) {});
    Experiment out;
    out.users = data.labels.size();
    out.result = eval::experiment_matrix(Corpus(data.tweets), profiles, data.labels, cfg);
    return out;
  }();
  return e;
}

void discrimination(Outcome& o) {
  const auto& e = default_experiment();
  const auto& t = e.result.table;
  int hyphc_wins = 0;
  std::ostringstream f1s;
  for (const auto& sep : learn::standard_separations()) {
    const auto name = sep.name();
    const double u = t.f1(name, "U"), uf = t.f1(name, "U+F"), h = t.f1(name, "HypHC"), se = t.f1(name, "SE"),
                 fa = t.f1(name, "FA");
    f1s << "\n    " << name << ": U " << u << " U+F " << uf << " HypHC " << h << " SE " << se << " FA " << fa;
    if (sep.mode == learn::SeparationMode::one_vs_two) o.require(uf - u >= 0.10, "(a) " + name);
    o.require(h >= uf - 0.05, "(b) " + name);
    hyphc_wins += h >= se && h >= fa;
  }
  o.require(hyphc_wins >= 5, "(c) HypHC best on " + std::to_string(hyphc_wins) + "/6");
  o.detail << e.users << " labeled users, HypHC >= SE and FA on " << hyphc_wins << "/6" << f1s.str();
}

void centroid_ordering(Outcome& o) {
  const auto& reports = default_experiment().result.centroids;
  const auto h = reports[0].distances();
  const char* names[] = {"deleted-suspended", "suspended-regular", "regular-deleted"};
  for (const auto& r : reports) {
    const auto d = r.distances();
    o.detail << "\n    " << r.reducer << ": " << d[0] << " " << d[1] << " " << d[2];
    if (r.reducer == "HypHC") continue;
    for (int k = 0; k < 3; ++k) o.require(h[k] >= d[k], std::string(names[k]) + " vs " + r.reducer);
  }
}

// 7 -------------------------------------------------------------------------------------------

void reducer_oracles(Outcome& o) {
  // PCA against the Jacobi eigenvectors of the covariance
  const auto x = gaussian_matrix(1, 50, 8);
  const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
  const auto eig = testing::jacobi_eigen(centered.transpose() * centered / 49.0);
  const Eigen::MatrixXd top = eig.vectors.rightCols(4).rowwise().reverse();
  const double pca_err = testing::max_column_mismatch(baselines::pca(x, 4).components, top);
  o.require(pca_err <= 1e-8, "PCA");

  // Ward merge sequence against the naive oracle
  bool ward_ok = true;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto xs = gaussian_matrix(seed + 20, 15, 9);
    const auto agg = baselines::ward_columns(xs, 1);
    const auto naive = testing::naive_ward(xs, 1);
    ward_ok = ward_ok && agg.merges.size() == naive.size();
    for (std::size_t k = 0; ward_ok && k < naive.size(); ++k)
      ward_ok = agg.merges[k].a == naive[k].a && agg.merges[k].b == naive[k].b &&
                std::abs(agg.merges[k].cost - naive[k].cost) <= 1e-9 * (1 + naive[k].cost);
  }
  o.require(ward_ok, "FA merge sequence");

  // spectral embedding against a dense normalized Laplacian
  const auto xs = gaussian_matrix(9, 40, 5);
  const double sigma = 1.7;
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(40, 40);
  for (Eigen::Index i = 0; i < 40; ++i) {
    std::vector<std::pair<double, Eigen::Index>> d;
    for (Eigen::Index j = 0; j < 40; ++j)
      if (j != i) d.push_back({(xs.row(i) - xs.row(j)).squaredNorm(), j});
    std::sort(d.begin(), d.end());
    for (std::size_t r = 0; r < 10; ++r) w(i, d[r].second) = w(d[r].second, i) = std::exp(-d[r].first / (2 * sigma * sigma));
  }
  const Eigen::VectorXd dinv = w.rowwise().sum().cwiseSqrt().cwiseInverse();
  const auto lap = testing::jacobi_eigen(Eigen::MatrixXd::Identity(40, 40) - dinv.asDiagonal() * w * dinv.asDiagonal());
  const double se_err =
      testing::max_column_mismatch(baselines::spectral_embedding(xs, 4, 10, 0, sigma).embedding, lap.vectors.middleCols(1, 4));
  o.require(se_err <= 1e-6, "SE");

  // SMOTE segment property on 1000 points
  std::mt19937_64 g(7);
  std::normal_distribution<double> normal;
  learn::LabeledDataset data;
  data.class_names = {"negative", "positive"};
  data.x.resize(1000, 4);
  for (Eigen::Index i = 0; i < 1000; ++i) {
    data.y.push_back(i < 700 ? 0 : 1);
    for (Eigen::Index c = 0; c < 4; ++c) data.x(i, c) = normal(g) + (i < 700 ? 0.0 : 1.0);
  }
  const auto sm = learn::smote(data, 5, 3);
  std::size_t bad = 0;
  for (std::size_t s = 0; s < sm.origins.size(); ++s) {
    const auto& org = sm.origins[s];
    std::vector<std::pair<double, std::size_t>> d;
    for (std::size_t j = 700; j < 1000; ++j)
      if (j != org.base) d.push_back({(data.x.row(Eigen::Index(j)) - data.x.row(Eigen::Index(org.base))).squaredNorm(), j});
    std::sort(d.begin(), d.end());
    std::set<std::size_t> knn;
    for (std::size_t k = 0; k < 5; ++k) knn.insert(d[k].second);
    const Eigen::RowVectorXd a = data.x.row(Eigen::Index(org.base)), b = data.x.row(Eigen::Index(org.neighbor));
    const Eigen::RowVectorXd p = sm.data.x.row(Eigen::Index(1000 + s));
    const bool ok = data.y[org.base] == 1 && knn.count(org.neighbor) && org.lambda >= 0 && org.lambda < 1 &&
                    (p - (a + org.lambda * (b - a))).cwiseAbs().maxCoeff() <= 1e-12;
    bad += !ok;
  }
  o.require(bad == 0 && sm.origins.size() == 400, "SMOTE");
  o.detail << "PCA err " << pca_err << ", Ward sequences " << (ward_ok ? "match" : "differ") << ", SE err " << se_err
           << ", SMOTE " << sm.origins.size() - bad << "/" << sm.origins.size() << " on segments";
}

// 8 -------------------------------------------------------------------------------------------

int run_cli(const std::string& args) {
  const std::string cmd = std::string(HYPSEP_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> directory_contents(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) out[e.path().filename().string()] = csv::read_text(e.path().string());
  return out;
}

void cli_determinism(Outcome& o) {
  const auto root = fs::temp_directory_path() / "hypsep_acceptance";
  fs::remove_all(root);
  const auto data = root / "data";
  const std::string synth_flags = " --n_regular 300 --n_collusive_groups 4 --group_size 20 --seed 5";
  o.require(run_cli("synth --threads 1" + synth_flags + " --out " + data.string()) == 0, "synth run");
  o.require(run_cli("synth --threads 4" + synth_flags + " --out " + (root / "data4").string()) == 0, "synth run");
  std::size_t identical = directory_contents(data) == directory_contents(root / "data4");
  o.require(identical == 1, "synth");
  const std::string inputs = " --tweets " + (data / "tweets.jsonl").string() + " --profiles " +
                             (data / "profiles.jsonl").string() + " --labels " + (data / "labels.csv").string() +
                             " --p 15 --dim 6 --epochs 10 --trees 50 --seed 11";
  const char* stages[] = {"ingest", "influencers", "curves", "features", "embed", "reduce", "classify", "evaluate"};
  for (const char* stage : stages) {
    const auto a = root / (std::string(stage) + "_1"), b = root / (std::string(stage) + "_4");
    const bool ran = run_cli(std::string(stage) + inputs + " --threads 1 --out " + a.string()) == 0 &&
                     run_cli(std::string(stage) + inputs + " --threads 4 --out " + b.string()) == 0;
    const bool same = ran && directory_contents(a) == directory_contents(b);
    o.require(same, stage);
    identical += same;
  }
  o.detail << identical << "/9 subcommands byte-identical across --threads 1 and 4";
  fs::remove_all(root);
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void(Outcome&)>>> criteria = {
      {"feature matrix equals naive oracle", feature_oracle},
      {"micro-scale Dasgupta optimality", micro_dasgupta},
      {"hyperbolic geometry suite", geometry},
      {"continuous cost gradient check", gradient_check},
      {"end-to-end discrimination", discrimination},
      {"centroid ordering", centroid_ordering},
      {"reducer and SMOTE oracles", reducer_oracles},
      {"determinism across thread counts", cli_determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.failures += std::string("threw: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %zu %s (%.1fs): %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, secs, o.detail.str().c_str());
    if (!o.pass) std::printf("    failed: %s\n", o.failures.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
