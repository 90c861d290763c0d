#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hypsep/baselines.hpp"
#include "hypsep/csv.hpp"
#include "hypsep/error.hpp"
#include "hypsep/features.hpp"
#include "hypsep/hyphc.hpp"
#include "hypsep/influencers.hpp"
#include "hypsep/ingest.hpp"
#include "hypsep/learn.hpp"

namespace hypsep::eval {

using Centroids = std::map<UserClass, Eigen::VectorXd>;

/// Mean row per class over the labeled rows of `m`; rows without a label are ignored.
inline Centroids class_centroids(const FeatureMatrix& m, const LabelMap& labels) {
  Centroids sums;
  std::map<UserClass, std::size_t> counts;
  for (auto c : {UserClass::deleted, UserClass::regular, UserClass::suspended}) {
    sums[c] = Eigen::VectorXd::Zero(m.values.cols());
    counts[c] = 0;
  }
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto it = labels.find(m.row_ids[r]);
    if (it == labels.end()) continue;
    sums[it->second] += m.values.row(static_cast<Eigen::Index>(r)).transpose();
    ++counts[it->second];
  }
  for (auto& [c, v] : sums) {
    if (counts[c] == 0) throw EmptyClass("no rows labeled " + std::string(to_string(c)));
    v /= static_cast<double>(counts[c]);
  }
  return sums;
}

inline double cosine_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double na = a.norm(), nb = b.norm();
  if (na == 0 || nb == 0) throw ZeroVector("cosine distance of a zero vector");
  return 1.0 - a.dot(b) / (na * nb);
}

struct CentroidReport {
  std::string reducer;
  Centroids centroids;
  double deleted_suspended = 0, suspended_regular = 0, regular_deleted = 0;

  std::array<double, 3> distances() const { return {deleted_suspended, suspended_regular, regular_deleted}; }
};

/// Restandardizes the reduced representation, then compares class centroids.
inline CentroidReport centroid_report(const std::string& reducer, const FeatureMatrix& reduced, const LabelMap& labels) {
  CentroidReport rep;
  rep.reducer = reducer;
  rep.centroids = class_centroids(standardize(reduced).matrix, labels);
  const auto& c = rep.centroids;
  rep.deleted_suspended = cosine_distance(c.at(UserClass::deleted), c.at(UserClass::suspended));
  rep.suspended_regular = cosine_distance(c.at(UserClass::suspended), c.at(UserClass::regular));
  rep.regular_deleted = cosine_distance(c.at(UserClass::regular), c.at(UserClass::deleted));
  return rep;
}

inline std::string centroids_csv(const CentroidReport& rep) {
  return "reducer,deleted_suspended,suspended_regular,regular_deleted\n" + rep.reducer + "," +
         csv::format_double(rep.deleted_suspended) + "," + csv::format_double(rep.suspended_regular) + "," +
         csv::format_double(rep.regular_deleted) + "\n";
}

// ---------------------------------------------------------------------------
// Experiment matrix
// ---------------------------------------------------------------------------

inline const std::array<std::string, 5>& feature_set_names() {
  static const std::array<std::string, 5> names = {"U", "U+F", "HypHC", "SE", "FA"};
  return names;
}

struct ExperimentConfig {
  std::size_t p = 300;
  double sentinel = kDefaultSentinel;
  std::size_t dim = 60;
  std::size_t se_neighbors = 10;
  hyphc::Config hyphc;  ///< dim, seed and threads are overwritten from the fields here
  hyphc::SimilarityConfig similarity;
  learn::ForestConfig forest;
  learn::SeparationOptions separation;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
};

/// Every matrix the classification stage consumes, keyed by feature-set name, plus the bare reductions.
struct FeatureSets {
  FeatureMatrix interactions;  ///< F
  FeatureMatrix user;          ///< U
  std::map<std::string, FeatureMatrix> reduced;  ///< "HypHC", "SE", "FA" without U
  std::map<std::string, FeatureMatrix> by_name;
  hyphc::TrainResult hyphc_run;
};

inline std::map<std::string, FeatureMatrix> assemble_feature_sets(const FeatureMatrix& interactions,
                                                                  const FeatureMatrix& user,
                                                                  const std::map<std::string, FeatureMatrix>& reduced) {
  std::map<std::string, FeatureMatrix> out;
  out["U"] = user;
  out["U+F"] = concat(interactions, user);
  for (const auto& [name, m] : reduced) out[name] = concat(m, user);
  return out;
}

/// HypHC on the standardized interaction features, seeded from the master seed.
inline hyphc::TrainResult embed_hyphc(const FeatureMatrix& interactions, const ExperimentConfig& cfg) {
  auto hcfg = cfg.hyphc;
  hcfg.dim = cfg.dim;
  hcfg.seed = derive_seed(cfg.seed, 0x4c);
  hcfg.threads = cfg.threads;
  auto sim = cfg.similarity;
  sim.seed = derive_seed(cfg.seed, 0x5a);
  return hyphc::optimize(standardize(interactions).matrix, sim, hcfg);
}

/// One baseline reducer on the standardized interaction features.
inline FeatureMatrix reduce_baseline(const FeatureMatrix& interactions, baselines::Method method,
                                     const ExperimentConfig& cfg) {
  return baselines::reduce(standardize(interactions).matrix,
                           {method, cfg.dim, cfg.se_neighbors, derive_seed(cfg.seed, 0x5e)});
}

inline FeatureSets build_feature_sets(const Corpus& corpus, const ProfileMap& profiles, const ExperimentConfig& cfg) {
  FeatureSets fs;
  const auto influencers = select_top_influencers(compute_rt_scores(corpus), cfg.p);
  const auto users = build_user_set(corpus, influencers);
  if (users.size() < 3) throw DegenerateData("fewer than three engaged users");
  fs.interactions = build_feature_matrix(corpus, users, influencers, cfg.sentinel, cfg.threads);
  fs.user = build_user_matrix(corpus, profiles, users, corpus.latest_timestamp());
  fs.hyphc_run = embed_hyphc(fs.interactions, cfg);
  fs.reduced["HypHC"] = hyphc::export_embedding(fs.hyphc_run.embedding);
  fs.reduced["SE"] = reduce_baseline(fs.interactions, baselines::Method::se, cfg);
  fs.reduced["FA"] = reduce_baseline(fs.interactions, baselines::Method::fa, cfg);
  fs.by_name = assemble_feature_sets(fs.interactions, fs.user, fs.reduced);
  return fs;
}

/// F1 per (separation, feature set), separations in standard order.
struct ResultsTable {
  std::vector<learn::SeparationResult> cells;

  double f1(const std::string& separation, const std::string& feature_set) const {
    for (const auto& c : cells)
      if (c.separation == separation && c.feature_set == feature_set) return c.f1;
    throw UnknownFeatureSet("no result for " + separation + ":" + feature_set);
  }
};

/// All separations share one seed per separation across feature sets, so columns differ only in features.
inline ResultsTable run_matrix(const std::map<std::string, FeatureMatrix>& by_name, const LabelMap& labels,
                               const ExperimentConfig& cfg) {
  ResultsTable table;
  auto forest = cfg.forest;
  forest.threads = cfg.threads;
  const auto& seps = learn::standard_separations();
  for (std::size_t s = 0; s < seps.size(); ++s)
    for (const auto& name : feature_set_names())
      table.cells.push_back(learn::run_separation(by_name, labels, name, seps[s], forest, derive_seed(cfg.seed, 100 + s),
                                                  cfg.separation));
  return table;
}

/// One row per classifier; columns are separation:feature_set with F1 scaled to 100.
inline std::string results_csv(const ResultsTable& table) {
  std::string header = "classifier", row = "RFC";
  for (const auto& c : table.cells) {
    header += "," + c.separation + ":" + c.feature_set;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", 100.0 * c.f1);
    row += std::string(",") + buf;
  }
  return header + "\n" + row + "\n";
}

struct ExperimentResult {
  ResultsTable table;
  std::vector<CentroidReport> centroids;  ///< HypHC, SE, FA
};

inline std::vector<CentroidReport> centroid_reports(const std::map<std::string, FeatureMatrix>& reduced,
                                                    const LabelMap& labels) {
  std::vector<CentroidReport> out;
  for (const char* name : {"HypHC", "SE", "FA"}) out.push_back(centroid_report(name, reduced.at(name), labels));
  return out;
}

inline ExperimentResult experiment_matrix(const Corpus& corpus, const ProfileMap& profiles, const LabelMap& labels,
                                          const ExperimentConfig& cfg) {
  const auto fs = build_feature_sets(corpus, profiles, cfg);
  return {run_matrix(fs.by_name, labels, cfg), centroid_reports(fs.reduced, labels)};
}

}  // namespace hypsep::eval
