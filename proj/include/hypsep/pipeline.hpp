#pragma once

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hypsep/config.hpp"
#include "hypsep/csv.hpp"
#include "hypsep/eval.hpp"
#include "hypsep/features.hpp"
#include "hypsep/hyphc.hpp"
#include "hypsep/influencers.hpp"
#include "hypsep/ingest.hpp"
#include "hypsep/log.hpp"

namespace hypsep::pipeline {

namespace fs = std::filesystem;

inline constexpr const char* kToolVersion = "1.0.0";

/// Static description of one stage: the config keys its outputs depend on.
struct StageInfo {
  const char* name;
  int version;
  std::vector<std::string> keys;
};

inline const StageInfo& stage_info(const std::string& name) {
  static const std::vector<StageInfo> stages = {
      {"ingest", 1, {"tweets", "profiles", "labels"}},
      {"influencers", 1, {"p"}},
      {"curves", 1, {"curves_max_p"}},
      {"features", 1, {"sentinel"}},
      {"embed", 1,
       {"seed", "dim", "sigma", "sigma_sample", "tau", "anneal_factor", "epochs", "triplets_per_epoch", "batch_size",
        "learning_rate", "optimizer", "init_radius", "ball_eps"}},
      {"reduce_pca", 1, {"dim"}},
      {"reduce_fa", 1, {"dim"}},
      {"reduce_se", 1, {"seed", "dim", "se_neighbors"}},
      {"classify", 1,
       {"seed", "trees", "max_depth", "min_samples_leaf", "max_features", "test_fraction", "smote_k", "cv_folds"}},
      {"centroids", 1, {}},
  };
  for (const auto& s : stages)
    if (name == s.name) return s;
  throw InvalidConfig("unknown stage '" + name + "'");
}

inline std::string file_hash(const fs::path& p) { return csv::hex64(csv::fnv1a(csv::read_text(p.string()))); }

/// Runs stages inside one run directory. Each stage writes its artifacts, then records the hash of
/// its config keys and of every input and output file in manifest.json. A stage whose record still
/// matches is reused instead of recomputed.
class Pipeline {
 public:
  explicit Pipeline(config::PipelineConfig cfg) : cfg_(std::move(cfg)), dir_(cfg_.out) {
    config::validate(cfg_);
    cfg_.experiment.threads = cfg_.threads;
    fs::create_directories(dir_);
    if (fs::exists(dir_ / "manifest.json")) {
      try {
        manifest_ = nlohmann::ordered_json::parse(csv::read_text((dir_ / "manifest.json").string()));
      } catch (const nlohmann::json::exception&) {
        log::warn("ignoring unreadable manifest.json");
        manifest_ = {};
      }
    }
  }

  const fs::path& dir() const noexcept { return dir_; }
  const config::PipelineConfig& config() const noexcept { return cfg_; }

  // -- stages; `force` recomputes even when the recorded artifacts are fresh ----------------------

  void ingest(bool force = false) {
    const std::vector<fs::path> inputs = {cfg_.tweets, cfg_.profiles, cfg_.labels};
    if (!force && fresh("ingest", inputs)) return;
    const auto corpus = load_corpus(cfg_.tweets);
    const auto profiles = load_profiles(cfg_.profiles);
    const auto labels = load_labels(cfg_.labels);
    std::string prof_text;
    for (const auto& [id, p] : profiles) prof_text += serialize_user_profile(p) + "\n";
    write("corpus_tweets.jsonl", serialize_corpus(corpus));
    write("corpus_profiles.jsonl", prof_text);
    write("corpus_labels.csv", serialize_labels(labels));
    record("ingest", inputs, {"corpus_tweets.jsonl", "corpus_profiles.jsonl", "corpus_labels.csv"});
  }

  void influencers(bool force = false) {
    ingest();
    const std::vector<fs::path> inputs = {dir_ / "corpus_tweets.jsonl"};
    if (!force && fresh("influencers", inputs)) return;
    const auto& c = corpus();
    const auto set = select_top_influencers(compute_rt_scores(c), cfg_.experiment.p);
    write("influencers.csv", influencers_csv(set));
    write("users.csv", users_csv(build_user_set(c, set)));
    record("influencers", inputs, {"influencers.csv", "users.csv"});
  }

  void curves(bool force = false) {
    ingest();
    const std::vector<fs::path> inputs = {dir_ / "corpus_tweets.jsonl"};
    if (!force && fresh("curves", inputs)) return;
    write("curves.csv", curves_csv(influencer_curves(corpus(), cfg_.curves_max_p)));
    record("curves", inputs, {"curves.csv"});
  }

  void features(bool force = false) {
    influencers();
    const std::vector<fs::path> inputs = {dir_ / "corpus_tweets.jsonl", dir_ / "corpus_profiles.jsonl",
                                          dir_ / "influencers.csv", dir_ / "users.csv"};
    if (!force && fresh("features", inputs)) return;
    const auto& c = corpus();
    const auto set = read_influencers_csv((dir_ / "influencers.csv").string());
    const auto users = read_users_csv((dir_ / "users.csv").string());
    const auto profiles = load_profiles((dir_ / "corpus_profiles.jsonl").string());
    const auto f = build_feature_matrix(c, users, set, cfg_.experiment.sentinel, cfg_.threads);
    write("features_F.csv", feature_matrix_csv(f));
    write("features_U.csv", feature_matrix_csv(build_user_matrix(c, profiles, users, c.latest_timestamp())));
    write("scaler_F.csv", scaler_csv(fit_scaler(f)));
    record("features", inputs, {"features_F.csv", "features_U.csv", "scaler_F.csv"});
  }

  void embed(bool force = false) {
    features();
    const std::vector<fs::path> inputs = {dir_ / "features_F.csv"};
    if (!force && fresh("embed", inputs)) return;
    const auto run = eval::embed_hyphc(matrix("features_F.csv"), cfg_.experiment);
    write("embeddings.csv", feature_matrix_csv(hyphc::export_embedding(run.embedding)));
    write("training_log.csv", hyphc::training_log_csv(run.log));
    record("embed", inputs, {"embeddings.csv", "training_log.csv"});
  }

  void reduce(baselines::Method method, bool force = false) {
    features();
    const std::string name(baselines::method_name(method));
    const std::string stage = "reduce_" + name, out = "reduced_" + name + ".csv";
    const std::vector<fs::path> inputs = {dir_ / "features_F.csv"};
    if (!force && fresh(stage, inputs)) return;
    write(out, feature_matrix_csv(eval::reduce_baseline(matrix("features_F.csv"), method, cfg_.experiment)));
    record(stage, inputs, {out});
  }

  void reduce_selected(bool force = false) {
    for (auto m : {baselines::Method::pca, baselines::Method::fa, baselines::Method::se})
      if (cfg_.reducer == "all" || cfg_.reducer == baselines::method_name(m)) reduce(m, force);
  }

  void classify(bool force = false) {
    embed();
    reduce(baselines::Method::se);
    reduce(baselines::Method::fa);
    const std::vector<fs::path> inputs = {dir_ / "features_F.csv", dir_ / "features_U.csv", dir_ / "embeddings.csv",
                                          dir_ / "reduced_se.csv", dir_ / "reduced_fa.csv",
                                          dir_ / "corpus_labels.csv"};
    if (!force && fresh("classify", inputs)) return;
    const auto table = eval::run_matrix(eval::assemble_feature_sets(matrix("features_F.csv"), matrix("features_U.csv"),
                                                                    reduced()),
                                        labels(), cfg_.experiment);
    write("results.csv", eval::results_csv(table));
    record("classify", inputs, {"results.csv"});
  }

  void centroids(bool force = false) {
    embed();
    reduce(baselines::Method::se);
    reduce(baselines::Method::fa);
    const std::vector<fs::path> inputs = {dir_ / "embeddings.csv", dir_ / "reduced_se.csv", dir_ / "reduced_fa.csv",
                                          dir_ / "corpus_labels.csv"};
    if (!force && fresh("centroids", inputs)) return;
    std::vector<std::string> outs;
    for (const auto& rep : eval::centroid_reports(reduced(), labels())) {
      std::string file = "centroids_" + lower(rep.reducer) + ".csv";
      write(file, eval::centroids_csv(rep));
      outs.push_back(std::move(file));
    }
    record("centroids", inputs, outs);
  }

  /// Full experiment: results.csv plus one centroid file per reducer.
  void evaluate(bool force = false) {
    classify(force);
    centroids(force);
  }

 private:
  static std::string lower(std::string s) {
    for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return s;
  }

  void write(const std::string& name, const std::string& text) const { csv::write_text((dir_ / name).string(), text); }

  FeatureMatrix matrix(const std::string& name) const { return read_feature_matrix_csv((dir_ / name).string()); }

  std::map<std::string, FeatureMatrix> reduced() const {
    return {{"HypHC", matrix("embeddings.csv")}, {"SE", matrix("reduced_se.csv")}, {"FA", matrix("reduced_fa.csv")}};
  }

  const Corpus& corpus() {
    if (!corpus_) corpus_ = load_corpus((dir_ / "corpus_tweets.jsonl").string());
    return *corpus_;
  }

  LabelMap labels() const { return load_labels((dir_ / "corpus_labels.csv").string()); }

  static std::string input_key(const fs::path& p, const fs::path& dir) {
    return p.parent_path() == dir ? p.filename().string() : p.string();
  }

  bool fresh(const std::string& stage, const std::vector<fs::path>& inputs) const {
    const auto& info = stage_info(stage);
    if (!manifest_.contains("stages") || !manifest_["stages"].contains(stage)) return false;
    const auto& rec = manifest_["stages"][stage];
    if (rec.value("version", 0) != info.version) return false;
    if (rec.value("config_hash", std::string()) != config::hash_keys(cfg_, info.keys)) return false;
    for (const auto& in : inputs) {
      const auto key = input_key(in, dir_);
      if (!rec["inputs"].contains(key)) return false;
      // a vanished input leaves the recorded artifacts as the only copy; a changed one invalidates them
      if (fs::exists(in) && rec["inputs"][key] != file_hash(in)) return false;
    }
    for (const auto& [name, hash] : rec["outputs"].items()) {
      const auto path = dir_ / name;
      if (!fs::exists(path) || hash != file_hash(path)) return false;
    }
    return true;
  }

  void record(const std::string& stage, const std::vector<fs::path>& inputs, const std::vector<std::string>& outputs) {
    const auto& info = stage_info(stage);
    nlohmann::ordered_json rec;
    rec["version"] = info.version;
    rec["config_hash"] = config::hash_keys(cfg_, info.keys);
    rec["inputs"] = nlohmann::ordered_json::object();
    for (const auto& in : inputs) rec["inputs"][input_key(in, dir_)] = file_hash(in);
    rec["outputs"] = nlohmann::ordered_json::object();
    for (const auto& out : outputs) rec["outputs"][out] = file_hash(dir_ / out);

    manifest_["tool"] = "hypsep";
    manifest_["version"] = kToolVersion;
    manifest_["config_hash"] = run_config_hash();
    auto& stages = manifest_["stages"];
    if (!stages.is_object()) stages = nlohmann::ordered_json::object();
    stages[stage] = std::move(rec);
    // stable key order regardless of which stages ran first
    nlohmann::ordered_json sorted = nlohmann::ordered_json::object();
    std::vector<std::string> names;
    for (const auto& [name, _] : stages.items()) names.push_back(name);
    std::sort(names.begin(), names.end());
    for (const auto& n : names) sorted[n] = stages[n];
    stages = std::move(sorted);
    write("manifest.json", manifest_.dump(2) + "\n");
  }

  /// Hash of every key except the run directory, so identical runs in different places agree.
  std::string run_config_hash() const {
    std::vector<std::string> keys;
    for (const auto& k : config::Registry::instance().keys())
      if (k.name != "out") keys.push_back(k.name);
    return config::hash_keys(cfg_, keys);
  }

  config::PipelineConfig cfg_;
  fs::path dir_;
  nlohmann::ordered_json manifest_ = nlohmann::ordered_json::object();
  std::optional<Corpus> corpus_;
};

}  // namespace hypsep::pipeline
