#pragma once

#include <cctype>
#include <charconv>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "hypsep/csv.hpp"
#include "hypsep/error.hpp"
#include "hypsep/eval.hpp"
#include "hypsep/synth.hpp"

namespace hypsep::config {

/// Every tunable of every stage, flat. Paths are resolved relative to the working directory.
struct PipelineConfig {
  std::string tweets = "tweets.jsonl";
  std::string profiles = "profiles.jsonl";
  std::string labels = "labels.csv";
  std::string out = "run";
  std::size_t threads = 1;
  std::size_t curves_max_p = 600;
  std::string reducer = "all";  ///< reduce subcommand: pca, fa, se or all
  eval::ExperimentConfig experiment;
  synth::SynthConfig synth;
};

/// Key registry: text in, text out. Order of registration is the order of the resolved dump.
class Registry {
 public:
  struct Key {
    std::string name;
    std::string help;
    std::function<void(PipelineConfig&, std::string_view)> set;
    std::function<std::string(const PipelineConfig&)> get;
  };

  static const Registry& instance() {
    static const Registry r;
    return r;
  }

  const std::vector<Key>& keys() const noexcept { return keys_; }

  const Key* find(std::string_view name) const {
    for (const auto& k : keys_)
      if (k.name == name) return &k;
    return nullptr;
  }

 private:
  template <typename T>
  static T parse_number(std::string_view key, std::string_view v) {
    T out{};
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size())
      throw InvalidConfig("config key '" + std::string(key) + "': cannot parse '" + std::string(v) + "'");
    return out;
  }

  template <typename T, typename Access>
  void number(std::string name, std::string help, Access access) {
    keys_.push_back({name, std::move(help),
                     [name, access](PipelineConfig& c, std::string_view v) { access(c) = parse_number<T>(name, v); },
                     [access](const PipelineConfig& c) {
                       if constexpr (std::is_floating_point_v<T>)
                         return csv::format_double(access(c));
                       else
                         return std::to_string(access(c));
                     }});
  }

  template <typename Access>
  void text(std::string name, std::string help, Access access) {
    keys_.push_back({std::move(name), std::move(help),
                     [access](PipelineConfig& c, std::string_view v) { access(c) = std::string(v); },
                     [access](const PipelineConfig& c) { return access(c); }});
  }

  void choice(std::string name, std::string help, std::function<void(PipelineConfig&, std::string_view)> set,
              std::function<std::string(const PipelineConfig&)> get) {
    keys_.push_back({std::move(name), std::move(help), std::move(set), std::move(get)});
  }

  Registry();
  std::vector<Key> keys_;
};

#define HYPSEP_FIELD(expr) [](auto& c) -> auto& { return expr; }

inline Registry::Registry() {
  using C = PipelineConfig;
  text("tweets", "tweet JSONL input", HYPSEP_FIELD(c.tweets));
  text("profiles", "profile JSONL input", HYPSEP_FIELD(c.profiles));
  text("labels", "label CSV input", HYPSEP_FIELD(c.labels));
  text("out", "run directory for stage artifacts", HYPSEP_FIELD(c.out));
  number<std::uint64_t>("seed", "master seed", HYPSEP_FIELD(c.experiment.seed));

  number<std::size_t>("p", "number of Influencers", HYPSEP_FIELD(c.experiment.p));
  number<double>("sentinel", "median delay for pairs without retweets", HYPSEP_FIELD(c.experiment.sentinel));
  number<std::size_t>("curves_max_p", "largest p reported by the curves stage", HYPSEP_FIELD(c.curves_max_p));
  number<std::size_t>("dim", "reduced dimension for HypHC, SE, FA and PCA", HYPSEP_FIELD(c.experiment.dim));
  text("reducer", "reduce stage method: pca, fa, se or all", HYPSEP_FIELD(c.reducer));
  number<std::size_t>("se_neighbors", "k of the spectral-embedding k-NN graph", HYPSEP_FIELD(c.experiment.se_neighbors));

  number<double>("sigma", "similarity kernel width; 0 selects the median heuristic", HYPSEP_FIELD(c.experiment.similarity.sigma));
  number<std::size_t>("sigma_sample", "row pairs sampled by the median heuristic", HYPSEP_FIELD(c.experiment.similarity.sample_size));
  number<double>("tau", "initial softmax temperature", HYPSEP_FIELD(c.experiment.hyphc.tau));
  number<double>("anneal_factor", "temperature multiplier after each third of training", HYPSEP_FIELD(c.experiment.hyphc.anneal_factor));
  number<std::size_t>("epochs", "HypHC epochs", HYPSEP_FIELD(c.experiment.hyphc.epochs));
  number<std::size_t>("triplets_per_epoch", "sampled triplets per epoch; 0 means 50n", HYPSEP_FIELD(c.experiment.hyphc.triplets_per_epoch));
  number<std::size_t>("batch_size", "triplets per optimizer step", HYPSEP_FIELD(c.experiment.hyphc.batch_size));
  number<double>("learning_rate", "HypHC learning rate", HYPSEP_FIELD(c.experiment.hyphc.learning_rate));
  choice("optimizer", "HypHC optimizer: adam or sgd",
         [](C& c, std::string_view v) {
           if (v == "adam") c.experiment.hyphc.optimizer = hyphc::Optimizer::adam;
           else if (v == "sgd") c.experiment.hyphc.optimizer = hyphc::Optimizer::sgd;
           else throw InvalidConfig("optimizer must be adam or sgd");
         },
         [](const C& c) { return std::string(c.experiment.hyphc.optimizer == hyphc::Optimizer::adam ? "adam" : "sgd"); });
  number<double>("init_radius", "radius of the initial uniform ball", HYPSEP_FIELD(c.experiment.hyphc.init_radius));
  number<double>("ball_eps", "points are kept within radius 1 - ball_eps", HYPSEP_FIELD(c.experiment.hyphc.ball_eps));

  number<std::size_t>("trees", "random-forest trees", HYPSEP_FIELD(c.experiment.forest.trees));
  number<std::size_t>("max_depth", "tree depth limit; 0 is unlimited", HYPSEP_FIELD(c.experiment.forest.max_depth));
  number<std::size_t>("min_samples_leaf", "minimum rows per leaf", HYPSEP_FIELD(c.experiment.forest.min_samples_leaf));
  choice("max_features", "features tried per split: sqrt, log2 or all",
         [](C& c, std::string_view v) {
           auto& f = c.experiment.forest.features;
           if (v == "sqrt") f = learn::FeatureRule::sqrt;
           else if (v == "log2") f = learn::FeatureRule::log2;
           else if (v == "all") f = learn::FeatureRule::all;
           else throw InvalidConfig("max_features must be sqrt, log2 or all");
         },
         [](const C& c) {
           switch (c.experiment.forest.features) {
             case learn::FeatureRule::sqrt: return std::string("sqrt");
             case learn::FeatureRule::log2: return std::string("log2");
             case learn::FeatureRule::all: return std::string("all");
           }
           return std::string();
         });
  number<double>("test_fraction", "held-out share of each class", HYPSEP_FIELD(c.experiment.separation.test_fraction));
  number<std::size_t>("smote_k", "SMOTE neighbor count", HYPSEP_FIELD(c.experiment.separation.smote_k));
  number<std::size_t>("cv_folds", "stratified folds; 0 or 1 uses a single split", HYPSEP_FIELD(c.experiment.separation.cv_folds));

  number<std::int64_t>("start_time", "synth: epoch second of the horizon start", HYPSEP_FIELD(c.synth.start_time));
  number<std::int64_t>("horizon_seconds", "synth: length of the tweet horizon", HYPSEP_FIELD(c.synth.horizon_seconds));
  number<std::size_t>("n_influencers", "synth: influencer accounts", HYPSEP_FIELD(c.synth.n_influencers));
  number<double>("tweets_per_influencer", "synth: Poisson mean of tweets per influencer", HYPSEP_FIELD(c.synth.tweets_per_influencer));
  number<std::size_t>("n_regular", "synth: organic users", HYPSEP_FIELD(c.synth.n_regular));
  number<std::size_t>("n_collusive_groups", "synth: collusive groups", HYPSEP_FIELD(c.synth.n_collusive_groups));
  number<std::size_t>("group_size", "synth: members per collusive group", HYPSEP_FIELD(c.synth.group_size));
  number<std::size_t>("targets_per_group", "synth: targets of suspended-like groups (1-3)", HYPSEP_FIELD(c.synth.targets_per_group));
  number<double>("organic_mu", "synth: log-mean of organic delays", HYPSEP_FIELD(c.synth.organic_mu));
  number<double>("organic_sigma", "synth: log-sd of organic delays", HYPSEP_FIELD(c.synth.organic_sigma));
  number<double>("collusive_mu", "synth: log-mean of collusive delays", HYPSEP_FIELD(c.synth.collusive_mu));
  number<double>("collusive_sigma", "synth: log-sd of collusive delays", HYPSEP_FIELD(c.synth.collusive_sigma));
  number<double>("organic_retweet_prob", "synth: base organic retweet probability", HYPSEP_FIELD(c.synth.organic_retweet_prob));
  number<double>("collusive_retweet_prob", "synth: collusive retweet probability", HYPSEP_FIELD(c.synth.collusive_retweet_prob));
  number<double>("deleted_retweet_scale", "synth: probability multiplier for deleted-like groups", HYPSEP_FIELD(c.synth.deleted_retweet_scale));
  number<double>("suspended_fraction", "synth: share of groups labeled suspended", HYPSEP_FIELD(c.synth.suspended_fraction));
  number<double>("activity_sigma", "synth: log-sd of organic activity", HYPSEP_FIELD(c.synth.activity_sigma));
  number<double>("filler_tweets", "synth: Poisson mean of original tweets per user", HYPSEP_FIELD(c.synth.filler_tweets));
}

#undef HYPSEP_FIELD

/// Parses `key = value` lines; `#` starts a comment. Duplicate keys keep the last value.
inline std::map<std::string, std::string> parse_text(std::string_view text, const std::string& origin = "config") {
  std::map<std::string, std::string> out;
  std::size_t line_no = 0;
  for (std::size_t pos = 0; pos <= text.size();) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    auto trim = [](std::string_view s) {
      while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
      while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
      return s;
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw InvalidConfig(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
    out[std::string(trim(line.substr(0, eq)))] = std::string(trim(line.substr(eq + 1)));
  }
  return out;
}

/// Applies overrides, rejecting keys the registry does not know.
inline void apply(PipelineConfig& cfg, const std::map<std::string, std::string>& values) {
  const auto& reg = Registry::instance();
  for (const auto& [k, v] : values) {
    const auto* key = reg.find(k);
    if (!key) throw InvalidConfig("unknown config key '" + k + "'");
    key->set(cfg, v);
  }
}

inline void validate(const PipelineConfig& cfg) {
  const auto& e = cfg.experiment;
  if (e.p < 1) throw InvalidConfig("p must be at least 1");
  if (e.dim < 2) throw InvalidConfig("dim must be at least 2");
  if (e.se_neighbors < 1) throw InvalidConfig("se_neighbors must be at least 1");
  if (e.forest.trees < 1) throw InvalidConfig("trees must be at least 1");
  if (e.forest.min_samples_leaf < 1) throw InvalidConfig("min_samples_leaf must be at least 1");
  if (!(e.separation.test_fraction > 0 && e.separation.test_fraction < 1)) throw InvalidConfig("test_fraction must lie in (0, 1)");
  if (e.separation.smote_k < 1) throw InvalidConfig("smote_k must be at least 1");
  if (e.similarity.sigma < 0) throw InvalidConfig("sigma must be non-negative");
  if (cfg.threads < 1) throw InvalidConfig("threads must be at least 1");
  if (cfg.reducer != "all" && cfg.reducer != "pca" && cfg.reducer != "fa" && cfg.reducer != "se")
    throw InvalidConfig("reducer must be pca, fa, se or all");
  e.hyphc.validate();
  cfg.synth.validate();
}

/// `key = value` lines for every registered key, in registry order.
inline std::string resolved(const PipelineConfig& cfg) {
  std::string out;
  for (const auto& k : Registry::instance().keys()) out += k.name + " = " + k.get(cfg) + "\n";
  return out;
}

/// Hash of the values of the listed keys, used to decide whether a stage artifact is stale.
inline std::string hash_keys(const PipelineConfig& cfg, const std::vector<std::string>& names) {
  std::string text;
  for (const auto& n : names) {
    const auto* key = Registry::instance().find(n);
    if (!key) throw InvalidConfig("unknown config key '" + n + "'");
    text += n + "=" + key->get(cfg) + "\n";
  }
  return csv::hex64(csv::fnv1a(text));
}

}  // namespace hypsep::config
