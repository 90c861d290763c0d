#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "hypsep/csv.hpp"
#include "hypsep/error.hpp"
#include "hypsep/ingest.hpp"
#include "hypsep/random.hpp"

namespace hypsep::synth {

/// Generator parameters. Collusive groups are split into suspended-like groups (listed first) and
/// deleted-like groups, which fixate on fewer targets, retweet them less often, and draw their
/// targets from the less popular half of the influencers.
struct SynthConfig {
  std::uint64_t seed = 1;
  std::int64_t start_time = 1'600'000'000;
  std::int64_t horizon_seconds = 30LL * 24 * 3600;
  std::size_t n_influencers = 20;
  double tweets_per_influencer = 30;  ///< Poisson mean
  std::size_t n_regular = 2000;
  std::size_t n_collusive_groups = 10;
  std::size_t group_size = 50;
  std::size_t targets_per_group = 3;  ///< suspended-like groups; deleted-like groups use one fewer (min 1)
  double organic_mu = 8.0, organic_sigma = 1.5;
  double collusive_mu = 4.0, collusive_sigma = 0.5;
  double organic_retweet_prob = 0.05;    ///< per influencer tweet, before rank and activity scaling
  double collusive_retweet_prob = 0.6;   ///< per target tweet, suspended-like groups
  double deleted_retweet_scale = 0.7;    ///< multiplies the collusive probability for deleted-like groups
  double suspended_fraction = 0.6;       ///< share of collusive groups labeled suspended
  double activity_sigma = 0.7;           ///< log-normal spread of per-user organic activity
  double filler_tweets = 20;             ///< Poisson mean of original tweets per non-influencer user

  void validate() const {
    auto prob = [](double p, const char* name) {
      if (!(p >= 0 && p <= 1)) throw InvalidConfig(std::string("synth: ") + name + " must lie in [0, 1]");
    };
    prob(organic_retweet_prob, "organic_retweet_prob");
    prob(collusive_retweet_prob, "collusive_retweet_prob");
    prob(deleted_retweet_scale, "deleted_retweet_scale");
    prob(suspended_fraction, "suspended_fraction");
    if (!(organic_sigma > 0) || !(collusive_sigma > 0)) throw InvalidConfig("synth: delay sigmas must be positive");
    if (!(activity_sigma >= 0)) throw InvalidConfig("synth: activity_sigma must be non-negative");
    if (horizon_seconds <= 0) throw InvalidConfig("synth: horizon_seconds must be positive");
    if (!(tweets_per_influencer >= 0) || !(filler_tweets >= 0)) throw InvalidConfig("synth: tweet means must be non-negative");
    if (n_collusive_groups > 0) {
      if (targets_per_group < 1 || targets_per_group > 3) throw InvalidConfig("synth: targets_per_group must lie in [1, 3]");
      if (2 * targets_per_group > n_influencers) throw InvalidConfig("synth: need at least two influencers per target");
    }
  }
};

struct SynthData {
  std::vector<TweetRecord> tweets;  ///< sorted by (created_at, tweet_id)
  std::vector<UserProfile> profiles;
  LabelMap labels;
  std::vector<std::string> influencer_ids;
  std::vector<std::vector<std::string>> groups;  ///< collusive group members
};

namespace detail {

inline std::string random_word(Engine& eng, std::size_t min_len, std::size_t max_len) {
  static constexpr char letters[] = "abcdefghijklmnopqrstuvwxyz";
  const auto len = min_len + uniform_index(eng, max_len - min_len + 1);
  std::string w;
  for (std::size_t i = 0; i < len; ++i) w += letters[uniform_index(eng, 26)];
  return w;
}

/// Profile fields drawn from one distribution for every class.
inline UserProfile random_profile(Engine& eng, const std::string& id, std::int64_t start) {
  std::lognormal_distribution<double> followers(5.0, 1.5), friends(5.5, 1.0), likes(6.0, 2.0);
  UserProfile p;
  p.user_id = id;
  p.followers = static_cast<std::int64_t>(followers(eng));
  p.friends = static_cast<std::int64_t>(friends(eng));
  p.likes = static_cast<std::int64_t>(likes(eng));
  p.account_created_at = start - 30 * 86400 - static_cast<std::int64_t>(uniform_index(eng, 8ULL * 365 * 86400));
  p.screen_name = random_word(eng, 4, 12);
  if (uniform01(eng) < 0.3) p.screen_name += " " + random_word(eng, 3, 8);
  const auto bio_words = uniform_index(eng, 16);
  for (std::size_t w = 0; w < bio_words; ++w) p.bio += (w ? " " : "") + random_word(eng, 2, 9);
  return p;
}

inline std::pair<std::int64_t, std::int64_t> random_text(Engine& eng) {
  const auto words = static_cast<std::int64_t>(3 + uniform_index(eng, 25));
  return {words * 5 + static_cast<std::int64_t>(uniform_index(eng, 40)), words};
}

}  // namespace detail

/// Deterministic for a fixed config. User ids are opaque and shuffled so they carry no class signal.
inline SynthData generate(const SynthConfig& cfg) {
  cfg.validate();
  Engine eng(derive_seed(cfg.seed, 0x5e17));
  const std::size_t n_collusive = cfg.n_collusive_groups * cfg.group_size;
  const std::size_t n_users = cfg.n_influencers + cfg.n_regular + n_collusive;

  // user slots: influencers, then regular, then collusive groups in order
  std::vector<std::size_t> perm(n_users);
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = n_users; i > 1; --i) std::swap(perm[i - 1], perm[uniform_index(eng, i)]);
  std::vector<std::string> ids(n_users);
  for (std::size_t s = 0; s < n_users; ++s) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "u%06zu", perm[s] + 1);
    ids[s] = buf;
  }

  SynthData out;
  for (std::size_t s = 0; s < n_users; ++s) out.profiles.push_back(detail::random_profile(eng, ids[s], cfg.start_time));
  std::sort(out.profiles.begin(), out.profiles.end(),
            [](const UserProfile& a, const UserProfile& b) { return a.user_id < b.user_id; });
  out.influencer_ids.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(cfg.n_influencers));

  struct Original {
    std::size_t author;
    std::int64_t time, chars, words;
  };
  std::vector<Original> influencer_tweets;
  std::vector<std::vector<std::size_t>> tweets_of(cfg.n_influencers);
  std::poisson_distribution<int> per_influencer(cfg.tweets_per_influencer);
  for (std::size_t i = 0; i < cfg.n_influencers; ++i) {
    const int k = cfg.tweets_per_influencer > 0 ? per_influencer(eng) : 0;
    for (int t = 0; t < k; ++t) {
      const auto [c, w] = detail::random_text(eng);
      tweets_of[i].push_back(influencer_tweets.size());
      influencer_tweets.push_back({i, cfg.start_time + static_cast<std::int64_t>(uniform_index(
                                                           eng, static_cast<std::uint64_t>(cfg.horizon_seconds))),
                                   c, w});
    }
  }

  struct Retweet {
    std::size_t user, original;
    std::int64_t time;
  };
  std::vector<Retweet> retweets;
  std::lognormal_distribution<double> organic_delay(cfg.organic_mu, cfg.organic_sigma);
  std::lognormal_distribution<double> collusive_delay(cfg.collusive_mu, cfg.collusive_sigma);
  std::lognormal_distribution<double> activity(0.0, cfg.activity_sigma);
  auto delay = [](double d) { return std::max<std::int64_t>(1, std::llround(d)); };

  // organic background: every non-influencer user, with rank-weighted influencer preference
  const double ni = static_cast<double>(cfg.n_influencers);
  for (std::size_t u = cfg.n_influencers; u < n_users; ++u) {
    const double a = cfg.activity_sigma > 0 ? activity(eng) : 1.0;
    for (std::size_t i = 0; i < cfg.n_influencers; ++i) {
      const double rank_weight = 2.0 * (ni - static_cast<double>(i)) / (ni + 1.0);
      const double p = std::min(1.0, cfg.organic_retweet_prob * rank_weight * a);
      for (auto t : tweets_of[i])
        if (uniform01(eng) < p) retweets.push_back({u, t, influencer_tweets[t].time + delay(organic_delay(eng))});
    }
  }

  // collusive groups
  const auto n_suspended_groups =
      static_cast<std::size_t>(std::llround(cfg.suspended_fraction * static_cast<double>(cfg.n_collusive_groups)));
  for (std::size_t g = 0; g < cfg.n_collusive_groups; ++g) {
    const bool suspended = g < n_suspended_groups;
    const std::size_t n_targets = suspended ? cfg.targets_per_group : std::max<std::size_t>(1, cfg.targets_per_group - 1);
    const double p = cfg.collusive_retweet_prob * (suspended ? 1.0 : cfg.deleted_retweet_scale);
    // suspended-like groups push the popular half of the influencers, deleted-like groups the rest
    const std::size_t half = cfg.n_influencers / 2;
    std::vector<std::size_t> pool(suspended ? half : cfg.n_influencers - half);
    std::iota(pool.begin(), pool.end(), suspended ? 0 : half);
    for (std::size_t i = 0; i < n_targets; ++i) std::swap(pool[i], pool[i + uniform_index(eng, pool.size() - i)]);

    std::vector<std::string> members;
    const std::size_t first = cfg.n_influencers + cfg.n_regular + g * cfg.group_size;
    for (std::size_t u = first; u < first + cfg.group_size; ++u) {
      members.push_back(ids[u]);
      out.labels[ids[u]] = suspended ? UserClass::suspended : UserClass::deleted;
      for (std::size_t i = 0; i < n_targets; ++i)
        for (auto t : tweets_of[pool[i]])
          if (uniform01(eng) < p) retweets.push_back({u, t, influencer_tweets[t].time + delay(collusive_delay(eng))});
    }
    out.groups.push_back(std::move(members));
  }
  for (std::size_t u = cfg.n_influencers; u < cfg.n_influencers + cfg.n_regular; ++u) out.labels[ids[u]] = UserClass::regular;

  // a user retweets a given tweet at most once; keep the earliest
  std::sort(retweets.begin(), retweets.end(), [](const Retweet& a, const Retweet& b) {
    return std::tie(a.user, a.original, a.time) < std::tie(b.user, b.original, b.time);
  });
  retweets.erase(std::unique(retweets.begin(), retweets.end(),
                             [](const Retweet& a, const Retweet& b) { return a.user == b.user && a.original == b.original; }),
                 retweets.end());

  // filler originals for everyone outside the influencer set
  std::poisson_distribution<int> filler(cfg.filler_tweets);
  std::vector<Original> fillers;
  for (std::size_t u = cfg.n_influencers; u < n_users; ++u) {
    const int k = cfg.filler_tweets > 0 ? filler(eng) : 0;
    for (int t = 0; t < k; ++t) {
      const auto [c, w] = detail::random_text(eng);
      fillers.push_back({u, cfg.start_time + static_cast<std::int64_t>(uniform_index(
                                                 eng, static_cast<std::uint64_t>(cfg.horizon_seconds))),
                         c, w});
    }
  }

  // influencer tweet ids are fixed first so retweets can reference them
  std::vector<std::size_t> order(influencer_tweets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return influencer_tweets[a].time < influencer_tweets[b].time; });
  std::vector<std::string> original_id(influencer_tweets.size());
  std::size_t next_id = 1;
  auto make_id = [&] {
    char buf[24];
    std::snprintf(buf, sizeof buf, "t%08zu", next_id++);
    return std::string(buf);
  };
  for (auto o : order) {
    const auto& src = influencer_tweets[o];
    original_id[o] = make_id();
    out.tweets.push_back({original_id[o], ids[src.author], src.time, std::nullopt, src.chars, src.words});
  }
  for (const auto& r : retweets) {
    const auto& src = influencer_tweets[r.original];
    out.tweets.push_back({make_id(), ids[r.user], r.time,
                          RetweetRef{original_id[r.original], ids[src.author], src.time}, src.chars, src.words});
  }
  for (const auto& f : fillers) out.tweets.push_back({make_id(), ids[f.author], f.time, std::nullopt, f.chars, f.words});
  std::stable_sort(out.tweets.begin(), out.tweets.end(), [](const TweetRecord& a, const TweetRecord& b) {
    return std::tie(a.created_at, a.tweet_id) < std::tie(b.created_at, b.tweet_id);
  });
  return out;
}

/// Writes tweets.jsonl, profiles.jsonl and labels.csv into `dir`.
inline void write(const SynthData& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::string tweets, profiles;
  for (const auto& t : data.tweets) tweets += serialize_tweet_record(t) + "\n";
  for (const auto& p : data.profiles) profiles += serialize_user_profile(p) + "\n";
  csv::write_text((dir / "tweets.jsonl").string(), tweets);
  csv::write_text((dir / "profiles.jsonl").string(), profiles);
  csv::write_text((dir / "labels.csv").string(), serialize_labels(data.labels));
}

}  // namespace hypsep::synth
