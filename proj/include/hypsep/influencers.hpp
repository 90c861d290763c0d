#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "hypsep/ingest.hpp"
#include "hypsep/log.hpp"

namespace hypsep {

/// rt_score per retweeted account: the number of distinct users who retweeted it at least once.
using RtScores = std::map<std::string, std::size_t>;

struct RankedInfluencer {
  std::string id;
  std::size_t rt_score = 0;
  bool operator==(const RankedInfluencer&) const = default;
};

/// Top-p accounts by rt_score, descending, ties by id ascending.
class InfluencerSet {
 public:
  InfluencerSet() = default;
  explicit InfluencerSet(std::vector<RankedInfluencer> ranked) : ranked_(std::move(ranked)) {
    for (std::size_t i = 0; i < ranked_.size(); ++i) rank_.emplace(ranked_[i].id, i);
  }

  const std::vector<RankedInfluencer>& ranked() const noexcept { return ranked_; }
  std::size_t size() const noexcept { return ranked_.size(); }
  bool empty() const noexcept { return ranked_.empty(); }
  const RankedInfluencer& operator[](std::size_t i) const { return ranked_[i]; }

  /// Rank position of an account, or -1 when it is not an Influencer.
  std::ptrdiff_t rank_of(const std::string& id) const {
    auto it = rank_.find(id);
    return it == rank_.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
  }
  bool contains(const std::string& id) const { return rank_.count(id) != 0; }

 private:
  std::vector<RankedInfluencer> ranked_;
  std::unordered_map<std::string, std::size_t> rank_;
};

/// Users with at least one retweet of an Influencer, sorted by id. Row order of every feature matrix.
struct EngagedUserSet {
  std::vector<std::string> users;
  std::size_t size() const noexcept { return users.size(); }
  bool contains(const std::string& u) const { return std::binary_search(users.begin(), users.end(), u); }
};

struct InfluencerCurves {
  std::vector<std::size_t> rt_score;
  std::vector<std::size_t> cumulative_users;
  std::vector<std::size_t> marginal_users;
};

inline RtScores compute_rt_scores(const Corpus& corpus) {
  RtScores scores;
  const auto& tweets = corpus.tweets();
  for (const auto& [original_user, retweets] : corpus.by_original_user()) {
    std::unordered_set<std::string_view> distinct;
    for (auto idx : retweets) distinct.insert(tweets[idx].user_id);
    scores.emplace(original_user, distinct.size());
  }
  return scores;
}

inline InfluencerSet select_top_influencers(const RtScores& scores, std::size_t p) {
  if (p == 0) throw InvalidConfig("p must be at least 1");
  std::vector<RankedInfluencer> all;
  all.reserve(scores.size());
  for (const auto& [id, score] : scores) all.push_back({id, score});
  if (p > all.size()) {
    log::warn("requested p=" + std::to_string(p) + " but only " + std::to_string(all.size()) +
              " retweeted accounts exist; using all of them");
    p = all.size();
  }
  auto by_rank = [](const RankedInfluencer& a, const RankedInfluencer& b) {
    return a.rt_score != b.rt_score ? a.rt_score > b.rt_score : a.id < b.id;
  };
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(p), all.end(), by_rank);
  all.resize(p);
  return InfluencerSet(std::move(all));
}

inline EngagedUserSet build_user_set(const Corpus& corpus, const InfluencerSet& influencers) {
  std::unordered_set<std::string_view> users;
  const auto& tweets = corpus.tweets();
  for (const auto& inf : influencers.ranked())
    for (auto idx : corpus.retweets_of(inf.id)) users.insert(tweets[idx].user_id);
  EngagedUserSet out;
  out.users.assign(users.begin(), users.end());
  std::sort(out.users.begin(), out.users.end());
  return out;
}

/// rt_score, cumulative |U| and marginal |U| growth for I = top-1 .. top-max_p.
inline InfluencerCurves influencer_curves(const Corpus& corpus, std::size_t max_p) {
  const auto top = select_top_influencers(compute_rt_scores(corpus), max_p);
  InfluencerCurves curves;
  std::unordered_set<std::string_view> seen;
  const auto& tweets = corpus.tweets();
  for (const auto& inf : top.ranked()) {
    const std::size_t before = seen.size();
    for (auto idx : corpus.retweets_of(inf.id)) seen.insert(tweets[idx].user_id);
    curves.rt_score.push_back(inf.rt_score);
    curves.cumulative_users.push_back(seen.size());
    curves.marginal_users.push_back(seen.size() - before);
  }
  return curves;
}

inline std::string curves_csv(const InfluencerCurves& c) {
  std::string out = "rank,rt_score,cumulative_users,marginal_users\n";
  for (std::size_t k = 0; k < c.rt_score.size(); ++k)
    out += std::to_string(k + 1) + ',' + std::to_string(c.rt_score[k]) + ',' + std::to_string(c.cumulative_users[k]) +
           ',' + std::to_string(c.marginal_users[k]) + '\n';
  return out;
}

inline std::string influencers_csv(const InfluencerSet& set) {
  std::string out = "rank,influencer_id,rt_score\n";
  for (std::size_t k = 0; k < set.size(); ++k)
    out += std::to_string(k + 1) + ',' + set[k].id + ',' + std::to_string(set[k].rt_score) + '\n';
  return out;
}

inline InfluencerSet read_influencers_csv(const std::string& path) {
  const auto table = csv::read(path);
  if (table.header != std::vector<std::string>{"rank", "influencer_id", "rt_score"})
    throw MalformedRecord(path + ": expected header rank,influencer_id,rt_score");
  std::vector<RankedInfluencer> ranked;
  for (const auto& row : table.rows)
    ranked.push_back({row[1], static_cast<std::size_t>(csv::parse_double(row[2]))});
  return InfluencerSet(std::move(ranked));
}

inline std::string users_csv(const EngagedUserSet& users) {
  std::string out = "user_id\n";
  for (const auto& u : users.users) out += u + '\n';
  return out;
}

inline EngagedUserSet read_users_csv(const std::string& path) {
  const auto table = csv::read(path);
  EngagedUserSet out;
  for (const auto& row : table.rows) out.users.push_back(row[0]);
  std::sort(out.users.begin(), out.users.end());
  return out;
}

}  // namespace hypsep
