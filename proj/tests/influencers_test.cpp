#include <map>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "hypsep/influencers.hpp"
#include "hypsep/log.hpp"
#include "support/oracles.hpp"

namespace hypsep {
namespace {

TweetRecord original(const std::string& id, const std::string& user, Timestamp t) { return {id, user, t, std::nullopt, 0, 0}; }

TweetRecord retweet(const std::string& id, const std::string& user, Timestamp t, const std::string& of_user,
                    Timestamp of_time = 0, const std::string& of_id = "orig") {
  return {id, user, t, RetweetRef{of_id, of_user, of_time}, 0, 0};
}

/// Corpus with `events` random retweets over a handful of accounts.
std::vector<TweetRecord> random_events(std::uint64_t seed, std::size_t events) {
  std::mt19937_64 g(seed);
  std::vector<TweetRecord> out;
  for (std::size_t e = 0; e < events; ++e)
    out.push_back(retweet("t" + std::to_string(e), "u" + std::to_string(g() % 40), 100 + static_cast<Timestamp>(e),
                          "i" + std::to_string(g() % 12)));
  return out;
}

TEST(RtScores, CountsDistinctRetweeters) {
  const Corpus c({retweet("1", "u1", 10, "i1"), retweet("2", "u1", 11, "i1"), retweet("3", "u2", 12, "i1")});
  const auto s = compute_rt_scores(c);
  EXPECT_EQ(s.at("i1"), 2u);
}

TEST(RtScores, EmptyCorpus) { EXPECT_TRUE(compute_rt_scores(Corpus{}).empty()); }

TEST(RtScores, MatchesSetCardinalityOracle) {
  const auto tweets = random_events(3, 500);
  std::map<std::string, std::set<std::string>> oracle;
  for (const auto& t : tweets) oracle[t.retweet_of->user_id].insert(t.user_id);
  const auto s = compute_rt_scores(Corpus(tweets));
  ASSERT_EQ(s.size(), oracle.size());
  for (const auto& [id, users] : oracle) EXPECT_EQ(s.at(id), users.size()) << id;
}

TEST(RtScores, DuplicatedRetweetsDoNotChangeScores) {
  auto tweets = random_events(4, 200);
  const auto before = compute_rt_scores(Corpus(tweets));
  const std::size_t n = tweets.size();
  for (std::size_t k = 0; k < n; k += 3) {
    auto dup = tweets[k];
    dup.tweet_id += "_again";
    tweets.push_back(dup);
  }
  EXPECT_EQ(compute_rt_scores(Corpus(tweets)), before);
}

TEST(RtScores, AddingARetweetNeverDecreasesScoresOrUsers) {
  auto tweets = random_events(5, 150);
  std::mt19937_64 g(9);
  for (int step = 0; step < 30; ++step) {
    const Corpus before(tweets);
    const auto s0 = compute_rt_scores(before);
    const auto u0 = build_user_set(before, select_top_influencers(s0, 5)).size();
    tweets.push_back(retweet("x" + std::to_string(step), "u" + std::to_string(g() % 50), 1, "i" + std::to_string(g() % 14)));
    const Corpus after(tweets);
    const auto s1 = compute_rt_scores(after);
    for (const auto& [id, v] : s0) EXPECT_GE(s1.at(id), v);
    // top-5 by the old ranking keeps at least its old reach
    EXPECT_GE(build_user_set(after, select_top_influencers(s0, 5)).size(), u0);
  }
}

TEST(SelectTopInfluencers, TiesBrokenById) {
  const RtScores s = {{"a", 5}, {"c", 3}, {"b", 3}};
  const auto top = select_top_influencers(s, 2);
  ASSERT_EQ(top.size(), 2u);
  EXPECT_EQ(top[0], (RankedInfluencer{"a", 5}));
  EXPECT_EQ(top[1], (RankedInfluencer{"b", 3}));
  EXPECT_EQ(top.rank_of("b"), 1);
  EXPECT_EQ(top.rank_of("c"), -1);
  EXPECT_FALSE(top.contains("c"));
}

TEST(SelectTopInfluencers, FewerCandidatesThanPWarnsAndKeepsAll) {
  const RtScores s = {{"a", 1}, {"b", 2}, {"c", 3}, {"d", 4}};
  std::vector<std::string> warnings;
  log::ScopedSink sink([&](const std::string& m) { warnings.push_back(m); });
  const auto top = select_top_influencers(s, 10);
  EXPECT_EQ(top.size(), 4u);
  EXPECT_EQ(top[0].id, "d");
  EXPECT_EQ(warnings.size(), 1u);
}

TEST(SelectTopInfluencers, ZeroPIsInvalid) { EXPECT_THROW(select_top_influencers({{"a", 1}}, 0), InvalidConfig); }

TEST(BuildUserSet, SingleRetweeter) {
  const Corpus c({original("o", "i1", 1), retweet("r", "u1", 2, "i1"), retweet("s", "u2", 3, "i2")});
  const InfluencerSet set({{"i1", 1}});
  EXPECT_EQ(build_user_set(c, set).users, std::vector<std::string>{"u1"});
}

TEST(BuildUserSet, InfluencersWithoutRetweetsGiveEmptySet) {
  const Corpus c({retweet("r", "u1", 2, "i1")});
  EXPECT_TRUE(build_user_set(c, InfluencerSet({{"nobody", 0}})).users.empty());
}

TEST(BuildUserSet, MatchesLinearScan) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto tweets = testing::random_corpus(seed);
    const Corpus c(tweets);
    const auto set = select_top_influencers(compute_rt_scores(c), 3);
    std::set<std::string> oracle;
    for (const auto& t : tweets)
      if (t.retweet_of && set.contains(t.retweet_of->user_id)) oracle.insert(t.user_id);
    EXPECT_EQ(build_user_set(c, set).users, std::vector<std::string>(oracle.begin(), oracle.end()));
  }
}

TEST(BuildUserSet, InfluencersMayBeEngagedUsers) {
  const Corpus c({retweet("r1", "i2", 2, "i1"), retweet("r2", "u", 3, "i2")});
  const auto set = select_top_influencers(compute_rt_scores(c), 2);
  EXPECT_TRUE(build_user_set(c, set).contains("i2"));
}

TEST(InfluencerCurves, SingleInfluencerThreeRetweeters) {
  const Corpus c({retweet("1", "a", 1, "i"), retweet("2", "b", 1, "i"), retweet("3", "c", 1, "i")});
  const auto curves = influencer_curves(c, 1);
  ASSERT_EQ(curves.rt_score.size(), 1u);
  EXPECT_EQ(curves.rt_score[0], 3u);
  EXPECT_EQ(curves.cumulative_users[0], 3u);
  EXPECT_EQ(curves.marginal_users[0], 3u);
}

TEST(InfluencerCurves, IdenticalAudiencesAddNothing) {
  const Corpus c({retweet("1", "a", 1, "i"), retweet("2", "b", 1, "i"), retweet("3", "a", 1, "j"),
                  retweet("4", "b", 1, "j")});
  const auto curves = influencer_curves(c, 2);
  ASSERT_EQ(curves.marginal_users.size(), 2u);
  EXPECT_EQ(curves.marginal_users[1], 0u);
  EXPECT_EQ(curves.cumulative_users[1], 2u);
}

TEST(InfluencerCurves, CumulativeMatchesUserSetPerRank) {
  for (std::uint64_t seed = 20; seed < 26; ++seed) {
    const Corpus c(testing::random_corpus(seed));
    const auto scores = compute_rt_scores(c);
    const std::size_t max_p = std::min<std::size_t>(8, scores.size());
    const auto curves = influencer_curves(c, max_p);
    ASSERT_EQ(curves.cumulative_users.size(), max_p);
    for (std::size_t k = 1; k <= max_p; ++k)
      EXPECT_EQ(curves.cumulative_users[k - 1], build_user_set(c, select_top_influencers(scores, k)).size());
  }
}

TEST(InfluencerCsv, RoundTrips) {
  const InfluencerSet set({{"x", 9}, {"y", 4}});
  const auto dir = std::filesystem::temp_directory_path() / "hypsep_influencers_test";
  std::filesystem::create_directories(dir);
  csv::write_text((dir / "inf.csv").string(), influencers_csv(set));
  const auto back = read_influencers_csv((dir / "inf.csv").string());
  EXPECT_EQ(back.ranked(), set.ranked());
  EXPECT_EQ(curves_csv({{3}, {3}, {3}}), "rank,rt_score,cumulative_users,marginal_users\n1,3,3,3\n");
}

}  // namespace
}  // namespace hypsep
