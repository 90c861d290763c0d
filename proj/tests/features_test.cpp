#include <algorithm>
#include <cstring>
#include <random>

#include <gtest/gtest.h>

#include "hypsep/features.hpp"
#include "support/oracles.hpp"

namespace hypsep {
namespace {

TweetRecord retweet(const std::string& id, const std::string& user, Timestamp t, const std::string& of_user,
                    Timestamp of_time) {
  return {id, user, t, RetweetRef{"o_" + id, of_user, of_time}, 0, 0};
}

FeatureMatrix library_features(const std::vector<TweetRecord>& tweets, std::size_t p, std::size_t threads = 1) {
  const Corpus c(tweets);
  const auto set = select_top_influencers(compute_rt_scores(c), p);
  return build_feature_matrix(c, build_user_set(c, set), set, kDefaultSentinel, threads);
}

bool bit_equal(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::equal(a.data(), a.data() + a.size(), b.data(), [](double x, double y) {
           return std::memcmp(&x, &y, sizeof x) == 0;
         });
}

TEST(Delay, AbsoluteDifference) {
  EXPECT_EQ(delay(1005, 1000), 5);
  EXPECT_EQ(delay(1000, 1000), 0);
  EXPECT_EQ(delay(999, 1000), 1);
}

TEST(InteractionPair, OddAndEvenMediansAndSentinel) {
  const Corpus c({retweet("a", "u", 2, "i", 0), retweet("b", "u", 4, "i", 0), retweet("c", "u", 10, "i", 0),
                  retweet("d", "v", 2, "i", 0), retweet("e", "v", 4, "i", 0)});
  EXPECT_EQ(interaction_pair(c, "u", "i"), (InteractionPair{4.0, 3}));
  EXPECT_EQ(interaction_pair(c, "v", "i"), (InteractionPair{3.0, 2}));
  EXPECT_EQ(interaction_pair(c, "u", "nobody"), (InteractionPair{-1e6, 0}));
}

TEST(BuildFeatureMatrix, HandComputedRow) {
  // i1 is ranked first (two retweeters), i2 second
  const Corpus c({retweet("a", "u", 1010, "i1", 1000), retweet("b", "u", 1020, "i1", 1000),
                  retweet("c", "u", 1060, "i1", 1000), retweet("d", "w", 1005, "i1", 1000),
                  retweet("e", "w", 1007, "i2", 1000)});
  const auto set = select_top_influencers(compute_rt_scores(c), 2);
  ASSERT_EQ(set[0].id, "i1");
  const auto f = build_feature_matrix(c, build_user_set(c, set), set);
  ASSERT_EQ(f.row_ids, (std::vector<std::string>{"u", "w"}));
  EXPECT_EQ(f.columns, (std::vector<std::string>{"delay_001", "count_001", "delay_002", "count_002"}));
  const Eigen::RowVector4d u_row(20, 3, -1e6, 0), w_row(5, 1, 7, 1);
  EXPECT_EQ(f.values.row(0), u_row);
  EXPECT_EQ(f.values.row(1), w_row);
}

TEST(BuildFeatureMatrix, UserOfSecondInfluencerOnlyHasLeadingSentinel) {
  const Corpus c({retweet("a", "x", 5, "i1", 0), retweet("b", "y", 5, "i1", 0), retweet("c", "z", 9, "i2", 0)});
  const auto set = select_top_influencers(compute_rt_scores(c), 2);
  const auto f = build_feature_matrix(c, build_user_set(c, set), set);
  const auto z = f.row_index().at("z");
  const Eigen::RowVector4d expected(-1e6, 0, 9, 1);
  EXPECT_EQ(f.values.row(static_cast<Eigen::Index>(z)), expected);
}

TEST(BuildFeatureMatrix, MatchesNaiveReimplementationBitForBit) {
  for (std::uint64_t seed = 100; seed < 130; ++seed) {
    const auto tweets = testing::random_corpus(seed);
    for (std::size_t p : {1, 3, 7}) {
      const auto oracle = testing::naive_interaction_features(tweets, p, kDefaultSentinel);
      const auto f = library_features(tweets, p);
      EXPECT_EQ(f.row_ids, oracle.users);
      EXPECT_TRUE(bit_equal(f.values, oracle.values)) << "seed " << seed << " p " << p;
    }
  }
}

TEST(BuildFeatureMatrix, SentinelPairsWithZeroCount) {
  const auto f = library_features(testing::random_corpus(7), 6);
  for (Eigen::Index r = 0; r < f.values.rows(); ++r)
    for (Eigen::Index y = 0; y < f.values.cols() / 2; ++y)
      EXPECT_EQ(f.values(r, 2 * y) == kDefaultSentinel, f.values(r, 2 * y + 1) == 0.0);
}

TEST(BuildFeatureMatrix, IndependentOfTweetOrderAndThreads) {
  auto tweets = testing::random_corpus(8);
  const auto base = library_features(tweets, 5);
  std::mt19937_64 g(1);
  std::shuffle(tweets.begin(), tweets.end(), g);
  EXPECT_TRUE(bit_equal(library_features(tweets, 5).values, base.values));
  EXPECT_TRUE(bit_equal(library_features(tweets, 5, 4).values, base.values));
}

TEST(BuildFeatureMatrix, SingleInfluencerUsersHaveTwoInformativeEntries) {
  const auto f = library_features(testing::random_corpus(9), 5);
  for (Eigen::Index r = 0; r < f.values.rows(); ++r) {
    int engaged = 0, informative = 0;
    for (Eigen::Index y = 0; y < f.values.cols() / 2; ++y) {
      engaged += f.values(r, 2 * y + 1) > 0;
      informative += (f.values(r, 2 * y) != kDefaultSentinel) + (f.values(r, 2 * y + 1) != 0.0);
    }
    if (engaged == 1) EXPECT_EQ(informative, 2);
  }
}

TEST(UserLevelFeatures, EmptyActivityAndFollowerRatio) {
  const Corpus c({TweetRecord{"t1", "busy", 100, std::nullopt, 10, 2}, TweetRecord{"t2", "busy", 200, std::nullopt, 20, 4}});
  ProfileMap profiles;
  profiles["idle"] = {"idle", 0, 7, 3, 50, "two words", "a b c"};
  profiles["busy"] = {"busy", 1, 1, 0, 0, "x", ""};
  const auto idle = user_level_features(c, profiles, "idle", 150);
  EXPECT_EQ(idle[0], 0);
  EXPECT_EQ(idle[1], 0);
  EXPECT_EQ(idle[5], 7.0);
  EXPECT_EQ(idle[6], 100);
  EXPECT_EQ(idle[7], 9);
  EXPECT_EQ(idle[9], 3);
  EXPECT_EQ(idle[10], 0);
  EXPECT_EQ(idle[11], 0);
  EXPECT_EQ(idle[12], 2);
  const auto busy = user_level_features(c, profiles, "busy", 300);
  EXPECT_EQ(busy[0], 2);
  EXPECT_EQ(busy[10], 15);
  EXPECT_EQ(busy[11], 3);
  EXPECT_THROW(user_level_features(c, profiles, "ghost", 0), MissingProfile);
}

TEST(Standardize, ZeroMeanConstantColumnsAndScalerReuse) {
  FeatureMatrix m;
  m.row_ids = {"a", "b", "c", "d"};
  m.columns = {"x", "const", "y"};
  m.values.resize(4, 3);
  m.values << 1, 5, 10, 2, 5, -3, 3, 5, 7, 10, 5, 0.5;
  const auto s = standardize(m);
  for (Eigen::Index c = 0; c < 3; ++c) EXPECT_NEAR(s.matrix.values.col(c).mean(), 0.0, 1e-12);
  EXPECT_TRUE(s.matrix.values.col(1).isZero(0));
  EXPECT_NEAR(s.matrix.values.col(0).squaredNorm() / 4.0, 1.0, 1e-12);
  EXPECT_TRUE(bit_equal(apply_scaler(m, s.scaler).values, s.matrix.values));
}

TEST(Concat, JoinsColumnsAndChecksRows) {
  FeatureMatrix a{{"r1", "r2"}, {"a"}, Eigen::MatrixXd::Constant(2, 1, 1.0)};
  FeatureMatrix b{{"r1", "r2"}, {"b", "c"}, Eigen::MatrixXd::Constant(2, 2, 2.0)};
  const auto ab = concat(a, b);
  EXPECT_EQ(ab.columns, (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(ab.values(1, 2), 2.0);
  b.row_ids = {"r2", "r1"};
  EXPECT_THROW(concat(a, b), RowMismatch);
}

TEST(FeatureMatrixCsv, RoundTripsExactly) {
  const auto f = library_features(testing::random_corpus(12), 4);
  const auto path = (std::filesystem::temp_directory_path() / "hypsep_features_test.csv").string();
  csv::write_text(path, feature_matrix_csv(f));
  const auto back = read_feature_matrix_csv(path);
  EXPECT_EQ(back.row_ids, f.row_ids);
  EXPECT_EQ(back.columns, f.columns);
  EXPECT_TRUE(bit_equal(back.values, f.values));
}

}  // namespace
}  // namespace hypsep
