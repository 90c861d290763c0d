#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "hypsep/csv.hpp"
#include "hypsep/influencers.hpp"
#include "hypsep/ingest.hpp"
#include "hypsep/parallel.hpp"

namespace hypsep {

/// Median-delay placeholder for a user/Influencer pair without retweets.
inline constexpr double kDefaultSentinel = -1e6;

/// Row-labelled dense matrix: users by features.
struct FeatureMatrix {
  std::vector<std::string> row_ids;
  std::vector<std::string> columns;
  Eigen::MatrixXd values;

  std::size_t rows() const noexcept { return row_ids.size(); }
  std::size_t cols() const noexcept { return columns.size(); }

  std::unordered_map<std::string, std::size_t> row_index() const {
    std::unordered_map<std::string, std::size_t> idx;
    for (std::size_t i = 0; i < row_ids.size(); ++i) idx.emplace(row_ids[i], i);
    return idx;
  }
};

inline Timestamp delay(Timestamp retweet_time, Timestamp original_time) {
  return retweet_time >= original_time ? retweet_time - original_time : original_time - retweet_time;
}

/// Median with the mean of the two middle values for even counts. Reorders its argument.
inline double median_of(std::vector<Timestamp>& values) {
  const std::size_t n = values.size(), mid = n / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = static_cast<double>(values[mid]);
  if (n % 2) return upper;
  const double lower = static_cast<double>(*std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid)));
  return 0.5 * (lower + upper);
}

struct InteractionPair {
  double delay_median = kDefaultSentinel;
  std::int64_t retweet_count = 0;
  bool operator==(const InteractionPair&) const = default;
};

inline InteractionPair interaction_pair(const Corpus& corpus, const std::string& user, const std::string& influencer,
                                        double sentinel = kDefaultSentinel) {
  std::vector<Timestamp> delays;
  for (auto idx : corpus.retweets_by(user)) {
    const auto& t = corpus.tweets()[idx];
    if (t.retweet_of->user_id == influencer) delays.push_back(delay(t.created_at, t.retweet_of->created_at));
  }
  if (delays.empty()) return {sentinel, 0};
  return {median_of(delays), static_cast<std::int64_t>(delays.size())};
}

inline std::string feature_label(const char* prefix, std::size_t one_based) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%s%03zu", prefix, one_based);
  return buf;
}

/// Interaction matrix F: |U| rows, columns (delay, count) per Influencer in rank order.
inline FeatureMatrix build_feature_matrix(const Corpus& corpus, const EngagedUserSet& users,
                                          const InfluencerSet& influencers, double sentinel = kDefaultSentinel,
                                          std::size_t threads = 1) {
  const std::size_t p = influencers.size();
  FeatureMatrix fm;
  fm.row_ids = users.users;
  for (std::size_t y = 0; y < p; ++y) {
    fm.columns.push_back(feature_label("delay_", y + 1));
    fm.columns.push_back(feature_label("count_", y + 1));
  }
  fm.values.resize(static_cast<Eigen::Index>(users.size()), static_cast<Eigen::Index>(2 * p));

  parallel_for(users.size(), threads, [&](std::size_t x) {
    std::vector<std::vector<Timestamp>> delays(p);
    for (auto idx : corpus.retweets_by(users.users[x])) {
      const auto& t = corpus.tweets()[idx];
      const auto y = influencers.rank_of(t.retweet_of->user_id);
      if (y >= 0) delays[static_cast<std::size_t>(y)].push_back(delay(t.created_at, t.retweet_of->created_at));
    }
    const auto row = static_cast<Eigen::Index>(x);
    for (std::size_t y = 0; y < p; ++y) {
      const auto col = static_cast<Eigen::Index>(2 * y);
      fm.values(row, col) = delays[y].empty() ? sentinel : median_of(delays[y]);
      fm.values(row, col + 1) = static_cast<double>(delays[y].size());
    }
  });
  return fm;
}

inline constexpr std::size_t kUserFeatureCount = 13;

inline const std::array<const char*, kUserFeatureCount>& user_feature_names() {
  static const std::array<const char*, kUserFeatureCount> names = {
      "total_tweets",      "retweets",         "friends",           "followers",
      "likes",             "friends_per_follower", "account_age_s",  "screen_name_chars",
      "bio_chars",         "bio_words",        "mean_tweet_chars",  "mean_tweet_words",
      "screen_name_words"};
  return names;
}

/// The 13 user-level features. Users without tweets get zero for every tweet-derived value.
inline std::array<double, kUserFeatureCount> user_level_features(const Corpus& corpus, const ProfileMap& profiles,
                                                                  const std::string& user, Timestamp reference_time) {
  auto it = profiles.find(user);
  if (it == profiles.end()) throw MissingProfile("no profile for user " + user);
  const auto& prof = it->second;

  double total = 0, retweets = 0, chars = 0, words = 0;
  for (auto idx : corpus.authored_by(user)) {
    const auto& t = corpus.tweets()[idx];
    total += 1;
    if (t.retweet_of) retweets += 1;
    chars += static_cast<double>(t.text_chars);
    words += static_cast<double>(t.text_words);
  }
  const double followers = static_cast<double>(prof.followers);
  const double friends = static_cast<double>(prof.friends);
  return {total,
          retweets,
          friends,
          followers,
          static_cast<double>(prof.likes),
          friends / (followers + 1.0),
          static_cast<double>(reference_time - prof.account_created_at),
          static_cast<double>(utf8_length(prof.screen_name)),
          static_cast<double>(utf8_length(prof.bio)),
          static_cast<double>(word_count(prof.bio)),
          total > 0 ? chars / total : 0.0,
          total > 0 ? words / total : 0.0,
          static_cast<double>(word_count(prof.screen_name))};
}

inline FeatureMatrix build_user_matrix(const Corpus& corpus, const ProfileMap& profiles, const EngagedUserSet& users,
                                       Timestamp reference_time) {
  FeatureMatrix fm;
  fm.row_ids = users.users;
  for (const char* name : user_feature_names()) fm.columns.emplace_back(name);
  fm.values.resize(static_cast<Eigen::Index>(users.size()), static_cast<Eigen::Index>(kUserFeatureCount));
  for (std::size_t x = 0; x < users.size(); ++x) {
    const auto f = user_level_features(corpus, profiles, users.users[x], reference_time);
    for (std::size_t c = 0; c < kUserFeatureCount; ++c)
      fm.values(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(c)) = f[c];
  }
  return fm;
}

/// Column-wise concatenation; both inputs must list the same users in the same order.
inline FeatureMatrix concat(const FeatureMatrix& left, const FeatureMatrix& right) {
  if (left.row_ids != right.row_ids) throw RowMismatch("concat: row sets differ");
  FeatureMatrix out;
  out.row_ids = left.row_ids;
  out.columns = left.columns;
  out.columns.insert(out.columns.end(), right.columns.begin(), right.columns.end());
  out.values.resize(left.values.rows(), left.values.cols() + right.values.cols());
  out.values << left.values, right.values;
  return out;
}

/// Per-column mean and standard deviation (population). Constant columns store std = 1.
struct Scaler {
  std::vector<std::string> columns;
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;
};

inline Scaler fit_scaler(const FeatureMatrix& m) {
  Scaler s;
  s.columns = m.columns;
  const auto n = m.values.rows(), cols = m.values.cols();
  s.mean = Eigen::VectorXd::Zero(cols);
  s.stddev = Eigen::VectorXd::Ones(cols);
  if (n == 0) return s;
  for (Eigen::Index c = 0; c < cols; ++c) {
    const auto col = m.values.col(c);
    const double mean = col.sum() / static_cast<double>(n);
    const double var = (col.array() - mean).square().sum() / static_cast<double>(n);
    const double sd = std::sqrt(var);
    // spread at rounding-noise level counts as constant; anchoring the mean on an
    // actual entry makes such columns standardize to exactly zero
    const bool constant = sd <= 1e-12 * std::max(1.0, std::abs(mean));
    s.mean(c) = constant ? col(0) : mean;
    s.stddev(c) = constant ? 1.0 : sd;
  }
  return s;
}

inline FeatureMatrix apply_scaler(const FeatureMatrix& m, const Scaler& s) {
  if (m.columns.size() != static_cast<std::size_t>(s.mean.size())) throw RowMismatch("scaler column count differs");
  FeatureMatrix out = m;
  for (Eigen::Index c = 0; c < out.values.cols(); ++c) {
    auto col = out.values.col(c);
    col = (col.array() - s.mean(c)) / s.stddev(c);
  }
  return out;
}

struct Standardized {
  FeatureMatrix matrix;
  Scaler scaler;
};

inline Standardized standardize(const FeatureMatrix& m) {
  auto scaler = fit_scaler(m);
  auto mat = apply_scaler(m, scaler);
  return {std::move(mat), std::move(scaler)};
}

inline std::string feature_matrix_csv(const FeatureMatrix& m) {
  std::string out = "user_id";
  for (const auto& c : m.columns) out += ',' + c;
  out += '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    out += m.row_ids[r];
    for (Eigen::Index c = 0; c < m.values.cols(); ++c)
      out += ',' + csv::format_double(m.values(static_cast<Eigen::Index>(r), c));
    out += '\n';
  }
  return out;
}

inline FeatureMatrix read_feature_matrix_csv(const std::string& path) {
  const auto table = csv::read(path);
  if (table.header.empty() || table.header[0] != "user_id")
    throw MalformedRecord(path + ": first column must be user_id");
  FeatureMatrix m;
  m.columns.assign(table.header.begin() + 1, table.header.end());
  m.values.resize(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(m.columns.size()));
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    m.row_ids.push_back(table.rows[r][0]);
    for (std::size_t c = 0; c < m.columns.size(); ++c)
      m.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = csv::parse_double(table.rows[r][c + 1], r + 2);
  }
  return m;
}

inline std::string scaler_csv(const Scaler& s) {
  std::string out = "column,mean,std\n";
  for (std::size_t c = 0; c < s.columns.size(); ++c)
    out += s.columns[c] + ',' + csv::format_double(s.mean(static_cast<Eigen::Index>(c))) + ',' +
           csv::format_double(s.stddev(static_cast<Eigen::Index>(c))) + '\n';
  return out;
}

inline Scaler read_scaler_csv(const std::string& path) {
  const auto table = csv::read(path);
  Scaler s;
  s.mean.resize(static_cast<Eigen::Index>(table.rows.size()));
  s.stddev.resize(static_cast<Eigen::Index>(table.rows.size()));
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    s.columns.push_back(table.rows[r][0]);
    s.mean(static_cast<Eigen::Index>(r)) = csv::parse_double(table.rows[r][1]);
    s.stddev(static_cast<Eigen::Index>(r)) = csv::parse_double(table.rows[r][2]);
  }
  return s;
}

}  // namespace hypsep
