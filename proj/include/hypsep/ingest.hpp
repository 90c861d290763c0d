#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "hypsep/csv.hpp"
#include "hypsep/error.hpp"

namespace hypsep {

using Timestamp = std::int64_t;  // epoch seconds, UTC

struct RetweetRef {
  std::string tweet_id;
  std::string user_id;
  Timestamp created_at = 0;
  bool operator==(const RetweetRef&) const = default;
};

/// One tweet. Text itself is not kept; only its length in characters and words.
struct TweetRecord {
  std::string tweet_id;
  std::string user_id;
  Timestamp created_at = 0;
  std::optional<RetweetRef> retweet_of;
  std::int64_t text_chars = 0;
  std::int64_t text_words = 0;
  bool operator==(const TweetRecord&) const = default;
};

struct UserProfile {
  std::string user_id;
  std::int64_t followers = 0;
  std::int64_t friends = 0;
  std::int64_t likes = 0;
  Timestamp account_created_at = 0;
  std::string screen_name;
  std::string bio;
  bool operator==(const UserProfile&) const = default;
};

enum class UserClass { deleted, regular, suspended };

inline std::string_view to_string(UserClass c) {
  switch (c) {
    case UserClass::deleted: return "deleted";
    case UserClass::regular: return "regular";
    case UserClass::suspended: return "suspended";
  }
  return "?";
}

inline std::optional<UserClass> parse_user_class(std::string_view s) {
  if (s == "deleted") return UserClass::deleted;
  if (s == "regular") return UserClass::regular;
  if (s == "suspended") return UserClass::suspended;
  return std::nullopt;
}

using LabelMap = std::map<std::string, UserClass>;
using ProfileMap = std::map<std::string, UserProfile>;

/// Number of Unicode scalar values in a UTF-8 string.
inline std::int64_t utf8_length(std::string_view s) {
  std::int64_t n = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++n;
  return n;
}

inline std::int64_t word_count(std::string_view s) {
  std::int64_t n = 0;
  bool in_word = false;
  for (unsigned char c : s) {
    const bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

namespace detail {

inline const nlohmann::json* find(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  return it == j.end() || it->is_null() ? nullptr : &*it;
}

inline std::string require_string(const nlohmann::json& j, const char* key) {
  const auto* v = find(j, key);
  if (!v) throw MalformedRecord(std::string("missing field '") + key + "'");
  if (v->is_string()) return v->get<std::string>();
  if (v->is_number_integer()) return v->dump();
  throw MalformedRecord(std::string("field '") + key + "' must be a string");
}

inline std::int64_t require_count(const nlohmann::json& j, const char* key, bool required = true) {
  const auto* v = find(j, key);
  if (!v) {
    if (required) throw MalformedRecord(std::string("missing field '") + key + "'");
    return 0;
  }
  if (!v->is_number_integer()) throw MalformedRecord(std::string("field '") + key + "' must be an integer");
  const auto x = v->get<std::int64_t>();
  if (x < 0) throw MalformedRecord(std::string("field '") + key + "' must be non-negative");
  return x;
}

template <typename Fn>
void for_each_line(const std::string& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto view = csv::trim_cr(line);
    if (view.find_first_not_of(" \t") == std::string_view::npos) continue;
    try {
      fn(view, lineno);
    } catch (const MalformedRecord& e) {
      if (e.line()) throw;
      throw MalformedRecord(path + ": " + e.what(), lineno);
    }
  }
}

inline nlohmann::json parse_object(std::string_view line) {
  nlohmann::json j = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) throw MalformedRecord("not a JSON object");
  return j;
}

}  // namespace detail

/// Parses one line of tweets.jsonl. The three retweet_of_* fields must be all present or all absent.
inline TweetRecord parse_tweet_record(std::string_view line) {
  const auto j = detail::parse_object(line);
  TweetRecord t;
  t.tweet_id = detail::require_string(j, "tweet_id");
  t.user_id = detail::require_string(j, "user_id");
  t.created_at = detail::require_count(j, "created_at");

  const bool has_id = detail::find(j, "retweet_of_tweet_id");
  const bool has_user = detail::find(j, "retweet_of_user_id");
  const bool has_time = detail::find(j, "retweet_of_created_at");
  if (has_id || has_user || has_time) {
    if (!(has_id && has_user && has_time)) throw MalformedRecord("partial retweet_of triple");
    t.retweet_of = RetweetRef{detail::require_string(j, "retweet_of_tweet_id"),
                              detail::require_string(j, "retweet_of_user_id"),
                              detail::require_count(j, "retweet_of_created_at")};
  }
  if (const auto* text = detail::find(j, "text")) {
    if (!text->is_string()) throw MalformedRecord("field 'text' must be a string");
    const auto& s = text->get_ref<const std::string&>();
    t.text_chars = utf8_length(s);
    t.text_words = word_count(s);
  } else {
    t.text_chars = detail::require_count(j, "text_chars", false);
    t.text_words = detail::require_count(j, "text_words", false);
  }
  return t;
}

inline std::string serialize_tweet_record(const TweetRecord& t) {
  nlohmann::ordered_json j;
  j["tweet_id"] = t.tweet_id;
  j["user_id"] = t.user_id;
  j["created_at"] = t.created_at;
  if (t.retweet_of) {
    j["retweet_of_tweet_id"] = t.retweet_of->tweet_id;
    j["retweet_of_user_id"] = t.retweet_of->user_id;
    j["retweet_of_created_at"] = t.retweet_of->created_at;
  }
  j["text_chars"] = t.text_chars;
  j["text_words"] = t.text_words;
  return j.dump();
}

inline UserProfile parse_user_profile(std::string_view line) {
  const auto j = detail::parse_object(line);
  UserProfile p;
  p.user_id = detail::require_string(j, "user_id");
  p.followers = detail::require_count(j, "followers");
  p.friends = detail::require_count(j, "friends");
  p.likes = detail::require_count(j, "likes");
  p.account_created_at = detail::require_count(j, "account_created_at");
  if (const auto* v = detail::find(j, "screen_name")) p.screen_name = v->get<std::string>();
  if (const auto* v = detail::find(j, "bio")) p.bio = v->get<std::string>();
  return p;
}

inline std::string serialize_user_profile(const UserProfile& p) {
  nlohmann::ordered_json j;
  j["user_id"] = p.user_id;
  j["followers"] = p.followers;
  j["friends"] = p.friends;
  j["likes"] = p.likes;
  j["account_created_at"] = p.account_created_at;
  j["screen_name"] = p.screen_name;
  j["bio"] = p.bio;
  return j.dump();
}

/// Immutable tweet collection with retweet indices. All index entries are positions into tweets().
class Corpus {
 public:
  using Index = std::unordered_map<std::string, std::vector<std::size_t>>;

  Corpus() = default;

  explicit Corpus(std::vector<TweetRecord> tweets) : tweets_(std::move(tweets)) {
    for (std::size_t i = 0; i < tweets_.size(); ++i) {
      const auto& t = tweets_[i];
      if (!originals_.emplace(t.tweet_id, i).second) throw DuplicateTweetId("duplicate tweet_id " + t.tweet_id);
      by_author_[t.user_id].push_back(i);
      if (t.retweet_of) {
        by_original_user_[t.retweet_of->user_id].push_back(i);
        by_retweeter_[t.user_id].push_back(i);
      }
    }
  }

  const std::vector<TweetRecord>& tweets() const noexcept { return tweets_; }
  std::size_t size() const noexcept { return tweets_.size(); }

  /// original_user_id -> retweets targeting that user
  const Index& by_original_user() const noexcept { return by_original_user_; }
  /// user_id -> that user's retweets
  const Index& by_retweeter() const noexcept { return by_retweeter_; }
  /// user_id -> every tweet that user authored (retweets included)
  const Index& by_author() const noexcept { return by_author_; }
  const std::unordered_map<std::string, std::size_t>& originals() const noexcept { return originals_; }

  std::span<const std::size_t> retweets_by(const std::string& user) const { return lookup(by_retweeter_, user); }
  std::span<const std::size_t> retweets_of(const std::string& user) const { return lookup(by_original_user_, user); }
  std::span<const std::size_t> authored_by(const std::string& user) const { return lookup(by_author_, user); }

  Timestamp latest_timestamp() const {
    Timestamp t = 0;
    for (const auto& r : tweets_) t = std::max(t, r.created_at);
    return t;
  }

 private:
  static std::span<const std::size_t> lookup(const Index& idx, const std::string& key) {
    auto it = idx.find(key);
    return it == idx.end() ? std::span<const std::size_t>{} : std::span<const std::size_t>(it->second);
  }

  std::vector<TweetRecord> tweets_;
  Index by_original_user_;
  Index by_retweeter_;
  Index by_author_;
  std::unordered_map<std::string, std::size_t> originals_;
};

inline Corpus load_corpus(const std::string& path) {
  std::vector<TweetRecord> tweets;
  std::unordered_map<std::string, std::size_t> seen;
  detail::for_each_line(path, [&](std::string_view line, std::size_t lineno) {
    auto t = parse_tweet_record(line);
    if (auto [it, fresh] = seen.emplace(t.tweet_id, lineno); !fresh)
      throw DuplicateTweetId(path + ": tweet_id " + t.tweet_id + " on line " + std::to_string(lineno) +
                             " already seen on line " + std::to_string(it->second));
    tweets.push_back(std::move(t));
  });
  return Corpus(std::move(tweets));
}

inline std::string serialize_corpus(const Corpus& corpus) {
  std::string out;
  for (const auto& t : corpus.tweets()) {
    out += serialize_tweet_record(t);
    out += '\n';
  }
  return out;
}

inline ProfileMap load_profiles(const std::string& path) {
  ProfileMap profiles;
  detail::for_each_line(path, [&](std::string_view line, std::size_t lineno) {
    auto p = parse_user_profile(line);
    if (profiles.count(p.user_id))
      throw DuplicateUser(path + ": profile for " + p.user_id + " repeated on line " + std::to_string(lineno));
    profiles.emplace(p.user_id, std::move(p));
  });
  return profiles;
}

inline LabelMap parse_labels(std::string_view text, const std::string& origin = "labels") {
  LabelMap labels;
  std::size_t lineno = 0, start = 0;
  bool header_seen = false;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = csv::trim_cr(text.substr(start, end - start));
    start = end + 1;
    ++lineno;
    if (line.empty()) continue;
    auto fields = csv::split(line);
    if (!header_seen) {
      header_seen = true;
      if (fields.size() == 2 && fields[0] == "user_id" && fields[1] == "label") continue;
      // headerless input: treat the first line as data
    }
    if (fields.size() != 2) throw MalformedRecord(origin + ": expected user_id,label", lineno);
    const auto cls = parse_user_class(fields[1]);
    if (!cls) throw UnknownLabel(origin + ": unknown label '" + fields[1] + "' on line " + std::to_string(lineno));
    if (!labels.emplace(fields[0], *cls).second)
      throw DuplicateUser(origin + ": user " + fields[0] + " repeated on line " + std::to_string(lineno));
  }
  return labels;
}

inline LabelMap load_labels(const std::string& path) { return parse_labels(csv::read_text(path), path); }

inline std::string serialize_labels(const LabelMap& labels) {
  std::string out = "user_id,label\n";
  for (const auto& [user, cls] : labels) {
    out += user;
    out += ',';
    out += to_string(cls);
    out += '\n';
  }
  return out;
}

}  // namespace hypsep
