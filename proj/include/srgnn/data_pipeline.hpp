#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "srgnn/session_graph.hpp"

namespace srgnn {

// yoochoose: "session,timestamp,item,category" rows, no header, ISO times.
// diginetica: delimited with a header naming sessionId, itemId and
//   timeframe and/or eventdate.
// tsv: "session<TAB>timestamp<TAB>item", timestamp in epoch seconds or ISO.
enum class ClickFormat { Yoochoose, Diginetica, GenericTsv };

ClickFormat parse_click_format(std::string_view text);

struct ClickRecord {
  std::string session_key;
  double timestamp = 0;  // seconds since the Unix epoch
  std::string item_key;
};

// Clicks of one session in time order.
struct RawSession {
  std::string key;
  std::vector<std::string> items;
  std::vector<double> times;

  double end_time() const { return times.back(); }
  std::size_t size() const { return items.size(); }
};

// Parses "YYYY-MM-DD", optionally followed by "THH:MM:SS[.fff][Z|+hh:mm]"
// (a space may replace the T), or a plain number of seconds.
double parse_timestamp(std::string_view text);

std::vector<ClickRecord> parse_clicks(std::istream& in, ClickFormat format);

// Groups by session key (sessions in first-appearance order) and sorts each
// session by timestamp; equal timestamps keep input order.
std::vector<RawSession> group_sessions(const std::vector<ClickRecord>& clicks);

std::vector<RawSession> ingest(std::istream& in, ClickFormat format);
std::vector<RawSession> ingest(const std::filesystem::path& path, ClickFormat format);

// Repeatedly drops items seen fewer than min_item_count times and sessions
// shorter than min_length until neither rule removes anything.
std::vector<RawSession> filter_sessions(std::vector<RawSession> sessions,
                                        std::size_t min_item_count = 5, std::size_t min_length = 2);

struct TemporalSplit {
  std::vector<RawSession> train;
  std::vector<RawSession> test;
};

// Sessions ending strictly after (latest end - horizon) form the test side.
// Test clicks on items absent from training are removed, and test sessions
// left with one click or fewer are dropped.
TemporalSplit temporal_split(std::vector<RawSession> sessions, double horizon_seconds);

// Keeps the ceil(n / denom) sessions with the latest end times, in their
// original relative order. Ties on end time favour later input positions.
std::vector<RawSession> take_recent_fraction(std::vector<RawSession> sessions, int denom);

// [v1..vn] -> ([v1], v2), ([v1, v2], v3), ..., ([v1..v(n-1)], vn).
std::vector<Session> augment(std::span<const std::vector<ItemId>> sessions);

// Inverse of augment on an unshuffled sample stream: chains each sample
// onto the previous one when its prefix continues it.
std::vector<std::vector<ItemId>> reconstruct_sessions(std::span<const Session> samples);

struct DatasetStats {
  std::size_t clicks = 0;
  std::size_t train_sessions = 0;  // augmented training samples
  std::size_t test_sessions = 0;   // augmented test samples
  std::size_t items = 0;
  double average_length = 0;  // mean click count over kept train and test sessions
  std::size_t train_sequences = 0;
  std::size_t test_sequences = 0;
};

struct SessionDataset {
  std::vector<std::string> vocab;  // dense id -> raw item key
  std::vector<Session> train;
  std::vector<Session> test;
  DatasetStats stats;

  std::size_t catalog() const { return vocab.size(); }
};

struct PreprocessOptions {
  ClickFormat format = ClickFormat::Yoochoose;
  int fraction = 1;
  double horizon_days = 1;
  std::size_t min_item_count = 5;
};

// filter -> temporal split -> recency fraction -> vocabulary -> augment.
SessionDataset build_dataset(std::vector<RawSession> sessions, const PreprocessOptions& options);
SessionDataset preprocess(const std::filesystem::path& input, const PreprocessOptions& options);

// One sample per line: space-separated prefix ids, a tab, the label id.
void write_samples(std::ostream& out, std::span<const Session> samples);
std::vector<Session> read_samples(std::istream& in);
std::vector<Session> read_samples(const std::filesystem::path& path);

// dir/train.txt, dir/test.txt, dir/vocab.tsv ("id<TAB>key"), dir/stats.txt.
void write_dataset(const std::filesystem::path& dir, const SessionDataset& dataset);
SessionDataset read_dataset(const std::filesystem::path& dir);

std::string format_stats(const DatasetStats& stats);

// Published corpus statistics for comparison runs.
struct ReferenceStats {
  std::string name;
  std::size_t clicks;
  std::size_t train_sessions;
  std::size_t test_sessions;
  std::size_t items;
  double average_length;
};

std::optional<ReferenceStats> reference_stats(std::string_view name);

// One line per statistic: ours, reference, relative difference.
std::string compare_stats(const DatasetStats& ours, const ReferenceStats& reference);

}  // namespace srgnn
