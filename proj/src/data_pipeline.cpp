#include "srgnn/data_pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "srgnn/errors.hpp"

namespace srgnn {

namespace {

std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delim, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r' || s.back() == '\n' ||
                        s.back() == '\t' || s.back() == '"')) {
    s.remove_suffix(1);
  }
  return s;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

bool parse_fixed(std::string_view s, std::size_t at, std::size_t len, int& out) {
  if (at + len > s.size()) return false;
  return parse_number(s.substr(at, len), out);
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

}  // namespace

ClickFormat parse_click_format(std::string_view text) {
  if (text == "yoochoose" || text == "yoochoose_csv") return ClickFormat::Yoochoose;
  if (text == "diginetica" || text == "diginetica_csv") return ClickFormat::Diginetica;
  if (text == "tsv" || text == "generic_tsv") return ClickFormat::GenericTsv;
  throw ContractError("unknown input format '" + std::string(text) + "'");
}

double parse_timestamp(std::string_view text) {
  text = trim(text);
  if (text.empty()) throw ContractError("empty timestamp");
  if (double seconds = 0; parse_number(text, seconds)) return seconds;

  int y = 0, mo = 0, d = 0;
  if (text.size() < 10 || text[4] != '-' || text[7] != '-' || !parse_fixed(text, 0, 4, y) ||
      !parse_fixed(text, 5, 2, mo) || !parse_fixed(text, 8, 2, d)) {
    throw ContractError("unparseable timestamp '" + std::string(text) + "'");
  }
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{unsigned(mo)}, day{unsigned(d)}};
  if (!ymd.ok()) throw ContractError("invalid date '" + std::string(text) + "'");
  double seconds = double(sys_days{ymd}.time_since_epoch().count()) * 86400.0;
  if (text.size() == 10) return seconds;

  if ((text[10] != 'T' && text[10] != ' ') || text.size() < 19 || text[13] != ':' ||
      text[16] != ':') {
    throw ContractError("unparseable time of day in '" + std::string(text) + "'");
  }
  int hh = 0, mm = 0, ss = 0;
  if (!parse_fixed(text, 11, 2, hh) || !parse_fixed(text, 14, 2, mm) ||
      !parse_fixed(text, 17, 2, ss) || hh > 23 || mm > 59 || ss > 60) {
    throw ContractError("unparseable time of day in '" + std::string(text) + "'");
  }
  seconds += hh * 3600.0 + mm * 60.0 + ss;
  std::size_t at = 19;
  if (at < text.size() && text[at] == '.') {
    std::size_t end = at + 1;
    while (end < text.size() && std::isdigit(static_cast<unsigned char>(text[end]))) ++end;
    double frac = 0;
    if (end == at + 1 || !parse_number(text.substr(at, end - at), frac)) {
      throw ContractError("unparseable fraction in '" + std::string(text) + "'");
    }
    seconds += frac;
    at = end;
  }
  if (at == text.size()) return seconds;
  if (text[at] == 'Z' && at + 1 == text.size()) return seconds;
  if ((text[at] == '+' || text[at] == '-') && text.size() == at + 6 && text[at + 3] == ':') {
    int oh = 0, om = 0;
    if (!parse_fixed(text, at + 1, 2, oh) || !parse_fixed(text, at + 4, 2, om)) {
      throw ContractError("unparseable offset in '" + std::string(text) + "'");
    }
    const double offset = oh * 3600.0 + om * 60.0;
    return text[at] == '+' ? seconds - offset : seconds + offset;
  }
  throw ContractError("trailing characters in timestamp '" + std::string(text) + "'");
}

std::vector<ClickRecord> parse_clicks(std::istream& in, ClickFormat format) {
  std::vector<ClickRecord> clicks;
  std::string line;
  std::size_t line_no = 0;

  // diginetica column positions, resolved from the header
  char delim = format == ClickFormat::GenericTsv ? '\t' : ',';
  long col_session = 0, col_item = 2, col_time = 1, col_frame = -1, col_date = -1;
  bool header_done = format != ClickFormat::Diginetica;

  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty()) continue;

    if (!header_done) {
      delim = view.find(';') != std::string_view::npos ? ';' : (view.find('\t') != std::string_view::npos ? '\t' : ',');
      col_session = col_item = -1;
      const auto names = split(view, delim);
      for (std::size_t i = 0; i < names.size(); ++i) {
        const std::string n = lower(trim(names[i]));
        if (n == "sessionid" || n == "session_id") col_session = long(i);
        else if (n == "itemid" || n == "item_id") col_item = long(i);
        else if (n == "timeframe") col_frame = long(i);
        else if (n == "eventdate" || n == "event_date") col_date = long(i);
      }
      if (col_session < 0 || col_item < 0 || (col_frame < 0 && col_date < 0)) {
        throw ParseError(line_no, "header must name sessionId, itemId and timeframe or eventdate");
      }
      header_done = true;
      continue;
    }

    const auto fields = split(view, delim);
    if (line_no == 1 && format != ClickFormat::Diginetica && !fields.empty() &&
        lower(trim(fields[0])).starts_with("session")) {
      continue;  // optional header
    }

    auto field = [&](long idx) -> std::string_view {
      if (idx < 0 || static_cast<std::size_t>(idx) >= fields.size()) {
        throw ParseError(line_no, "expected at least " + std::to_string(idx + 1) + " fields, got " +
                                      std::to_string(fields.size()));
      }
      return trim(fields[static_cast<std::size_t>(idx)]);
    };

    ClickRecord rec;
    rec.session_key = std::string(field(col_session));
    rec.item_key = std::string(field(col_item));
    if (rec.session_key.empty() || rec.item_key.empty()) throw ParseError(line_no, "empty key");
    try {
      if (format == ClickFormat::Diginetica) {
        double t = 0;
        if (col_date >= 0) t += parse_timestamp(field(col_date));
        if (col_frame >= 0) {
          double frame = 0;
          if (!parse_number(field(col_frame), frame)) throw ContractError("bad timeframe");
          t += frame / 1000.0;
        }
        rec.timestamp = t;
      } else {
        rec.timestamp = parse_timestamp(field(col_time));
      }
    } catch (const ContractError& e) {
      throw ParseError(line_no, e.what());
    }
    clicks.push_back(std::move(rec));
  }
  return clicks;
}

std::vector<RawSession> group_sessions(const std::vector<ClickRecord>& clicks) {
  std::unordered_map<std::string, std::size_t> index;
  std::vector<std::vector<std::size_t>> members;
  std::vector<RawSession> sessions;
  for (std::size_t i = 0; i < clicks.size(); ++i) {
    auto [it, inserted] = index.try_emplace(clicks[i].session_key, sessions.size());
    if (inserted) {
      sessions.push_back(RawSession{clicks[i].session_key, {}, {}});
      members.emplace_back();
    }
    members[it->second].push_back(i);
  }
  for (std::size_t s = 0; s < sessions.size(); ++s) {
    auto& idx = members[s];
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return clicks[a].timestamp < clicks[b].timestamp;
    });
    for (std::size_t i : idx) {
      sessions[s].items.push_back(clicks[i].item_key);
      sessions[s].times.push_back(clicks[i].timestamp);
    }
  }
  return sessions;
}

std::vector<RawSession> ingest(std::istream& in, ClickFormat format) {
  return group_sessions(parse_clicks(in, format));
}

std::vector<RawSession> ingest(const std::filesystem::path& path, ClickFormat format) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return ingest(in, format);
}

std::vector<RawSession> filter_sessions(std::vector<RawSession> sessions,
                                        std::size_t min_item_count, std::size_t min_length) {
  while (true) {
    bool changed = false;

    const auto before = sessions.size();
    std::erase_if(sessions, [&](const RawSession& s) { return s.size() < min_length; });
    changed = changed || sessions.size() != before;

    std::unordered_map<std::string, std::size_t> counts;
    for (const auto& s : sessions) {
      for (const auto& item : s.items) ++counts[item];
    }
    for (auto& s : sessions) {
      RawSession kept{s.key, {}, {}};
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (counts[s.items[i]] >= min_item_count) {
          kept.items.push_back(s.items[i]);
          kept.times.push_back(s.times[i]);
        }
      }
      if (kept.size() != s.size()) {
        changed = true;
        s = std::move(kept);
      }
    }
    std::erase_if(sessions, [](const RawSession& s) { return s.items.empty(); });
    if (!changed) return sessions;
  }
}

TemporalSplit temporal_split(std::vector<RawSession> sessions, double horizon_seconds) {
  TemporalSplit out;
  if (sessions.empty()) return out;
  double latest = sessions.front().end_time();
  for (const auto& s : sessions) latest = std::max(latest, s.end_time());
  const double threshold = latest - horizon_seconds;

  for (auto& s : sessions) (s.end_time() > threshold ? out.test : out.train).push_back(std::move(s));

  std::unordered_set<std::string> seen;
  for (const auto& s : out.train) seen.insert(s.items.begin(), s.items.end());
  for (auto& s : out.test) {
    RawSession kept{s.key, {}, {}};
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (seen.contains(s.items[i])) {
        kept.items.push_back(s.items[i]);
        kept.times.push_back(s.times[i]);
      }
    }
    s = std::move(kept);
  }
  std::erase_if(out.test, [](const RawSession& s) { return s.size() <= 1; });
  return out;
}

std::vector<RawSession> take_recent_fraction(std::vector<RawSession> sessions, int denom) {
  if (denom < 1) throw ContractError("take_recent_fraction: denominator must be positive");
  if (denom == 1 || sessions.empty()) return sessions;
  const std::size_t keep = (sessions.size() + static_cast<std::size_t>(denom) - 1) /
                           static_cast<std::size_t>(denom);
  std::vector<std::size_t> order(sessions.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return sessions[a].end_time() < sessions[b].end_time();
  });
  std::vector<bool> selected(sessions.size(), false);
  for (std::size_t i = order.size() - keep; i < order.size(); ++i) selected[order[i]] = true;

  std::vector<RawSession> out;
  out.reserve(keep);
  for (std::size_t i = 0; i < sessions.size(); ++i) {
    if (selected[i]) out.push_back(std::move(sessions[i]));
  }
  return out;
}

std::vector<Session> augment(std::span<const std::vector<ItemId>> sessions) {
  std::vector<Session> out;
  for (const auto& s : sessions) {
    if (s.size() < 2) throw ContractError("augment: sessions must have at least 2 clicks");
    for (std::size_t n = 1; n < s.size(); ++n) {
      out.push_back(Session{std::vector<ItemId>(s.begin(), s.begin() + static_cast<long>(n)), s[n]});
    }
  }
  return out;
}

std::vector<std::vector<ItemId>> reconstruct_sessions(std::span<const Session> samples) {
  std::vector<std::vector<ItemId>> out;
  for (const auto& s : samples) {
    if (!s.label) throw ContractError("reconstruct_sessions: sample without label");
    if (!out.empty() && out.back() == s.items) {
      out.back().push_back(*s.label);
    } else {
      std::vector<ItemId> seq = s.items;
      seq.push_back(*s.label);
      out.push_back(std::move(seq));
    }
  }
  return out;
}

SessionDataset build_dataset(std::vector<RawSession> sessions, const PreprocessOptions& options) {
  sessions = filter_sessions(std::move(sessions), options.min_item_count);
  TemporalSplit split = temporal_split(std::move(sessions), options.horizon_days * 86400.0);
  split.train = take_recent_fraction(std::move(split.train), options.fraction);

  SessionDataset ds;
  std::unordered_map<std::string, ItemId> vocab;
  auto encode_train = [&](const RawSession& s) {
    std::vector<ItemId> ids;
    for (const auto& key : s.items) {
      auto [it, inserted] = vocab.try_emplace(key, static_cast<ItemId>(ds.vocab.size()));
      if (inserted) ds.vocab.push_back(key);
      ids.push_back(it->second);
    }
    return ids;
  };
  std::vector<std::vector<ItemId>> train_seqs, test_seqs;
  for (const auto& s : split.train) {
    if (s.size() >= 2) train_seqs.push_back(encode_train(s));
  }
  for (const auto& s : split.test) {
    std::vector<ItemId> ids;
    for (const auto& key : s.items) {
      if (auto it = vocab.find(key); it != vocab.end()) ids.push_back(it->second);
    }
    if (ids.size() >= 2) test_seqs.push_back(std::move(ids));
  }

  ds.train = augment(train_seqs);
  ds.test = augment(test_seqs);

  auto& st = ds.stats;
  st.items = ds.vocab.size();
  st.train_sequences = train_seqs.size();
  st.test_sequences = test_seqs.size();
  st.train_sessions = ds.train.size();
  st.test_sessions = ds.test.size();
  for (const auto& s : train_seqs) st.clicks += s.size();
  for (const auto& s : test_seqs) st.clicks += s.size();
  const std::size_t n_seq = train_seqs.size() + test_seqs.size();
  st.average_length = n_seq == 0 ? 0.0 : double(st.clicks) / double(n_seq);
  return ds;
}

SessionDataset preprocess(const std::filesystem::path& input, const PreprocessOptions& options) {
  return build_dataset(ingest(input, options.format), options);
}

void write_samples(std::ostream& out, std::span<const Session> samples) {
  for (const auto& s : samples) {
    if (!s.label) throw ContractError("write_samples: sample without label");
    for (std::size_t i = 0; i < s.items.size(); ++i) {
      if (i) out << ' ';
      out << s.items[i];
    }
    out << '\t' << *s.label << '\n';
  }
}

std::vector<Session> read_samples(std::istream& in) {
  std::vector<Session> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (view.empty()) continue;
    const auto tab = view.find('\t');
    if (tab == std::string_view::npos) throw ParseError(line_no, "missing tab before label");
    Session s;
    for (auto tok : split(view.substr(0, tab), ' ')) {
      if (tok.empty()) continue;
      ItemId id = 0;
      if (!parse_number(tok, id)) throw ParseError(line_no, "bad item id '" + std::string(tok) + "'");
      s.items.push_back(id);
    }
    ItemId label = 0;
    if (!parse_number(trim(view.substr(tab + 1)), label)) throw ParseError(line_no, "bad label");
    if (s.items.empty()) throw ParseError(line_no, "empty prefix");
    s.label = label;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Session> read_samples(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return read_samples(in);
}

std::string format_stats(const DatasetStats& st) {
  std::ostringstream os;
  char avg[32];
  std::snprintf(avg, sizeof avg, "%.17g", st.average_length);
  os << "clicks=" << st.clicks << "\n"
     << "train_sessions=" << st.train_sessions << "\n"
     << "test_sessions=" << st.test_sessions << "\n"
     << "items=" << st.items << "\n"
     << "average_length=" << avg << "\n"
     << "train_sequences=" << st.train_sequences << "\n"
     << "test_sequences=" << st.test_sequences << "\n";
  return os.str();
}

void write_dataset(const std::filesystem::path& dir, const SessionDataset& ds) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream out(dir / name, std::ios::trunc);
    if (!out) throw IoError("cannot write '" + (dir / name).string() + "'");
    return out;
  };
  {
    auto out = open("train.txt");
    write_samples(out, ds.train);
  }
  {
    auto out = open("test.txt");
    write_samples(out, ds.test);
  }
  {
    auto out = open("vocab.tsv");
    for (std::size_t i = 0; i < ds.vocab.size(); ++i) out << i << '\t' << ds.vocab[i] << '\n';
  }
  {
    auto out = open("stats.txt");
    out << format_stats(ds.stats);
  }
}

SessionDataset read_dataset(const std::filesystem::path& dir) {
  SessionDataset ds;
  {
    std::ifstream in(dir / "vocab.tsv");
    if (!in) throw IoError("cannot open '" + (dir / "vocab.tsv").string() + "'");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const std::string_view view = trim(line);
      if (view.empty()) continue;
      const auto tab = view.find('\t');
      std::size_t id = 0;
      if (tab == std::string_view::npos || !parse_number(view.substr(0, tab), id) ||
          id != ds.vocab.size()) {
        throw ParseError(line_no, "vocabulary ids must be contiguous from 0");
      }
      ds.vocab.emplace_back(view.substr(tab + 1));
    }
  }
  ds.train = read_samples(dir / "train.txt");
  ds.test = read_samples(dir / "test.txt");
  auto check = [&](const std::vector<Session>& samples, const char* name) {
    for (const auto& s : samples) {
      auto out_of_range = [&](ItemId id) { return id >= ds.vocab.size(); };
      if (std::any_of(s.items.begin(), s.items.end(), out_of_range) || out_of_range(*s.label)) {
        throw CatalogError(std::string(name) + ": item id outside vocabulary of " +
                           std::to_string(ds.vocab.size()));
      }
    }
  };
  check(ds.train, "train.txt");
  check(ds.test, "test.txt");
  ds.stats.items = ds.vocab.size();
  ds.stats.train_sessions = ds.train.size();
  ds.stats.test_sessions = ds.test.size();
  // click and sequence counts exist only in stats.txt, which is optional
  if (std::ifstream in(dir / "stats.txt"); in) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const std::string_view view = trim(line);
      if (view.empty()) continue;
      const auto eq = view.find('=');
      if (eq == std::string_view::npos) throw ParseError(line_no, "stats.txt: expected key=value");
      const auto key = view.substr(0, eq), value = view.substr(eq + 1);
      bool ok = true;
      if (key == "clicks") ok = parse_number(value, ds.stats.clicks);
      else if (key == "train_sequences") ok = parse_number(value, ds.stats.train_sequences);
      else if (key == "test_sequences") ok = parse_number(value, ds.stats.test_sequences);
      else if (key == "average_length") ok = parse_number(value, ds.stats.average_length);
      if (!ok) throw ParseError(line_no, "stats.txt: bad value for " + std::string(key));
    }
  }
  return ds;
}

std::optional<ReferenceStats> reference_stats(std::string_view name) {
  if (name == "yoochoose-64") return ReferenceStats{"yoochoose-64", 557248, 369859, 55898, 16766, 6.16};
  if (name == "yoochoose-4") return ReferenceStats{"yoochoose-4", 8326407, 5917745, 55898, 29618, 5.71};
  if (name == "diginetica") return ReferenceStats{"diginetica", 982961, 719470, 60858, 43097, 5.12};
  return std::nullopt;
}

std::string compare_stats(const DatasetStats& ours, const ReferenceStats& ref) {
  std::ostringstream os;
  auto line = [&](const char* name, double a, double b) {
    char buf[160];
    const double rel = b == 0 ? 0.0 : (a - b) / b;
    std::snprintf(buf, sizeof buf, "%-16s ours=%-12.6g reference=%-12.6g rel_diff=%+.4f\n", name, a,
                  b, rel);
    os << buf;
  };
  os << "reference: " << ref.name << "\n";
  line("clicks", double(ours.clicks), double(ref.clicks));
  line("train_sessions", double(ours.train_sessions), double(ref.train_sessions));
  line("test_sessions", double(ours.test_sessions), double(ref.test_sessions));
  line("items", double(ours.items), double(ref.items));
  line("average_length", ours.average_length, ref.average_length);
  return os.str();
}

}  // namespace srgnn
