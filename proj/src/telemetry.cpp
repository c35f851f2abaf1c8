#include "uavids/telemetry.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include "text_util.hpp"
#include "uavids/error.hpp"

namespace uavids {

namespace {

constexpr std::string_view kLogHeader = "timestamp_us,feature_name,value";
constexpr std::string_view kAnnotationHeader =
    "session_id,attack_kind,flight_start,attack_start,attack_end,flight_end";
constexpr std::int64_t kMicrosPerSecond = 1'000'000;

std::string_view strip_bom(std::string_view s) {
  if (s.size() >= 3 && s.substr(0, 3) == "\xEF\xBB\xBF") s.remove_prefix(3);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

void validate_annotation(const FlightLog& log, const AttackAnnotation& ann) {
  if (!(ann.attack_start < ann.attack_end)) {
    throw Error(ErrorKind::Precondition,
                "session " + log.session_id + ": attack_start " + ann.attack_start.str() +
                    " is not before attack_end " + ann.attack_end.str());
  }
  if (ann.attack_start < log.flight_start || log.flight_end < ann.attack_end) {
    throw Error(ErrorKind::Precondition,
                "session " + log.session_id + ": attack interval " + ann.attack_start.str() +
                    "-" + ann.attack_end.str() + " outside flight " +
                    log.flight_start.str() + "-" + log.flight_end.str());
  }
}

}  // namespace

ClockTime ClockTime::parse(std::string_view s) {
  s = detail::trim(s);
  const auto parts = detail::split(s, ':');
  if (parts.size() != 3) {
    throw Error(ErrorKind::Parse, "bad clock time '" + std::string(s) + "', want HH:MM:SS");
  }
  const auto h = detail::parse_int(parts[0]);
  const auto m = detail::parse_int(parts[1]);
  const auto sec = detail::parse_int(parts[2]);
  if (!h || !m || !sec || *h < 0 || *h > 23 || *m < 0 || *m > 59 || *sec < 0 || *sec > 59) {
    throw Error(ErrorKind::Parse, "bad clock time '" + std::string(s) + "', want HH:MM:SS");
  }
  return ClockTime{static_cast<std::int32_t>(*h * 3600 + *m * 60 + *sec)};
}

std::string ClockTime::str() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d:%02d:%02d", seconds / 3600, (seconds / 60) % 60,
                seconds % 60);
  return buf;
}

std::string_view to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::DoS: return "DoS";
    case AttackKind::GpsSpoofing: return "GpsSpoofing";
    case AttackKind::Other: return "Other";
  }
  return "Other";
}

AttackKind parse_attack_kind(std::string_view s) {
  const auto k = lower(detail::trim(s));
  if (k == "dos") return AttackKind::DoS;
  if (k == "gpsspoofing" || k == "gps_spoofing" || k == "gps") return AttackKind::GpsSpoofing;
  if (k == "other") return AttackKind::Other;
  throw Error(ErrorKind::Parse, "unknown attack kind '" + std::string(s) + "'");
}

std::string_view to_string(Label label) {
  return label == Label::Attack ? "attack" : "benign";
}

Label parse_label(std::string_view s) {
  const auto k = lower(detail::trim(s));
  if (k == "attack" || k == "1") return Label::Attack;
  if (k == "benign" || k == "0") return Label::Benign;
  throw Error(ErrorKind::Parse, "unknown label '" + std::string(s) + "'");
}

std::optional<std::pair<std::int64_t, std::int64_t>> FlightLog::attack_interval_us() const {
  if (!annotation) return std::nullopt;
  const auto rel = [&](ClockTime t) {
    return static_cast<std::int64_t>(t.seconds - flight_start.seconds) * kMicrosPerSecond;
  };
  return std::pair{rel(annotation->attack_start), rel(annotation->attack_end)};
}

Label FlightLog::label_of(std::int64_t t_us) const {
  const auto iv = attack_interval_us();
  if (iv && iv->first <= t_us && t_us <= iv->second) return Label::Attack;
  return Label::Benign;
}

Label FlightLog::label_of(ClockTime t) const {
  return label_of(static_cast<std::int64_t>(t.seconds - flight_start.seconds) *
                  kMicrosPerSecond);
}

std::int64_t FlightLog::duration_us() const {
  return static_cast<std::int64_t>(flight_end.seconds - flight_start.seconds) *
         kMicrosPerSecond;
}

FlightLog parse_log(std::istream& in, std::string session_id, ParseReport& report) {
  report = {};
  FlightLog log;
  log.session_id = std::move(session_id);

  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    const auto s = detail::trim_cr(strip_bom(line));
    if (detail::trim(s).empty()) continue;
    if (s != kLogHeader) {
      throw Error(ErrorKind::Parse, "session " + log.session_id + ": malformed header '" +
                                        std::string(s) + "', want '" +
                                        std::string(kLogHeader) + "'");
    }
    have_header = true;
    break;
  }
  if (!have_header) {
    throw Error(ErrorKind::Parse, "session " + log.session_id + ": missing header");
  }

  while (std::getline(in, line)) {
    const auto s = detail::trim_cr(line);
    if (detail::trim(s).empty()) continue;
    ++report.rows_read;
    const auto fields = detail::split(s, ',');
    std::optional<std::int64_t> ts;
    std::optional<double> value;
    if (fields.size() == 3) {
      ts = detail::parse_int(detail::trim(fields[0]));
      value = detail::parse_double(detail::trim(fields[2]));
    }
    const auto name = fields.size() == 3 ? detail::trim(fields[1]) : std::string_view{};
    if (!ts || *ts < 0 || name.empty() || !value) {
      ++report.rows_rejected;
      ++report.malformed;
      continue;
    }
    if (!std::isfinite(*value)) {
      ++report.rows_rejected;
      ++report.non_finite;
      continue;
    }
    log.records.push_back(RawRecord{*ts, std::string(name), *value});
  }

  if (report.rows_read > 0 && 2 * report.rows_rejected > report.rows_read) {
    throw Error(ErrorKind::Parse, "session " + log.session_id + ": rejected " +
                                      std::to_string(report.rows_rejected) + " of " +
                                      std::to_string(report.rows_read) + " rows");
  }

  std::stable_sort(log.records.begin(), log.records.end(),
                   [](const RawRecord& a, const RawRecord& b) {
                     return a.timestamp_us < b.timestamp_us;
                   });
  if (!log.records.empty()) {
    const auto last = log.records.back().timestamp_us;
    log.flight_end.seconds = static_cast<std::int32_t>(
        std::max<std::int64_t>(1, (last + kMicrosPerSecond - 1) / kMicrosPerSecond));
  }
  return log;
}

FlightLog parse_log(const std::filesystem::path& path, std::string session_id,
                    ParseReport& report) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read log " + path.string());
  return parse_log(in, std::move(session_id), report);
}

FlightLog parse_log(const std::filesystem::path& path, std::string session_id) {
  ParseReport report;
  return parse_log(path, std::move(session_id), report);
}

FlightLog merge_logs(const FlightLog& a, const FlightLog& b) {
  FlightLog out = a;
  out.records.clear();
  out.records.reserve(a.records.size() + b.records.size());
  std::merge(a.records.begin(), a.records.end(), b.records.begin(), b.records.end(),
             std::back_inserter(out.records), [](const RawRecord& x, const RawRecord& y) {
               return x.timestamp_us < y.timestamp_us;
             });
  out.flight_end = std::max(a.flight_end, b.flight_end);
  return out;
}

std::vector<SessionInfo> parse_annotations(std::istream& in) {
  std::string line;
  bool have_header = false;
  std::vector<SessionInfo> out;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto s = detail::trim_cr(strip_bom(line));
    if (detail::trim(s).empty()) continue;
    if (!have_header) {
      if (s != kAnnotationHeader) {
        throw Error(ErrorKind::Parse, "annotation file: malformed header '" + std::string(s) +
                                          "', want '" + std::string(kAnnotationHeader) + "'");
      }
      have_header = true;
      continue;
    }
    const auto f = detail::split(s, ',');
    if (f.size() != 6) {
      throw Error(ErrorKind::Parse,
                  "annotation file line " + std::to_string(line_no) + ": want 6 fields");
    }
    SessionInfo info;
    info.session_id = std::string(detail::trim(f[0]));
    if (info.session_id.empty()) {
      throw Error(ErrorKind::Parse,
                  "annotation file line " + std::to_string(line_no) + ": empty session_id");
    }
    info.flight_start = ClockTime::parse(f[2]);
    info.flight_end = ClockTime::parse(f[5]);
    if (!(info.flight_start < info.flight_end)) {
      throw Error(ErrorKind::Precondition,
                  "session " + info.session_id + ": flight_start not before flight_end");
    }
    const auto a_start = detail::trim(f[3]);
    const auto a_end = detail::trim(f[4]);
    const bool no_start = a_start.empty() || a_start == "-";
    const bool no_end = a_end.empty() || a_end == "-";
    if (no_start != no_end) {
      throw Error(ErrorKind::Parse,
                  "session " + info.session_id + ": attack interval has only one endpoint");
    }
    if (!no_start) {
      AttackAnnotation ann;
      ann.attack_start = ClockTime::parse(a_start);
      ann.attack_end = ClockTime::parse(a_end);
      ann.attack_kind = parse_attack_kind(f[1]);
      info.annotation = ann;
    }
    out.push_back(std::move(info));
  }
  if (!have_header) throw Error(ErrorKind::Parse, "annotation file: missing header");
  return out;
}

std::vector<SessionInfo> load_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read annotation file " + path.string());
  return parse_annotations(in);
}

FlightLog apply_session(FlightLog log, const SessionInfo& info) {
  log.flight_start = info.flight_start;
  log.flight_end = info.flight_end;
  log.annotation.reset();
  if (info.annotation) return annotate(std::move(log), *info.annotation);
  return log;
}

FlightLog annotate(FlightLog log, const AttackAnnotation& ann) {
  validate_annotation(log, ann);
  log.annotation = ann;
  return log;
}

Label window_label(const FlightLog& log, std::size_t window_index, std::int64_t window_ms) {
  const auto iv = log.attack_interval_us();
  if (!iv) return Label::Benign;
  const std::int64_t w_us = window_ms * 1000;
  const std::int64_t lo = static_cast<std::int64_t>(window_index) * w_us;
  const std::int64_t hi = lo + w_us;  // exclusive
  return (lo <= iv->second && hi > iv->first) ? Label::Attack : Label::Benign;
}

std::vector<WindowLabel> label_windows(const FlightLog& log, std::int64_t window_ms) {
  if (window_ms <= 0) throw Error(ErrorKind::Precondition, "window_ms must be positive");
  const std::int64_t w_us = window_ms * 1000;
  std::int64_t span = log.duration_us();
  if (!log.records.empty()) span = std::max(span, log.records.back().timestamp_us + 1);
  const auto n = static_cast<std::size_t>((span + w_us - 1) / w_us);
  std::vector<WindowLabel> out;
  out.reserve(n);
  for (std::size_t w = 0; w < n; ++w) out.push_back({w, window_label(log, w, window_ms)});
  return out;
}

}  // namespace uavids
