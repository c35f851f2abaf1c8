#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace uavids {

/// Session-local wall-clock time of day, second resolution.
struct ClockTime {
  std::int32_t seconds = 0;  // since 00:00:00

  static ClockTime parse(std::string_view hhmmss);
  std::string str() const;

  friend auto operator<=>(const ClockTime&, const ClockTime&) = default;
};

enum class AttackKind { DoS, GpsSpoofing, Other };
enum class Label : std::uint8_t { Benign = 0, Attack = 1 };

std::string_view to_string(AttackKind kind);
AttackKind parse_attack_kind(std::string_view s);
std::string_view to_string(Label label);
Label parse_label(std::string_view s);

struct RawRecord {
  std::int64_t timestamp_us = 0;
  std::string feature_name;
  double value = 0.0;

  friend bool operator==(const RawRecord&, const RawRecord&) = default;
};

struct AttackAnnotation {
  ClockTime attack_start;
  ClockTime attack_end;
  AttackKind attack_kind = AttackKind::Other;

  friend bool operator==(const AttackAnnotation&, const AttackAnnotation&) = default;
};

/// Records are timestamped relative to the session epoch, which is
/// `flight_start`.
struct FlightLog {
  std::string session_id;
  std::vector<RawRecord> records;
  ClockTime flight_start;
  ClockTime flight_end{1};
  std::optional<AttackAnnotation> annotation;

  /// Attack interval in microseconds relative to flight_start (closed).
  std::optional<std::pair<std::int64_t, std::int64_t>> attack_interval_us() const;
  Label label_of(std::int64_t t_us) const;
  Label label_of(ClockTime t) const;
  std::int64_t duration_us() const;
};

struct ParseReport {
  std::size_t rows_read = 0;
  std::size_t rows_rejected = 0;
  std::size_t non_finite = 0;
  std::size_t malformed = 0;
};

/// One row of the session annotation file.
struct SessionInfo {
  std::string session_id;
  ClockTime flight_start;
  ClockTime flight_end;
  std::optional<AttackAnnotation> annotation;
};

FlightLog parse_log(std::istream& in, std::string session_id, ParseReport& report);
FlightLog parse_log(const std::filesystem::path& path, std::string session_id,
                    ParseReport& report);
FlightLog parse_log(const std::filesystem::path& path, std::string session_id);

/// Stable merge by timestamp; records of `a` precede those of `b` on ties.
FlightLog merge_logs(const FlightLog& a, const FlightLog& b);

std::vector<SessionInfo> parse_annotations(std::istream& in);
std::vector<SessionInfo> load_annotations(const std::filesystem::path& path);

/// Sets the session clock from `info` and attaches its annotation, if any.
FlightLog apply_session(FlightLog log, const SessionInfo& info);
FlightLog annotate(FlightLog log, const AttackAnnotation& ann);

struct WindowLabel {
  std::size_t window_index;
  Label label;
  friend bool operator==(const WindowLabel&, const WindowLabel&) = default;
};

/// Window w covers [w*window_ms, (w+1)*window_ms) and is Attack iff it
/// intersects the closed attack interval. Windows span the flight duration
/// and every record.
std::vector<WindowLabel> label_windows(const FlightLog& log, std::int64_t window_ms);
Label window_label(const FlightLog& log, std::size_t window_index, std::int64_t window_ms);

}  // namespace uavids
