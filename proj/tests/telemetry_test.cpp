#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "uavids/error.hpp"
#include "uavids/rng.hpp"
#include "uavids/telemetry.hpp"

namespace uavids {
namespace {

FlightLog parse_text(const std::string& text, ParseReport& report) {
  std::istringstream in(text);
  return parse_log(in, "s", report);
}

FlightLog parse_text(const std::string& text) {
  ParseReport report;
  return parse_text(text, report);
}

SessionInfo recorded_dos() {
  return {"dos", ClockTime::parse("15:29:06"), ClockTime::parse("15:55:09"),
          AttackAnnotation{ClockTime::parse("15:54:09"), ClockTime::parse("15:54:20"),
                           AttackKind::DoS}};
}

SessionInfo recorded_gps() {
  return {"gps", ClockTime::parse("15:58:19"), ClockTime::parse("16:26:25"),
          AttackAnnotation{ClockTime::parse("16:24:14"), ClockTime::parse("16:24:42"),
                           AttackKind::GpsSpoofing}};
}

TEST(ParseLog, SortsByTimestamp) {
  const auto log = parse_text(
      "timestamp_us,feature_name,value\n"
      "1000,altitude,10.5\n"
      "500,altitude,9.9\n");
  ASSERT_EQ(log.records.size(), 2u);
  EXPECT_EQ(log.records[0].timestamp_us, 500);
  EXPECT_EQ(log.records[1].timestamp_us, 1000);
  EXPECT_EQ(log.records[1].value, 10.5);
}

TEST(ParseLog, TiesKeepFileOrder) {
  const auto log = parse_text(
      "timestamp_us,feature_name,value\n"
      "7,b,1\n7,a,2\n3,c,3\n7,c,4\n");
  ASSERT_EQ(log.records.size(), 4u);
  EXPECT_EQ(log.records[1].feature_name, "b");
  EXPECT_EQ(log.records[2].feature_name, "a");
  EXPECT_EQ(log.records[3].feature_name, "c");
}

TEST(ParseLog, NonFiniteRowsAreRejectedAndCounted) {
  ParseReport report;
  const auto log = parse_text(
      "timestamp_us,feature_name,value\n"
      "1,altitude,NaN\n"
      "2,altitude,1.0\n"
      "3,altitude,inf\n"
      "4,altitude,2.0\n"
      "5,altitude,3.0\n",
      report);
  EXPECT_EQ(log.records.size(), 3u);
  EXPECT_EQ(report.rows_read, 5u);
  EXPECT_EQ(report.rows_rejected, 2u);
  EXPECT_EQ(report.non_finite, 2u);
}

TEST(ParseLog, MalformedRowsAreRejected) {
  ParseReport report;
  const auto log = parse_text(
      "timestamp_us,feature_name,value\n"
      "-1,a,1\n"
      "x,a,1\n"
      "1,,1\n"
      "1,a\n"
      "1,a,1,2\n"
      "1,a,abc\n"
      "1,a,1\n2,a,1\n3,a,1\n4,a,1\n5,a,1\n6,a,1\n7,a,1\n",
      report);
  EXPECT_EQ(log.records.size(), 7u);
  EXPECT_EQ(report.malformed, 6u);
}

TEST(ParseLog, AbortsWhenMostRowsAreBad) {
  EXPECT_THROW(parse_text("timestamp_us,feature_name,value\n1,a,nan\n2,a,nan\n3,a,1\n"), Error);
  // Exactly half rejected still parses.
  EXPECT_NO_THROW(parse_text("timestamp_us,feature_name,value\n1,a,nan\n3,a,1\n"));
}

TEST(ParseLog, HeaderMustMatchExactly) {
  try {
    parse_text("ts,feature,value\n1,a,1\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Parse);
  }
  EXPECT_THROW(parse_text(""), Error);
  EXPECT_NO_THROW(parse_text("timestamp_us,feature_name,value\r\n1,a,1\r\n"));
}

TEST(ParseLog, UnreadableFile) {
  try {
    parse_log(std::filesystem::path("/nonexistent/log.csv"), "x");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Io);
  }
}

// Record count equals data rows minus rejected rows, with both counted by an
// independent scan of the file text.
TEST(ParseLog, RecordCountMatchesLineCountOracle) {
  Rng rng(21);
  std::ostringstream text;
  text << "timestamp_us,feature_name,value\n";
  for (int i = 0; i < 5000; ++i) {
    const auto kind = rng.below(40);
    const auto ts = rng.below(10'000'000);
    if (kind == 0) text << ts << ",roll,nan\n";
    else if (kind == 1) text << ts << ",roll,-inf\n";
    else if (kind == 2) text << "garbage\n";
    else text << ts << ",f" << rng.below(9) << ',' << rng.uniform(-5, 5) << '\n';
  }
  const auto path = std::filesystem::temp_directory_path() / "uavids_linecount.csv";
  { std::ofstream(path) << text.str(); }

  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  std::size_t data_rows = 0, bad = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++data_rows;
    if (line.find("nan") != std::string::npos || line.find("inf") != std::string::npos ||
        line == "garbage") {
      ++bad;
    }
  }
  ParseReport report;
  const auto log = parse_log(path, "bench", report);
  EXPECT_EQ(report.rows_read, data_rows);
  EXPECT_EQ(report.rows_rejected, bad);
  EXPECT_EQ(log.records.size(), data_rows - bad);
  EXPECT_TRUE(std::is_sorted(log.records.begin(), log.records.end(),
                             [](auto& a, auto& b) { return a.timestamp_us < b.timestamp_us; }));
  std::filesystem::remove(path);
}

TEST(ParseLog, DeterministicAndConcatenationEqualsMerge) {
  Rng rng(4);
  const auto body = [&](int n) {
    std::ostringstream s;
    for (int i = 0; i < n; ++i)
      s << rng.below(1000) << ",f" << rng.below(3) << ',' << rng.uniform() << '\n';
    return s.str();
  };
  const std::string header = "timestamp_us,feature_name,value\n";
  const auto a = body(300);
  const auto b = body(200);
  const auto la = parse_text(header + a);
  const auto lb = parse_text(header + b);
  EXPECT_EQ(parse_text(header + a).records, la.records);

  const auto merged = merge_logs(la, lb);
  EXPECT_EQ(parse_text(header + a + b).records, merged.records);
  // Plain file concatenation: the second header is a rejected row.
  ParseReport report;
  EXPECT_EQ(parse_text(header + a + header + b, report).records, merged.records);
  EXPECT_EQ(report.rows_rejected, 1u);
}

TEST(ClockTime, ParsesAndFormats) {
  EXPECT_EQ(ClockTime::parse("15:54:09").seconds, 15 * 3600 + 54 * 60 + 9);
  EXPECT_EQ(ClockTime::parse("00:00:00").str(), "00:00:00");
  EXPECT_EQ(ClockTime::parse("16:24:42").str(), "16:24:42");
  EXPECT_THROW(ClockTime::parse("25:00:00"), Error);
  EXPECT_THROW(ClockTime::parse("12:00"), Error);
}

TEST(Annotate, DosSessionLabels) {
  auto log = apply_session(FlightLog{.session_id = "dos"}, recorded_dos());
  EXPECT_EQ(log.label_of(ClockTime::parse("15:54:15")), Label::Attack);
  EXPECT_EQ(log.label_of(ClockTime::parse("15:40:00")), Label::Benign);
  EXPECT_EQ(log.label_of(ClockTime::parse("15:54:08")), Label::Benign);
  EXPECT_EQ(log.label_of(ClockTime::parse("15:54:21")), Label::Benign);
  const auto iv = log.attack_interval_us();
  ASSERT_TRUE(iv);
  EXPECT_EQ(iv->second - iv->first, 11'000'000);
}

TEST(Annotate, GpsBoundaryIsInclusive) {
  auto log = apply_session(FlightLog{.session_id = "gps"}, recorded_gps());
  EXPECT_EQ(log.label_of(ClockTime::parse("16:24:14")), Label::Attack);
  EXPECT_EQ(log.label_of(ClockTime::parse("16:24:42")), Label::Attack);
  EXPECT_EQ(log.label_of(ClockTime::parse("16:24:13")), Label::Benign);
  EXPECT_EQ(log.label_of(ClockTime::parse("16:24:43")), Label::Benign);
}

TEST(Annotate, RejectsIntervalOutsideFlight) {
  FlightLog log;
  log.flight_start = ClockTime::parse("10:00:00");
  log.flight_end = ClockTime::parse("10:10:00");
  const AttackAnnotation late{ClockTime::parse("10:09:00"), ClockTime::parse("10:11:00"),
                              AttackKind::DoS};
  EXPECT_THROW(annotate(log, late), Error);
  const AttackAnnotation reversed{ClockTime::parse("10:05:00"), ClockTime::parse("10:04:00"),
                                  AttackKind::DoS};
  EXPECT_THROW(annotate(log, reversed), Error);
}

TEST(LabelWindows, BenignLogIsAllBenign) {
  FlightLog log;
  log.flight_start = ClockTime::parse("14:00:52");
  log.flight_end = ClockTime::parse("14:25:50");
  const auto labels = label_windows(log, 500);
  EXPECT_EQ(labels.size(), (25 * 60 - 2) * 2u);
  for (const auto& w : labels) EXPECT_EQ(w.label, Label::Benign);
}

TEST(LabelWindows, InsideAndStraddlingWindowsAreAttack) {
  const auto log = apply_session(FlightLog{.session_id = "dos"}, recorded_dos());
  const auto labels = label_windows(log, 500);
  const auto [a0, a1] = *log.attack_interval_us();
  const auto inside = static_cast<std::size_t>((a0 + 3'000'000) / 500'000);
  EXPECT_EQ(labels[inside].label, Label::Attack);
  EXPECT_EQ(labels[a0 / 500'000 - 1].label, Label::Benign);

  // 700 ms windows do not align with whole seconds, so one straddles the start.
  const auto l700 = label_windows(log, 700);
  const auto straddle = static_cast<std::size_t>(a0 / 700'000);
  ASSERT_LT(straddle * 700'000, a0);
  EXPECT_EQ(l700[straddle].label, Label::Attack);
  EXPECT_EQ(l700[straddle - 1].label, Label::Benign);
}

TEST(LabelWindows, AttackWindowCoverageIsBounded) {
  Rng rng(99);
  for (int trial = 0; trial < 500; ++trial) {
    FlightLog log;
    log.flight_start = ClockTime{static_cast<std::int32_t>(rng.below(40000))};
    log.flight_end = ClockTime{log.flight_start.seconds + 10 + static_cast<std::int32_t>(rng.below(3000))};
    const auto span = log.flight_end.seconds - log.flight_start.seconds;
    const auto s = log.flight_start.seconds + static_cast<std::int32_t>(rng.below(span - 1));
    const auto e = s + 1 + static_cast<std::int32_t>(rng.below(log.flight_end.seconds - s));
    log = annotate(log, {ClockTime{s}, ClockTime{e}, AttackKind::Other});
    const std::int64_t window_ms = 1 + static_cast<std::int64_t>(rng.below(2000));
    std::int64_t attack_windows = 0;
    for (const auto& w : label_windows(log, window_ms)) attack_windows += w.label == Label::Attack;
    const std::int64_t duration_ms = (e - s) * 1000;
    EXPECT_GE(attack_windows * window_ms, duration_ms);
    EXPECT_LE(attack_windows * window_ms, duration_ms + 2 * window_ms);
  }
}

TEST(Annotations, ParsesBenignAndAttackRows) {
  std::istringstream in(
      "session_id,attack_kind,flight_start,attack_start,attack_end,flight_end\n"
      "benign,,14:00:52,,,14:25:50\n"
      "dos,DoS,15:29:06,15:54:09,15:54:20,15:55:09\n"
      "gps,GpsSpoofing,15:58:19,16:24:14,16:24:42,16:26:25\n");
  const auto infos = parse_annotations(in);
  ASSERT_EQ(infos.size(), 3u);
  EXPECT_FALSE(infos[0].annotation);
  ASSERT_TRUE(infos[1].annotation);
  EXPECT_EQ(infos[1].annotation->attack_kind, AttackKind::DoS);
  EXPECT_EQ(infos[2].annotation->attack_start.str(), "16:24:14");
}

TEST(Annotations, RejectsHalfIntervalsAndBadHeaders) {
  std::istringstream half(
      "session_id,attack_kind,flight_start,attack_start,attack_end,flight_end\n"
      "x,DoS,10:00:00,10:01:00,,10:05:00\n");
  EXPECT_THROW(parse_annotations(half), Error);
  std::istringstream header("session,kind\n");
  EXPECT_THROW(parse_annotations(header), Error);
  std::istringstream outside(
      "session_id,attack_kind,flight_start,attack_start,attack_end,flight_end\n"
      "x,DoS,10:00:00,10:01:00,10:09:00,10:05:00\n");
  const auto infos = parse_annotations(outside);
  EXPECT_THROW(apply_session(FlightLog{}, infos[0]), Error);
}

}  // namespace
}  // namespace uavids
