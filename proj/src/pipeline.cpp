#include "uavids/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "text_util.hpp"
#include "uavids/error.hpp"
#include "uavids/feature_selection.hpp"
#include "uavids/report.hpp"
#include "uavids/rng.hpp"

namespace fs = std::filesystem;

namespace uavids {

namespace {

constexpr std::string_view kSessionsHeader =
    "session_id,benign,attack_kind,attack_start_us,attack_end_us,test_start_us";
constexpr std::int64_t kMinPreAttackUs = 60'000'000;

void require_file(const fs::path& p, std::string_view what) {
  if (p.empty()) throw Error(ErrorKind::Config, std::string(what) + " path not configured");
  if (!fs::is_regular_file(p)) {
    throw Error(ErrorKind::Io, std::string(what) + " not found: " + p.string());
  }
}

// Writes through a buffer so a failed command never leaves a half-written file.
template <typename Fn>
void write_file(const fs::path& p, Fn&& fn) {
  std::ostringstream buf;
  fn(buf);
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + p.string());
  out << buf.str();
  if (!out) throw Error(ErrorKind::Io, "write failed: " + p.string());
}

void save_sessions(const fs::path& p, const std::vector<SessionRecord>& sessions) {
  write_file(p, [&](std::ostream& out) {
    out << kSessionsHeader << '\n';
    for (const auto& s : sessions) {
      out << s.session_id << ',' << (s.benign ? 1 : 0) << ','
          << (s.attack_kind ? to_string(*s.attack_kind) : "") << ',';
      if (s.attack_us) out << s.attack_us->first << ',' << s.attack_us->second;
      else out << ',';
      out << ',' << s.test_start_us << '\n';
    }
  });
}

WindowedMatrix benign_matrix(const Layout& layout, const std::vector<SessionRecord>& sessions) {
  WindowedMatrix all;
  bool any = false;
  for (const auto& s : sessions) {
    if (!s.benign) continue;
    const auto p = layout.matrix(s.session_id);
    require_file(p, "benign matrix");
    all = concat_rows(all, load_matrix(p));
    any = true;
  }
  if (!any) throw Error(ErrorKind::Precondition, "no benign session was prepared");
  return all;
}

std::vector<SessionRecord> pick_sessions(const std::vector<SessionRecord>& all,
                                         const std::vector<std::string>& wanted) {
  std::vector<SessionRecord> out;
  if (wanted.empty()) {
    for (const auto& s : all) {
      if (!s.benign) out.push_back(s);
    }
    return out.empty() ? all : out;
  }
  for (const auto& w : wanted) {
    const auto it = std::find_if(all.begin(), all.end(),
                                 [&](const SessionRecord& s) { return s.session_id == w; });
    if (it == all.end()) throw Error(ErrorKind::Precondition, "unknown session '" + w + "'");
    out.push_back(*it);
  }
  return out;
}

std::map<std::string, std::string> read_kv(const fs::path& p) {
  require_file(p, "metadata file");
  const auto file = ConfigFile::load(p);
  return file.entries();
}

}  // namespace

std::vector<SessionRecord> load_sessions(const fs::path& path) {
  require_file(path, "session table (run prepare first)");
  std::ifstream in(path);
  std::string line;
  if (!std::getline(in, line) || detail::trim_cr(line) != kSessionsHeader) {
    throw Error(ErrorKind::Parse, "session table: malformed header");
  }
  std::vector<SessionRecord> out;
  while (std::getline(in, line)) {
    const auto t = detail::trim_cr(line);
    if (t.empty()) continue;
    const auto f = detail::split(t, ',');
    if (f.size() != 6) throw Error(ErrorKind::Parse, "session table: want 6 fields");
    SessionRecord s;
    s.session_id = std::string(f[0]);
    s.benign = f[1] == "1";
    if (!f[2].empty()) s.attack_kind = parse_attack_kind(f[2]);
    const auto a = detail::parse_int(f[3]);
    const auto b = detail::parse_int(f[4]);
    if (a && b) s.attack_us = std::pair{*a, *b};
    const auto ts = detail::parse_int(f[5]);
    if (!ts) throw Error(ErrorKind::Parse, "session table: bad test_start_us");
    s.test_start_us = *ts;
    out.push_back(std::move(s));
  }
  return out;
}

BenignSplit split_benign(const WindowedMatrix& benign, double validation_fraction) {
  const std::size_t n = benign.rows();
  auto n_train = static_cast<std::size_t>(
      std::floor(static_cast<double>(n) * (1.0 - validation_fraction)));
  if (n_train == 0 || n_train >= n) {
    throw Error(ErrorKind::Precondition, "benign data (" + std::to_string(n) +
                                             " windows) too small to split for validation");
  }
  return {benign.slice_rows(0, n_train), benign.slice_rows(n_train, n)};
}

void cmd_prepare(const PipelineConfig& cfg, std::ostream& log) {
  require_file(cfg.annotations, "annotation file");
  require_file(cfg.category_map, "category map");
  for (const auto& [session, path] : cfg.logs) require_file(path, "log for session " + session);

  const auto infos = load_annotations(cfg.annotations);
  const auto categories = load_category_map(cfg.category_map);
  for (const auto& [session, path] : cfg.logs) {
    const bool known = std::any_of(infos.begin(), infos.end(),
                                   [&](const SessionInfo& i) { return i.session_id == session; });
    if (!known) {
      throw Error(ErrorKind::Precondition,
                  "session " + session + " has a log but no row in " + cfg.annotations.string());
    }
  }

  std::vector<FlightLog> logs;
  for (const auto& info : infos) {
    const auto it = cfg.logs.find(info.session_id);
    if (it == cfg.logs.end()) {
      throw Error(ErrorKind::Config, "no log configured for session " + info.session_id +
                                         " (set log." + info.session_id + ")");
    }
    ParseReport report;
    auto parsed = parse_log(it->second, info.session_id, report);
    log << "parsed " << info.session_id << ": " << report.rows_read << " rows, "
        << report.rows_rejected << " rejected (" << report.non_finite << " non-finite)\n";
    logs.push_back(apply_session(std::move(parsed), info));
  }

  const auto catalog = build_catalog(logs, categories);
  const auto selection = select_features(logs, catalog);
  if (selection.catalog.selected().empty()) {
    throw Error(ErrorKind::Precondition, "feature selection kept no features");
  }

  const Layout layout{cfg.out_dir};
  fs::create_directories(layout.root);
  write_file(layout.catalog(), [&](std::ostream& o) { write_catalog(o, selection.catalog); });
  write_file(layout.selection_report(),
             [&](std::ostream& o) { write_selection_report(o, selection.report); });
  write_selection_report(log, selection.report);

  std::vector<WindowedMatrix> pooled;
  WindowedMatrix benign;
  for (const auto& l : logs) {
    pooled.push_back(pool_timestamps(l, selection.catalog, cfg.pooling));
    if (!l.annotation) benign = concat_rows(benign, pooled.back());
  }
  if (benign.rows() == 0) {
    throw Error(ErrorKind::Precondition, "annotation file lists no benign session");
  }
  const auto split = split_benign(benign, cfg.validation_fraction);
  const auto scaler = fit_scaler(split.train, cfg.clip_policy);
  write_file(layout.scaler(), [&](std::ostream& o) { write_scaler(o, scaler); });

  const std::int64_t w_us = cfg.pooling.window_ms * 1000;
  std::vector<SessionRecord> records;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    const auto& l = logs[i];
    SessionRecord rec;
    rec.session_id = l.session_id;
    rec.benign = !l.annotation;
    auto scaled = apply_scaler(pooled[i], scaler);
    if (l.annotation) {
      rec.attack_kind = l.annotation->attack_kind;
      rec.attack_us = l.attack_interval_us();
      const auto [a_start, a_end] = *rec.attack_us;
      const auto pinned = cfg.test_start.find(l.session_id);
      if (pinned != cfg.test_start.end()) {
        const auto t = pinned->second;
        if (t < l.flight_start || !(t < l.annotation->attack_start)) {
          throw Error(ErrorKind::Config, "test start " + t.str() + " for session " +
                                             l.session_id + " must lie in [flight_start, attack_start)");
        }
        rec.test_start_us = static_cast<std::int64_t>(t.seconds - l.flight_start.seconds) * 1'000'000;
      } else {
        // Seeded pick of a window start at least a minute before the attack when possible.
        const std::int64_t latest = std::max<std::int64_t>(0, a_start - kMinPreAttackUs);
        Rng rng(cfg.seed ^ fnv1a(l.session_id));
        rec.test_start_us = static_cast<std::int64_t>(rng.below(latest / w_us + 1)) * w_us;
      }
      std::size_t begin = 0, end = 0;
      for (std::size_t r = 0; r < scaled.rows(); ++r) {
        if (scaled.window_starts[r] + w_us <= rec.test_start_us) begin = r + 1;
        if (scaled.window_starts[r] <= a_end) end = r + 1;
      }
      scaled = scaled.slice_rows(begin, end);
    }
    log << "windows " << l.session_id << ": " << scaled.rows() << " rows ("
        << scaled.attack_rows() << " attack)\n";
    write_file(layout.matrix(l.session_id), [&](std::ostream& o) { write_matrix(o, scaled); });
    records.push_back(std::move(rec));
  }
  save_sessions(layout.sessions(), records);
}

void cmd_train(const PipelineConfig& cfg, std::ostream& log) {
  const Layout layout{cfg.out_dir};
  const auto sessions = load_sessions(layout.sessions());
  const auto split = split_benign(benign_matrix(layout, sessions), cfg.validation_fraction);

  Architecture arch;
  arch.input_dim = split.train.features.size();
  arch.encoder_dims = cfg.encoder_dims;
  arch.batchnorm_epsilon = cfg.batchnorm_epsilon;
  arch.batchnorm = cfg.train.batchnorm_enabled;
  arch.validate();

  const auto result = train(split.train, arch, cfg.train);
  write_file(layout.model(), [&](std::ostream& o) { write_model(o, result.params); });
  write_file(layout.trace(),
             [&](std::ostream& o) { write_trace(o, result.trace, cfg.trace_wall_time); });
  if (!result.trace.epochs.empty()) {
    log << "trained " << result.trace.epochs.size() << " epochs on " << split.train.rows()
        << " windows; first mean loss " << result.trace.epochs.front().mean_loss
        << ", last " << result.trace.epochs.back().mean_loss << '\n';
  }
}

void cmd_detect(const PipelineConfig& cfg, const std::vector<std::string>& wanted,
                std::ostream& log) {
  const Layout layout{cfg.out_dir};
  const auto sessions = load_sessions(layout.sessions());
  require_file(layout.model(), "model (run train first)");
  require_file(layout.scaler(), "scaler");
  const auto model = load_model(layout.model());
  const auto scaler = load_scaler(layout.scaler(), cfg.clip_policy);
  const auto fingerprint = model_fingerprint(model);

  const auto split = split_benign(benign_matrix(layout, sessions), cfg.validation_fraction);
  const auto calib = score(model, split.validation);
  const auto threshold = calibrate_threshold(losses_of(calib), cfg.threshold);
  log << "threshold " << threshold.method.str() << " = " << threshold.value << " from "
      << threshold.calibration_size << " benign windows\n";

  for (const auto& s : pick_sessions(sessions, wanted)) {
    const auto p = layout.matrix(s.session_id);
    require_file(p, "matrix for session " + s.session_id);
    const auto m = load_matrix(p);
    if (m.features != scaler.features) {
      throw Error(ErrorKind::Schema, "session " + s.session_id + ": columns differ from the scaler");
    }
    auto result = detect(score(model, m), threshold);
    result.model_fingerprint = fingerprint;
    write_file(layout.detection(s.session_id),
               [&](std::ostream& o) { write_detection(o, result, m.labels); });
    write_file(layout.detection_meta(s.session_id), [&](std::ostream& o) {
      o << "threshold = " << detail::format_double(threshold.value) << '\n'
        << "threshold_method = " << threshold.method.str() << '\n'
        << "calibration_size = " << threshold.calibration_size << '\n'
        << "model_fingerprint = " << fingerprint << '\n';
    });
    const auto flagged = std::count(result.verdicts.begin(), result.verdicts.end(), Label::Attack);
    log << "detect " << s.session_id << ": " << flagged << " of " << result.verdicts.size()
        << " windows flagged\n";
  }
}

void cmd_eval(const PipelineConfig& cfg, const std::vector<std::string>& wanted,
              std::ostream& log) {
  const Layout layout{cfg.out_dir};
  const auto sessions = load_sessions(layout.sessions());
  for (const auto& s : pick_sessions(sessions, wanted)) {
    const auto p = layout.detection(s.session_id);
    require_file(p, "detection output for session " + s.session_id);
    std::ifstream in(p);
    const auto rows = read_detection(in);
    const auto meta = read_kv(layout.detection_meta(s.session_id));
    const auto thr = meta.find("threshold");
    if (thr == meta.end()) throw Error(ErrorKind::Parse, "detection metadata lacks threshold");

    DetectionResult result;
    result.threshold.value = detail::parse_double(thr->second).value_or(0.0);
    std::vector<Label> labels;
    for (const auto& r : rows) {
      result.scores.push_back({r.window_start_us, r.loss});
      result.verdicts.push_back(r.verdict);
      labels.push_back(r.label.value_or(Label::Benign));
    }
    const auto summary = evaluate(result, labels);
    write_file(layout.eval(s.session_id), [&](std::ostream& o) {
      o << "session = " << s.session_id << '\n';
      write_summary(o, summary);
    });
    log << "eval " << s.session_id << ": precision " << summary.precision << ", recall "
        << summary.recall << ", f1 " << summary.f1 << '\n';
  }
}

void cmd_report(const PipelineConfig& cfg, std::ostream& log) {
  const Layout layout{cfg.out_dir};
  const auto sessions = load_sessions(layout.sessions());
  std::size_t written = 0;
  for (const auto& s : sessions) {
    const auto p = layout.detection(s.session_id);
    if (!fs::is_regular_file(p)) continue;
    std::ifstream in(p);
    const auto rows = read_detection(in);
    const auto meta = read_kv(layout.detection_meta(s.session_id));
    const double threshold = detail::parse_double(meta.at("threshold")).value_or(0.0);
    const auto dist = class_distribution(rows);
    const auto dir = layout.report_dir();
    const bool csv = cfg.report_format != ReportFormat::Svg;
    const bool svg = cfg.report_format != ReportFormat::Csv;
    if (csv) {
      write_file(dir / (s.session_id + "_trace.csv"),
                 [&](std::ostream& o) { write_trace_csv(o, rows, threshold); });
      write_file(dir / (s.session_id + "_distribution.csv"),
                 [&](std::ostream& o) { write_distribution_csv(o, dist); });
    }
    if (svg) {
      write_file(dir / (s.session_id + "_trace.svg"), [&](std::ostream& o) {
        write_trace_svg(o, "reconstruction loss: " + s.session_id, rows, threshold, s.attack_us);
      });
      write_file(dir / (s.session_id + "_distribution.svg"), [&](std::ostream& o) {
        write_distribution_svg(o, "loss distribution: " + s.session_id, dist);
      });
    }
    ++written;
  }
  if (written == 0) {
    throw Error(ErrorKind::Precondition, "no detection output under " +
                                             (layout.root / "detect").string() + " (run detect first)");
  }
  log << "report: " << written << " sessions\n";
}

}  // namespace uavids
