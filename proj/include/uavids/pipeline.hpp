#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "uavids/autoencoder.hpp"
#include "uavids/detector.hpp"
#include "uavids/feature_engineering.hpp"
#include "uavids/telemetry.hpp"

namespace uavids {

/// Flat `dotted.key = value` settings; `#` starts a comment line.
class ConfigFile {
 public:
  static ConfigFile parse(std::istream& in);
  static ConfigFile load(const std::filesystem::path& path);

  /// Applies a `key=value` override.
  void set(const std::string& key, const std::string& value);
  std::optional<std::string> get(const std::string& key) const;
  const std::map<std::string, std::string>& entries() const noexcept { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

enum class ReportFormat { Csv, Svg, Both };

struct PipelineConfig {
  std::filesystem::path annotations;
  std::filesystem::path category_map;
  std::filesystem::path out_dir = "out";
  std::map<std::string, std::filesystem::path> logs;  // session id -> long-format CSV

  std::uint64_t seed = 0;
  PoolingConfig pooling;
  ClipPolicy clip_policy = ClipPolicy::ClipToUnit;
  std::vector<std::size_t> encoder_dims{24, 12, 6};
  double batchnorm_epsilon = 1e-5;
  TrainConfig train;
  bool trace_wall_time = false;
  double validation_fraction = 0.2;
  ThresholdSpec threshold;
  std::map<std::string, ClockTime> test_start;  // per attack session
  ReportFormat report_format = ReportFormat::Both;

  /// Builds a config from parsed settings. Relative paths resolve against
  /// `base_dir`. Unknown keys are rejected. `pooling.seed` and `train.seed`
  /// default to the master `seed`.
  static PipelineConfig from_file(const ConfigFile& file, const std::filesystem::path& base_dir);
  void validate() const;
};

/// Overrides are `key=value` strings applied on top of the file.
PipelineConfig load_pipeline_config(const std::filesystem::path& path,
                                    const std::vector<std::string>& overrides = {});

/// Output locations under `out_dir`.
struct Layout {
  std::filesystem::path root;

  std::filesystem::path catalog() const { return root / "catalog.csv"; }
  std::filesystem::path scaler() const { return root / "scaler.csv"; }
  std::filesystem::path selection_report() const { return root / "selection_report.txt"; }
  std::filesystem::path sessions() const { return root / "sessions.csv"; }
  std::filesystem::path matrix(const std::string& session) const {
    return root / "windows" / (session + ".csv");
  }
  std::filesystem::path model() const { return root / "model.aemodel"; }
  std::filesystem::path trace() const { return root / "train_trace.csv"; }
  std::filesystem::path detection(const std::string& session) const {
    return root / "detect" / (session + ".csv");
  }
  std::filesystem::path detection_meta(const std::string& session) const {
    return root / "detect" / (session + ".meta");
  }
  std::filesystem::path eval(const std::string& session) const {
    return root / "eval" / (session + ".txt");
  }
  std::filesystem::path report_dir() const { return root / "report"; }
};

/// Per-session facts persisted by prepare so later commands need not reparse logs.
struct SessionRecord {
  std::string session_id;
  bool benign = true;
  std::optional<AttackKind> attack_kind;
  std::optional<std::pair<std::int64_t, std::int64_t>> attack_us;
  std::int64_t test_start_us = 0;
};

std::vector<SessionRecord> load_sessions(const std::filesystem::path& path);

/// Benign training rows: the leading (1 - validation_fraction) share of the
/// concatenated benign matrices; the rest is the calibration split.
struct BenignSplit {
  WindowedMatrix train;
  WindowedMatrix validation;
};
BenignSplit split_benign(const WindowedMatrix& benign, double validation_fraction);

void cmd_prepare(const PipelineConfig& cfg, std::ostream& log);
void cmd_train(const PipelineConfig& cfg, std::ostream& log);
/// Empty `sessions` selects every attack session (or every session when
/// none carries an attack).
void cmd_detect(const PipelineConfig& cfg, const std::vector<std::string>& sessions,
                std::ostream& log);
void cmd_eval(const PipelineConfig& cfg, const std::vector<std::string>& sessions,
              std::ostream& log);
void cmd_report(const PipelineConfig& cfg, std::ostream& log);

}  // namespace uavids
