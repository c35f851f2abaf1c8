#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uavids/autoencoder.hpp"
#include "uavids/feature_engineering.hpp"
#include "uavids/telemetry.hpp"

namespace uavids {

enum class ThresholdMethod { BenignPercentile, MaxBenign, Manual };

struct ThresholdSpec {
  ThresholdMethod method = ThresholdMethod::BenignPercentile;
  double percentile = 99.0;  // BenignPercentile only
  double manual_value = 0.0;  // Manual only

  /// "percentile:<p>", "max", or "manual:<value>".
  static ThresholdSpec parse(std::string_view s);
  std::string str() const;
};

struct Threshold {
  double value = 0.0;
  ThresholdSpec method;
  std::size_t calibration_size = 0;
};

struct WindowScore {
  std::int64_t window_start_us = 0;
  double loss = 0.0;
};

struct DetectionResult {
  std::vector<WindowScore> scores;
  std::vector<Label> verdicts;
  Threshold threshold;
  std::string model_fingerprint;
};

struct Quartiles {
  std::size_t count = 0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  double mean = 0.0;
};

struct EvalSummary {
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t true_negatives = 0;
  std::size_t false_negatives = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool precision_defined = true;
  bool recall_defined = true;
  double false_positive_rate = 0.0;
  Quartiles benign_loss;
  Quartiles attack_loss;
  std::optional<double> separation_ratio;  // mean attack loss / mean benign loss
  std::optional<double> auc;
  double threshold = 0.0;
};

/// Per-row Infer-mode reconstruction loss, order preserved.
std::vector<WindowScore> score(const ModelParams& model, const WindowedMatrix& data,
                               Execution exec = Execution::Parallel);

/// Nearest-rank percentile: the ceil(p/100 * n)-th smallest value.
double nearest_rank_percentile(std::span<const double> values, double p);

Threshold calibrate_threshold(std::span<const double> benign_losses, const ThresholdSpec& spec);

/// Attack iff loss > threshold.
DetectionResult detect(std::span<const WindowScore> scores, const Threshold& threshold);

/// Linear interpolation between order statistics.
Quartiles quartiles(std::span<const double> values);

/// Probability that a random attack window outscores a random benign one,
/// ties counted as one half.
std::optional<double> ranking_auc(std::span<const double> losses, std::span<const Label> labels);

EvalSummary evaluate(const DetectionResult& result, std::span<const Label> labels);

std::vector<double> losses_of(std::span<const WindowScore> scores);

/// CSV `window_start_us,loss,verdict,label`; label column empty when unknown.
void write_detection(std::ostream& out, const DetectionResult& result,
                     std::span<const Label> labels);
struct DetectionRow {
  std::int64_t window_start_us = 0;
  double loss = 0.0;
  Label verdict = Label::Benign;
  std::optional<Label> label;
};
std::vector<DetectionRow> read_detection(std::istream& in);

/// Flat `key = value` lines.
void write_summary(std::ostream& out, const EvalSummary& s);

}  // namespace uavids
