#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "uavids/feature_selection.hpp"
#include "uavids/kernels.hpp"
#include "uavids/matrix.hpp"
#include "uavids/telemetry.hpp"

namespace uavids {

enum class ClipPolicy { ClipToUnit, PassThrough };
enum class EmptyWindowPolicy { CarryForward, DropWindow };
/// RandomSample is the detector's pooling; Mean exists for ablations only.
enum class PoolingMethod { RandomSample, Mean };

std::string_view to_string(ClipPolicy p);
ClipPolicy parse_clip_policy(std::string_view s);
std::string_view to_string(EmptyWindowPolicy p);
EmptyWindowPolicy parse_empty_window_policy(std::string_view s);
std::string_view to_string(PoolingMethod m);
PoolingMethod parse_pooling_method(std::string_view s);

struct PoolingConfig {
  std::int64_t window_ms = 500;
  std::uint64_t rng_seed = 0;
  EmptyWindowPolicy empty_window_policy = EmptyWindowPolicy::CarryForward;
  PoolingMethod method = PoolingMethod::RandomSample;
};

/// One row per time window, one column per selected feature (catalog order).
struct WindowedMatrix {
  std::vector<std::string> features;
  Matrix values;
  std::vector<std::int64_t> window_starts;  // microseconds since session epoch
  std::vector<Label> labels;                // empty when unlabeled

  std::size_t rows() const noexcept { return values.rows(); }
  bool has_labels() const noexcept { return !labels.empty(); }
  /// Throws on shape mismatch or non-finite entries.
  void validate() const;
  WindowedMatrix slice_rows(std::size_t begin, std::size_t end) const;
  std::size_t attack_rows() const;

  friend bool operator==(const WindowedMatrix&, const WindowedMatrix&) = default;
};

WindowedMatrix concat_rows(const WindowedMatrix& a, const WindowedMatrix& b);

struct ScalerParams {
  std::vector<std::string> features;
  std::vector<double> mins;
  std::vector<double> maxs;
  ClipPolicy clip_policy = ClipPolicy::ClipToUnit;

  friend bool operator==(const ScalerParams&, const ScalerParams&) = default;
};

/// Counter-based draw for the (session, feature, window) cell; independent of
/// evaluation order.
std::uint64_t pooling_draw(std::uint64_t seed, std::string_view session_id,
                           std::string_view feature, std::int64_t window_index);

WindowedMatrix pool_timestamps(const FlightLog& log, const FeatureCatalog& catalog,
                               const PoolingConfig& cfg,
                               Execution exec = Execution::Parallel);

ScalerParams fit_scaler(const WindowedMatrix& train, ClipPolicy policy);
WindowedMatrix apply_scaler(WindowedMatrix m, const ScalerParams& s,
                            Execution exec = Execution::Parallel);
/// Inverse of the min-max map (exact inverse only under PassThrough).
WindowedMatrix unscale(WindowedMatrix m, const ScalerParams& s);

void write_scaler(std::ostream& out, const ScalerParams& s);
void save_scaler(const std::filesystem::path& path, const ScalerParams& s);
ScalerParams read_scaler(std::istream& in, ClipPolicy policy);
ScalerParams load_scaler(const std::filesystem::path& path, ClipPolicy policy);

void write_matrix(std::ostream& out, const WindowedMatrix& m);
void save_matrix(const std::filesystem::path& path, const WindowedMatrix& m);
WindowedMatrix read_matrix(std::istream& in);
WindowedMatrix load_matrix(const std::filesystem::path& path);

}  // namespace uavids
