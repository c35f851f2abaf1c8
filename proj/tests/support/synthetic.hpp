#pragma once

// Generators for synthetic data: a low-dimensional benign manifold with
// injected attack windows, the 6/4/2 samples-per-window pooling pattern, and
// flight-log exports shaped like the HITL benign/DoS/GPS-spoofing sessions.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "uavids/feature_engineering.hpp"
#include "uavids/telemetry.hpp"

namespace uavids::testing {

struct ManifoldData {
  WindowedMatrix train;         // benign, scaled
  WindowedMatrix validation;    // benign, scaled, held out for calibration
  WindowedMatrix benign_test;   // benign, scaled
  WindowedMatrix fresh_benign;  // benign, scaled, independent draw
  WindowedMatrix dos;           // attack-labeled, +0.3 on 8 coordinates
  WindowedMatrix gps;           // attack-labeled, coherent drift on 7 coordinates
  ScalerParams scaler;
  std::vector<std::size_t> dos_coords;
  std::vector<std::size_t> gps_coords;
};

struct ManifoldSpec {
  std::size_t latent_dim = 4;
  std::size_t ambient_dim = 33;
  double noise = 0.01;
  std::size_t n_train = 2000;
  std::size_t n_validation = 500;
  std::size_t n_test = 500;
  std::size_t n_attack = 200;
  std::uint64_t seed = 1;
};

ManifoldData make_manifold_data(const ManifoldSpec& spec);

/// Stacks benign and attack rows, keeping labels.
WindowedMatrix stack(const WindowedMatrix& a, const WindowedMatrix& b);

/// Three features sampled 6, 4 and 2 times per 500 ms window with jittered
/// timestamps, over `windows` windows.
FlightLog make_mixed_rate_log(std::size_t windows, std::uint64_t seed);

struct FlightFixtureSpec {
  double rate_scale = 1.0;  // multiplies every feature's sampling rate
  bool full_sessions = true;  // full sessions; false shrinks them to ~6 minutes
  std::uint64_t seed = 7;
};

/// Writes benign.csv, dos.csv, gps.csv, annotations.csv, categories.csv and
/// pipeline.conf into `dir`. Returns the config path.
std::filesystem::path write_flight_fixture(const std::filesystem::path& dir,
                                           const FlightFixtureSpec& spec);

}  // namespace uavids::testing
