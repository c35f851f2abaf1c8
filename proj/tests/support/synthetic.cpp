#include "synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "uavids/error.hpp"
#include "uavids/rng.hpp"

namespace uavids::testing {

namespace {

WindowedMatrix as_matrix(const Matrix& values, Label label, std::int64_t t0_us) {
  WindowedMatrix m;
  for (std::size_t c = 0; c < values.cols(); ++c) {
    char name[32];
    std::snprintf(name, sizeof name, "x%02zu", c);
    m.features.emplace_back(name);
  }
  m.values = values;
  for (std::size_t r = 0; r < values.rows(); ++r) {
    m.window_starts.push_back(t0_us + static_cast<std::int64_t>(r) * 500'000);
    m.labels.push_back(label);
  }
  return m;
}

}  // namespace

ManifoldData make_manifold_data(const ManifoldSpec& spec) {
  Rng rng(spec.seed);
  Matrix map(spec.ambient_dim, spec.latent_dim);
  for (double& v : map.flat()) v = rng.uniform(-1.0, 1.0);
  std::vector<double> offset(spec.ambient_dim);
  for (double& v : offset) v = rng.uniform(-1.0, 1.0);

  const auto draw = [&](std::size_t n) {
    Matrix out(n, spec.ambient_dim);
    std::vector<double> z(spec.latent_dim);
    for (std::size_t r = 0; r < n; ++r) {
      for (double& v : z) v = rng.uniform();
      for (std::size_t c = 0; c < spec.ambient_dim; ++c) {
        double x = offset[c];
        for (std::size_t k = 0; k < spec.latent_dim; ++k) x += map(c, k) * z[k];
        out(r, c) = x + rng.normal(0.0, spec.noise);
      }
    }
    return out;
  };

  ManifoldData d;
  std::int64_t t = 0;
  const auto next = [&](std::size_t n, Label label) {
    auto m = as_matrix(draw(n), label, t);
    t += static_cast<std::int64_t>(n) * 500'000;
    return m;
  };
  auto train = next(spec.n_train, Label::Benign);
  auto validation = next(spec.n_validation, Label::Benign);
  auto benign_test = next(spec.n_test, Label::Benign);
  auto fresh = next(spec.n_test, Label::Benign);
  auto dos = next(spec.n_attack, Label::Attack);
  auto gps = next(spec.n_attack, Label::Attack);

  d.scaler = fit_scaler(train, ClipPolicy::ClipToUnit);
  d.train = apply_scaler(std::move(train), d.scaler);
  d.validation = apply_scaler(std::move(validation), d.scaler);
  d.benign_test = apply_scaler(std::move(benign_test), d.scaler);
  d.fresh_benign = apply_scaler(std::move(fresh), d.scaler);
  d.dos = apply_scaler(std::move(dos), d.scaler);
  d.gps = apply_scaler(std::move(gps), d.scaler);

  std::vector<std::size_t> coords(spec.ambient_dim);
  for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
  rng.shuffle(std::span<std::size_t>(coords));
  d.dos_coords.assign(coords.begin(), coords.begin() + 8);
  std::sort(d.dos_coords.begin(), d.dos_coords.end());
  for (std::size_t c = 0; c < 7; ++c) d.gps_coords.push_back(c);

  for (std::size_t r = 0; r < d.dos.rows(); ++r) {
    for (auto c : d.dos_coords) d.dos.values(r, c) = std::min(1.0, d.dos.values(r, c) + 0.3);
  }
  const double n = static_cast<double>(std::max<std::size_t>(1, d.gps.rows() - 1));
  for (std::size_t r = 0; r < d.gps.rows(); ++r) {
    const double drift = 0.15 + 0.25 * static_cast<double>(r) / n;
    for (auto c : d.gps_coords) d.gps.values(r, c) = std::min(1.0, d.gps.values(r, c) + drift);
  }
  return d;
}

WindowedMatrix stack(const WindowedMatrix& a, const WindowedMatrix& b) {
  return concat_rows(a, b);
}

FlightLog make_mixed_rate_log(std::size_t windows, std::uint64_t seed) {
  Rng rng(seed);
  FlightLog log;
  log.session_id = "mixed_rate";
  const std::pair<const char*, int> feats[] = {{"feature_a", 6}, {"feature_b", 4}, {"feature_c", 2}};
  for (std::size_t w = 0; w < windows; ++w) {
    const std::int64_t base = static_cast<std::int64_t>(w) * 500'000;
    for (const auto& [name, count] : feats) {
      const std::int64_t step = 500'000 / count;
      for (int k = 0; k < count; ++k) {
        const auto jitter = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(step)));
        log.records.push_back({base + k * step + jitter, name, rng.uniform(-10.0, 10.0)});
      }
    }
  }
  std::stable_sort(log.records.begin(), log.records.end(),
                   [](const RawRecord& a, const RawRecord& b) { return a.timestamp_us < b.timestamp_us; });
  log.flight_end.seconds = static_cast<std::int32_t>((windows + 1) / 2);
  return log;
}

// --- HITL-shaped flight exports -------------------------------------------

namespace {

struct FeatureDef {
  const char* name;
  const char* category;
  double center;
  double spread;
  double rate_hz;
};

// Flight-controller feature families plus control, tranquil and intermittently-present channels.
const FeatureDef kFeatures[] = {
    {"latitude", "Location", 47.397742, 4e-4, 4},
    {"longitude", "Location", 8.545594, 4e-4, 4},
    {"altitude", "Location", 488.0, 15.0, 4},
    {"eph", "Location", 0.8, 0.2, 4},
    {"epv", "Location", 1.2, 0.3, 4},
    {"velocity", "Location", 6.0, 3.0, 4},
    {"course_over_ground", "Location", 180.0, 90.0, 4},
    {"local_position_x", "PositionOrientation", 0.0, 40.0, 8},
    {"local_position_y", "PositionOrientation", 0.0, 40.0, 8},
    {"local_position_z", "PositionOrientation", -15.0, 10.0, 8},
    {"ground_speed_x", "PositionOrientation", 0.0, 4.0, 8},
    {"ground_speed_y", "PositionOrientation", 0.0, 4.0, 8},
    {"ground_speed_z", "PositionOrientation", 0.0, 1.0, 8},
    {"roll", "PositionOrientation", 0.0, 0.2, 12},
    {"pitch", "PositionOrientation", 0.0, 0.2, 12},
    {"yaw", "PositionOrientation", 0.0, 1.5, 12},
    {"roll_speed", "PositionOrientation", 0.0, 0.3, 12},
    {"pitch_speed", "PositionOrientation", 0.0, 0.3, 12},
    {"yaw_speed", "PositionOrientation", 0.0, 0.3, 12},
    {"relative_altitude", "PositionOrientation", 15.0, 10.0, 8},
    {"local_altitude", "PositionOrientation", 15.0, 10.0, 8},
    {"quaternion_1", "PositionOrientation", 0.9, 0.08, 12},
    {"quaternion_2", "PositionOrientation", 0.0, 0.1, 12},
    {"quaternion_3", "PositionOrientation", 0.0, 0.1, 12},
    {"quaternion_4", "PositionOrientation", 0.0, 0.4, 12},
    {"acceleration_x", "IMU", 0.0, 1.5, 12},
    {"acceleration_y", "IMU", 0.0, 1.5, 12},
    {"acceleration_z", "IMU", -9.81, 0.8, 12},
    {"angular_speed_x", "IMU", 0.0, 0.3, 12},
    {"angular_speed_y", "IMU", 0.0, 0.3, 12},
    {"angular_speed_z", "IMU", 0.0, 0.3, 12},
    {"magnetic_field_x", "IMU", 0.2, 0.1, 12},
    {"magnetic_field_y", "IMU", 0.0, 0.1, 12},
    {"magnetic_field_z", "IMU", 0.4, 0.1, 12},
    {"absolute_pressure", "IMU", 955.0, 2.0, 8},
    {"pressure_altitude", "IMU", 488.0, 15.0, 8},
    {"temperature", "SystemStatus", 35.0, 3.0, 4},
    {"air_speed", "SystemStatus", 6.0, 3.0, 4},
    {"heading", "SystemStatus", 180.0, 90.0, 4},
    {"throttle", "SystemStatus", 50.0, 15.0, 4},
    {"climb_rate", "SystemStatus", 0.0, 1.0, 4},
    {"actuator_output_0", "Control", 1500.0, 200.0, 8},
    {"actuator_output_1", "Control", 1500.0, 200.0, 8},
    {"actuator_output_2", "Control", 1500.0, 200.0, 8},
    {"actuator_output_3", "Control", 1500.0, 200.0, 8},
    {"system_id", "SystemStatus", 1.0, 0.0, 1},
    {"rangefinder_distance", "PositionOrientation", 3.0, 1.0, 4},
};

const char* kDosTargets[] = {"angular_speed_x", "angular_speed_y", "angular_speed_z", "climb_rate",
                             "air_speed", "ground_speed_z", "yaw_speed", "throttle"};
const char* kGpsTargets[] = {"latitude", "longitude", "altitude", "velocity",
                             "course_over_ground", "eph", "epv"};
const double kGpsSign[] = {1, 1, -1, 1, 1, 1, 1};

bool in_list(std::string_view name, std::span<const char* const> list) {
  return std::any_of(list.begin(), list.end(), [&](const char* n) { return name == n; });
}

struct SessionPlan {
  std::string id;
  std::string kind;  // "", "DoS", "GpsSpoofing"
  ClockTime start, attack_start, attack_end, end;
};

void write_session(const std::filesystem::path& path, const SessionPlan& s,
                   const FlightFixtureSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  constexpr int kLatent = 4;
  const double periods[kLatent] = {47.0, 71.0, 113.0, 167.0};
  // Mixing weights are shared by every session so all flights lie on one manifold.
  Rng shared(spec.seed);
  const std::size_t n_feat = std::size(kFeatures);
  std::vector<std::array<double, kLatent>> weights(n_feat);
  for (auto& w : weights) {
    double norm = 0.0;
    for (auto& v : w) {
      v = shared.uniform(-1.0, 1.0);
      norm += std::abs(v);
    }
    for (auto& v : w) v /= norm;
  }
  double phase[kLatent];
  for (double& p : phase) p = rng.uniform(0.0, 2.0 * std::numbers::pi);

  const bool attacked = !s.kind.empty();
  const double duration = s.end.seconds - s.start.seconds;
  const double a0 = s.attack_start.seconds - s.start.seconds;
  const double a1 = s.attack_end.seconds - s.start.seconds;

  std::vector<RawRecord> records;
  for (std::size_t f = 0; f < n_feat; ++f) {
    const auto& def = kFeatures[f];
    if (attacked && std::string_view(def.name) == "rangefinder_distance") continue;
    const double rate = def.rate_hz * spec.rate_scale;
    const double dt = 1.0 / rate;
    double t = rng.uniform(0.0, dt);
    const bool dos_target = s.kind == "DoS" && in_list(def.name, kDosTargets);
    int gps_index = -1;
    if (s.kind == "GpsSpoofing") {
      for (int i = 0; i < 7; ++i)
        if (std::string_view(def.name) == kGpsTargets[i]) gps_index = i;
    }
    for (; t < duration; t += dt) {
      const double ts = t + rng.uniform(0.0, 0.2 * dt);
      if (ts >= duration) break;
      double latent = 0.0;
      for (int k = 0; k < kLatent; ++k) {
        latent += weights[f][k] * std::sin(2.0 * std::numbers::pi * ts / periods[k] + phase[k]);
      }
      double v = def.center + def.spread * (latent + rng.normal(0.0, 0.01));
      const bool under_attack = attacked && ts >= a0 && ts <= a1;
      if (under_attack && s.kind == "DoS") {
        if (rng.uniform() < 0.5) continue;  // flooded link drops telemetry
        if (dos_target) v += 0.6 * def.spread * (1.0 + rng.normal(0.0, 0.1));
      }
      if (under_attack && gps_index >= 0) {
        const double frac = (ts - a0) / (a1 - a0);
        v += kGpsSign[gps_index] * def.spread * (0.5 + frac);
      }
      records.push_back({static_cast<std::int64_t>(ts * 1e6), def.name, v});
    }
  }
  std::stable_sort(records.begin(), records.end(), [](const RawRecord& a, const RawRecord& b) {
    return a.timestamp_us < b.timestamp_us;
  });

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << "timestamp_us,feature_name,value\n";
  char buf[96];
  for (const auto& r : records) {
    const int n = std::snprintf(buf, sizeof buf, "%lld,%s,%.12g\n",
                                static_cast<long long>(r.timestamp_us), r.feature_name.c_str(), r.value);
    out.write(buf, n);
  }
}

}  // namespace

std::filesystem::path write_flight_fixture(const std::filesystem::path& dir,
                                           const FlightFixtureSpec& spec) {
  std::filesystem::create_directories(dir);
  const auto T = [](const char* s) { return ClockTime::parse(s); };
  std::vector<SessionPlan> plans;
  if (spec.full_sessions) {
    plans = {{"benign", "", T("14:00:52"), {}, {}, T("14:25:50")},
             {"dos", "DoS", T("15:29:06"), T("15:54:09"), T("15:54:20"), T("15:55:09")},
             {"gps", "GpsSpoofing", T("15:58:19"), T("16:24:14"), T("16:24:42"), T("16:26:25")}};
  } else {
    plans = {{"benign", "", T("14:00:00"), {}, {}, T("14:06:00")},
             {"dos", "DoS", T("15:00:00"), T("15:04:00"), T("15:04:11"), T("15:05:00")},
             {"gps", "GpsSpoofing", T("16:00:00"), T("16:04:00"), T("16:04:28"), T("16:05:30")}};
  }

  std::ofstream ann(dir / "annotations.csv");
  ann << "session_id,attack_kind,flight_start,attack_start,attack_end,flight_end\n";
  for (std::size_t i = 0; i < plans.size(); ++i) {
    const auto& p = plans[i];
    write_session(dir / (p.id + ".csv"), p, spec, spec.seed * 1000 + i + 1);
    ann << p.id << ',' << p.kind << ',' << p.start.str() << ','
        << (p.kind.empty() ? "" : p.attack_start.str()) << ','
        << (p.kind.empty() ? "" : p.attack_end.str()) << ',' << p.end.str() << '\n';
  }

  std::ofstream cats(dir / "categories.csv");
  cats << "feature_name,category\n";
  for (const auto& f : kFeatures) cats << f.name << ',' << f.category << '\n';

  const auto cfg_path = dir / "pipeline.conf";
  std::ofstream cfg(cfg_path);
  cfg << "# generated flight fixture\n"
      << "annotations = annotations.csv\n"
      << "category_map = categories.csv\n"
      << "out = out\n"
      << "log.benign = benign.csv\n"
      << "log.dos = dos.csv\n"
      << "log.gps = gps.csv\n"
      << "seed = " << spec.seed << '\n';
  return cfg_path;
}

}  // namespace uavids::testing
