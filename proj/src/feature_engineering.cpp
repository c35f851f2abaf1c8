#include "uavids/feature_engineering.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <unordered_map>

#include "text_util.hpp"
#include "uavids/error.hpp"
#include "uavids/rng.hpp"

namespace uavids {

namespace {

constexpr std::string_view kScalerHeader = "feature_name,min,max";

struct Sample {
  std::int64_t window;
  double value;
};

// Pools one feature column. `cells[w]` is empty when the window has no sample.
void pool_column(std::span<const Sample> samples, std::string_view session,
                 std::string_view feature, const PoolingConfig& cfg,
                 std::vector<std::optional<double>>& cells) {
  std::size_t i = 0;
  while (i < samples.size()) {
    const auto w = samples[i].window;
    std::size_t j = i;
    while (j < samples.size() && samples[j].window == w) ++j;
    const std::size_t count = j - i;
    double v = 0.0;
    if (cfg.method == PoolingMethod::Mean) {
      for (std::size_t k = i; k < j; ++k) v += samples[k].value;
      v /= static_cast<double>(count);
    } else {
      const auto pick = bounded(pooling_draw(cfg.rng_seed, session, feature, w), count);
      v = samples[i + pick].value;
    }
    if (w >= 0 && static_cast<std::size_t>(w) < cells.size()) cells[w] = v;
    i = j;
  }
}

}  // namespace

std::string_view to_string(ClipPolicy p) {
  return p == ClipPolicy::ClipToUnit ? "clip_to_unit" : "pass_through";
}

ClipPolicy parse_clip_policy(std::string_view s) {
  if (s == "clip_to_unit" || s == "ClipToUnit") return ClipPolicy::ClipToUnit;
  if (s == "pass_through" || s == "PassThrough") return ClipPolicy::PassThrough;
  throw Error(ErrorKind::Config, "unknown clip policy '" + std::string(s) + "'");
}

std::string_view to_string(EmptyWindowPolicy p) {
  return p == EmptyWindowPolicy::CarryForward ? "carry_forward" : "drop_window";
}

EmptyWindowPolicy parse_empty_window_policy(std::string_view s) {
  if (s == "carry_forward" || s == "CarryForward") return EmptyWindowPolicy::CarryForward;
  if (s == "drop_window" || s == "DropWindow") return EmptyWindowPolicy::DropWindow;
  throw Error(ErrorKind::Config, "unknown empty-window policy '" + std::string(s) + "'");
}

std::string_view to_string(PoolingMethod m) {
  return m == PoolingMethod::RandomSample ? "random_sample" : "mean";
}

PoolingMethod parse_pooling_method(std::string_view s) {
  if (s == "random_sample" || s == "RandomSample") return PoolingMethod::RandomSample;
  if (s == "mean" || s == "Mean") return PoolingMethod::Mean;
  throw Error(ErrorKind::Config, "unknown pooling method '" + std::string(s) + "'");
}

void WindowedMatrix::validate() const {
  if (values.rows() != 0 && values.cols() != features.size()) {
    throw Error(ErrorKind::Shape, "windowed matrix has " + std::to_string(values.cols()) +
                                      " columns but " + std::to_string(features.size()) +
                                      " feature names");
  }
  if (window_starts.size() != values.rows()) {
    throw Error(ErrorKind::Shape, "windowed matrix: window_starts length mismatch");
  }
  if (!labels.empty() && labels.size() != values.rows()) {
    throw Error(ErrorKind::Shape, "windowed matrix: labels length mismatch");
  }
  for (double v : values.flat()) {
    if (!std::isfinite(v)) throw Error(ErrorKind::Schema, "windowed matrix: non-finite entry");
  }
}

WindowedMatrix WindowedMatrix::slice_rows(std::size_t begin, std::size_t end) const {
  end = std::min(end, rows());
  begin = std::min(begin, end);
  WindowedMatrix out;
  out.features = features;
  out.values = Matrix(end - begin, features.size());
  for (std::size_t r = begin; r < end; ++r) {
    std::copy(values.row(r).begin(), values.row(r).end(), out.values.row(r - begin).begin());
  }
  out.window_starts.assign(window_starts.begin() + begin, window_starts.begin() + end);
  if (has_labels()) out.labels.assign(labels.begin() + begin, labels.begin() + end);
  return out;
}

std::size_t WindowedMatrix::attack_rows() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), Label::Attack));
}

WindowedMatrix concat_rows(const WindowedMatrix& a, const WindowedMatrix& b) {
  if (a.rows() == 0) return b;
  if (b.rows() == 0) return a;
  if (a.features != b.features) {
    throw Error(ErrorKind::Schema, "cannot concatenate matrices with different columns");
  }
  if (a.has_labels() != b.has_labels()) {
    throw Error(ErrorKind::Schema, "cannot concatenate labeled and unlabeled matrices");
  }
  WindowedMatrix out = a;
  for (std::size_t r = 0; r < b.rows(); ++r) out.values.append_row(b.values.row(r));
  out.window_starts.insert(out.window_starts.end(), b.window_starts.begin(),
                           b.window_starts.end());
  out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
  return out;
}

std::uint64_t pooling_draw(std::uint64_t seed, std::string_view session_id,
                           std::string_view feature, std::int64_t window_index) {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ fnv1a(session_id));
  h = mix64(h ^ fnv1a(feature));
  return mix64(h ^ static_cast<std::uint64_t>(window_index));
}

WindowedMatrix pool_timestamps(const FlightLog& log, const FeatureCatalog& catalog,
                               const PoolingConfig& cfg, Execution exec) {
  if (cfg.window_ms <= 0) throw Error(ErrorKind::Precondition, "window_ms must be positive");
  const auto& features = catalog.selected();
  if (features.empty()) throw Error(ErrorKind::Precondition, "catalog selects no features");

  const std::int64_t w_us = cfg.window_ms * 1000;
  std::int64_t span = log.duration_us();
  if (!log.records.empty()) span = std::max(span, log.records.back().timestamp_us + 1);
  const auto n_windows = static_cast<std::size_t>((span + w_us - 1) / w_us);

  std::unordered_map<std::string_view, std::size_t> column;
  for (std::size_t c = 0; c < features.size(); ++c) column.emplace(features[c], c);

  // Records are time-ordered, so each bucket is ordered by window.
  std::vector<std::vector<Sample>> buckets(features.size());
  for (const auto& r : log.records) {
    const auto it = column.find(r.feature_name);
    if (it == column.end()) continue;
    buckets[it->second].push_back({r.timestamp_us / w_us, r.value});
  }
  for (std::size_t c = 0; c < features.size(); ++c) {
    if (buckets[c].empty()) {
      throw Error(ErrorKind::Precondition, "session " + log.session_id + ": feature " +
                                               features[c] + " has no samples in any window");
    }
  }

  std::vector<std::vector<std::optional<double>>> cells(
      features.size(), std::vector<std::optional<double>>(n_windows));
  const auto n_cols = static_cast<std::ptrdiff_t>(features.size());
  if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t c = 0; c < n_cols; ++c) {
      pool_column(buckets[c], log.session_id, features[c], cfg, cells[c]);
    }
  } else {
    for (std::ptrdiff_t c = 0; c < n_cols; ++c) {
      pool_column(buckets[c], log.session_id, features[c], cfg, cells[c]);
    }
  }

  WindowedMatrix out;
  out.features = features;
  std::vector<double> row(features.size());
  std::vector<std::optional<double>> last(features.size());
  for (std::size_t w = 0; w < n_windows; ++w) {
    bool complete = true;
    for (std::size_t c = 0; c < features.size(); ++c) {
      const auto& cell = cells[c][w];
      if (cell) {
        last[c] = cell;
        row[c] = *cell;
      } else if (cfg.empty_window_policy == EmptyWindowPolicy::CarryForward && last[c]) {
        row[c] = *last[c];
      } else {
        complete = false;
      }
    }
    if (!complete) continue;
    out.values.append_row(row);
    out.window_starts.push_back(static_cast<std::int64_t>(w) * w_us);
    out.labels.push_back(window_label(log, w, cfg.window_ms));
  }
  if (out.values.rows() == 0) out.values = Matrix(0, features.size());
  return out;
}

ScalerParams fit_scaler(const WindowedMatrix& train, ClipPolicy policy) {
  if (train.rows() == 0) throw Error(ErrorKind::Precondition, "cannot fit scaler on no rows");
  train.validate();
  ScalerParams s;
  s.features = train.features;
  s.clip_policy = policy;
  const auto n = train.features.size();
  s.mins.assign(n, std::numeric_limits<double>::infinity());
  s.maxs.assign(n, -std::numeric_limits<double>::infinity());
  for (std::size_t r = 0; r < train.rows(); ++r) {
    const auto x = train.values.row(r);
    for (std::size_t c = 0; c < n; ++c) {
      s.mins[c] = std::min(s.mins[c], x[c]);
      s.maxs[c] = std::max(s.maxs[c], x[c]);
    }
  }
  for (std::size_t c = 0; c < n; ++c) {
    if (!(s.maxs[c] > s.mins[c])) {
      throw Error(ErrorKind::Precondition,
                  "feature " + s.features[c] + " is constant in the training matrix");
    }
  }
  return s;
}

WindowedMatrix apply_scaler(WindowedMatrix m, const ScalerParams& s, Execution exec) {
  if (m.features != s.features) {
    throw Error(ErrorKind::Schema, "matrix columns do not match the scaler's features");
  }
  kernels::min_max_scale(m.values, s.mins, s.maxs, s.clip_policy == ClipPolicy::ClipToUnit,
                         exec);
  return m;
}

WindowedMatrix unscale(WindowedMatrix m, const ScalerParams& s) {
  if (m.features != s.features) {
    throw Error(ErrorKind::Schema, "matrix columns do not match the scaler's features");
  }
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto x = m.values.row(r);
    for (std::size_t c = 0; c < x.size(); ++c) {
      x[c] = x[c] * (s.maxs[c] - s.mins[c]) + s.mins[c];
    }
  }
  return m;
}

void write_scaler(std::ostream& out, const ScalerParams& s) {
  out << kScalerHeader << '\n';
  for (std::size_t c = 0; c < s.features.size(); ++c) {
    out << s.features[c] << ',' << detail::format_double(s.mins[c]) << ','
        << detail::format_double(s.maxs[c]) << '\n';
  }
}

void save_scaler(const std::filesystem::path& path, const ScalerParams& s) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write scaler " + path.string());
  write_scaler(out, s);
}

ScalerParams read_scaler(std::istream& in, ClipPolicy policy) {
  ScalerParams s;
  s.clip_policy = policy;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    const auto t = detail::trim_cr(line);
    if (detail::trim(t).empty()) continue;
    if (!have_header) {
      if (t != kScalerHeader) {
        throw Error(ErrorKind::Parse, "scaler: malformed header '" + std::string(t) + "'");
      }
      have_header = true;
      continue;
    }
    const auto f = detail::split(t, ',');
    const auto lo = f.size() == 3 ? detail::parse_double(f[1]) : std::nullopt;
    const auto hi = f.size() == 3 ? detail::parse_double(f[2]) : std::nullopt;
    if (!lo || !hi || !std::isfinite(*lo) || !std::isfinite(*hi) || *hi < *lo) {
      throw Error(ErrorKind::Parse, "scaler: bad row '" + std::string(t) + "'");
    }
    s.features.emplace_back(f[0]);
    s.mins.push_back(*lo);
    s.maxs.push_back(*hi);
  }
  if (!have_header) throw Error(ErrorKind::Parse, "scaler: missing header");
  return s;
}

ScalerParams load_scaler(const std::filesystem::path& path, ClipPolicy policy) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read scaler " + path.string());
  return read_scaler(in, policy);
}

void write_matrix(std::ostream& out, const WindowedMatrix& m) {
  m.validate();
  out << "window_start_us,label";
  for (const auto& f : m.features) out << ',' << f;
  out << '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    out << m.window_starts[r] << ',';
    if (m.has_labels()) out << to_string(m.labels[r]);
    for (double v : m.values.row(r)) out << ',' << detail::format_double(v);
    out << '\n';
  }
}

void save_matrix(const std::filesystem::path& path, const WindowedMatrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write matrix " + path.string());
  write_matrix(out, m);
}

WindowedMatrix read_matrix(std::istream& in) {
  WindowedMatrix m;
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::Parse, "matrix: missing header");
  const auto header = detail::split(detail::trim_cr(line), ',');
  if (header.size() < 3 || header[0] != "window_start_us" || header[1] != "label") {
    throw Error(ErrorKind::Parse, "matrix: malformed header");
  }
  for (std::size_t i = 2; i < header.size(); ++i) m.features.emplace_back(header[i]);
  m.values = Matrix(0, m.features.size());

  std::vector<double> row(m.features.size());
  std::size_t labeled = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = detail::trim_cr(line);
    if (detail::trim(t).empty()) continue;
    const auto f = detail::split(t, ',');
    if (f.size() != header.size()) {
      throw Error(ErrorKind::Parse, "matrix line " + std::to_string(line_no) +
                                        ": want " + std::to_string(header.size()) + " fields");
    }
    const auto ts = detail::parse_int(f[0]);
    if (!ts) throw Error(ErrorKind::Parse, "matrix line " + std::to_string(line_no) + ": bad timestamp");
    for (std::size_t c = 0; c < row.size(); ++c) {
      const auto v = detail::parse_double(f[c + 2]);
      if (!v || !std::isfinite(*v)) {
        throw Error(ErrorKind::Parse, "matrix line " + std::to_string(line_no) + ": bad value");
      }
      row[c] = *v;
    }
    m.values.append_row(row);
    m.window_starts.push_back(*ts);
    if (!f[1].empty()) {
      m.labels.push_back(parse_label(f[1]));
      ++labeled;
    }
  }
  if (labeled != 0 && labeled != m.rows()) {
    throw Error(ErrorKind::Parse, "matrix: labels present on only some rows");
  }
  if (m.values.rows() == 0) m.values = Matrix(0, m.features.size());
  return m;
}

WindowedMatrix load_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read matrix " + path.string());
  return read_matrix(in);
}

}  // namespace uavids
