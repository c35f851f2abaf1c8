#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <set>

#include "text_util.hpp"
#include "uavids/error.hpp"
#include "uavids/pipeline.hpp"

namespace uavids {

namespace {

const std::set<std::string, std::less<>> kKnownKeys = {
    "annotations",
    "category_map",
    "out",
    "seed",
    "pooling.window_ms",
    "pooling.seed",
    "pooling.empty_window_policy",
    "pooling.method",
    "scaler.clip_policy",
    "model.encoder_dims",
    "model.batchnorm_epsilon",
    "train.learning_rate",
    "train.adam_beta1",
    "train.adam_beta2",
    "train.adam_epsilon",
    "train.lambda_l1",
    "train.lambda_l2",
    "train.batch_size",
    "train.epochs",
    "train.seed",
    "train.batchnorm",
    "train.batchnorm_momentum",
    "train.trace_wall_time",
    "split.validation_fraction",
    "threshold.method",
    "report.format",
};

bool has_prefix(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix && s.size() > prefix.size();
}

double to_double(const std::string& key, const std::string& v) {
  const auto d = detail::parse_double(v);
  if (!d || !std::isfinite(*d)) throw Error(ErrorKind::Config, key + ": not a number: '" + v + "'");
  return *d;
}

std::int64_t to_int(const std::string& key, const std::string& v) {
  const auto i = detail::parse_int(v);
  if (!i) throw Error(ErrorKind::Config, key + ": not an integer: '" + v + "'");
  return *i;
}

std::uint64_t to_seed(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty()) {
    throw Error(ErrorKind::Config, key + ": not an unsigned integer: '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  throw Error(ErrorKind::Config, key + ": not a boolean: '" + v + "'");
}

std::size_t to_count(const std::string& key, const std::string& v) {
  const auto i = to_int(key, v);
  if (i < 0) throw Error(ErrorKind::Config, key + ": must be non-negative");
  return static_cast<std::size_t>(i);
}

}  // namespace

ConfigFile ConfigFile::parse(std::istream& in) {
  ConfigFile cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorKind::Config, "config line " + std::to_string(line_no) + ": want key = value");
    }
    const std::string key(detail::trim(t.substr(0, eq)));
    if (key.empty()) {
      throw Error(ErrorKind::Config, "config line " + std::to_string(line_no) + ": empty key");
    }
    cfg.entries_[key] = std::string(detail::trim(t.substr(eq + 1)));
  }
  return cfg;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read config " + path.string());
  return parse(in);
}

void ConfigFile::set(const std::string& key, const std::string& value) {
  entries_[std::string(detail::trim(key))] = std::string(detail::trim(value));
}

std::optional<std::string> ConfigFile::get(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

PipelineConfig PipelineConfig::from_file(const ConfigFile& file,
                                         const std::filesystem::path& base_dir) {
  PipelineConfig c;
  const auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };
  std::optional<std::uint64_t> pooling_seed, train_seed;

  for (const auto& [key, value] : file.entries()) {
    if (has_prefix(key, "log.")) {
      c.logs[key.substr(4)] = resolve(value);
      continue;
    }
    if (has_prefix(key, "test.start.")) {
      c.test_start[key.substr(11)] = ClockTime::parse(value);
      continue;
    }
    if (!kKnownKeys.contains(key)) throw Error(ErrorKind::Config, "unknown config key '" + key + "'");

    if (key == "annotations") c.annotations = resolve(value);
    else if (key == "category_map") c.category_map = resolve(value);
    else if (key == "out") c.out_dir = resolve(value);
    else if (key == "seed") c.seed = to_seed(key, value);
    else if (key == "pooling.window_ms") c.pooling.window_ms = to_int(key, value);
    else if (key == "pooling.seed") pooling_seed = to_seed(key, value);
    else if (key == "pooling.empty_window_policy") c.pooling.empty_window_policy = parse_empty_window_policy(value);
    else if (key == "pooling.method") c.pooling.method = parse_pooling_method(value);
    else if (key == "scaler.clip_policy") c.clip_policy = parse_clip_policy(value);
    else if (key == "model.encoder_dims") {
      c.encoder_dims.clear();
      for (auto part : detail::split(value, ',')) {
        const auto w = to_int(key, std::string(detail::trim(part)));
        if (w <= 0) throw Error(ErrorKind::Config, key + ": widths must be positive");
        c.encoder_dims.push_back(static_cast<std::size_t>(w));
      }
    }
    else if (key == "model.batchnorm_epsilon") c.batchnorm_epsilon = to_double(key, value);
    else if (key == "train.learning_rate") c.train.learning_rate = to_double(key, value);
    else if (key == "train.adam_beta1") c.train.adam_beta1 = to_double(key, value);
    else if (key == "train.adam_beta2") c.train.adam_beta2 = to_double(key, value);
    else if (key == "train.adam_epsilon") c.train.adam_epsilon = to_double(key, value);
    else if (key == "train.lambda_l1") c.train.lambda_l1 = to_double(key, value);
    else if (key == "train.lambda_l2") c.train.lambda_l2 = to_double(key, value);
    else if (key == "train.batch_size") c.train.batch_size = to_count(key, value);
    else if (key == "train.epochs") c.train.epochs = to_count(key, value);
    else if (key == "train.seed") train_seed = to_seed(key, value);
    else if (key == "train.batchnorm") c.train.batchnorm_enabled = to_bool(key, value);
    else if (key == "train.batchnorm_momentum") c.train.batchnorm_momentum = to_double(key, value);
    else if (key == "train.trace_wall_time") c.trace_wall_time = to_bool(key, value);
    else if (key == "split.validation_fraction") c.validation_fraction = to_double(key, value);
    else if (key == "threshold.method") c.threshold = ThresholdSpec::parse(value);
    else if (key == "report.format") {
      if (value == "csv") c.report_format = ReportFormat::Csv;
      else if (value == "svg") c.report_format = ReportFormat::Svg;
      else if (value == "both") c.report_format = ReportFormat::Both;
      else throw Error(ErrorKind::Config, key + ": want csv, svg or both");
    }
  }
  c.pooling.rng_seed = pooling_seed.value_or(c.seed);
  c.train.rng_seed = train_seed.value_or(c.seed);
  c.validate();
  return c;
}

void PipelineConfig::validate() const {
  if (pooling.window_ms <= 0) throw Error(ErrorKind::Config, "pooling.window_ms must be positive");
  if (encoder_dims.empty()) throw Error(ErrorKind::Config, "model.encoder_dims is empty");
  if (!(batchnorm_epsilon > 0.0)) throw Error(ErrorKind::Config, "model.batchnorm_epsilon must be positive");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw Error(ErrorKind::Config, "split.validation_fraction must lie in (0, 1)");
  }
  try {
    train.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::Config, e.what());
  }
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path,
                                    const std::vector<std::string>& overrides) {
  auto file = ConfigFile::load(path);
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::Config, "override '" + o + "' is not key=value");
    file.set(o.substr(0, eq), o.substr(eq + 1));
  }
  return PipelineConfig::from_file(file, path.parent_path());
}

}  // namespace uavids
