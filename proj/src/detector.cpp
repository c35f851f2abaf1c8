#include "uavids/detector.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>

#include "text_util.hpp"
#include "uavids/error.hpp"

namespace uavids {

namespace {

constexpr std::string_view kDetectionHeader = "window_start_us,loss,verdict,label";

std::string fmt_opt(const std::optional<double>& v) {
  return v ? detail::format_double(*v) : std::string("NA");
}

void write_quartiles(std::ostream& out, std::string_view prefix, const Quartiles& q) {
  out << prefix << ".count = " << q.count << '\n';
  const auto val = [&](double v) { return q.count ? detail::format_double(v) : std::string("NA"); };
  out << prefix << ".min = " << val(q.min) << '\n';
  out << prefix << ".q1 = " << val(q.q1) << '\n';
  out << prefix << ".median = " << val(q.median) << '\n';
  out << prefix << ".q3 = " << val(q.q3) << '\n';
  out << prefix << ".max = " << val(q.max) << '\n';
  out << prefix << ".mean = " << val(q.mean) << '\n';
}

}  // namespace

ThresholdSpec ThresholdSpec::parse(std::string_view s) {
  s = detail::trim(s);
  ThresholdSpec spec;
  if (s == "max") {
    spec.method = ThresholdMethod::MaxBenign;
    return spec;
  }
  const auto colon = s.find(':');
  const auto head = s.substr(0, colon);
  const auto arg = colon == std::string_view::npos ? std::optional<double>{}
                                                   : detail::parse_double(s.substr(colon + 1));
  if (head == "percentile" && arg && *arg > 0.0 && *arg <= 100.0) {
    spec.method = ThresholdMethod::BenignPercentile;
    spec.percentile = *arg;
    return spec;
  }
  if (head == "manual" && arg && std::isfinite(*arg) && *arg >= 0.0) {
    spec.method = ThresholdMethod::Manual;
    spec.manual_value = *arg;
    return spec;
  }
  throw Error(ErrorKind::Config, "bad threshold method '" + std::string(s) +
                                     "', want percentile:<0-100>, max or manual:<value>");
}

std::string ThresholdSpec::str() const {
  switch (method) {
    case ThresholdMethod::BenignPercentile: return "percentile:" + detail::format_double(percentile);
    case ThresholdMethod::MaxBenign: return "max";
    case ThresholdMethod::Manual: return "manual:" + detail::format_double(manual_value);
  }
  return "max";
}

std::vector<WindowScore> score(const ModelParams& model, const WindowedMatrix& data,
                               Execution exec) {
  if (data.features.size() != model.arch.input_dim) {
    throw Error(ErrorKind::Schema, "data has " + std::to_string(data.features.size()) +
                                       " features, model expects " +
                                       std::to_string(model.arch.input_dim));
  }
  std::vector<WindowScore> out(data.rows());
  if (data.rows() == 0) return out;
  const auto fwd = forward(model, data.values, Mode::Infer, exec);
  std::vector<double> losses(data.rows());
  kernels::row_squared_error(fwd.reconstruction, data.values, losses, exec);
  for (std::size_t r = 0; r < out.size(); ++r) out[r] = {data.window_starts[r], losses[r]};
  return out;
}

double nearest_rank_percentile(std::span<const double> values, double p) {
  if (values.empty()) throw Error(ErrorKind::Precondition, "percentile of no values");
  if (!(p > 0.0 && p <= 100.0)) throw Error(ErrorKind::Precondition, "percentile outside (0, 100]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * n));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

Threshold calibrate_threshold(std::span<const double> benign_losses, const ThresholdSpec& spec) {
  if (benign_losses.empty()) throw Error(ErrorKind::Precondition, "no benign losses to calibrate on");
  for (double v : benign_losses) {
    if (!std::isfinite(v)) throw Error(ErrorKind::Precondition, "non-finite calibration loss");
  }
  Threshold t;
  t.method = spec;
  t.calibration_size = benign_losses.size();
  switch (spec.method) {
    case ThresholdMethod::BenignPercentile:
      t.value = nearest_rank_percentile(benign_losses, spec.percentile);
      break;
    case ThresholdMethod::MaxBenign:
      t.value = *std::max_element(benign_losses.begin(), benign_losses.end());
      break;
    case ThresholdMethod::Manual:
      t.value = spec.manual_value;
      break;
  }
  return t;
}

DetectionResult detect(std::span<const WindowScore> scores, const Threshold& threshold) {
  DetectionResult r;
  r.scores.assign(scores.begin(), scores.end());
  r.threshold = threshold;
  r.verdicts.reserve(scores.size());
  for (const auto& s : scores) {
    r.verdicts.push_back(s.loss > threshold.value ? Label::Attack : Label::Benign);
  }
  return r;
}

Quartiles quartiles(std::span<const double> values) {
  Quartiles q;
  q.count = values.size();
  if (values.empty()) return q;
  std::vector<double> s(values.begin(), values.end());
  std::sort(s.begin(), s.end());
  const auto at = [&](double frac) {
    const double pos = frac * static_cast<double>(s.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, s.size() - 1);
    return s[lo] + (pos - static_cast<double>(lo)) * (s[hi] - s[lo]);
  };
  q.min = s.front();
  q.q1 = at(0.25);
  q.median = at(0.5);
  q.q3 = at(0.75);
  q.max = s.back();
  q.mean = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
  return q;
}

std::optional<double> ranking_auc(std::span<const double> losses, std::span<const Label> labels) {
  if (losses.size() != labels.size()) throw Error(ErrorKind::Shape, "ranking_auc: length mismatch");
  std::vector<std::size_t> idx(losses.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return losses[a] < losses[b]; });
  // Mann-Whitney U with average ranks for ties.
  double rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && losses[idx[j]] == losses[idx[i]]) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (labels[idx[k]] == Label::Attack) {
        rank_sum += avg_rank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = losses.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;
  const double np = static_cast<double>(n_pos);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

std::vector<double> losses_of(std::span<const WindowScore> scores) {
  std::vector<double> out;
  out.reserve(scores.size());
  for (const auto& s : scores) out.push_back(s.loss);
  return out;
}

EvalSummary evaluate(const DetectionResult& result, std::span<const Label> labels) {
  if (labels.size() != result.verdicts.size() || labels.size() != result.scores.size()) {
    throw Error(ErrorKind::Shape, "evaluate: " + std::to_string(labels.size()) + " labels for " +
                                      std::to_string(result.verdicts.size()) + " verdicts");
  }
  EvalSummary s;
  s.threshold = result.threshold.value;
  std::vector<double> benign, attack;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool truth = labels[i] == Label::Attack;
    const bool flagged = result.verdicts[i] == Label::Attack;
    if (truth && flagged) ++s.true_positives;
    else if (!truth && flagged) ++s.false_positives;
    else if (!truth && !flagged) ++s.true_negatives;
    else ++s.false_negatives;
    (truth ? attack : benign).push_back(result.scores[i].loss);
  }
  const auto ratio = [](std::size_t num, std::size_t den, bool& defined) {
    defined = den != 0;
    return defined ? static_cast<double>(num) / static_cast<double>(den) : 1.0;
  };
  s.precision = ratio(s.true_positives, s.true_positives + s.false_positives, s.precision_defined);
  s.recall = ratio(s.true_positives, s.true_positives + s.false_negatives, s.recall_defined);
  s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  const auto negatives = s.false_positives + s.true_negatives;
  s.false_positive_rate =
      negatives ? static_cast<double>(s.false_positives) / static_cast<double>(negatives) : 0.0;
  s.benign_loss = quartiles(benign);
  s.attack_loss = quartiles(attack);
  if (!benign.empty() && !attack.empty() && s.benign_loss.mean > 0.0) {
    s.separation_ratio = s.attack_loss.mean / s.benign_loss.mean;
  }
  s.auc = ranking_auc(losses_of(result.scores), labels);
  return s;
}

void write_detection(std::ostream& out, const DetectionResult& result,
                     std::span<const Label> labels) {
  if (!labels.empty() && labels.size() != result.scores.size()) {
    throw Error(ErrorKind::Shape, "write_detection: label count mismatch");
  }
  out << kDetectionHeader << '\n';
  for (std::size_t i = 0; i < result.scores.size(); ++i) {
    out << result.scores[i].window_start_us << ',' << detail::format_double(result.scores[i].loss)
        << ',' << to_string(result.verdicts[i]) << ',';
    if (!labels.empty()) out << to_string(labels[i]);
    out << '\n';
  }
}

std::vector<DetectionRow> read_detection(std::istream& in) {
  std::vector<DetectionRow> rows;
  std::string line;
  if (!std::getline(in, line) || detail::trim_cr(line) != kDetectionHeader) {
    throw Error(ErrorKind::Parse, "detection file: malformed header");
  }
  while (std::getline(in, line)) {
    const auto t = detail::trim_cr(line);
    if (detail::trim(t).empty()) continue;
    const auto f = detail::split(t, ',');
    if (f.size() != 4) throw Error(ErrorKind::Parse, "detection file: want 4 fields");
    DetectionRow row;
    const auto ts = detail::parse_int(f[0]);
    const auto loss = detail::parse_double(f[1]);
    if (!ts || !loss) throw Error(ErrorKind::Parse, "detection file: bad row '" + std::string(t) + "'");
    row.window_start_us = *ts;
    row.loss = *loss;
    row.verdict = parse_label(f[2]);
    if (!f[3].empty()) row.label = parse_label(f[3]);
    rows.push_back(row);
  }
  return rows;
}

void write_summary(std::ostream& out, const EvalSummary& s) {
  out << "threshold = " << detail::format_double(s.threshold) << '\n';
  out << "true_positives = " << s.true_positives << '\n';
  out << "false_positives = " << s.false_positives << '\n';
  out << "true_negatives = " << s.true_negatives << '\n';
  out << "false_negatives = " << s.false_negatives << '\n';
  out << "precision = " << detail::format_double(s.precision) << '\n';
  out << "precision_defined = " << (s.precision_defined ? 1 : 0) << '\n';
  out << "recall = " << detail::format_double(s.recall) << '\n';
  out << "recall_defined = " << (s.recall_defined ? 1 : 0) << '\n';
  out << "f1 = " << detail::format_double(s.f1) << '\n';
  out << "false_positive_rate = " << detail::format_double(s.false_positive_rate) << '\n';
  out << "auc = " << fmt_opt(s.auc) << '\n';
  out << "separation_ratio = " << fmt_opt(s.separation_ratio) << '\n';
  write_quartiles(out, "benign_loss", s.benign_loss);
  write_quartiles(out, "attack_loss", s.attack_loss);
}

}  // namespace uavids
