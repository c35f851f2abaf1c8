#include "uavids/report.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "text_util.hpp"

namespace uavids {

namespace {

constexpr double kWidth = 800.0;
constexpr double kHeight = 320.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 30.0;
constexpr double kBottom = 40.0;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

void svg_open(std::ostream& out, std::string_view title) {
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(kWidth) << "\" height=\""
      << num(kHeight) << "\" viewBox=\"0 0 " << num(kWidth) << ' ' << num(kHeight) << "\">\n"
      << "<title>" << escape(title) << "</title>\n"
      << "<rect x=\"0\" y=\"0\" width=\"" << num(kWidth) << "\" height=\"" << num(kHeight)
      << "\" fill=\"white\"/>\n"
      << "<text x=\"" << num(kWidth / 2) << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">"
      << escape(title) << "</text>\n";
}

void y_axis(std::ostream& out, double y_max) {
  const double plot_h = kHeight - kTop - kBottom;
  out << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(kLeft)
      << "\" y2=\"" << num(kTop + plot_h) << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = y_max * i / 4.0;
    const double y = kTop + plot_h * (1.0 - i / 4.0);
    char label[32];
    std::snprintf(label, sizeof label, "%.3g", v);
    out << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(y + 4)
        << "\" text-anchor=\"end\" font-size=\"10\">" << label << "</text>\n";
  }
}

}  // namespace

void write_trace_csv(std::ostream& out, std::span<const DetectionRow> rows, double threshold) {
  out << "time_s,loss,label,threshold\n";
  for (const auto& r : rows) {
    out << detail::format_double(static_cast<double>(r.window_start_us) / 1e6) << ','
        << detail::format_double(r.loss) << ',' << (r.label ? to_string(*r.label) : "") << ','
        << detail::format_double(threshold) << '\n';
  }
}

void write_trace_svg(std::ostream& out, std::string_view title,
                     std::span<const DetectionRow> rows, double threshold, AttackSpan attack) {
  svg_open(out, title);
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;

  double t_min = 0.0, t_max = 1.0, y_max = threshold;
  if (!rows.empty()) {
    t_min = static_cast<double>(rows.front().window_start_us) / 1e6;
    t_max = static_cast<double>(rows.back().window_start_us) / 1e6;
    for (const auto& r : rows) y_max = std::max(y_max, r.loss);
  }
  if (t_max <= t_min) t_max = t_min + 1.0;
  if (!(y_max > 0.0)) y_max = 1.0;
  y_max *= 1.05;
  const auto x_of = [&](double t) { return kLeft + plot_w * (t - t_min) / (t_max - t_min); };
  const auto y_of = [&](double v) { return kTop + plot_h * (1.0 - v / y_max); };

  if (attack) {
    const double a = std::clamp(static_cast<double>(attack->first) / 1e6, t_min, t_max);
    const double b = std::clamp(static_cast<double>(attack->second) / 1e6, t_min, t_max);
    if (b > a) {
      out << "<rect class=\"attack\" x=\"" << num(x_of(a)) << "\" y=\"" << num(kTop)
          << "\" width=\"" << num(x_of(b) - x_of(a)) << "\" height=\"" << num(plot_h)
          << "\" fill=\"#f4c7c3\"/>\n";
    }
  }
  y_axis(out, y_max);
  out << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop + plot_h) << "\" x2=\""
      << num(kLeft + plot_w) << "\" y2=\"" << num(kTop + plot_h) << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << num(kLeft + plot_w / 2) << "\" y=\"" << num(kHeight - 8)
      << "\" text-anchor=\"middle\" font-size=\"11\">time since session start (s): "
      << num(t_min) << " - " << num(t_max) << "</text>\n";

  out << "<polyline class=\"loss\" fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"1\" points=\"";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i) out << ' ';
    out << num(x_of(static_cast<double>(rows[i].window_start_us) / 1e6)) << ','
        << num(y_of(rows[i].loss));
  }
  out << "\"/>\n";
  out << "<line class=\"threshold\" x1=\"" << num(kLeft) << "\" y1=\"" << num(y_of(threshold))
      << "\" x2=\"" << num(kLeft + plot_w) << "\" y2=\"" << num(y_of(threshold))
      << "\" stroke=\"#c0392b\" stroke-dasharray=\"4 3\"/>\n";
  out << "</svg>\n";
}

ClassDistribution class_distribution(std::span<const DetectionRow> rows) {
  std::vector<double> benign, attack;
  for (const auto& r : rows) {
    (r.label && *r.label == Label::Attack ? attack : benign).push_back(r.loss);
  }
  return {quartiles(benign), quartiles(attack)};
}

void write_distribution_csv(std::ostream& out, const ClassDistribution& d) {
  out << "class,count,min,q1,median,q3,max,mean\n";
  const auto line = [&](std::string_view name, const Quartiles& q) {
    if (q.count == 0) return;
    out << name << ',' << q.count << ',' << detail::format_double(q.min) << ','
        << detail::format_double(q.q1) << ',' << detail::format_double(q.median) << ','
        << detail::format_double(q.q3) << ',' << detail::format_double(q.max) << ','
        << detail::format_double(q.mean) << '\n';
  };
  line("benign", d.benign);
  line("attack", d.attack);
}

void write_distribution_svg(std::ostream& out, std::string_view title, const ClassDistribution& d) {
  svg_open(out, title);
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  std::vector<std::pair<std::string_view, const Quartiles*>> boxes;
  if (d.benign.count) boxes.emplace_back("benign", &d.benign);
  if (d.attack.count) boxes.emplace_back("attack", &d.attack);
  double y_max = 0.0;
  for (const auto& b : boxes) y_max = std::max(y_max, b.second->max);
  if (!(y_max > 0.0)) y_max = 1.0;
  y_max *= 1.05;
  const auto y_of = [&](double v) { return kTop + plot_h * (1.0 - v / y_max); };
  y_axis(out, y_max);
  const double slot = boxes.empty() ? plot_w : plot_w / static_cast<double>(boxes.size());
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const auto& [name, q] = boxes[i];
    const double cx = kLeft + slot * (static_cast<double>(i) + 0.5);
    const double half = std::min(60.0, slot / 4);
    const char* color = name == "attack" ? "#f4c7c3" : "#c6d7f0";
    out << "<g class=\"box\" data-class=\"" << name << "\">\n";
    out << "<line x1=\"" << num(cx) << "\" y1=\"" << num(y_of(q->min)) << "\" x2=\"" << num(cx)
        << "\" y2=\"" << num(y_of(q->max)) << "\" stroke=\"black\"/>\n";
    out << "<rect x=\"" << num(cx - half) << "\" y=\"" << num(y_of(q->q3)) << "\" width=\""
        << num(2 * half) << "\" height=\"" << num(y_of(q->q1) - y_of(q->q3)) << "\" fill=\""
        << color << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << num(cx - half) << "\" y1=\"" << num(y_of(q->median)) << "\" x2=\""
        << num(cx + half) << "\" y2=\"" << num(y_of(q->median)) << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << num(cx) << "\" y=\"" << num(kHeight - 12)
        << "\" text-anchor=\"middle\" font-size=\"12\">" << name << " (n=" << q->count
        << ")</text>\n";
    out << "</g>\n";
  }
  out << "</svg>\n";
}

}  // namespace uavids
