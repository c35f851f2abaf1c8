#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <utility>

#include "uavids/detector.hpp"

namespace uavids {

/// Closed attack interval in microseconds since session start.
using AttackSpan = std::optional<std::pair<std::int64_t, std::int64_t>>;

/// `time_s,loss,label,threshold` per window.
void write_trace_csv(std::ostream& out, std::span<const DetectionRow> rows, double threshold);

/// Loss over time with the attack interval shaded and the threshold drawn.
void write_trace_svg(std::ostream& out, std::string_view title,
                     std::span<const DetectionRow> rows, double threshold, AttackSpan attack);

struct ClassDistribution {
  Quartiles benign;
  Quartiles attack;
};

ClassDistribution class_distribution(std::span<const DetectionRow> rows);

/// `class,count,min,q1,median,q3,max,mean`; classes without windows are omitted.
void write_distribution_csv(std::ostream& out, const ClassDistribution& d);

/// Box plot per class present.
void write_distribution_svg(std::ostream& out, std::string_view title, const ClassDistribution& d);

}  // namespace uavids
