#pragma once

// Mean +- sample standard deviation tables of pose errors, per tool.

#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "spinenav/errors.hpp"
#include "spinenav/navigate.hpp"
#include "spinenav/se3.hpp"

namespace spinenav {

enum class Metric { Position, Roll, Pitch, Yaw };

inline constexpr std::array kAllMetrics{Metric::Position, Metric::Roll, Metric::Pitch, Metric::Yaw};

inline std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::Position: return "position";
    case Metric::Roll: return "roll";
    case Metric::Pitch: return "pitch";
    case Metric::Yaw: return "yaw";
  }
  return "?";
}

inline std::string_view unit_of(Metric m) { return m == Metric::Position ? "mm" : "deg"; }

inline double metric_value(const PoseError& e, Metric m) {
  switch (m) {
    case Metric::Position: return e.position;
    case Metric::Roll: return e.roll;
    case Metric::Pitch: return e.pitch;
    case Metric::Yaw: return e.yaw;
  }
  return 0.0;
}

struct StatRow {
  double mean = 0.0;
  double std = 0.0;  // n-1 denominator; 0 when n == 1
  std::size_t n = 0;
  std::string unit;
  bool single_sample = false;  // std is undefined for n == 1 and reported as 0
};

struct ErrorReport {
  std::map<std::pair<Tool, Metric>, StatRow> rows;
  std::string dataset_digest;
  std::string noise_preset;
  std::string seed_range;

  void merge(const ErrorReport& other) {
    for (const auto& [k, v] : other.rows) rows[k] = v;
  }
};

inline StatRow summarize(std::span<const double> values, std::string unit) {
  if (values.empty()) throw EmptyInput("cannot summarize an empty sample");
  StatRow row;
  row.n = values.size();
  row.unit = std::move(unit);
  double sum = 0.0;
  for (double v : values) sum += v;
  row.mean = sum / static_cast<double>(row.n);
  if (row.n == 1) {
    row.single_sample = true;
    return row;
  }
  double ss = 0.0;
  for (double v : values) ss += (v - row.mean) * (v - row.mean);
  row.std = std::sqrt(ss / static_cast<double>(row.n - 1));
  return row;
}

inline ErrorReport aggregate(std::span<const PoseError> errors, Tool tool) {
  if (errors.empty()) throw EmptyInput("no pose errors to aggregate");
  ErrorReport report;
  std::vector<double> values(errors.size());
  for (Metric m : kAllMetrics) {
    for (std::size_t i = 0; i < errors.size(); ++i) values[i] = metric_value(errors[i], m);
    report.rows[{tool, m}] = summarize(values, std::string(unit_of(m)));
  }
  return report;
}

inline ErrorReport aggregate(const std::vector<PoseError>& errors, Tool tool) {
  return aggregate(std::span<const PoseError>(errors), tool);
}

/// Markdown table: one row per metric, one column per tool.
inline std::string to_markdown(const ErrorReport& report) {
  auto cell = [&](Tool t, Metric m) -> std::string {
    auto it = report.rows.find({t, m});
    if (it == report.rows.end()) return "n/a";
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.2f ± %.2f %s", it->second.mean, it->second.std, it->second.unit.c_str());
    return buf;
  };
  std::string out = "| Error | Rigid Drill Tip | Flexible Drill Tip |\n|---|---|---|\n";
  for (Metric m : kAllMetrics) {
    std::string name(to_string(m));
    name[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(name[0])));
    out += "| " + name + " | " + cell(Tool::Rigid, m) + " | " + cell(Tool::Flexible, m) + " |\n";
  }
  return out;
}

}  // namespace spinenav
