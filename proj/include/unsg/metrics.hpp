// Copyright 2026 The UNSG Workbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Metrics CSV shared by every training and solving loop. One row per
// evaluation point; the x-axis is `samples`, the number of simulator payoff
// queries consumed so far.

#ifndef UNSG_METRICS_HPP_
#define UNSG_METRICS_HPP_

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "unsg/error.hpp"

namespace unsg {

inline constexpr const char* kMetricsHeader = "step,samples,loss_estimate,duality_gap,eta,tau,epsilon,wallclock_ms";

struct MetricsRow {
  long long step = 0;
  long long samples = 0;
  std::optional<double> loss_estimate;
  std::optional<double> duality_gap;
  double eta = 0.0;
  double tau = 0.0;
  double epsilon = 0.0;
  std::optional<double> wallclock_ms;
};

using MetricsSink = std::function<void(const MetricsRow&)>;

// Shortest decimal text that parses back to the same double.
inline std::string format_double(double x) {
  char buf[32];
  for (int precision = 6; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

inline std::string format_metrics_row(const MetricsRow& r) {
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  std::ostringstream out;
  out << r.step << ',' << r.samples << ',' << opt(r.loss_estimate) << ',' << opt(r.duality_gap) << ','
      << format_double(r.eta) << ',' << format_double(r.tau) << ',' << format_double(r.epsilon) << ','
      << opt(r.wallclock_ms);
  return out.str();
}

class MetricsWriter {
 public:
  explicit MetricsWriter(std::ostream& out) : out_(&out) { *out_ << kMetricsHeader << '\n'; }
  void write(const MetricsRow& r) {
    *out_ << format_metrics_row(r) << '\n';
    out_->flush();
  }
  MetricsSink sink() {
    return [this](const MetricsRow& r) { write(r); };
  }

 private:
  std::ostream* out_;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out(1);
  for (char c : line) {
    if (c == ',') out.emplace_back();
    else out.back().push_back(c);
  }
  return out;
}

inline bool parse_number(const std::string& s, double& v) {
  if (s.empty()) return false;
  char* end = nullptr;
  v = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

}  // namespace detail

// Checks a metrics CSV against the schema: exact header, eight fields per
// row, integral nondecreasing step and samples, finite numbers, and a
// nonnegative duality gap. loss_estimate, duality_gap and wallclock_ms may be
// empty. Throws ConfigError naming the offending line. Returns the row count.
inline std::size_t validate_metrics_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader)
    throw ConfigError("metrics line 1: header must be '" + std::string(kMetricsHeader) + "'");
  std::size_t rows = 0;
  int line_no = 1;
  double last_step = -1, last_samples = -1;
  while (std::getline(in, line)) {
    ++line_no;
    auto fail = [&](const std::string& msg) { return ConfigError("metrics line " + std::to_string(line_no) + ": " + msg); };
    auto f = detail::split_csv_line(line);
    if (f.size() != 8) throw fail("expected 8 fields, found " + std::to_string(f.size()));
    double v[8];
    for (int i = 0; i < 8; ++i) {
      const bool optional = i == 2 || i == 3 || i == 7;
      if (f[i].empty()) {
        if (!optional) throw fail("required field " + std::to_string(i + 1) + " is empty");
        v[i] = 0.0;
        continue;
      }
      if (!detail::parse_number(f[i], v[i]) || !std::isfinite(v[i])) throw fail("field " + std::to_string(i + 1) + " is not a finite number");
    }
    if (v[0] != std::floor(v[0]) || v[1] != std::floor(v[1]) || v[0] < 0 || v[1] < 0)
      throw fail("step and samples must be nonnegative integers");
    if (v[0] < last_step || v[1] < last_samples) throw fail("step and samples must be nondecreasing");
    if (!f[3].empty() && v[3] < 0) throw fail("duality_gap is negative");
    last_step = v[0];
    last_samples = v[1];
    ++rows;
  }
  return rows;
}

}  // namespace unsg

#endif  // UNSG_METRICS_HPP_
