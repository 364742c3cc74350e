#include "detgeo/sweep.hpp"

#include <charconv>
#include <cmath>
#include <ostream>
#include <istream>

#include "detgeo/errors.hpp"
#include "detgeo/format.hpp"

namespace detgeo {

void SweepConfig::validate() const {
  if (box_sizes.empty()) throw InputError("sweep needs at least one box size");
  for (double s : box_sizes) {
    if (!(s > 0) || !std::isfinite(s)) throw InputError("sweep box sizes must be positive");
  }
  if (!(step > 0) || !std::isfinite(step)) throw InputError("sweep step must be positive");
  if (!(max_offset >= 0) || !std::isfinite(max_offset)) throw InputError("sweep max_offset must be non-negative");
  if (!(pred_scale > 0) || !std::isfinite(pred_scale)) throw InputError("pred_scale must be positive");
  if (metrics.empty()) throw InputError("sweep needs at least one metric");
}

std::vector<double> SweepConfig::offsets() const {
  // The small slack keeps max_offset itself when rounding leaves it a hair short.
  const auto n = static_cast<long long>(std::floor(max_offset / step + 1e-9));
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n) + 1);
  for (long long i = 0; i <= n; ++i) out.push_back(static_cast<double>(i) * step);
  return out;
}

std::vector<SweepCurve> sweep(const SweepConfig& cfg, const CombinedParams& params) {
  cfg.validate();
  validate(params);
  const auto offsets = cfg.offsets();
  std::vector<SweepCurve> out;
  for (auto kind : cfg.metrics) {
    for (double s : cfg.box_sizes) {
      SweepCurve curve{kind, s, {}};
      const Box g(0, 0, s, s);
      for (double d : offsets) {
        const double axis = d / std::sqrt(2.0);
        const Box p(axis, axis, cfg.pred_scale * s, cfg.pred_scale * s);
        curve.samples.push_back({d, metric_value(kind, p, g, params)});
      }
      out.push_back(std::move(curve));
    }
  }
  return out;
}

std::vector<SmoothnessRow> smoothness_report(const std::vector<SweepCurve>& curves) {
  std::vector<SmoothnessRow> out;
  for (const auto& c : curves) {
    if (c.samples.size() < 2) throw InputError("smoothness needs at least two samples per curve");
    double max_slope = 0;
    for (std::size_t i = 1; i < c.samples.size(); ++i) {
      const double dv = c.samples[i].value - c.samples[i - 1].value;
      const double dx = c.samples[i].offset - c.samples[i - 1].offset;
      max_slope = std::max(max_slope, std::abs(dv / dx));
    }
    out.push_back({c.metric, c.box_size, max_slope});
  }
  return out;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepCurve>& curves) {
  out << "metric,box_size,offset,value\n";
  for (const auto& c : curves) {
    for (const auto& s : c.samples) {
      out << to_string(c.metric) << ',' << format_real(c.box_size) << ',' << format_real(s.offset) << ','
          << format_real(s.value) << '\n';
    }
  }
}

namespace {

double parse_field(std::string_view text, const std::string& where) {
  double v = 0;
  const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
  if (r.ec != std::errc{} || r.ptr != text.data() + text.size()) {
    throw InputError(where + ": malformed number '" + std::string(text) + "'");
  }
  return v;
}

}  // namespace

std::vector<SweepCurve> parse_sweep_csv(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line) || line != "metric,box_size,offset,value") {
    throw InputError(source + ":1: expected header 'metric,box_size,offset,value'");
  }
  std::vector<SweepCurve> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno);
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    for (std::size_t pos; (pos = rest.find(',')) != std::string_view::npos;) {
      fields.push_back(rest.substr(0, pos));
      rest.remove_prefix(pos + 1);
    }
    fields.push_back(rest);
    if (fields.size() != 4) throw InputError(where + ": expected 4 fields");
    const auto kind = parse_metric_kind(fields[0]);
    const double size = parse_field(fields[1], where);
    const SweepSample sample{parse_field(fields[2], where), parse_field(fields[3], where)};
    if (out.empty() || out.back().metric != kind || out.back().box_size != size) {
      out.push_back({kind, size, {}});
    } else if (sample.offset <= out.back().samples.back().offset) {
      throw InputError(where + ": offsets must increase within a curve");
    }
    out.back().samples.push_back(sample);
  }
  return out;
}

}  // namespace detgeo
