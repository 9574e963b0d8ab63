#include "prefnet/pref/distribution.hpp"

#include <charconv>
#include <cmath>
#include <limits>

#include "prefnet/core/errors.hpp"

namespace prefnet::pref {

namespace {

double parse_double(std::string_view text, std::string_view spec) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(out)) {
    throw ConfigError("bad number '" + std::string(text) + "' in distribution spec '" + std::string(spec) + "'");
  }
  return out;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    auto pos = text.find(sep, start);
    parts.push_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

}  // namespace

std::string format_number(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

PreferenceDistribution PreferenceDistribution::exponential(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("exponential distribution requires lambda > 0");
  PreferenceDistribution d;
  d.kind_ = DistKind::kExponential;
  d.a_ = lambda;
  return d;
}

PreferenceDistribution PreferenceDistribution::uniform(double lo, double hi) {
  if (!(lo >= 0.0) || !(lo < hi) || !std::isfinite(hi)) {
    throw ConfigError("uniform distribution requires 0 <= lo < hi");
  }
  PreferenceDistribution d;
  d.kind_ = DistKind::kUniform;
  d.a_ = lo;
  d.b_ = hi;
  return d;
}

PreferenceDistribution PreferenceDistribution::point(double value) {
  if (!(value >= 0.0) || !std::isfinite(value)) throw ConfigError("point distribution requires a finite value >= 0");
  PreferenceDistribution d;
  d.kind_ = DistKind::kPoint;
  d.a_ = value;
  return d;
}

PreferenceDistribution PreferenceDistribution::schedule(std::vector<ScheduleEntry> entries) {
  if (entries.empty()) throw ConfigError("schedule needs at least one entry");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!(entries[i].value >= 0.0) || !std::isfinite(entries[i].value)) {
      throw ConfigError("schedule values must be finite and >= 0");
    }
    if (i > 0 && entries[i].step <= entries[i - 1].step) {
      throw ConfigError("schedule steps must be strictly increasing");
    }
  }
  PreferenceDistribution d;
  d.kind_ = DistKind::kSchedule;
  d.entries_ = std::move(entries);
  return d;
}

PreferenceDistribution PreferenceDistribution::parse(std::string_view spec) {
  auto parts = split(spec, ':');
  const std::string_view kind = parts.front();
  if (kind == "exp" && parts.size() == 2) return exponential(parse_double(parts[1], spec));
  if (kind == "unif" && parts.size() == 3) return uniform(parse_double(parts[1], spec), parse_double(parts[2], spec));
  if (kind == "point" && parts.size() == 2) return point(parse_double(parts[1], spec));
  if (kind == "sched" && parts.size() == 2) {
    std::vector<ScheduleEntry> entries;
    for (auto item : split(parts[1], ',')) {
      auto kv = split(item, '=');
      if (kv.size() != 2) throw ConfigError("bad schedule entry '" + std::string(item) + "'");
      const double step = parse_double(kv[0], spec);
      if (step != std::floor(step)) throw ConfigError("schedule steps must be integers");
      entries.push_back({static_cast<std::int64_t>(step), parse_double(kv[1], spec)});
    }
    return schedule(std::move(entries));
  }
  throw ConfigError("unrecognized distribution spec '" + std::string(spec) + "'");
}

std::string PreferenceDistribution::spec() const {
  switch (kind_) {
    case DistKind::kExponential: return "exp:" + format_number(a_);
    case DistKind::kUniform: return "unif:" + format_number(a_) + ":" + format_number(b_);
    case DistKind::kPoint: return "point:" + format_number(a_);
    case DistKind::kSchedule: {
      std::string out = "sched:";
      for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(entries_[i].step) + "=" + format_number(entries_[i].value);
      }
      return out;
    }
  }
  return {};
}

double PreferenceDistribution::mean() const {
  switch (kind_) {
    case DistKind::kExponential: return 1.0 / a_;
    case DistKind::kUniform: return 0.5 * (a_ + b_);
    case DistKind::kPoint: return a_;
    case DistKind::kSchedule: {
      double sum = 0.0;
      for (const auto& e : entries_) sum += e.value;
      return sum / static_cast<double>(entries_.size());
    }
  }
  return 0.0;
}

double PreferenceDistribution::density(double x) const {
  switch (kind_) {
    case DistKind::kExponential:
      if (x < 0.0) throw ContractViolation("exponential density requires x >= 0");
      return a_ * std::exp(-a_ * x);
    case DistKind::kUniform: return (x >= a_ && x <= b_) ? 1.0 / (b_ - a_) : 0.0;
    case DistKind::kPoint:
    case DistKind::kSchedule: break;
  }
  throw ContractViolation("density is undefined for " + spec());
}

double PreferenceDistribution::cdf(double x) const {
  switch (kind_) {
    case DistKind::kExponential: return x <= 0.0 ? 0.0 : -std::expm1(-a_ * x);
    case DistKind::kUniform: return x <= a_ ? 0.0 : (x >= b_ ? 1.0 : (x - a_) / (b_ - a_));
    case DistKind::kPoint: return x < a_ ? 0.0 : 1.0;
    case DistKind::kSchedule: break;
  }
  throw ContractViolation("cdf is undefined for " + spec());
}

double PreferenceDistribution::quantile(double q) const {
  if (!(q >= 0.0) || q > 1.0) throw ContractViolation("quantile requires q in [0,1)");
  switch (kind_) {
    case DistKind::kExponential:
      if (q >= 1.0) throw ContractViolation("quantile q >= 1 is unbounded for the exponential distribution");
      return -std::log1p(-q) / a_;
    case DistKind::kUniform: return a_ + q * (b_ - a_);
    case DistKind::kPoint: return a_;
    case DistKind::kSchedule: break;
  }
  throw ContractViolation("quantile is undefined for " + spec());
}

double PreferenceDistribution::sample(Rng& rng, std::int64_t step) const {
  const double u = uniform01(rng);
  if (kind_ == DistKind::kSchedule) return value_at(step);
  return quantile(u);
}

double PreferenceDistribution::value_at(std::int64_t step) const {
  if (kind_ != DistKind::kSchedule) return kind_ == DistKind::kPoint ? a_ : mean();
  double value = entries_.front().value;
  for (const auto& e : entries_) {
    if (e.step > step) break;
    value = e.value;
  }
  return value;
}

double normalize_preference(double value, const PreferenceDistribution& dist) {
  const double m = dist.mean();
  if (!(m > 0.0)) throw NormalizationUndefined("preference normalization undefined for zero-mean " + dist.spec());
  return value / m;
}

}  // namespace prefnet::pref
