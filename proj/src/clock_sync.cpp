#include "geeg/clock_sync.hpp"

#include <algorithm>
#include <cmath>
#include <chrono>
#include <map>
#include <thread>
#include <vector>

#include "geeg/error.hpp"

namespace geeg {
namespace {

double median(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

}  // namespace

ClockSync::ClockSync(std::string stream_id, ClockSyncOptions options)
    : stream_id_(std::move(stream_id)), opt_(options) {}

bool ClockSync::update(double device_ts, double arrival_ts) {
  if (!std::isfinite(device_ts) || !std::isfinite(arrival_ts)) return false;
  const double latency = arrival_ts - device_ts;

  if (window_.size() >= opt_.outlier_min_pairs) {
    const double residual = arrival_ts - estimate(device_ts);
    if (std::abs(residual) > opt_.outlier_s) {
      ++outliers_;
      outlier_run_.push_back({device_ts, latency});
      const auto spread = [&] {
        const auto [lo, hi] = std::minmax_element(outlier_run_.begin(), outlier_run_.end(),
                                                  [](const Pair& a, const Pair& b) { return a.latency < b.latency; });
        return hi->latency - lo->latency;
      };
      while (spread() > opt_.outlier_s) outlier_run_.pop_front();
      if (outlier_run_.size() < opt_.reset_after) return false;
      // The device clock moved under us; start over from the agreeing run.
      window_.assign(outlier_run_.begin(), outlier_run_.end());
      outlier_run_.clear();
      applied_.reset();
      ++resets_;
      accepted_ += window_.size();
      refit();
      return true;
    }
  }
  outlier_run_.clear();
  ++accepted_;
  window_.push_back({device_ts, latency});
  while (window_.size() > opt_.window) window_.pop_front();
  refit();
  return true;
}

void ClockSync::refit() {
  std::vector<double> lat;
  lat.reserve(window_.size());
  double sum_device = 0.0;
  for (const auto& p : window_) {
    lat.push_back(p.latency);
    sum_device += p.device;
  }
  offset_ = median(std::move(lat));
  centre_ = sum_device / static_cast<double>(window_.size());

  drift_ = 0.0;
  drift_clamped_ = false;
  auto [lo, hi] = std::minmax_element(window_.begin(), window_.end(),
                                      [](const Pair& a, const Pair& b) { return a.device < b.device; });
  if (hi->device - lo->device < opt_.drift_min_span_s) return;

  std::map<long long, Pair> buckets;  // per device second: earliest-arriving pair
  for (const auto& p : window_) {
    const auto key = static_cast<long long>(std::floor(p.device));
    auto it = buckets.find(key);
    if (it == buckets.end() || p.latency < it->second.latency) buckets[key] = p;
  }
  std::vector<double> slopes;
  for (auto i = buckets.begin(); i != buckets.end(); ++i) {
    for (auto j = std::next(i); j != buckets.end(); ++j) {
      const double dx = j->second.device - i->second.device;
      if (dx > 0.0) slopes.push_back((j->second.latency - i->second.latency) / dx);
    }
  }
  if (slopes.empty()) return;
  drift_ = median(std::move(slopes));
  if (std::abs(drift_) > opt_.drift_limit) {
    drift_clamped_ = true;
    drift_ = std::clamp(drift_, -opt_.drift_limit, opt_.drift_limit);
  }
}

double ClockSync::estimate(double device_ts) const {
  return device_ts + offset_ + drift_ * (device_ts - centre_);
}

double ClockSync::map(double device_ts) {
  const double target = estimate(device_ts) - device_ts;
  if (!applied_) {
    applied_ = target;
    last_device_ = device_ts;
  } else if (device_ts > last_device_) {
    const double step = opt_.slew * (device_ts - last_device_);
    applied_ = *applied_ + std::clamp(target - *applied_, -step, step);
  }
  last_device_ = std::max(last_device_, device_ts);
  return device_ts + *applied_;
}

ClockSyncSummary ClockSync::summary() const {
  ClockSyncSummary s;
  s.stream_id = stream_id_;
  s.offset = offset_;
  s.drift = drift_;
  s.pairs = window_.size();
  s.accepted = accepted_;
  s.outliers = outliers_;
  s.resets = resets_;
  s.healthy = window_.size() >= opt_.outlier_min_pairs && outlier_run_.empty() && !drift_clamped_;
  return s;
}

}  // namespace geeg

namespace geeg {

ReferenceClock::ReferenceClock(double time_scale) : scale_(time_scale) {
  if (!(time_scale > 0.0) || !std::isfinite(time_scale)) {
    throw Error(ErrorCode::InvalidConfig, "time_scale must be positive");
  }
}

double ReferenceClock::now() const {
  const auto t = std::chrono::steady_clock::now().time_since_epoch();
  return std::chrono::duration<double>(t).count() * scale_;
}

void ReferenceClock::sleep_until(double t_ref) const {
  const auto wall = std::chrono::duration<double>(t_ref / scale_);
  std::this_thread::sleep_until(std::chrono::steady_clock::time_point(
      std::chrono::duration_cast<std::chrono::steady_clock::duration>(wall)));
}

}  // namespace geeg
