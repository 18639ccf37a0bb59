#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <string>

namespace geeg {

struct ClockSyncOptions {
  std::size_t window = 256;       // recent (device_ts, arrival_ts) pairs
  double outlier_s = 0.25;        // |residual| above this is excluded
  std::size_t outlier_min_pairs = 8;
  std::size_t reset_after = 32;   // consecutive outliers agreeing within outlier_s mean the
                                  // device clock jumped; a drained backlog never agrees
  double drift_min_span_s = 4.0;  // drift stays 0 until the window spans this much
  double drift_limit = 1e-3;      // s/s; larger estimates are clamped and reported unhealthy
  double slew = 0.01;             // max change of the applied offset per second of device time
};

struct ClockSyncSummary {
  std::string stream_id;
  double offset = 0.0;  // s, device -> reference
  double drift = 0.0;   // s/s
  std::size_t pairs = 0;
  std::size_t accepted = 0;
  std::size_t outliers = 0;
  std::size_t resets = 0;
  bool healthy = false;
};

// Estimates the mapping from a device clock to the reference clock from
// (device_ts, arrival_ts) pairs. The offset is the window median of
// arrival - device, which tracks the typical network latency and shrugs off
// jitter. Drift is a Theil-Sen slope through the per-second minimum latency,
// the least queued packets being the cleanest view of the clock.
class ClockSync {
 public:
  explicit ClockSync(std::string stream_id = {}, ClockSyncOptions options = {});

  // Returns false when the pair was rejected as an outlier.
  bool update(double device_ts, double arrival_ts);

  bool has_estimate() const noexcept { return !window_.empty(); }
  double offset() const noexcept { return offset_; }
  double drift() const noexcept { return drift_; }

  // Unsmoothed reference time for a device timestamp.
  double estimate(double device_ts) const;

  // Reference time with the applied offset slew-limited so successive calls
  // with increasing device_ts never go backwards or distort sample spacing
  // by more than the slew fraction. Call in device_ts order.
  double map(double device_ts);

  ClockSyncSummary summary() const;

 private:
  struct Pair {
    double device;
    double latency;
  };

  void refit();

  std::string stream_id_;
  ClockSyncOptions opt_;
  std::deque<Pair> window_;
  double offset_ = 0.0;
  double drift_ = 0.0;
  double centre_ = 0.0;
  bool drift_clamped_ = false;
  std::size_t accepted_ = 0;
  std::size_t outliers_ = 0;
  std::deque<Pair> outlier_run_;  // latest outliers whose latencies agree
  std::size_t resets_ = 0;
  std::optional<double> applied_;
  double last_device_ = 0.0;
};

}  // namespace geeg

namespace geeg {

// Shared reference clock: monotonic seconds since boot, optionally sped up
// so simulated sessions can run faster than real time. Processes on the
// same host agree on it.
class ReferenceClock {
 public:
  explicit ReferenceClock(double time_scale = 1.0);
  double now() const;
  double time_scale() const noexcept { return scale_; }
  // Sleeps until now() >= t_ref.
  void sleep_until(double t_ref) const;

 private:
  double scale_;
};

}  // namespace geeg
