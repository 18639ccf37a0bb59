#pragma once

#include <deque>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "geeg/clock_sync.hpp"
#include "geeg/types.hpp"

namespace geeg {

inline constexpr int kLiveSchemaVersion = 1;

// Rolling store of the most recent frames of one participant.
class LiveBuffer {
 public:
  explicit LiveBuffer(double keep_s = 10.0) : keep_s_(keep_s) {}
  void push(const SampleFrame& frame);
  std::vector<SampleFrame> snapshot() const;

 private:
  double keep_s_;
  mutable std::mutex mu_;
  std::deque<SampleFrame> frames_;
};

struct LiveContext {
  std::string participant_id;
  ClockSyncSummary sync;
  std::optional<std::string> active_condition;
  double sample_rate = kNominalSampleRate;
};

struct LiveWindows {
  double trace_s = 5.0;
  std::size_t max_trace_points = 512;
  double validity_s = 10.0;
  double band_s = 4.0;
};

// One "/live" frame:
// {"type":"live","schema_version":1,"participant_id","t_ref",
//  "trace":{"window_s","t0","dt","points","channels":{"TP9":[..],..}},
//  "validity":{"window_s","channels":{"TP9":rate,..}},
//  "band_power":{"window_s","bands":{"Delta":µV²,..}} | null, "dominant_band",
//  "faa","arousal","sync":{...},"active_condition"}
// Indexes that cannot be computed (too little clean signal) are null.
std::string live_frame_json(const std::vector<SampleFrame>& frames, const LiveContext& context,
                            const LiveWindows& windows = {});

}  // namespace geeg
