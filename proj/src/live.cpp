#include "geeg/live.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "geeg/artifact.hpp"
#include "geeg/engagement.hpp"
#include "geeg/error.hpp"
#include "geeg/filter.hpp"
#include "geeg/spectral.hpp"

namespace geeg {
namespace {

using nlohmann::json;

json number_or_null(std::optional<double> v) {
  if (v && std::isfinite(*v)) return *v;
  return nullptr;
}

// Most recent gap-free run covering at most window_s seconds.
Segment tail_segment(const std::vector<SampleFrame>& frames, double window_s, double fs) {
  Segment seg;
  seg.sample_rate = fs;
  if (frames.empty()) return seg;
  const double t_end = frames.back().t_ref;
  auto first = std::lower_bound(frames.begin(), frames.end(), t_end - window_s,
                                [](const SampleFrame& f, double t) { return f.t_ref < t; });
  const auto runs = split_on_gaps(std::span(&*first, static_cast<std::size_t>(frames.end() - first)), fs);
  if (!runs.empty()) seg.frames = runs.back();
  return seg;
}

// Per-channel share of samples passing device, amplitude, gradient and
// (when the accelerometer is present) movement checks.
std::optional<QualityMask> quality(const Segment& seg) {
  if (seg.size() < 2) return std::nullopt;
  std::vector<QualityMask> masks{flag_device(seg), flag_gradient(seg)};
  try {
    masks.push_back(flag_amplitude(preprocess(seg)));
  } catch (const Error&) {
    masks.push_back(flag_amplitude(seg));
  }
  try {
    masks.push_back(flag_movement(seg));
  } catch (const Error&) {
  }
  return combine_and_validate(masks, 0).mask;
}

}  // namespace

void LiveBuffer::push(const SampleFrame& frame) {
  std::lock_guard lock(mu_);
  if (!frames_.empty() && frame.t_ref <= frames_.back().t_ref) {
    // Late frame: keep the buffer ordered.
    auto it = std::upper_bound(frames_.begin(), frames_.end(), frame.t_ref,
                               [](double t, const SampleFrame& f) { return t < f.t_ref; });
    if (it != frames_.begin() && std::prev(it)->t_ref == frame.t_ref) return;
    frames_.insert(it, frame);
  } else {
    frames_.push_back(frame);
  }
  while (!frames_.empty() && frames_.front().t_ref < frames_.back().t_ref - keep_s_) frames_.pop_front();
}

std::vector<SampleFrame> LiveBuffer::snapshot() const {
  std::lock_guard lock(mu_);
  return {frames_.begin(), frames_.end()};
}

std::string live_frame_json(const std::vector<SampleFrame>& frames, const LiveContext& ctx,
                            const LiveWindows& win) {
  json j;
  j["type"] = "live";
  j["schema_version"] = kLiveSchemaVersion;
  j["participant_id"] = ctx.participant_id;
  j["t_ref"] = frames.empty() ? json(nullptr) : json(frames.back().t_ref);

  // Trace: plain decimation keeps the dashboard's draw cost bounded.
  {
    json trace;
    trace["window_s"] = win.trace_s;
    const double t_end = frames.empty() ? 0.0 : frames.back().t_ref;
    auto first = std::lower_bound(frames.begin(), frames.end(), t_end - win.trace_s,
                                  [](const SampleFrame& f, double t) { return f.t_ref < t; });
    const auto n = static_cast<std::size_t>(frames.end() - first);
    const std::size_t step = std::max<std::size_t>(1, (n + win.max_trace_points - 1) / win.max_trace_points);
    json channels = json::object();
    std::vector<std::vector<double>> ch(kChannelCount);
    for (std::size_t i = 0; i < n; i += step) {
      for (std::size_t c = 0; c < kChannelCount; ++c) ch[c].push_back(first[static_cast<std::ptrdiff_t>(i)].eeg[c]);
    }
    for (std::size_t c = 0; c < kChannelCount; ++c) channels[std::string(kChannelNames[c])] = ch[c];
    trace["t0"] = n ? json(first->t_ref) : json(nullptr);
    trace["dt"] = static_cast<double>(step) / ctx.sample_rate;
    trace["points"] = ch[0].size();
    trace["channels"] = std::move(channels);
    j["trace"] = std::move(trace);
  }

  {
    json validity;
    validity["window_s"] = win.validity_s;
    json rates = json::object();
    const auto seg = tail_segment(frames, win.validity_s, ctx.sample_rate);
    const auto mask = quality(seg);
    for (std::size_t c = 0; c < kChannelCount; ++c) {
      std::optional<double> rate;
      if (mask && mask->size() > 0) {
        std::size_t ok = 0;
        for (std::size_t i = 0; i < mask->size(); ++i) ok += mask->valid(i, c) ? 1 : 0;
        rate = static_cast<double>(ok) / static_cast<double>(mask->size());
      }
      rates[std::string(kChannelNames[c])] = number_or_null(rate);
    }
    validity["channels"] = std::move(rates);
    j["validity"] = std::move(validity);
  }

  j["band_power"] = nullptr;
  j["dominant_band"] = nullptr;
  j["faa"] = nullptr;
  j["arousal"] = nullptr;
  {
    const auto seg = tail_segment(frames, win.band_s, ctx.sample_rate);
    if (const auto mask = quality(seg)) {
      try {
        const auto table = segment_band_powers(seg, *mask);
        json bands = json::object();
        std::size_t best = 0;
        for (std::size_t b = 0; b < kBandCount; ++b) {
          bands[std::string(kCanonicalBands[b].name)] = table.channel_mean[b];
          if (table.channel_mean[b] > table.channel_mean[best]) best = b;
        }
        j["band_power"] = {{"window_s", win.band_s}, {"bands", std::move(bands)}};
        j["dominant_band"] = kCanonicalBands[best].name;
        try {
          j["faa"] = number_or_null(faa(table));
        } catch (const Error&) {
        }
        try {
          j["arousal"] = number_or_null(arousal(table));
        } catch (const Error&) {
        }
      } catch (const Error&) {
      }
    }
  }

  j["sync"] = {{"offset", ctx.sync.offset},     {"drift", ctx.sync.drift},
               {"pairs", ctx.sync.pairs},       {"outliers", ctx.sync.outliers},
               {"healthy", ctx.sync.healthy}};
  j["active_condition"] = ctx.active_condition ? json(*ctx.active_condition) : json(nullptr);
  return j.dump();
}

}  // namespace geeg
