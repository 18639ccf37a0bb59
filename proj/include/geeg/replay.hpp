#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "geeg/clock_sync.hpp"
#include "geeg/decode.hpp"
#include "geeg/net.hpp"
#include "geeg/types.hpp"

namespace geeg::synth {

struct ReplayFrame {
  double t = 0.0;  // seconds from session start
  std::array<float, kChannelCount> eeg{};
  std::array<float, kChannelCount> horseshoe{1, 1, 1, 1};
  std::optional<std::array<float, 3>> accel;
};

struct ReplayGaze {
  double t = 0.0;
  double gaze_x = 0.0, gaze_y = 0.0, confidence = 1.0;
};

// Operator command sent over the live WebSocket at time t.
struct ReplayCommand {
  double t = 0.0;
  std::string json;
};

struct ReplayParticipant {
  std::string id;
  net::Endpoint osc_target;
  std::vector<ReplayFrame> frames;  // ascending t
  std::vector<ReplayGaze> gaze;
  std::string gaze_topic;  // empty: "gaze/<id>"
};

struct ReplaySession {
  std::vector<ReplayParticipant> participants;
  std::vector<ReplayCommand> commands;
};

struct ReplayOptions {
  // Per-datagram network latency, uniform, in reference seconds. Each
  // datagram leaves when its newest frame is due plus this delay, so
  // datagrams may overtake each other.
  double latency_min_s = 0.010;
  double latency_max_s = 0.050;
  std::size_t frames_per_datagram = 16;
  double device_clock_offset_s = 0.0;  // device clock minus reference clock
  double lead_in_s = 0.2;              // session starts this long after replay()
  std::optional<net::Endpoint> mqtt_broker;
  std::optional<net::Endpoint> ws_endpoint;
  AddressMap address_map;
  std::uint64_t seed = 0;
};

struct ReplaySummary {
  double t0 = 0.0;  // reference time of session start
  std::size_t datagrams = 0;
  std::size_t frames = 0;
  std::size_t gaze_messages = 0;
  std::size_t commands = 0;
  std::vector<std::string> command_errors;  // rejected or unanswered commands
  double latency_mean_s = 0.0;
  double latency_min_s = 0.0;
  double latency_max_s = 0.0;
};

// Paces the session against the reference clock. Every endpoint is checked
// first; NetworkUnreachable (or ConnectionRefused for TCP services) is
// thrown before anything is sent.
ReplaySummary replay(const ReplaySession& session, const ReferenceClock& clock, const ReplayOptions& options);

// Frames from a generated segment (times relative to its first frame);
// accelerometer on every accel_every-th frame.
std::vector<ReplayFrame> to_replay_frames(const Segment& seg, const std::vector<std::array<double, 3>>& accel_xyz,
                                          std::size_t accel_every = 5);

}  // namespace geeg::synth
