#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "geeg/clock_sync.hpp"
#include "geeg/decode.hpp"
#include "geeg/manifest.hpp"
#include "geeg/recording.hpp"

namespace geeg {

struct ParticipantConfig {
  std::string id;
  std::string group;               // ImmersiveGroup / DisplayGroup
  std::vector<std::string> order;  // planned block labels
  std::uint16_t udp_port = 0;      // 0: base port + index
  std::string mqtt_topic;          // empty: "gaze/<id>"
};

struct RecorderConfig {
  std::string session_id = "session";
  std::filesystem::path out_dir = "recording";
  std::vector<ParticipantConfig> participants;
  std::vector<std::string> condition_plan;  // empty: EO, EC, then every planned block label
  double sample_rate = kNominalSampleRate;
  double time_scale = 1.0;
  std::string bind_host = "0.0.0.0";
  std::uint16_t udp_base_port = 5000;  // 0 picks free ports
  std::optional<std::string> mqtt_url;
  std::optional<std::uint16_t> ws_port = 8765;  // nullopt disables the live endpoint
  AddressMap address_map;
  double reorder_window_s = 0.1;  // reference seconds held back for re-sorting
  double accel_stale_s = 0.5;     // older accelerometer readings are not carried forward
  double live_rate_hz = 10.0;
  ClockSyncOptions sync;
  StreamWriterOptions writer;
};

// JSON config; see README for the keys. Throws InvalidConfig.
RecorderConfig recorder_config_from_json(const std::string& text);
RecorderConfig load_recorder_config(const std::filesystem::path& file);

struct CommandResult {
  bool ok = false;
  std::string error;
  double t_ref = 0.0;
  std::string kind, label, participant;
};

struct IntakeStats {
  std::size_t datagrams = 0;
  std::size_t malformed = 0;
  std::size_t eeg_frames = 0;
  std::size_t accel_samples = 0;
  std::size_t unmapped = 0;
  std::size_t bad_arity = 0;
  std::size_t late = 0;  // released after a later frame was already written
  std::size_t gaps = 0;
  std::size_t gaze_records = 0;
  std::size_t gaze_decode_errors = 0;
};

// Gaze payload: {"device_ts": s, "gaze_x": .., "gaze_y": .., "confidence": ..}.
struct GazeSample {
  double device_ts = 0.0;
  double gaze_x = 0.0, gaze_y = 0.0, confidence = 0.0;
};
// Throws PayloadDecode.
GazeSample decode_gaze_payload(std::string_view payload);
std::string encode_gaze_payload(const GazeSample& g);

// The acquisition service: one UDP intake thread per participant, an
// optional MQTT gaze subscription, one writer thread owning every file, and
// an optional WebSocket endpoint for live frames and operator commands.
class Recorder {
 public:
  explicit Recorder(RecorderConfig config, ReferenceClock clock = ReferenceClock{});
  ~Recorder();
  Recorder(const Recorder&) = delete;
  Recorder& operator=(const Recorder&) = delete;

  // Throws Io when the output directory is unusable, before any socket is
  // opened; ConnectionRefused / SubscriptionDenied from the gaze broker.
  void start();
  // Drains and finalizes; safe to call twice.
  SessionManifest stop();

  bool failed() const;
  const RecorderConfig& config() const { return config_; }
  const ReferenceClock& clock() const { return clock_; }
  std::filesystem::path manifest_path() const { return config_.out_dir / "manifest.json"; }

  CommandResult mark_event(const std::string& label, const std::string& participant = "");
  CommandResult start_block(const std::string& label, const std::string& participant = "");
  CommandResult stop_block(const std::string& participant = "");
  // Operator command JSON in, acknowledgement JSON out.
  std::string handle_command(const std::string& text);

  std::uint16_t udp_port(std::size_t participant) const;
  std::uint16_t ws_port() const;
  std::size_t ws_clients() const;
  std::string live_frame(std::size_t participant) const;
  IntakeStats stats(std::size_t participant) const;
  ClockSyncSummary eeg_sync(std::size_t participant) const;

 private:
  struct Intake;
  struct Impl;

  CommandResult write_event(std::string_view kind, const std::string& label, const std::string& participant);
  SessionManifest build_manifest() const;

  RecorderConfig config_;
  ReferenceClock clock_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace geeg
