#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "geeg/clock_sync.hpp"

namespace geeg {

inline constexpr int kManifestSchemaVersion = 1;

struct ParticipantInfo {
  std::string id;
  std::string group;               // "ImmersiveGroup" / "DisplayGroup"
  std::vector<std::string> order;  // planned block labels, e.g. "OriginalArtwork:1"
  std::uint16_t udp_port = 0;
  std::string mqtt_topic;
};

struct StreamInfo {
  std::string id;           // "eeg:<pid>", "acc:<pid>", "gaze:<pid>", "events"
  std::string kind;         // eeg, acc, gaze, events
  std::string participant;  // empty for events
  std::string file;         // relative to the manifest directory
  std::size_t rows = 0;     // data rows, header excluded
};

struct SessionManifest {
  int schema_version = kManifestSchemaVersion;
  std::string session_id;
  std::string created_at;  // ISO 8601 UTC
  std::string status = "recording";  // recording, complete, failed
  bool partial = true;               // cleared only by a clean finalize
  double sample_rate = 256.0;
  double time_scale = 1.0;
  std::vector<ParticipantInfo> participants;
  std::vector<std::string> condition_plan;
  std::vector<StreamInfo> streams;
  std::string events_file = "events.csv";
  std::vector<ClockSyncSummary> sync;
  std::vector<std::string> warnings;

  std::filesystem::path directory;  // where it was read from; not serialized

  const StreamInfo* stream(const std::string& id) const;
  const ParticipantInfo* participant(const std::string& id) const;
};

std::string manifest_to_json(const SessionManifest& m);
SessionManifest manifest_from_json(const std::string& text);

// Writes via a temporary file and rename so readers never see a torn file.
void write_manifest(const SessionManifest& m, const std::filesystem::path& file);
// Throws FileLoad naming the file.
SessionManifest read_manifest(const std::filesystem::path& file);

std::string utc_timestamp();

}  // namespace geeg
