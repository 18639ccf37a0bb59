#include "geeg/manifest.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "geeg/error.hpp"

namespace geeg {

using nlohmann::json;

const StreamInfo* SessionManifest::stream(const std::string& id) const {
  for (const auto& s : streams) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

const ParticipantInfo* SessionManifest::participant(const std::string& id) const {
  for (const auto& p : participants) {
    if (p.id == id) return &p;
  }
  return nullptr;
}

std::string manifest_to_json(const SessionManifest& m) {
  json j;
  j["schema_version"] = m.schema_version;
  j["session_id"] = m.session_id;
  j["created_at"] = m.created_at;
  j["status"] = m.status;
  j["partial"] = m.partial;
  j["sample_rate"] = m.sample_rate;
  j["time_scale"] = m.time_scale;
  j["participants"] = json::array();
  for (const auto& p : m.participants) {
    j["participants"].push_back({{"id", p.id},
                                 {"group", p.group},
                                 {"order", p.order},
                                 {"udp_port", p.udp_port},
                                 {"mqtt_topic", p.mqtt_topic}});
  }
  j["condition_plan"] = m.condition_plan;
  j["streams"] = json::array();
  for (const auto& s : m.streams) {
    j["streams"].push_back(
        {{"id", s.id}, {"kind", s.kind}, {"participant", s.participant}, {"file", s.file}, {"rows", s.rows}});
  }
  j["events_file"] = m.events_file;
  j["sync"] = json::array();
  for (const auto& s : m.sync) {
    j["sync"].push_back({{"stream_id", s.stream_id},
                         {"offset", s.offset},
                         {"drift", s.drift},
                         {"pairs", s.pairs},
                         {"accepted", s.accepted},
                         {"outliers", s.outliers},
                         {"resets", s.resets},
                         {"healthy", s.healthy}});
  }
  j["warnings"] = m.warnings;
  return j.dump(2) + "\n";
}

SessionManifest manifest_from_json(const std::string& text) {
  SessionManifest m;
  try {
    const json j = json::parse(text);
    m.schema_version = j.at("schema_version").get<int>();
    if (m.schema_version != kManifestSchemaVersion) {
      throw Error(ErrorCode::FileLoad, "unsupported manifest schema_version " + std::to_string(m.schema_version));
    }
    m.session_id = j.at("session_id").get<std::string>();
    m.created_at = j.value("created_at", "");
    m.status = j.at("status").get<std::string>();
    m.partial = j.at("partial").get<bool>();
    m.sample_rate = j.at("sample_rate").get<double>();
    m.time_scale = j.value("time_scale", 1.0);
    for (const auto& p : j.at("participants")) {
      m.participants.push_back({p.at("id").get<std::string>(), p.value("group", ""),
                                p.value("order", std::vector<std::string>{}), p.value("udp_port", std::uint16_t{0}),
                                p.value("mqtt_topic", "")});
    }
    m.condition_plan = j.value("condition_plan", std::vector<std::string>{});
    for (const auto& s : j.at("streams")) {
      m.streams.push_back({s.at("id").get<std::string>(), s.at("kind").get<std::string>(),
                           s.value("participant", ""), s.at("file").get<std::string>(),
                           s.value("rows", std::size_t{0})});
    }
    m.events_file = j.value("events_file", "events.csv");
    for (const auto& s : j.value("sync", json::array())) {
      ClockSyncSummary c;
      c.stream_id = s.value("stream_id", "");
      c.offset = s.value("offset", 0.0);
      c.drift = s.value("drift", 0.0);
      c.pairs = s.value("pairs", std::size_t{0});
      c.accepted = s.value("accepted", std::size_t{0});
      c.outliers = s.value("outliers", std::size_t{0});
      c.resets = s.value("resets", std::size_t{0});
      c.healthy = s.value("healthy", false);
      m.sync.push_back(c);
    }
    m.warnings = j.value("warnings", std::vector<std::string>{});
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FileLoad, std::string("malformed manifest: ") + e.what());
  }
  return m;
}

void write_manifest(const SessionManifest& m, const std::filesystem::path& file) {
  const auto tmp = file.string() + ".tmp";
  const std::string text = manifest_to_json(m);
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw Error(ErrorCode::Io, "cannot write " + tmp);
  std::size_t done = 0;
  while (done < text.size()) {
    const auto n = ::write(fd, text.data() + done, text.size() - done);
    if (n <= 0) {
      ::close(fd);
      throw Error(ErrorCode::Io, "short write to " + tmp);
    }
    done += static_cast<std::size_t>(n);
  }
  ::fsync(fd);
  ::close(fd);
  if (std::rename(tmp.c_str(), file.c_str()) != 0) throw Error(ErrorCode::Io, "cannot rename " + tmp);
}

SessionManifest read_manifest(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileLoad, "cannot open manifest " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    auto m = manifest_from_json(ss.str());
    m.directory = file.parent_path();
    return m;
  } catch (const Error& e) {
    throw Error(ErrorCode::FileLoad, file.string() + ": " + e.what());
  }
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  ::gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace geeg
