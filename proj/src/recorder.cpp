#include "geeg/recorder.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "geeg/csv.hpp"
#include "geeg/error.hpp"
#include "geeg/format.hpp"
#include "geeg/live.hpp"
#include "geeg/mqtt.hpp"
#include "geeg/net.hpp"
#include "geeg/osc.hpp"
#include "geeg/websocket.hpp"

namespace geeg {
namespace {

using nlohmann::json;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// EEG and accelerometer values arrive as float32; print them at that
// precision so the file holds exactly what was sent.
std::string format_sample(double v) {
  const auto f = static_cast<float>(v);
  if (static_cast<double>(f) == v) return format_float(f);
  return format_double(v);
}

std::string quality_field(Quality q) { return q == Quality::Poor ? "1" : "0"; }

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  return j[key].get<T>();
}

}  // namespace

GazeSample decode_gaze_payload(std::string_view payload) {
  json j;
  try {
    j = json::parse(payload);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::PayloadDecode, std::string("gaze payload is not JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::PayloadDecode, "gaze payload is not an object");
  auto field = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_number()) {
      throw Error(ErrorCode::PayloadDecode, std::string("gaze payload lacks numeric '") + key + "'");
    }
    const double v = j[key].get<double>();
    if (!std::isfinite(v)) throw Error(ErrorCode::PayloadDecode, std::string("non-finite '") + key + "'");
    return v;
  };
  return {field("device_ts"), field("gaze_x"), field("gaze_y"), field("confidence")};
}

std::string encode_gaze_payload(const GazeSample& g) {
  return json{{"device_ts", g.device_ts}, {"gaze_x", g.gaze_x}, {"gaze_y", g.gaze_y}, {"confidence", g.confidence}}
      .dump();
}

RecorderConfig recorder_config_from_json(const std::string& text) {
  RecorderConfig c;
  try {
    const json j = json::parse(text);
    c.session_id = get_or<std::string>(j, "session_id", c.session_id);
    c.out_dir = get_or<std::string>(j, "out", c.out_dir.string());
    c.sample_rate = get_or(j, "sample_rate", c.sample_rate);
    c.time_scale = get_or(j, "time_scale", c.time_scale);
    c.bind_host = get_or<std::string>(j, "bind_host", c.bind_host);
    c.udp_base_port = get_or(j, "udp_port", c.udp_base_port);
    if (j.contains("mqtt_url") && !j["mqtt_url"].is_null()) c.mqtt_url = j["mqtt_url"].get<std::string>();
    if (j.contains("ws_port")) {
      c.ws_port = j["ws_port"].is_null() ? std::nullopt : std::optional(j["ws_port"].get<std::uint16_t>());
    }
    c.reorder_window_s = get_or(j, "reorder_window_s", c.reorder_window_s);
    c.condition_plan = get_or(j, "condition_plan", c.condition_plan);
    if (j.contains("address_map")) {
      const auto& a = j["address_map"];
      c.address_map.eeg = get_or<std::string>(a, "eeg", c.address_map.eeg);
      c.address_map.accel = get_or<std::string>(a, "accel", c.address_map.accel);
      c.address_map.quality = get_or<std::string>(a, "quality", c.address_map.quality);
      c.address_map.poor_above = get_or(a, "poor_above", c.address_map.poor_above);
    }
    for (const auto& p : j.at("participants")) {
      ParticipantConfig pc;
      pc.id = p.at("id").get<std::string>();
      pc.group = get_or<std::string>(p, "group", "");
      pc.order = get_or(p, "order", std::vector<std::string>{});
      pc.udp_port = get_or(p, "udp_port", std::uint16_t{0});
      pc.mqtt_topic = get_or<std::string>(p, "mqtt_topic", "");
      c.participants.push_back(std::move(pc));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("bad recorder config: ") + e.what());
  }
  return c;
}

RecorderConfig load_recorder_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot read config " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return recorder_config_from_json(ss.str());
}

struct Recorder::Intake {
  struct Item {
    double device_ts;
    int kind;  // quality, accel, eeg: state updates sort before the frame they describe
    std::uint64_t seq;
    Fragment fragment;

    bool operator>(const Item& o) const {
      if (device_ts != o.device_ts) return device_ts > o.device_ts;
      if (kind != o.kind) return kind > o.kind;
      return seq > o.seq;
    }
  };

  std::size_t index = 0;
  ParticipantConfig cfg;
  net::UdpSocket socket;
  std::uint16_t port = 0;
  int eeg_stream = -1, acc_stream = -1, gaze_stream = -1;

  mutable std::mutex sync_mu;
  ClockSync eeg_sync, gaze_sync;

  std::vector<Item> heap;  // min-heap on (device_ts, kind, seq)
  std::uint64_t seq = 0;
  double newest_device = kNegInf;
  double last_released = kNegInf;
  double last_eeg_device = kNegInf;
  std::optional<std::pair<double, double>> last_accel;  // device_ts, magnitude
  std::array<Quality, kChannelCount> quality{};
  DecodeCounters counters;

  LiveBuffer live;
  mutable std::mutex stats_mu;
  IntakeStats stats;
  std::thread thread;
};

struct Recorder::Impl {
  std::unique_ptr<StreamWriter> writer;
  int events_stream = -1;
  std::vector<std::unique_ptr<Intake>> intakes;
  std::map<std::string, std::size_t> by_topic;
  std::unique_ptr<mqtt::Subscriber> gaze;
  std::unique_ptr<ws::Server> ws;
  std::thread live_thread;
  std::atomic<bool> running{false};
  bool started = false;
  std::optional<SessionManifest> final_manifest;
  SessionManifest base;

  std::mutex events_mu;
  std::map<std::string, std::string> active;  // participant -> block label
  std::set<std::string> labels_seen;

  std::mutex warn_mu;
  std::vector<std::string> warnings;
  std::size_t gaze_gaps = 0;

  void warn(std::string w) {
    std::lock_guard lock(warn_mu);
    warnings.push_back(std::move(w));
  }
};

Recorder::Recorder(RecorderConfig config, ReferenceClock clock)
    : config_(std::move(config)), clock_(clock), impl_(std::make_unique<Impl>()) {}

Recorder::~Recorder() {
  try {
    stop();
  } catch (...) {
  }
}

bool Recorder::failed() const { return impl_->writer && impl_->writer->failed(); }

void Recorder::start() {
  if (impl_->started) throw Error(ErrorCode::InvalidConfig, "recorder already started");
  if (config_.participants.empty()) throw Error(ErrorCode::InvalidConfig, "no participants configured");
  if (!(config_.sample_rate > 0.0)) throw Error(ErrorCode::InvalidConfig, "sample_rate must be positive");
  std::set<std::string> ids;
  for (const auto& p : config_.participants) {
    if (p.id.empty() || !ids.insert(p.id).second) {
      throw Error(ErrorCode::InvalidConfig, "participant ids must be unique and non-empty");
    }
  }

  // The output directory must take files before anything else happens.
  std::error_code ec;
  std::filesystem::create_directories(config_.out_dir, ec);
  const auto probe = config_.out_dir / ".write_probe";
  const int fd = ::open(probe.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw Error(ErrorCode::Io, "output directory " + config_.out_dir.string() + " is not writable");
  ::close(fd);
  std::filesystem::remove(probe, ec);

  auto& im = *impl_;
  im.writer = std::make_unique<StreamWriter>(config_.writer);
  SessionManifest& m = im.base;
  m.session_id = config_.session_id;
  m.created_at = utc_timestamp();
  m.sample_rate = config_.sample_rate;
  m.time_scale = clock_.time_scale();

  auto add_streams = [&] {
    for (std::size_t i = 0; i < config_.participants.size(); ++i) {
      auto in = std::make_unique<Intake>();
      in->index = i;
      in->cfg = config_.participants[i];
      if (in->cfg.mqtt_topic.empty()) in->cfg.mqtt_topic = "gaze/" + in->cfg.id;
      in->eeg_sync = ClockSync("eeg:" + in->cfg.id, config_.sync);
      in->gaze_sync = ClockSync("gaze:" + in->cfg.id, config_.sync);
      const auto& pid = in->cfg.id;
      const std::string eeg = "eeg_" + pid + ".csv", acc = "acc_" + pid + ".csv", gaze = "gaze_" + pid + ".csv";
      in->eeg_stream = im.writer->add_stream(config_.out_dir / eeg, eeg_stream_header());
      in->acc_stream = im.writer->add_stream(config_.out_dir / acc, accel_stream_header());
      in->gaze_stream = im.writer->add_stream(config_.out_dir / gaze, gaze_stream_header());
      m.streams.push_back({"eeg:" + pid, "eeg", pid, eeg, 0});
      m.streams.push_back({"acc:" + pid, "acc", pid, acc, 0});
      m.streams.push_back({"gaze:" + pid, "gaze", pid, gaze, 0});
      im.by_topic[in->cfg.mqtt_topic] = i;
      im.intakes.push_back(std::move(in));
    }
    im.events_stream = im.writer->add_stream(config_.out_dir / m.events_file, events_header());
    m.streams.push_back({"events", "events", "", m.events_file, 0});
  };
  try {
    add_streams();
  } catch (const Error& e) {
    SessionManifest failed = m;
    failed.status = "failed";
    failed.partial = true;
    failed.warnings.push_back(std::string("start failed: ") + e.what());
    write_manifest(failed, manifest_path());
    im.final_manifest = failed;
    throw;
  }

  for (auto& in : im.intakes) {
    const std::uint16_t want =
        in->cfg.udp_port != 0 ? in->cfg.udp_port
        : config_.udp_base_port != 0 ? static_cast<std::uint16_t>(config_.udp_base_port + in->index)
                                     : 0;
    in->socket = net::UdpSocket::bind(want, config_.bind_host);
    in->port = in->socket.local_port();
    m.participants.push_back({in->cfg.id, in->cfg.group, in->cfg.order, in->port, in->cfg.mqtt_topic});
  }
  m.condition_plan = config_.condition_plan;
  if (m.condition_plan.empty()) {
    m.condition_plan = {"EO", "EC"};
    for (const auto& p : config_.participants) {
      for (const auto& label : p.order) {
        if (std::find(m.condition_plan.begin(), m.condition_plan.end(), label) == m.condition_plan.end()) {
          m.condition_plan.push_back(label);
        }
      }
    }
  }
  write_manifest(m, manifest_path());
  im.started = true;

  try {
    if (config_.mqtt_url) {
      std::vector<std::string> topics;
      for (const auto& [topic, idx] : im.by_topic) topics.push_back(topic);
      mqtt::SubscriberCallbacks cb;
      cb.on_message = [this](const mqtt::Publish& p) {
        const double arrival = clock_.now();
        auto it = impl_->by_topic.find(p.topic);
        if (it == impl_->by_topic.end()) return;
        auto& in = *impl_->intakes[it->second];
        GazeSample g;
        try {
          g = decode_gaze_payload(std::string_view(reinterpret_cast<const char*>(p.payload.data()), p.payload.size()));
        } catch (const Error& e) {
          std::lock_guard lock(in.stats_mu);
          if (in.stats.gaze_decode_errors++ == 0) impl_->warn(in.cfg.id + ": " + e.what());
          return;
        }
        double t_ref;
        {
          std::lock_guard lock(in.sync_mu);
          in.gaze_sync.update(g.device_ts, arrival);
          t_ref = in.gaze_sync.map(g.device_ts);
        }
        impl_->writer->write(in.gaze_stream,
                             csv::format_row({format_double(t_ref), format_double(g.device_ts), format_double(g.gaze_x),
                                              format_double(g.gaze_y), format_double(g.confidence)}));
        std::lock_guard lock(in.stats_mu);
        ++in.stats.gaze_records;
      };
      cb.on_gap = [this](const std::string& reason) {
        {
          std::lock_guard lock(impl_->warn_mu);
          ++impl_->gaze_gaps;
        }
        write_event(kEventGap, "gaze: " + reason, "");
      };
      im.gaze = std::make_unique<mqtt::Subscriber>(mqtt::parse_url(*config_.mqtt_url),
                                                   "geeg-" + config_.session_id, topics, cb);
      im.gaze->start();
    }
    if (config_.ws_port) {
      ws::ServerOptions opt;
      opt.port = *config_.ws_port;
      opt.host = config_.bind_host;
      im.ws = std::make_unique<ws::Server>(opt, [this](const std::string& text) -> std::optional<std::string> {
        return handle_command(text);
      });
      im.ws->start();
    }
  } catch (const Error& e) {
    im.gaze.reset();
    im.ws.reset();
    im.warn(std::string("start failed: ") + e.what());
    im.writer->start();
    im.writer->stop();
    auto failed = build_manifest();
    failed.status = "failed";
    write_manifest(failed, manifest_path());
    im.final_manifest = failed;
    throw;
  }

  im.writer->start();
  im.running = true;

  for (auto& in_ptr : im.intakes) {
    Intake* in = in_ptr.get();
    in->thread = std::thread([this, in] {
      const double period = 1.0 / config_.sample_rate;
      std::vector<StreamWriter::Row> pending;  // handed to the writer once per release

      auto emit = [&](const Intake::Item& item) {
        const bool late = item.device_ts < in->last_released;
        in->last_released = std::max(in->last_released, item.device_ts);
        double t_ref;
        {
          std::lock_guard lock(in->sync_mu);
          t_ref = in->eeg_sync.map(item.device_ts);
        }
        std::lock_guard stats_lock(in->stats_mu);
        if (late) ++in->stats.late;
        if (const auto* q = std::get_if<QualityFragment>(&item.fragment)) {
          in->quality = q->quality;
        } else if (const auto* a = std::get_if<AccelFragment>(&item.fragment)) {
          in->last_accel = {{item.device_ts, a->magnitude}};
          ++in->stats.accel_samples;
          pending.emplace_back(in->acc_stream,
                               csv::format_row({format_double(t_ref), format_double(item.device_ts),
                                                format_sample(a->xyz[0]), format_sample(a->xyz[1]),
                                                format_sample(a->xyz[2]), format_double(a->magnitude)}));
        } else {
          const auto& e = std::get<EegFragment>(item.fragment);
          SampleFrame f;
          f.t_ref = t_ref;
          f.eeg = e.uv;
          f.device_quality = in->quality;
          if (in->last_accel && std::abs(item.device_ts - in->last_accel->first) <= config_.accel_stale_s) {
            f.accel_mag = in->last_accel->second;
          }
          if (!late) {
            const double jump = item.device_ts - in->last_eeg_device;
            if (std::isfinite(jump) && jump > period + 0.1) {
              ++in->stats.gaps;
              char buf[64];
              std::snprintf(buf, sizeof(buf), "eeg dropout %.3f s", jump - period);
              pending.emplace_back(impl_->events_stream,
                                   csv::format_row({format_double(t_ref), format_double(item.device_ts), in->cfg.id,
                                                    std::string(kEventGap), buf}));
            }
            in->last_eeg_device = item.device_ts;
          }
          ++in->stats.eeg_frames;
          pending.emplace_back(
              in->eeg_stream,
              csv::format_row({format_double(t_ref), format_double(item.device_ts), format_sample(e.uv[0]),
                               format_sample(e.uv[1]), format_sample(e.uv[2]), format_sample(e.uv[3]),
                               quality_field(f.device_quality[0]), quality_field(f.device_quality[1]),
                               quality_field(f.device_quality[2]), quality_field(f.device_quality[3]),
                               f.accel_mag ? format_double(*f.accel_mag) : std::string()}));
          in->live.push(f);
        }
      };

      auto release = [&](bool all) {
        const double horizon = in->newest_device - config_.reorder_window_s;
        while (!in->heap.empty() && (all || in->heap.front().device_ts <= horizon)) {
          std::pop_heap(in->heap.begin(), in->heap.end(), std::greater<>{});
          emit(in->heap.back());
          in->heap.pop_back();
        }
        impl_->writer->write(pending);
      };

      auto on_datagram = [&](const net::Datagram& d, double arrival) {
        std::vector<osc::Message> msgs;
        try {
          msgs = osc::parse_packet(d.bytes);
        } catch (const OscParseError& e) {
          std::lock_guard lock(in->stats_mu);
          if (in->stats.malformed++ == 0) impl_->warn(in->cfg.id + ": malformed OSC from " + d.source + ": " + e.what());
          return;
        }
        double newest = kNegInf;
        std::size_t bad = 0;
        for (const auto& m : msgs) {
          const double dev = m.time_tag == osc::kImmediate ? arrival : osc::from_time_tag(m.time_tag);
          std::optional<Fragment> f;
          try {
            f = decode_frame(m, config_.address_map, &in->counters);
          } catch (const Error& e) {
            if (bad++ == 0 && in->stats.bad_arity == 0) impl_->warn(in->cfg.id + ": " + e.what());
            continue;
          }
          if (!f) continue;
          const int kind = std::holds_alternative<QualityFragment>(*f) ? 0
                           : std::holds_alternative<AccelFragment>(*f) ? 1
                                                                        : 2;
          in->heap.push_back({dev, kind, in->seq++, std::move(*f)});
          std::push_heap(in->heap.begin(), in->heap.end(), std::greater<>{});
          newest = std::max(newest, dev);
        }
        {
          std::lock_guard lock(in->stats_mu);
          ++in->stats.datagrams;
          in->stats.bad_arity += bad;
          in->stats.unmapped = in->counters.unmapped;
        }
        if (std::isfinite(newest)) {
          std::lock_guard lock(in->sync_mu);
          in->eeg_sync.update(newest, arrival);
          in->newest_device = std::max(in->newest_device, newest);
        }
      };

      while (impl_->running && !impl_->writer->failed()) {
        try {
          if (auto d = in->socket.receive(20)) on_datagram(*d, clock_.now());
          release(false);
        } catch (const Error& e) {
          impl_->warn(in->cfg.id + ": intake error: " + e.what());
        }
      }
      try {
        while (auto d = in->socket.receive(0)) on_datagram(*d, clock_.now());
      } catch (const Error&) {
      }
      release(true);
    });
  }

  im.live_thread = std::thread([this] {
    const auto interval = std::chrono::duration<double>(1.0 / config_.live_rate_hz);
    auto next = std::chrono::steady_clock::now();
    bool failure_recorded = false;
    while (impl_->running) {
      next += std::chrono::duration_cast<std::chrono::steady_clock::duration>(interval);
      std::this_thread::sleep_until(next);
      if (!failure_recorded && impl_->writer->failed()) {
        // Leave a failed manifest on disk now; the process may not survive to stop().
        failure_recorded = true;
        try {
          write_manifest(build_manifest(), manifest_path());
        } catch (const Error& e) {
          impl_->warn(std::string("could not record failure: ") + e.what());
        }
      }
      if (!impl_->ws || impl_->ws->subscriber_count() == 0) continue;
      for (std::size_t i = 0; i < impl_->intakes.size(); ++i) impl_->ws->broadcast(live_frame(i));
    }
  });
}

SessionManifest Recorder::stop() {
  auto& im = *impl_;
  if (im.final_manifest) return *im.final_manifest;
  if (!im.started) throw Error(ErrorCode::InvalidConfig, "recorder was never started");
  im.running = false;
  for (auto& in : im.intakes) {
    if (in->thread.joinable()) in->thread.join();
  }
  if (im.gaze) im.gaze->stop();
  if (im.live_thread.joinable()) im.live_thread.join();
  if (im.ws) im.ws->stop();
  im.writer->stop();
  auto m = build_manifest();
  write_manifest(m, manifest_path());
  im.final_manifest = m;
  return m;
}

SessionManifest Recorder::build_manifest() const {
  auto& im = *impl_;
  SessionManifest m = im.base;
  for (auto& s : m.streams) {
    if (s.kind == "events") {
      s.rows = im.writer->rows(im.events_stream);
      continue;
    }
    for (const auto& in : im.intakes) {
      if (in->cfg.id != s.participant) continue;
      const int id = s.kind == "eeg" ? in->eeg_stream : s.kind == "acc" ? in->acc_stream : in->gaze_stream;
      s.rows = im.writer->rows(id);
    }
  }
  std::vector<std::string> warnings;
  for (const auto& in : im.intakes) {
    std::lock_guard lock(in->sync_mu);
    m.sync.push_back(in->eeg_sync.summary());
    if (in->gaze_sync.has_estimate()) m.sync.push_back(in->gaze_sync.summary());
    const auto st = stats(in->index);
    auto note = [&](std::size_t n, const std::string& what) {
      if (n > 0) warnings.push_back(in->cfg.id + ": " + std::to_string(n) + " " + what);
    };
    note(st.malformed, "malformed datagrams dropped");
    note(st.bad_arity, "messages with wrong arity dropped");
    note(st.late, "rows written after a later row (re-sort by t_ref)");
    note(st.gaps, "eeg gaps");
    note(st.gaze_decode_errors, "gaze payloads that failed to decode");
  }
  {
    std::lock_guard lock(im.warn_mu);
    warnings.insert(warnings.begin(), im.warnings.begin(), im.warnings.end());
  }
  {
    std::lock_guard lock(im.events_mu);
    for (const auto& label : im.labels_seen) {
      if (std::find(m.condition_plan.begin(), m.condition_plan.end(), label) == m.condition_plan.end()) {
        m.condition_plan.push_back(label);
        warnings.push_back("recorded label " + label + " was not in the condition plan");
      }
    }
  }
  bool files_ok = true;
  for (const auto& s : m.streams) {
    if (!std::filesystem::exists(config_.out_dir / s.file)) {
      files_ok = false;
      warnings.push_back("missing stream file " + s.file);
    }
  }
  if (const auto err = im.writer->error()) warnings.push_back("recording aborted: " + *err);
  m.warnings = std::move(warnings);
  const bool ok = !im.writer->failed() && files_ok;
  m.status = ok ? "complete" : "failed";
  m.partial = !ok;
  return m;
}

CommandResult Recorder::write_event(std::string_view kind, const std::string& label, const std::string& participant) {
  CommandResult r;
  r.ok = true;
  r.t_ref = clock_.now();
  r.kind = std::string(kind);
  r.label = label;
  r.participant = participant;
  impl_->writer->write(impl_->events_stream,
                       csv::format_row({format_double(r.t_ref), "", participant, r.kind, label}));
  return r;
}

namespace {

CommandResult rejected(std::string why) {
  CommandResult r;
  r.error = std::move(why);
  return r;
}

}  // namespace

CommandResult Recorder::mark_event(const std::string& label, const std::string& participant) {
  auto& im = *impl_;
  std::lock_guard lock(im.events_mu);
  if (!im.running) return rejected("recorder is not running");
  if (!participant.empty() && !im.base.participant(participant)) return rejected("unknown participant " + participant);
  return write_event(kEventMark, label, participant);
}

CommandResult Recorder::start_block(const std::string& label, const std::string& participant) {
  auto& im = *impl_;
  std::lock_guard lock(im.events_mu);
  if (!im.running) return rejected("recorder is not running");
  try {
    parse_label(label);
  } catch (const Error& e) {
    return rejected(e.what());
  }
  if (!participant.empty() && !im.base.participant(participant)) return rejected("unknown participant " + participant);
  for (const auto& in : im.intakes) {
    const auto& pid = in->cfg.id;
    if (!participant.empty() && pid != participant) continue;
    if (auto it = im.active.find(pid); it != im.active.end()) {
      return rejected("block " + it->second + " already active for " + pid);
    }
  }
  for (const auto& in : im.intakes) {
    if (participant.empty() || in->cfg.id == participant) im.active[in->cfg.id] = label;
  }
  im.labels_seen.insert(label);
  return write_event(kEventBlockStart, label, participant);
}

CommandResult Recorder::stop_block(const std::string& participant) {
  auto& im = *impl_;
  std::lock_guard lock(im.events_mu);
  if (!im.running) return rejected("recorder is not running");
  if (!participant.empty()) {
    auto it = im.active.find(participant);
    if (it == im.active.end()) return rejected("no active block for " + participant);
    const std::string label = it->second;
    im.active.erase(it);
    return write_event(kEventBlockStop, label, participant);
  }
  if (im.active.empty()) return rejected("no active block");
  std::set<std::string> labels;
  for (const auto& [pid, label] : im.active) labels.insert(label);
  CommandResult r;
  if (labels.size() == 1 && im.active.size() == im.intakes.size()) {
    r = write_event(kEventBlockStop, *labels.begin(), "");
  } else {
    for (const auto& [pid, label] : im.active) r = write_event(kEventBlockStop, label, pid);
  }
  im.active.clear();
  return r;
}

std::string Recorder::handle_command(const std::string& text) {
  json ack{{"type", "ack"}, {"id", nullptr}};
  CommandResult r;
  try {
    const json j = json::parse(text);
    if (j.contains("id")) ack["id"] = j["id"];
    const std::string type = j.at("type").get<std::string>();
    const std::string participant = get_or<std::string>(j, "participant", "");
    if (type == "mark_event") {
      r = mark_event(j.at("label").get<std::string>(), participant);
    } else if (type == "start_block") {
      r = start_block(j.at("label").get<std::string>(), participant);
    } else if (type == "stop_block") {
      r = stop_block(participant);
    } else {
      r = rejected("unknown command type " + type);
    }
  } catch (const json::exception& e) {
    r = rejected(std::string("bad command: ") + e.what());
  }
  ack["ok"] = r.ok;
  if (r.ok) {
    ack["event"] = {{"t_ref", r.t_ref}, {"kind", r.kind}, {"label", r.label}, {"participant", r.participant}};
  } else {
    ack["error"] = r.error;
  }
  return ack.dump();
}

std::uint16_t Recorder::udp_port(std::size_t participant) const { return impl_->intakes.at(participant)->port; }

std::uint16_t Recorder::ws_port() const { return impl_->ws ? impl_->ws->port() : 0; }

std::size_t Recorder::ws_clients() const { return impl_->ws ? impl_->ws->client_count() : 0; }

std::string Recorder::live_frame(std::size_t participant) const {
  const auto& in = *impl_->intakes.at(participant);
  LiveContext ctx;
  ctx.participant_id = in.cfg.id;
  ctx.sample_rate = config_.sample_rate;
  {
    std::lock_guard lock(in.sync_mu);
    ctx.sync = in.eeg_sync.summary();
  }
  {
    std::lock_guard lock(impl_->events_mu);
    if (auto it = impl_->active.find(in.cfg.id); it != impl_->active.end()) ctx.active_condition = it->second;
  }
  return live_frame_json(in.live.snapshot(), ctx);
}

IntakeStats Recorder::stats(std::size_t participant) const {
  const auto& in = *impl_->intakes.at(participant);
  std::lock_guard lock(in.stats_mu);
  return in.stats;
}

ClockSyncSummary Recorder::eeg_sync(std::size_t participant) const {
  const auto& in = *impl_->intakes.at(participant);
  std::lock_guard lock(in.sync_mu);
  return in.eeg_sync.summary();
}

}  // namespace geeg
