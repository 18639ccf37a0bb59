#include "geeg/replay.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <queue>
#include <random>
#include <set>

#include <json.hpp>

#include "geeg/error.hpp"
#include "geeg/mqtt.hpp"
#include "geeg/osc.hpp"
#include "geeg/recorder.hpp"
#include "geeg/websocket.hpp"

namespace geeg::synth {
namespace {

enum class Kind { Datagram, Gaze, Command };

struct Event {
  double at;  // reference time
  Kind kind;
  std::size_t participant;
  std::size_t first, last;  // frame range, gaze index, or command index
  std::uint64_t seq;

  bool operator>(const Event& o) const { return at != o.at ? at > o.at : seq > o.seq; }
};

osc::Bundle frame_bundle(const ReplayFrame& f, double device_ts, bool with_quality, const AddressMap& map) {
  osc::Bundle b;
  b.time_tag = osc::to_time_tag(device_ts);
  if (f.accel) b.elements.push_back(osc::Message::make(map.accel, {(*f.accel)[0], (*f.accel)[1], (*f.accel)[2]}));
  if (with_quality) {
    b.elements.push_back(osc::Message::make(map.quality, {f.horseshoe[0], f.horseshoe[1], f.horseshoe[2], f.horseshoe[3]}));
  }
  b.elements.push_back(osc::Message::make(map.eeg, {f.eeg[0], f.eeg[1], f.eeg[2], f.eeg[3]}));
  return b;
}

}  // namespace

std::vector<ReplayFrame> to_replay_frames(const Segment& seg, const std::vector<std::array<double, 3>>& accel_xyz,
                                          std::size_t accel_every) {
  std::vector<ReplayFrame> out;
  out.reserve(seg.size());
  const double t_first = seg.empty() ? 0.0 : seg.frames.front().t_ref;
  for (std::size_t i = 0; i < seg.size(); ++i) {
    ReplayFrame f;
    f.t = seg.frames[i].t_ref - t_first;
    for (std::size_t c = 0; c < kChannelCount; ++c) {
      f.eeg[c] = static_cast<float>(seg.frames[i].eeg[c]);
      f.horseshoe[c] = seg.frames[i].device_quality[c] == Quality::Poor ? 4.0f : 1.0f;
    }
    if (accel_every > 0 && i % accel_every == 0 && i < accel_xyz.size()) {
      f.accel = std::array<float, 3>{static_cast<float>(accel_xyz[i][0]), static_cast<float>(accel_xyz[i][1]),
                                     static_cast<float>(accel_xyz[i][2])};
    }
    out.push_back(f);
  }
  return out;
}

ReplaySummary replay(const ReplaySession& session, const ReferenceClock& clock, const ReplayOptions& opt) {
  if (opt.frames_per_datagram == 0 || opt.latency_min_s < 0.0 || opt.latency_max_s < opt.latency_min_s) {
    throw Error(ErrorCode::InvalidConfig, "bad replay options");
  }

  // Preflight: every endpoint must be reachable before the first packet.
  std::vector<net::UdpSocket> sockets;
  for (const auto& p : session.participants) sockets.push_back(net::UdpSocket::connect(p.osc_target));
  const bool any_gaze = std::any_of(session.participants.begin(), session.participants.end(),
                                    [](const ReplayParticipant& p) { return !p.gaze.empty(); });
  std::optional<mqtt::Client> publisher;
  if (any_gaze) {
    if (!opt.mqtt_broker) throw Error(ErrorCode::InvalidConfig, "gaze samples need an MQTT broker");
    publisher = mqtt::Client::connect(*opt.mqtt_broker, {"geeg-replay", 30, true});
  }
  std::optional<ws::Client> operator_link;
  if (!session.commands.empty()) {
    if (!opt.ws_endpoint) throw Error(ErrorCode::InvalidConfig, "commands need a WebSocket endpoint");
    // Command-only link: live frames would cost both ends for nothing.
    operator_link = ws::Client::connect(*opt.ws_endpoint, "/live?frames=off");
  }

  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> latency(opt.latency_min_s, opt.latency_max_s);
  ReplaySummary summary;
  summary.t0 = clock.now() + opt.lead_in_s;
  summary.latency_min_s = std::numeric_limits<double>::infinity();
  summary.latency_max_s = 0.0;
  double latency_sum = 0.0;

  std::priority_queue<Event, std::vector<Event>, std::greater<>> events;
  std::uint64_t seq = 0;
  for (std::size_t p = 0; p < session.participants.size(); ++p) {
    const auto& part = session.participants[p];
    for (std::size_t first = 0; first < part.frames.size(); first += opt.frames_per_datagram) {
      const std::size_t last = std::min(part.frames.size(), first + opt.frames_per_datagram);
      const double lat = latency(rng);
      latency_sum += lat;
      summary.latency_min_s = std::min(summary.latency_min_s, lat);
      summary.latency_max_s = std::max(summary.latency_max_s, lat);
      events.push({summary.t0 + part.frames[last - 1].t + lat, Kind::Datagram, p, first, last, seq++});
    }
    for (std::size_t g = 0; g < part.gaze.size(); ++g) {
      events.push({summary.t0 + part.gaze[g].t + latency(rng), Kind::Gaze, p, g, g, seq++});
    }
  }
  for (std::size_t c = 0; c < session.commands.size(); ++c) {
    events.push({summary.t0 + session.commands[c].t, Kind::Command, 0, c, c, seq++});
  }

  std::set<std::size_t> awaiting;
  auto collect_acks = [&](int timeout_ms) {
    while (auto reply = operator_link->receive(timeout_ms)) {
      timeout_ms = 0;
      if (reply->find("\"ack\"") == std::string::npos) continue;
      const auto r = nlohmann::json::parse(*reply);
      if (r.value("type", "") != "ack") continue;
      const auto id = r.value("id", std::size_t{0});
      if (awaiting.erase(id) == 0) continue;
      if (!r.value("ok", false)) summary.command_errors.push_back(session.commands[id].json + ": " + r.value("error", ""));
    }
  };

  while (!events.empty()) {
    const Event e = events.top();
    events.pop();
    clock.sleep_until(e.at);
    switch (e.kind) {
      case Kind::Datagram: {
        const auto& part = session.participants[e.participant];
        osc::Bundle outer;
        for (std::size_t i = e.first; i < e.last; ++i) {
          const auto& f = part.frames[i];
          const bool quality = i == e.first || f.horseshoe != part.frames[i - 1].horseshoe;
          outer.elements.push_back(
              frame_bundle(f, summary.t0 + f.t + opt.device_clock_offset_s, quality, opt.address_map));
        }
        sockets[e.participant].send(osc::serialize(osc::Packet{std::move(outer)}));
        ++summary.datagrams;
        summary.frames += e.last - e.first;
        break;
      }
      case Kind::Gaze: {
        const auto& part = session.participants[e.participant];
        const auto& g = part.gaze[e.first];
        const std::string payload = encode_gaze_payload(
            {summary.t0 + g.t + opt.device_clock_offset_s, g.gaze_x, g.gaze_y, g.confidence});
        const std::string topic = part.gaze_topic.empty() ? "gaze/" + part.id : part.gaze_topic;
        publisher->publish(topic, std::span(reinterpret_cast<const std::uint8_t*>(payload.data()), payload.size()), 1);
        publisher->poll(0);
        ++summary.gaze_messages;
        break;
      }
      case Kind::Command: {
        // Acks are collected as they arrive so a burst of commands keeps its timing.
        const auto& cmd = session.commands[e.first];
        nlohmann::json j = nlohmann::json::parse(cmd.json);
        j["id"] = e.first;
        operator_link->send_text(j.dump());
        ++summary.commands;
        awaiting.insert(e.first);
        break;
      }
    }
    if (operator_link && !awaiting.empty()) collect_acks(0);
  }
  for (int tries = 0; tries < 200 && !awaiting.empty(); ++tries) collect_acks(20);
  for (const auto id : awaiting) summary.command_errors.push_back(session.commands[id].json + ": no acknowledgement");
  if (publisher) {
    publisher->flush(2000);
    publisher->disconnect();
  }
  if (operator_link) operator_link->close();
  const std::size_t n_dgrams = summary.datagrams;
  summary.latency_mean_s = n_dgrams ? latency_sum / static_cast<double>(n_dgrams) : 0.0;
  if (n_dgrams == 0) summary.latency_min_s = 0.0;
  return summary;
}

}  // namespace geeg::synth
