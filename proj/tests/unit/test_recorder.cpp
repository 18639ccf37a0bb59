#include <catch2/catch_amalgamated.hpp>

#include <json.hpp>

#include <csignal>
#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <thread>

#include "geeg/broker.hpp"
#include "geeg/error.hpp"
#include "geeg/manifest.hpp"
#include "geeg/net.hpp"
#include "geeg/recorder.hpp"
#include "geeg/replay.hpp"
#include "geeg/synth.hpp"
#include "support/expect.hpp"
#include "support/recording.hpp"

using namespace geeg;
using json = nlohmann::json;

namespace {

constexpr double kScale = 2.0;  // reference seconds per wall second

RecorderConfig two_participants(const std::filesystem::path& out) {
  RecorderConfig c;
  c.session_id = "unit";
  c.out_dir = out;
  c.bind_host = "127.0.0.1";
  c.udp_base_port = 0;
  c.ws_port = std::nullopt;
  c.participants = {{"P01", "ImmersiveGroup", {"OriginalArtwork:1", "ImmersiveProjection:2"}, 0, ""},
                    {"P02", "DisplayGroup", {"DisplayVideo:1", "OriginalArtwork:2"}, 0, ""}};
  return c;
}

synth::ReplayParticipant participant(const std::string& id, std::uint16_t port, double seconds, std::uint64_t seed) {
  synth::GeneratorSpec spec;
  for (auto& ch : spec.amplitudes) {
    ch = {4.0, 4.0, 20.0, 3.0, 1.0};
  }
  spec.noise_std_uv = 1.0;
  spec.duration_s = seconds;
  spec.seed = seed;
  const auto g = synth::generate(spec);
  synth::ReplayParticipant p;
  p.id = id;
  p.osc_target = {"127.0.0.1", port};
  p.frames = synth::to_replay_frames(g.segment, g.accel_xyz);
  return p;
}

std::size_t data_rows(const std::filesystem::path& f) { return oracle::read_csv(f).rows.size(); }

}  // namespace

TEST_CASE("replayed two-participant session is recorded in full", "[recorder][integration]") {
  oracle::TempDir dir;
  mqtt::Broker broker(mqtt::BrokerOptions{});
  broker.start();

  auto cfg = two_participants(dir.path());
  cfg.mqtt_url = "mqtt://127.0.0.1:" + std::to_string(broker.port());
  cfg.ws_port = 0;
  const ReferenceClock clock(kScale);
  Recorder rec(cfg, clock);
  rec.start();

  synth::ReplaySession s;
  s.participants.push_back(participant("P01", rec.udp_port(0), 10.0, 1));
  s.participants.push_back(participant("P02", rec.udp_port(1), 10.0, 2));
  for (int k = 0; k < 300; ++k) s.participants[0].gaze.push_back({k / 30.0, 0.5, 0.25, 0.9});
  auto cmd = [](double t, json j) { return synth::ReplayCommand{t, j.dump()}; };
  s.commands = {cmd(1.0, {{"type", "start_block"}, {"label", "OriginalArtwork:1"}}),
                cmd(1.5, {{"type", "start_block"}, {"label", "ImmersiveProjection:2"}}),  // already active
                cmd(3.0, {{"type", "mark_event"}, {"label", "looked away"}, {"participant", "P01"}}),
                cmd(6.0, {{"type", "stop_block"}}),
                cmd(7.0, {{"type", "stop_block"}})};  // nothing active

  synth::ReplayOptions opt;
  opt.mqtt_broker = net::Endpoint{"127.0.0.1", broker.port()};
  opt.ws_endpoint = net::Endpoint{"127.0.0.1", rec.ws_port()};
  opt.seed = 3;
  const auto summary = synth::replay(s, clock, opt);
  CHECK(summary.frames == 2 * 2560);
  CHECK(summary.gaze_messages == 300);
  CHECK(summary.commands == 5);
  CHECK(summary.command_errors.size() == 2);
  CHECK(summary.latency_min_s >= 0.010);
  CHECK(summary.latency_max_s <= 0.050);

  // Give the reorder window and the gaze subscription time to drain.
  std::this_thread::sleep_for(std::chrono::milliseconds(400));
  const auto live = json::parse(rec.live_frame(0));
  CHECK(live["type"] == "live");
  CHECK(live["participant_id"] == "P01");
  CHECK(live["dominant_band"] == "alpha");
  CHECK(live["trace"].is_object());

  std::array<ClockSyncSummary, 2> sync{rec.eeg_sync(0), rec.eeg_sync(1)};
  const auto m = rec.stop();
  broker.stop();

  CHECK(m.status == "complete");
  CHECK_FALSE(m.partial);
  for (std::size_t i = 0; i < 2; ++i) {
    INFO("participant " << i << " offset " << sync[i].offset);
    CHECK(sync[i].offset >= 0.010);
    CHECK(sync[i].offset <= 0.050);
  }

  for (const std::string pid : {"P01", "P02"}) {
    const auto eeg = oracle::read_csv(dir / ("eeg_" + pid + ".csv"));
    INFO(pid << " rows " << eeg.rows.size());
    CHECK(std::abs(static_cast<double>(eeg.rows.size()) - 2560.0) <= 0.02 * 2560.0);
    CHECK(eeg.header == eeg_stream_header());
    CHECK(eeg.ragged == 0);
    CHECK(eeg.bad_time == 0);
    CHECK_FALSE(eeg.torn_tail);
    // t_ref is nondecreasing once the reorder window has re-sorted arrivals.
    double last = -1e300;
    std::size_t backwards = 0;
    for (const auto& r : eeg.rows) {
      const double t = std::stod(r[0]);
      backwards += t < last ? 1 : 0;
      last = t;
    }
    CHECK(backwards == 0);
  }
  CHECK(data_rows(dir / "gaze_P01.csv") == 300);
  const auto empty_gaze = oracle::read_csv(dir / "gaze_P02.csv");
  CHECK(empty_gaze.header == gaze_stream_header());
  CHECK(empty_gaze.rows.empty());

  const auto events = oracle::read_csv(dir / "events.csv");
  REQUIRE(events.rows.size() == 3);
  CHECK(events.rows[0][3] == "block_start");
  CHECK(events.rows[0][4] == "OriginalArtwork:1");
  CHECK(events.rows[1][2] == "P01");
  CHECK(events.rows[1][3] == "mark");
  CHECK(events.rows[1][4] == "looked away");
  CHECK(events.rows[2][3] == "block_stop");
  CHECK(events.rows[2][2] == "");

  const auto on_disk = read_manifest(dir / "manifest.json");
  for (const auto& st : on_disk.streams) {
    INFO(st.file);
    CHECK(st.rows == data_rows(dir / st.file));
  }
  CHECK(on_disk.status == "complete");
}

TEST_CASE("operator commands are validated", "[recorder]") {
  oracle::TempDir dir;
  Recorder rec(two_participants(dir.path()), ReferenceClock(kScale));
  rec.start();
  CHECK(rec.stop_block().ok == false);
  CHECK(rec.start_block("OriginalArtwork:1", "P01").ok);
  CHECK_FALSE(rec.start_block("ImmersiveProjection:2", "P01").ok);
  CHECK(rec.start_block("DisplayVideo:1", "P02").ok);
  CHECK(rec.mark_event("EO").ok);
  const auto ack = json::parse(rec.handle_command(R"({"type":"stop_block","participant":"P01","id":7})"));
  CHECK(ack["ok"] == true);
  CHECK(ack["id"] == 7);
  CHECK(ack["event"]["kind"] == "block_stop");
  const auto bad = json::parse(rec.handle_command(R"({"type":"explode"})"));
  CHECK(bad["ok"] == false);
  CHECK(json::parse(rec.handle_command("not json"))["ok"] == false);
  const auto m = rec.stop();
  // Stopping P02 at shutdown is the operator's job; the open block stays open in the log.
  const auto events = oracle::read_csv(dir / "events.csv");
  CHECK(events.rows.size() == 4);
  CHECK(m.status == "complete");
}

TEST_CASE("unusable output directory fails before any socket opens", "[recorder]") {
  auto probe = net::UdpSocket::bind(0, "127.0.0.1");
  const std::uint16_t port = probe.local_port();
  probe = net::UdpSocket{};

  auto cfg = two_participants("/proc/geeg-not-writable");
  cfg.udp_base_port = port;
  Recorder rec(cfg);
  CHECK_THROWS_CODE(rec.start(), ErrorCode::Io);
  CHECK_NOTHROW(net::UdpSocket::bind(port, "127.0.0.1"));
}

TEST_CASE("a full disk at start leaves a failed manifest", "[recorder]") {
  oracle::TempDir dir;
  std::filesystem::create_symlink("/dev/full", dir / "eeg_P01.csv");
  Recorder rec(two_participants(dir.path()));
  CHECK_THROWS_CODE(rec.start(), ErrorCode::Io);
  const auto m = read_manifest(dir / "manifest.json");
  CHECK(m.status == "failed");
  CHECK(m.partial);
  REQUIRE_FALSE(m.warnings.empty());
}

TEST_CASE("unreachable replay targets are reported before sending", "[recorder][replay]") {
  synth::ReplaySession s;
  s.participants.push_back(participant("P01", 5000, 1.0, 1));
  s.participants[0].osc_target = {"nonexistent.invalid", 5000};
  CHECK_THROWS_CODE(synth::replay(s, ReferenceClock(kScale), {}), ErrorCode::NetworkUnreachable);

  auto listener = net::TcpListener::bind(0, "127.0.0.1");
  const auto closed_port = listener.local_port();
  listener = net::TcpListener{};
  s.participants[0].osc_target = {"127.0.0.1", 5000};
  s.participants[0].gaze.push_back({0.1, 0.5, 0.5, 1.0});
  synth::ReplayOptions opt;
  opt.mqtt_broker = net::Endpoint{"127.0.0.1", closed_port};
  CHECK_THROWS_CODE(synth::replay(s, ReferenceClock(kScale), opt), ErrorCode::ConnectionRefused);
}

namespace {

// Runs a recorder plus replay in a child process; the child never calls stop().
pid_t record_in_child(const std::filesystem::path& out, double seconds, rlim_t file_limit) {
  const pid_t pid = ::fork();
  if (pid != 0) return pid;
  if (file_limit != RLIM_INFINITY) {
    ::signal(SIGXFSZ, SIG_IGN);
    rlimit lim{file_limit, file_limit};
    ::setrlimit(RLIMIT_FSIZE, &lim);
  }
  try {
    const ReferenceClock clock(kScale);
    auto* rec = new Recorder(two_participants(out), clock);  // leaked: no orderly shutdown
    rec->start();
    synth::ReplaySession s;
    s.participants.push_back(participant("P01", rec->udp_port(0), seconds, 4));
    s.participants.push_back(participant("P02", rec->udp_port(1), seconds, 5));
    synth::replay(s, clock, {});
    std::this_thread::sleep_for(std::chrono::milliseconds(500));
    std::_Exit(rec->failed() ? 10 : 0);
  } catch (...) {
    std::_Exit(20);
  }
}

}  // namespace

TEST_CASE("SIGKILL during recording leaves parseable files and a partial manifest", "[recorder][crash]") {
  oracle::TempDir dir;
  const pid_t child = record_in_child(dir.path(), 20.0, RLIM_INFINITY);
  REQUIRE(child > 0);
  std::this_thread::sleep_for(std::chrono::milliseconds(3000));
  ::kill(child, SIGKILL);
  int status = 0;
  ::waitpid(child, &status, 0);
  REQUIRE(WIFSIGNALED(status));

  const auto m = read_manifest(dir / "manifest.json");
  CHECK(m.status == "recording");
  CHECK(m.partial);
  for (const auto& st : m.streams) {
    const auto d = oracle::read_csv(dir / st.file);
    INFO(st.file);
    CHECK_FALSE(d.header.empty());
    CHECK(d.ragged == 0);
    CHECK(d.bad_time == 0);
    CHECK_FALSE(d.torn_tail);
  }
  // At 2x, about 6 reference seconds were streamed; flushed rows must be on disk.
  CHECK(data_rows(dir / "eeg_P01.csv") > 256);
}

TEST_CASE("write failure mid-recording marks the manifest failed", "[recorder][crash]") {
  oracle::TempDir dir;
  const pid_t child = record_in_child(dir.path(), 8.0, 48 * 1024);
  REQUIRE(child > 0);
  int status = 0;
  ::waitpid(child, &status, 0);
  REQUIRE(WIFEXITED(status));
  CHECK(WEXITSTATUS(status) == 10);

  const auto m = read_manifest(dir / "manifest.json");
  CHECK(m.status == "failed");
  CHECK(m.partial);
  bool mentions = false;
  for (const auto& w : m.warnings) mentions = mentions || w.find("recording aborted") != std::string::npos;
  CHECK(mentions);
  // Rows before the failure still parse; a torn final line is possible and is ignored.
  const auto eeg = oracle::read_csv(dir / "eeg_P01.csv");
  CHECK(eeg.ragged == 0);
  CHECK(eeg.rows.size() > 100);
}
