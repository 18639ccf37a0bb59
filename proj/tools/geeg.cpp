#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "geeg/broker.hpp"
#include "geeg/engagement.hpp"
#include "geeg/error.hpp"
#include "geeg/manifest.hpp"
#include "geeg/recorder.hpp"
#include "geeg/session.hpp"
#include "geeg/simulation.hpp"

namespace fs = std::filesystem;
using namespace geeg;

namespace {

std::atomic<bool> interrupted{false};

void on_signal(int) { interrupted = true; }

void wait_for_signal(double max_s) {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  const auto until = std::chrono::steady_clock::now() + std::chrono::duration<double>(max_s);
  while (!interrupted && (max_s <= 0.0 || std::chrono::steady_clock::now() < until)) {
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
}

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  out << text << '\n';
  if (!out) throw Error(ErrorCode::Io, "cannot write " + file.string());
}

struct RecordArgs {
  std::string config, out, mqtt_url;
  int udp_port = -1, ws_port = -1;
  double time_scale = 0.0, duration_s = 0.0;
};

int run_record(const RecordArgs& a) {
  auto cfg = load_recorder_config(a.config);
  if (!a.out.empty()) cfg.out_dir = a.out;
  if (a.udp_port >= 0) cfg.udp_base_port = static_cast<std::uint16_t>(a.udp_port);
  if (!a.mqtt_url.empty()) cfg.mqtt_url = a.mqtt_url;
  if (a.ws_port >= 0) cfg.ws_port = static_cast<std::uint16_t>(a.ws_port);
  if (a.time_scale > 0.0) cfg.time_scale = a.time_scale;

  Recorder rec(cfg, ReferenceClock(cfg.time_scale));
  rec.start();
  for (std::size_t i = 0; i < cfg.participants.size(); ++i) {
    std::cout << cfg.participants[i].id << " osc udp " << rec.udp_port(i) << '\n';
  }
  if (cfg.ws_port) std::cout << "live ws://" << cfg.bind_host << ':' << rec.ws_port() << "/live\n";
  std::cout << "recording to " << cfg.out_dir.string() << " (Ctrl-C to stop)" << std::endl;
  wait_for_signal(a.duration_s);
  const auto m = rec.stop();
  std::cout << "status " << m.status << (m.partial ? " (partial)" : "") << '\n';
  for (const auto& s : m.streams) std::cout << "  " << s.file << ' ' << s.rows << " rows\n";
  for (const auto& w : m.warnings) std::cout << "  warning: " << w << '\n';
  return m.status == "complete" ? 0 : 1;
}

struct SimulateArgs {
  std::string spec, target, ws, mqtt;
  double time_scale = 0.0;
};

int run_simulate(const SimulateArgs& a) {
  auto sim = synth::load_simulation(a.spec);
  const auto target = net::parse_endpoint(a.target);
  for (std::size_t i = 0; i < sim.session.participants.size(); ++i) {
    sim.session.participants[i].osc_target = {target.host, static_cast<std::uint16_t>(target.port + i)};
  }
  if (!a.ws.empty()) sim.options.ws_endpoint = net::parse_endpoint(a.ws);
  if (!a.mqtt.empty()) sim.options.mqtt_broker = net::parse_endpoint(a.mqtt);
  if (a.time_scale > 0.0) sim.time_scale = a.time_scale;
  for (const auto& g : sim.assignments) {
    std::cout << g.participant_id << ' ' << to_string(g.group) << " order " << g.order_index << '\n';
  }
  const auto s = synth::replay(sim.session, ReferenceClock(sim.time_scale), sim.options);
  nlohmann::ordered_json j{{"datagrams", s.datagrams},
                           {"frames", s.frames},
                           {"gaze_messages", s.gaze_messages},
                           {"commands", s.commands},
                           {"command_errors", s.command_errors},
                           {"latency_s", {{"mean", s.latency_mean_s}, {"min", s.latency_min_s}, {"max", s.latency_max_s}}}};
  std::cout << j.dump(2) << '\n';
  return s.command_errors.empty() ? 0 : 1;
}

struct AnalyzeArgs {
  std::vector<std::string> manifests;
  std::string out;
  double alpha = 0.05;
  bool skip_missing_baseline = false;
};

int run_analyze(const AnalyzeArgs& a) {
  AnalyzeOptions opt;
  opt.skip_missing_baseline = a.skip_missing_baseline;
  SessionAnalysis all;
  std::set<std::string> subjects;
  for (const auto& path : a.manifests) {
    const auto m = read_manifest(path);
    auto r = analyze_session(m, opt);
    for (const auto& p : m.participants) {
      if (!subjects.insert(p.id).second) {
        throw Error(ErrorCode::InvalidSpec, "participant " + p.id + " appears in more than one manifest");
      }
    }
    std::cout << path << ": " << r.segments.size() << " segments, " << r.accepted << " accepted, " << r.rejected
              << " rejected\n";
    all.records.insert(all.records.end(), r.records.begin(), r.records.end());
    all.baselines.insert(all.baselines.end(), r.baselines.begin(), r.baselines.end());
    all.segments.insert(all.segments.end(), r.segments.begin(), r.segments.end());
    all.log.insert(all.log.end(), r.log.begin(), r.log.end());
    all.accepted += r.accepted;
    all.rejected += r.rejected;
  }
  const fs::path out = a.out.empty() ? fs::path(a.manifests.front()).parent_path() / "analysis" : fs::path(a.out);
  fs::create_directories(out);
  write_records_csv(out / "records.csv", all.records);
  write_log(out / "rejections.jsonl", all.log);
  std::cout << "wrote " << (out / "records.csv").string() << " and " << (out / "rejections.jsonl").string() << '\n';

  CompareOptions copt;
  copt.alpha = a.alpha;
  const auto report = compare_modalities(all.records, copt);
  write_text(out / "report.json", report_json(report, &all));
  std::cout << "wrote " << (out / "report.json").string() << '\n';
  return 0;
}

struct ReportArgs {
  std::string records, out;
  double alpha = 0.05;
};

int run_report(const ReportArgs& a) {
  CompareOptions opt;
  opt.alpha = a.alpha;
  const auto report = compare_modalities(read_records_csv(a.records), opt);
  const std::string text = report_json(report);
  if (a.out.empty()) {
    std::cout << text << '\n';
  } else {
    write_text(a.out, text);
  }
  for (const auto& c : report.contrasts) {
    if (c.unit != AnalysisUnit::Aggregated) continue;
    std::cerr << c.name << ": " << c.label;
    if (c.result) std::cerr << " (p=" << c.result->p_two_sided << ')';
    std::cerr << '\n';
  }
  return 0;
}

int run_broker(const std::string& host, int port) {
  mqtt::BrokerOptions opt;
  opt.host = host;
  opt.port = static_cast<std::uint16_t>(port);
  mqtt::Broker broker(opt);
  broker.start();
  std::cout << "mqtt broker on " << host << ':' << broker.port() << " (Ctrl-C to stop)" << std::endl;
  wait_for_signal(0.0);
  broker.stop();
  std::cout << "published " << broker.published() << ", delivered " << broker.delivered() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gallery EEG acquisition and analysis"};
  app.require_subcommand(1);

  RecordArgs rec;
  auto* record = app.add_subcommand("record", "Run the acquisition service until interrupted");
  record->add_option("--config", rec.config, "Recorder config JSON")->required()->check(CLI::ExistingFile);
  record->add_option("--out", rec.out, "Output directory (overrides config)");
  record->add_option("--udp-port", rec.udp_port, "First participant's OSC port; 0 picks free ports");
  record->add_option("--mqtt-url", rec.mqtt_url, "Gaze broker host:port");
  record->add_option("--ws-port", rec.ws_port, "Live WebSocket port");
  record->add_option("--time-scale", rec.time_scale, "Reference clock speed-up");
  record->add_option("--duration", rec.duration_s, "Stop after this many wall seconds");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Replay a synthetic session to a recorder");
  simulate->add_option("--spec", sim.spec, "Simulation spec JSON")->required()->check(CLI::ExistingFile);
  simulate->add_option("--target", sim.target, "OSC host:port of the first participant")->required();
  simulate->add_option("--ws", sim.ws, "Recorder live endpoint host:port, for operator commands");
  simulate->add_option("--mqtt", sim.mqtt, "Broker host:port, for gaze");
  simulate->add_option("--time-scale", sim.time_scale, "Overrides the spec's time_scale");

  AnalyzeArgs ana;
  auto* analyze = app.add_subcommand("analyze", "Records, rejection log and contrast report from sessions");
  analyze->add_option("manifest", ana.manifests, "manifest.json of each session")->required()->check(CLI::ExistingFile);
  analyze->add_option("--out", ana.out, "Output directory (default: <first manifest dir>/analysis)");
  analyze->add_option("--alpha", ana.alpha, "Significance threshold");
  analyze->add_flag("--skip-missing-baseline", ana.skip_missing_baseline,
                    "Drop participants without an EO baseline instead of failing");

  ReportArgs rep;
  auto* report = app.add_subcommand("report", "Contrast report from a records CSV");
  report->add_option("records", rep.records, "records.csv")->required()->check(CLI::ExistingFile);
  report->add_option("--out", rep.out, "Write report JSON here instead of stdout");
  report->add_option("--alpha", rep.alpha, "Significance threshold");

  std::string broker_host = "0.0.0.0";
  int broker_port = 1883;
  auto* broker = app.add_subcommand("broker", "Minimal MQTT broker for gaze streams");
  broker->add_option("--host", broker_host, "Bind address");
  broker->add_option("--port", broker_port, "TCP port");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*record) return run_record(rec);
    if (*simulate) return run_simulate(sim);
    if (*analyze) return run_analyze(ana);
    if (*report) return run_report(rep);
    if (*broker) return run_broker(broker_host, broker_port);
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
