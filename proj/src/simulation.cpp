#include "geeg/simulation.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "geeg/error.hpp"

namespace geeg::synth {
namespace {

using json = nlohmann::json;

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  return j[key].get<T>();
}

ArousalCohortSpec cohort_spec(const json& j) {
  ArousalCohortSpec s;
  s.per_group = get_or(j, "per_group", s.per_group);
  s.immersive_arousal = get_or(j, "immersive_arousal", s.immersive_arousal);
  s.display_arousal = get_or(j, "display_arousal", s.display_arousal);
  s.within_sd = get_or(j, "within_sd", s.within_sd);
  s.original_arousal = get_or(j, "original_arousal", s.original_arousal);
  s.eo_arousal = get_or(j, "eo_arousal", s.eo_arousal);
  s.faa_sd = get_or(j, "faa_sd", s.faa_sd);
  s.scale_sd = get_or(j, "scale_sd", s.scale_sd);
  s.alpha_uv2 = get_or(j, "alpha_uv2", s.alpha_uv2);
  s.ec_alpha_gain = get_or(j, "ec_alpha_gain", s.ec_alpha_gain);
  s.seed = get_or(j, "seed", s.seed);
  if (j.contains("protocol")) {
    const auto& p = j["protocol"];
    s.protocol.eo_s = get_or(p, "eo_s", s.protocol.eo_s);
    s.protocol.ec_s = get_or(p, "ec_s", s.protocol.ec_s);
    s.protocol.block_s = get_or(p, "block_s", s.protocol.block_s);
    s.protocol.pause_s = get_or(p, "pause_s", s.protocol.pause_s);
  }
  return s;
}

ReplayParticipant segment_participant(const json& j, std::vector<ReplayCommand>& commands) {
  GeneratorSpec g;
  g.duration_s = get_or(j, "duration_s", g.duration_s);
  g.noise_std_uv = get_or(j, "noise_std_uv", g.noise_std_uv);
  g.accel_noise = get_or(j, "accel_noise", 0.02);
  g.seed = get_or(j, "seed", g.seed);
  if (j.contains("amplitudes")) {
    const auto rows = j["amplitudes"].get<std::vector<std::vector<double>>>();
    if (rows.size() != kChannelCount) throw Error(ErrorCode::InvalidSpec, "amplitudes needs one row per channel");
    for (std::size_t c = 0; c < kChannelCount; ++c) {
      if (rows[c].size() != kBandCount) throw Error(ErrorCode::InvalidSpec, "amplitudes rows need one value per band");
      for (std::size_t b = 0; b < kBandCount; ++b) g.amplitudes[c][b] = rows[c][b];
    }
  } else {
    std::array<double, kBandCount> powers{};
    const json bp = get_or(j, "band_power", json::object());
    for (std::size_t b = 0; b < kBandCount; ++b) {
      powers[b] = get_or(bp, std::string(kCanonicalBands[b].name).c_str(), 0.0);
    }
    g.amplitudes = amplitudes_for(powers, get_or(j, "faa", 0.0));
  }
  for (const auto& s : get_or(j, "spikes", json::array())) {
    g.artifacts.spikes.push_back({s.at("t_s").get<double>(), get_or(s, "channel", std::size_t{0}),
                                  get_or(s, "amplitude_uv", 150.0)});
  }
  for (const auto& b : get_or(j, "blinks", json::array())) {
    g.artifacts.blinks.push_back(
        {b.at("t_s").get<double>(), get_or(b, "amplitude_uv", 150.0), get_or(b, "duration_s", 0.3)});
  }
  for (const auto& m : get_or(j, "movements", json::array())) {
    g.artifacts.movements.push_back({m.at("t_s").get<double>(), get_or(m, "duration_s", 1.0),
                                     get_or(m, "accel_peak", 6.0), get_or(m, "eeg_noise_uv", 40.0)});
  }
  const auto generated = generate(g);

  ReplayParticipant p;
  p.id = get_or<std::string>(j, "participant", "P01");
  p.frames = to_replay_frames(generated.segment, generated.accel_xyz);
  const double gaze_hz = get_or(j, "gaze_hz", 0.0);
  if (gaze_hz < 0.0) throw Error(ErrorCode::InvalidSpec, "gaze_hz must be >= 0");
  if (gaze_hz > 0.0) {
    // Slow figure-eight across the screen.
    for (double t = 0.0; t < g.duration_s; t += 1.0 / gaze_hz) {
      p.gaze.push_back({t, 0.5 + 0.4 * std::sin(0.5 * t), 0.5 + 0.3 * std::sin(t), 0.95});
    }
  }
  if (j.contains("label")) {
    const std::string label = j["label"].get<std::string>();
    parse_label(label);
    json start{{"type", "start_block"}, {"label", label}, {"participant", p.id}};
    json stop{{"type", "stop_block"}, {"participant", p.id}};
    commands.push_back({0.0, start.dump()});
    commands.push_back({p.frames.empty() ? 0.0 : p.frames.back().t, stop.dump()});
  }
  return p;
}

}  // namespace

Simulation simulation_from_json(const std::string& text) {
  Simulation sim;
  try {
    const json j = json::parse(text);
    sim.kind = j.at("kind").get<std::string>();
    sim.time_scale = get_or(j, "time_scale", sim.time_scale);
    if (!(sim.time_scale > 0.0)) throw Error(ErrorCode::InvalidSpec, "time_scale must be positive");
    if (j.contains("latency_ms")) {
      const auto l = j["latency_ms"].get<std::vector<double>>();
      if (l.size() != 2) throw Error(ErrorCode::InvalidSpec, "latency_ms needs [min, max]");
      sim.options.latency_min_s = l[0] / 1000.0;
      sim.options.latency_max_s = l[1] / 1000.0;
    }
    sim.options.frames_per_datagram = get_or(j, "frames_per_datagram", sim.options.frames_per_datagram);
    sim.options.device_clock_offset_s = get_or(j, "device_clock_offset_s", sim.options.device_clock_offset_s);
    sim.options.seed = get_or(j, "replay_seed", sim.options.seed);

    if (sim.kind == "cohort") {
      const auto subjects = arousal_cohort(cohort_spec(get_or(j, "cohort", json::object())));
      sim.session = render_cohort(subjects);
      for (const auto& s : subjects) sim.assignments.push_back(s.assignment);
    } else if (sim.kind == "segment") {
      sim.session.participants.push_back(segment_participant(get_or(j, "segment", json::object()), sim.session.commands));
    } else {
      throw Error(ErrorCode::InvalidSpec, "unknown simulation kind '" + sim.kind + "'");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidSpec, std::string("bad simulation spec: ") + e.what());
  }
  return sim;
}

Simulation load_simulation(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::InvalidSpec, "cannot read simulation spec " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return simulation_from_json(ss.str());
}

}  // namespace geeg::synth
