#include "geeg/cohort.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <random>

#include "geeg/error.hpp"

namespace geeg::synth {
namespace {

double on_grid(double t, double fs) { return std::round(t * fs) / fs; }

}  // namespace

std::vector<ReplayFrame> render_frames(const SubjectPlan& subject, const CohortOptions& options) {
  if (subject.segments.empty()) throw Error(ErrorCode::InvalidSpec, "subject has no planned segments");
  const double fs = options.sample_rate;
  const auto& segs = subject.segments;
  const std::size_t n = segs.size();
  std::vector<double> edge(n + 1);
  edge[0] = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    const double end_prev = segs[i - 1].plan.start_s + segs[i - 1].plan.duration_s;
    edge[i] = on_grid(options.lead_s + 0.5 * (end_prev + segs[i].plan.start_s), fs);
  }
  edge[n] = on_grid(options.lead_s + segs[n - 1].plan.start_s + segs[n - 1].plan.duration_s + options.lead_s, fs);

  std::vector<ReplayFrame> out;
  for (std::size_t i = 0; i < n; ++i) {
    GeneratorSpec spec;
    spec.amplitudes = amplitudes_for(segs[i].powers, segs[i].faa);
    spec.noise_std_uv = subject.noise_std_uv;
    spec.accel_noise = subject.accel_noise;
    spec.sample_rate = fs;
    spec.t0_s = edge[i];
    spec.duration_s = edge[i + 1] - edge[i];
    spec.seed = subject.seed * 1000003u + i;
    spec.phase_seed = subject.seed;
    const auto g = generate(spec);
    auto frames = to_replay_frames(g.segment, g.accel_xyz);
    // Keep accelerometer updates on the global frame grid.
    const std::size_t base = out.size();
    for (std::size_t k = 0; k < frames.size(); ++k) {
      frames[k].t += edge[i];
      if ((base + k) % 5 != 0) {
        frames[k].accel.reset();
      } else if (!frames[k].accel) {
        frames[k].accel = std::array<float, 3>{static_cast<float>(g.accel_xyz[k][0]),
                                               static_cast<float>(g.accel_xyz[k][1]),
                                               static_cast<float>(g.accel_xyz[k][2])};
      }
    }
    out.insert(out.end(), frames.begin(), frames.end());
  }
  return out;
}

std::vector<ReplayCommand> render_commands(const SubjectPlan& subject, const CohortOptions& options) {
  std::vector<ReplayCommand> out;
  const auto& id = subject.assignment.participant_id;
  for (const auto& s : subject.segments) {
    nlohmann::json start{{"type", "start_block"}, {"label", s.plan.label}, {"participant", id}};
    nlohmann::json stop{{"type", "stop_block"}, {"participant", id}};
    out.push_back({options.lead_s + s.plan.start_s, start.dump()});
    out.push_back({options.lead_s + s.plan.start_s + s.plan.duration_s, stop.dump()});
  }
  return out;
}

ReplaySession render_cohort(const std::vector<SubjectPlan>& subjects, const CohortOptions& options) {
  ReplaySession session;
  for (const auto& s : subjects) {
    ReplayParticipant p;
    p.id = s.assignment.participant_id;
    p.frames = render_frames(s, options);
    session.participants.push_back(std::move(p));
    auto cmds = render_commands(s, options);
    session.commands.insert(session.commands.end(), cmds.begin(), cmds.end());
  }
  std::stable_sort(session.commands.begin(), session.commands.end(),
                   [](const ReplayCommand& a, const ReplayCommand& b) { return a.t < b.t; });
  return session;
}

std::vector<SubjectPlan> arousal_cohort(const ArousalCohortSpec& spec) {
  if (spec.per_group == 0 || spec.within_sd < 0.0 || spec.alpha_uv2 <= 0.0) {
    throw Error(ErrorCode::InvalidSpec, "arousal cohort needs subjects, a positive alpha power and sd >= 0");
  }
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < 2 * spec.per_group; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "S%02zu", i + 1);
    ids.emplace_back(buf);
  }
  const auto balance = counterbalance(ids, spec.seed);
  std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ull);
  std::normal_distribution<double> z(0.0, 1.0);

  // Non-alpha bands as fractions of alpha, except beta which carries arousal.
  auto powers = [&](double alpha, double arousal) {
    std::array<double, kBandCount> p{};
    p[index(Band::Delta)] = 0.8 * alpha;
    p[index(Band::Theta)] = 0.6 * alpha;
    p[index(Band::Alpha)] = alpha;
    p[index(Band::Beta)] = arousal * alpha;
    p[index(Band::Gamma)] = 0.1 * alpha;
    return p;
  };

  std::vector<SubjectPlan> out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    SubjectPlan s;
    s.assignment = balance.assignments[i];
    s.seed = spec.seed * 7919u + i + 1;
    const double mean =
        s.assignment.group == Group::DisplayGroup ? spec.display_arousal : spec.immersive_arousal;
    const double target = std::max(0.2, mean + spec.within_sd * z(rng));
    const double scale = std::exp(spec.scale_sd * z(rng));
    const double faa = spec.faa_sd * z(rng);
    const double alpha = spec.alpha_uv2 * scale;
    for (auto& plan : protocol_timeline(s.assignment, spec.protocol)) {
      SegmentTruth t;
      t.faa = faa;
      if (plan.label == "EO") {
        t.powers = powers(1.2 * alpha, spec.eo_arousal);
      } else if (plan.label == "EC") {
        t.powers = powers(1.2 * alpha * spec.ec_alpha_gain, spec.eo_arousal / spec.ec_alpha_gain);
      } else {
        const auto label = std::get<ConditionLabel>(parse_label(plan.label));
        t.powers = label.modality == Modality::OriginalArtwork ? powers(alpha, spec.original_arousal)
                                                               : powers(alpha, target);
      }
      t.plan = std::move(plan);
      s.segments.push_back(std::move(t));
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace geeg::synth
