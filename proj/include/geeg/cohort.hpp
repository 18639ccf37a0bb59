#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "geeg/replay.hpp"
#include "geeg/session.hpp"
#include "geeg/synth.hpp"

namespace geeg::synth {

// Intended channel-mean band powers (µV²) and FAA for one planned segment.
struct SegmentTruth {
  PlannedSegment plan;
  std::array<double, kBandCount> powers{};
  double faa = 0.0;
};

struct SubjectPlan {
  GroupAssignment assignment;
  std::vector<SegmentTruth> segments;  // ascending start
  double noise_std_uv = 2.0;
  double accel_noise = 0.02;
  std::uint64_t seed = 0;
};

struct CohortOptions {
  double sample_rate = kNominalSampleRate;
  double lead_s = 0.5;  // data before the first and after the last segment
};

// Continuous frames across the whole timeline. Each segment's band
// structure holds up to the middle of the neighbouring pauses; one phase
// seed per subject keeps the sinusoids continuous across changes.
std::vector<ReplayFrame> render_frames(const SubjectPlan& subject, const CohortOptions& options = {});

// Operator commands marking every planned segment of the subject.
std::vector<ReplayCommand> render_commands(const SubjectPlan& subject, const CohortOptions& options = {});

// Participants (targets left empty) and the merged, time-ordered commands.
ReplaySession render_cohort(const std::vector<SubjectPlan>& subjects, const CohortOptions& options = {});

// Cohort whose interpretive-segment arousal differs between groups:
// per-subject targets ~ N(group mean, within_sd), FAA ~ N(0, faa_sd) with no
// modality effect, and per-subject power scale ~ lognormal(0, scale_sd).
struct ArousalCohortSpec {
  std::size_t per_group = 10;
  double immersive_arousal = 2.0;
  double display_arousal = 3.0;
  double within_sd = 0.5;
  double original_arousal = 1.5;
  double eo_arousal = 1.0;
  double faa_sd = 0.1;
  double scale_sd = 0.3;
  double alpha_uv2 = 20.0;  // interpretive alpha before subject scaling
  double ec_alpha_gain = 2.0;
  // 1 s above the minimum segment length absorbs late operator commands
  ProtocolConfig protocol{5.0, 0.0, 5.0, 0.5};
  std::uint64_t seed = 0;
};

std::vector<SubjectPlan> arousal_cohort(const ArousalCohortSpec& spec);

}  // namespace geeg::synth
