#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "geeg/artifact.hpp"
#include "geeg/engagement.hpp"
#include "geeg/filter.hpp"
#include "geeg/manifest.hpp"
#include "geeg/spectral.hpp"
#include "geeg/stats.hpp"
#include "geeg/types.hpp"

namespace geeg {

// ---- protocol ------------------------------------------------------------

enum class Group { ImmersiveGroup, DisplayGroup };

std::string_view to_string(Group g) noexcept;
Group parse_group(std::string_view text);  // InvalidSpec
constexpr Modality interpretive_modality(Group g) noexcept {
  return g == Group::ImmersiveGroup ? Modality::ImmersiveProjection : Modality::DisplayVideo;
}

// Three viewing blocks alternating between the original and the group's
// interpretive content. Order 0 opens with the original, order 1 with the
// interpretation.
inline constexpr int kOrderCount = 2;
std::vector<ConditionLabel> block_order(Group g, int order);

struct GroupAssignment {
  std::string participant_id;
  Group group = Group::ImmersiveGroup;
  int order_index = 0;
  std::vector<ConditionLabel> order;
};

struct Counterbalance {
  std::vector<GroupAssignment> assignments;  // input order
  bool balanced = true;
  std::vector<std::string> notes;  // why not, when unbalanced
};

// Seeded shuffle, then groups alternate and, within each group, orders
// alternate starting on opposite orders so totals also balance. Odd counts
// leave a +-1 imbalance, flagged in the result.
Counterbalance counterbalance(const std::vector<std::string>& participants, std::uint64_t seed);

// Durations are defaults for planning and simulation; the operator's marks
// define the analysed segments.
struct ProtocolConfig {
  double eo_s = 60.0;
  double ec_s = 60.0;
  double block_s = 60.0;
  double pause_s = 5.0;  // between consecutive segments
};

// Full labelled plan for one participant: EO, EC, then the blocks.
std::vector<std::string> condition_plan(const GroupAssignment& a);

struct PlannedSegment {
  std::string label;
  double start_s = 0.0;
  double duration_s = 0.0;
};

// EO, EC and the blocks laid end to end with pauses, starting at 0.
std::vector<PlannedSegment> protocol_timeline(const GroupAssignment& a, const ProtocolConfig& p = {});

// ---- recorded data -------------------------------------------------------

struct RecordedEvent {
  double t_ref = 0.0;
  std::string participant;  // empty: everyone
  std::string kind;         // mark, block_start, block_stop, gap
  std::string label;
};

struct ParticipantRecording {
  std::string id;
  std::vector<SampleFrame> frames;  // file order
  bool truncated_tail = false;
};

struct LoadedSession {
  SessionManifest manifest;
  std::vector<ParticipantRecording> participants;
  std::vector<RecordedEvent> events;
};

// Reads every EEG stream and the event log of a manifest. Missing or
// unparseable files throw FileLoad naming the file.
LoadedSession load_session(const SessionManifest& manifest);

// A labelled stretch of one participant's recording, as marked by the
// operator. Blocks started for everyone apply to every participant.
struct MarkedSegment {
  std::string participant;
  std::string label;
  double t_start = 0.0;
  double t_stop = 0.0;
  bool closed = true;  // false: recording ended before block_stop
};

std::vector<MarkedSegment> marked_segments(const LoadedSession& session);

// ---- analysis ------------------------------------------------------------

struct AnalyzeOptions {
  double min_segment_s = 4.0;
  std::size_t min_valid_samples = 100;
  PreprocessConfig preprocess;
  ArtifactThresholds thresholds;
  SpectralConfig spectral;
  IcaOptions ica;
  bool use_ica = true;
  // Participants without an accepted EO segment normally abort the run.
  bool skip_missing_baseline = false;
};

struct LogEntry {
  std::string participant;
  std::string segment_id;
  std::string label;
  std::string kind;  // rejected, ica_removed, ica_skipped, trimmed, unterminated, z_degenerate, skipped
  std::string detail;
  std::size_t valid_samples = 0;
};

struct SegmentAnalysis {
  MarkedSegment marked;
  std::string segment_id;  // "<participant>/<label>#<n>"
  bool accepted = false;
  std::optional<BandPowerTable> table;
};

struct SessionAnalysis {
  std::vector<EngagementRecord> records;  // accepted task segments
  std::vector<BaselineRecord> baselines;  // one per participant with an EO
  std::vector<SegmentAnalysis> segments;  // every marked segment, in order
  std::vector<LogEntry> log;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
};

// One marked segment through gap splitting, preprocessing, artifact
// gating, ICA and band powers. Never throws for data problems; a rejection
// is reported through `log`.
SegmentAnalysis analyze_segment(const MarkedSegment& marked, std::span<const SampleFrame> frames,
                                double sample_rate, const std::string& segment_id, const AnalyzeOptions& options,
                                std::vector<LogEntry>& log);

// Throws EmptySession (no EEG rows or no marked segments), MissingBaseline
// (naming the participant), FileLoad.
SessionAnalysis analyze_session(const SessionManifest& manifest, const AnalyzeOptions& options = {});

std::string log_entry_json(const LogEntry& e);
void write_log(const std::filesystem::path& path, const std::vector<LogEntry>& log);

// ---- contrasts -----------------------------------------------------------

enum class AnalysisUnit { Aggregated, Segment };
std::string_view to_string(AnalysisUnit u) noexcept;

inline constexpr std::string_view kNoReliableModulation = "no reliable modulation";

struct Contrast {
  std::string name;
  std::string kind;     // between, within
  std::string metric;   // record CSV column
  std::string group_a;  // between: DisplayGroup; within: the interpretive modality
  std::string group_b;  // between: ImmersiveGroup; within: OriginalArtwork
  AnalysisUnit unit = AnalysisUnit::Aggregated;
  std::optional<TestResult> result;
  std::size_t n_a = 0, n_b = 0;
  double mean_a = 0.0, mean_b = 0.0;
  bool significant = false;
  std::string label;
  std::string error;  // set when the test could not be run
};

struct ContrastReport {
  double alpha = 0.05;
  std::size_t display_subjects = 0, immersive_subjects = 0;
  std::vector<Contrast> contrasts;  // aggregated unit, then segment unit
  std::vector<std::string> notes;

  const Contrast* find(std::string_view name, AnalysisUnit unit = AnalysisUnit::Aggregated) const;
};

struct CompareOptions {
  double alpha = 0.05;
  bool include_segment_unit = true;
};

// Between groups: Arousal_Index and Arousal_Index_Corrected (Welch),
// Relative_Alpha_Fraction (Mann-Whitney), FAA (Welch). Within each group,
// interpretive vs OriginalArtwork (paired t): Alpha/Gamma_Mean_Corrected,
// Theta/Alpha/Delta_Mean_Corrected_Z, FAA. Group membership follows the
// interpretive modality a subject saw. Throws InsufficientCell naming the
// first contrast with fewer than two subjects in a cell.
ContrastReport compare_modalities(const std::vector<EngagementRecord>& records, const CompareOptions& options = {});

inline constexpr std::string_view kReportSchema = "gallery-eeg/report";
inline constexpr int kReportVersion = 1;

// Versioned JSON; see README for the layout.
std::string report_json(const ContrastReport& report, const SessionAnalysis* analysis = nullptr);

}  // namespace geeg
