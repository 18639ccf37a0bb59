#include "geeg/session.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <set>

#include "geeg/csv.hpp"
#include "geeg/error.hpp"
#include "geeg/format.hpp"

namespace geeg {
namespace {

using ojson = nlohmann::ordered_json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

ojson number(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

}  // namespace

// ---- protocol ------------------------------------------------------------

std::string_view to_string(Group g) noexcept {
  return g == Group::ImmersiveGroup ? "ImmersiveGroup" : "DisplayGroup";
}

Group parse_group(std::string_view text) {
  if (text == "ImmersiveGroup") return Group::ImmersiveGroup;
  if (text == "DisplayGroup") return Group::DisplayGroup;
  throw Error(ErrorCode::InvalidSpec, "unknown group '" + std::string(text) + "'");
}

std::vector<ConditionLabel> block_order(Group g, int order) {
  if (order < 0 || order >= kOrderCount) {
    throw Error(ErrorCode::InvalidSpec, "order index " + std::to_string(order) + " out of range");
  }
  const Modality interp = interpretive_modality(g);
  std::vector<ConditionLabel> out;
  for (int block = 1; block <= 3; ++block) {
    const bool original = (block % 2 == 1) == (order == 0);
    out.push_back(ConditionLabel::make(original ? Modality::OriginalArtwork : interp, block));
  }
  return out;
}

Counterbalance counterbalance(const std::vector<std::string>& participants, std::uint64_t seed) {
  std::set<std::string> seen;
  for (const auto& p : participants) {
    if (p.empty() || !seen.insert(p).second) {
      throw Error(ErrorCode::InvalidSpec, "participant ids must be unique and non-empty");
    }
  }
  // Fisher-Yates on raw engine output; the engine sequence is fixed by the
  // standard, distributions are not.
  std::vector<std::size_t> perm(participants.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng() % i]);

  Counterbalance out;
  out.assignments.resize(participants.size());
  std::array<std::array<int, kOrderCount>, 2> counts{};
  for (std::size_t k = 0; k < perm.size(); ++k) {
    auto& a = out.assignments[perm[k]];
    const std::size_t g = k % 2;
    a.participant_id = participants[perm[k]];
    a.group = g == 0 ? Group::ImmersiveGroup : Group::DisplayGroup;
    a.order_index = static_cast<int>((k / 2 + g) % kOrderCount);
    a.order = block_order(a.group, a.order_index);
    ++counts[g][static_cast<std::size_t>(a.order_index)];
  }
  const int size0 = counts[0][0] + counts[0][1], size1 = counts[1][0] + counts[1][1];
  if (size0 != size1) {
    out.balanced = false;
    out.notes.push_back("group sizes differ: ImmersiveGroup " + std::to_string(size0) + ", DisplayGroup " +
                        std::to_string(size1));
  }
  for (std::size_t g = 0; g < 2; ++g) {
    if (counts[g][0] != counts[g][1]) {
      out.balanced = false;
      out.notes.push_back(std::string(to_string(g == 0 ? Group::ImmersiveGroup : Group::DisplayGroup)) +
                          " order counts differ: " + std::to_string(counts[g][0]) + " vs " +
                          std::to_string(counts[g][1]));
    }
  }
  return out;
}

std::vector<std::string> condition_plan(const GroupAssignment& a) {
  std::vector<std::string> plan{"EO", "EC"};
  for (const auto& c : a.order) plan.push_back(format_label(c));
  return plan;
}

std::vector<PlannedSegment> protocol_timeline(const GroupAssignment& a, const ProtocolConfig& p) {
  if (!(p.eo_s > 0.0) || !(p.ec_s >= 0.0) || !(p.block_s > 0.0) || !(p.pause_s >= 0.0)) {
    throw Error(ErrorCode::InvalidSpec, "protocol durations must be positive");
  }
  std::vector<PlannedSegment> out;
  double t = 0.0;
  auto add = [&](std::string label, double d) {
    if (d <= 0.0) return;
    out.push_back({std::move(label), t, d});
    t += d + p.pause_s;
  };
  add("EO", p.eo_s);
  add("EC", p.ec_s);
  for (const auto& c : a.order) add(format_label(c), p.block_s);
  return out;
}

// ---- recorded data -------------------------------------------------------

namespace {

double cell_double(const csv::Table& t, const std::vector<std::string>& row, std::size_t col,
                   const std::filesystem::path& file, std::size_t line) {
  const auto v = parse_double(row.at(col));
  if (!v || !std::isfinite(*v)) {
    throw Error(ErrorCode::FileLoad, file.string() + ": line " + std::to_string(line) + ": bad " +
                                         t.header[col] + " value '" + row.at(col) + "'");
  }
  return *v;
}

std::filesystem::path stream_path(const SessionManifest& m, const std::string& file) {
  return m.directory.empty() ? std::filesystem::path(file) : m.directory / file;
}

}  // namespace

LoadedSession load_session(const SessionManifest& manifest) {
  LoadedSession s;
  s.manifest = manifest;
  for (const auto& p : manifest.participants) {
    const StreamInfo* info = manifest.stream("eeg:" + p.id);
    if (!info) throw Error(ErrorCode::FileLoad, "manifest lists no EEG stream for " + p.id);
    const auto file = stream_path(manifest, info->file);
    const auto table = csv::read_file(file);
    const std::size_t t_col = table.column("t_ref");
    std::array<std::size_t, kChannelCount> uv{}, q{};
    for (std::size_t c = 0; c < kChannelCount; ++c) {
      uv[c] = table.column(kChannelNames[c]);
      q[c] = table.column("q_" + std::string(kChannelNames[c]));
    }
    const std::size_t acc_col = table.column("accel_mag");

    ParticipantRecording rec;
    rec.id = p.id;
    rec.truncated_tail = table.truncated_tail;
    rec.frames.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      const auto& row = table.rows[r];
      const std::size_t line = r + 2;
      if (row.size() != table.header.size()) {
        throw Error(ErrorCode::FileLoad, file.string() + ": line " + std::to_string(line) + " has " +
                                             std::to_string(row.size()) + " fields");
      }
      SampleFrame f;
      f.t_ref = cell_double(table, row, t_col, file, line);
      for (std::size_t c = 0; c < kChannelCount; ++c) {
        f.eeg[c] = cell_double(table, row, uv[c], file, line);
        f.device_quality[c] = row[q[c]] == "1" ? Quality::Poor : Quality::Good;
      }
      if (!row[acc_col].empty()) f.accel_mag = cell_double(table, row, acc_col, file, line);
      rec.frames.push_back(f);
    }
    s.participants.push_back(std::move(rec));
  }

  const auto events_file = stream_path(manifest, manifest.events_file);
  const auto events = csv::read_file(events_file);
  const std::size_t t_col = events.column("t_ref"), p_col = events.column("participant"),
                    k_col = events.column("kind"), l_col = events.column("label");
  for (std::size_t r = 0; r < events.rows.size(); ++r) {
    const auto& row = events.rows[r];
    if (row.size() != events.header.size()) {
      throw Error(ErrorCode::FileLoad, events_file.string() + ": line " + std::to_string(r + 2) + " is malformed");
    }
    s.events.push_back({cell_double(events, row, t_col, events_file, r + 2), row[p_col], row[k_col], row[l_col]});
  }
  std::stable_sort(s.events.begin(), s.events.end(),
                   [](const RecordedEvent& a, const RecordedEvent& b) { return a.t_ref < b.t_ref; });
  return s;
}

std::vector<MarkedSegment> marked_segments(const LoadedSession& session) {
  std::vector<MarkedSegment> out;
  for (const auto& p : session.participants) {
    std::optional<MarkedSegment> open;
    auto close = [&](double t, bool closed) {
      if (!open) return;
      open->t_stop = t;
      open->closed = closed;
      out.push_back(*open);
      open.reset();
    };
    for (const auto& e : session.events) {
      if (!e.participant.empty() && e.participant != p.id) continue;
      if (e.kind == "block_start") {
        close(e.t_ref, false);
        open = MarkedSegment{p.id, e.label, e.t_ref, e.t_ref, true};
      } else if (e.kind == "block_stop") {
        close(e.t_ref, true);
      }
    }
    double end = open ? open->t_start : 0.0;
    for (const auto& f : p.frames) end = std::max(end, f.t_ref);
    close(std::nextafter(end, INFINITY), false);
  }
  return out;
}

// ---- analysis ------------------------------------------------------------

namespace {

SegmentAnalysis reject(SegmentAnalysis s, std::vector<LogEntry>& log, std::string why, std::size_t valid = 0) {
  s.accepted = false;
  s.table.reset();
  log.push_back({s.marked.participant, s.segment_id, s.marked.label, "rejected", std::move(why), valid});
  return s;
}

std::string seconds(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f s", v);
  return buf;
}

}  // namespace

SegmentAnalysis analyze_segment(const MarkedSegment& marked, std::span<const SampleFrame> frames,
                                double sample_rate, const std::string& segment_id, const AnalyzeOptions& options,
                                std::vector<LogEntry>& log) {
  SegmentAnalysis out;
  out.marked = marked;
  out.segment_id = segment_id;
  auto note = [&](std::string kind, std::string detail) {
    log.push_back({marked.participant, segment_id, marked.label, std::move(kind), std::move(detail), 0});
  };

  SegmentLabel label;
  try {
    label = parse_label(marked.label);
  } catch (const Error& e) {
    return reject(out, log, e.what());
  }
  if (!marked.closed) note("unterminated", "no block_stop; segment ends at " + seconds(marked.t_stop));

  std::vector<SampleFrame> inside;
  for (const auto& f : frames) {
    if (f.t_ref >= marked.t_start && f.t_ref < marked.t_stop) inside.push_back(f);
  }
  inside = order_frames(std::move(inside));
  if (inside.empty()) return reject(out, log, "no EEG samples inside the marked interval");

  // A dropout splits the segment; the longest continuous run is analysed.
  auto pieces = split_on_gaps(inside, sample_rate);
  std::size_t best = 0;
  for (std::size_t i = 1; i < pieces.size(); ++i) {
    if (pieces[i].size() > pieces[best].size()) best = i;
  }
  if (pieces.size() > 1) {
    note("trimmed", std::to_string(pieces.size()) + " pieces after gaps; kept " +
                        std::to_string(pieces[best].size()) + " of " + std::to_string(inside.size()) + " samples");
  }

  Segment seg;
  seg.id = segment_id;
  seg.sample_rate = sample_rate;
  seg.frames = std::move(pieces[best]);
  seg.label = label;
  if (seg.duration() < options.min_segment_s) {
    return reject(out, log, "shorter than " + seconds(options.min_segment_s) + " (" + seconds(seg.duration()) + ")");
  }

  try {
    validate(seg);
    Segment pre = preprocess(seg, options.preprocess);

    std::vector<QualityMask> masks;
    masks.push_back(flag_device(seg));
    try {
      masks.push_back(flag_movement(seg, options.thresholds));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::MissingAccelStream) throw;
      return reject(out, log, e.what());
    }
    masks.push_back(flag_amplitude(pre, options.thresholds));
    masks.push_back(flag_gradient(seg, options.thresholds));
    const auto outcome = combine_and_validate(masks, options.min_valid_samples);
    if (!outcome.accepted) {
      return reject(out, log, "only " + std::to_string(outcome.valid_samples) + " valid samples",
                    outcome.valid_samples);
    }

    if (options.use_ica && pre.size() >= options.ica.min_samples) {
      try {
        const auto ica = run_ica(pre, options.ica);
        if (!ica.removed.empty()) {
          std::string what;
          for (auto i : ica.removed) {
            if (!what.empty()) what += ", ";
            what += "component " + std::to_string(i) + " (" + ica.assessments[i].criterion + ")";
          }
          note("ica_removed", what);
          pre = apply_ica(pre, ica);
        }
      } catch (const Error& e) {
        note("ica_skipped", e.what());
      }
    }

    auto table = segment_band_powers(pre, outcome.mask, options.spectral);
    table.subject_id = marked.participant;
    table.segment_id = segment_id;
    table.condition = marked.label;
    out.table = table;
    out.accepted = true;
    return out;
  } catch (const Error& e) {
    return reject(out, log, e.what());
  }
}

SessionAnalysis analyze_session(const SessionManifest& manifest, const AnalyzeOptions& options) {
  const LoadedSession loaded = load_session(manifest);
  std::size_t rows = 0;
  for (const auto& p : loaded.participants) rows += p.frames.size();
  if (rows == 0) throw Error(ErrorCode::EmptySession, "session " + manifest.session_id + " has no EEG rows");
  const auto marked = marked_segments(loaded);
  if (marked.empty()) throw Error(ErrorCode::EmptySession, "session " + manifest.session_id + " has no marked segments");

  SessionAnalysis out;
  for (const auto& p : loaded.participants) {
    if (p.truncated_tail) {
      out.log.push_back({p.id, "", "", "truncated", "EEG file ends in an incomplete row; it was ignored", 0});
    }
    const auto frames = order_frames(p.frames);
    std::map<std::string, int> occurrences;
    const std::size_t first = out.segments.size();
    for (const auto& m : marked) {
      if (m.participant != p.id) continue;
      const std::string id = p.id + "/" + m.label + "#" + std::to_string(++occurrences[m.label]);
      // Only frames near the interval are handed over.
      auto lo = std::lower_bound(frames.begin(), frames.end(), m.t_start,
                                 [](const SampleFrame& f, double t) { return f.t_ref < t; });
      auto hi = std::lower_bound(lo, frames.end(), m.t_stop,
                                 [](const SampleFrame& f, double t) { return f.t_ref < t; });
      out.segments.push_back(analyze_segment(m, std::span<const SampleFrame>(frames.data() + (lo - frames.begin()), static_cast<std::size_t>(hi - lo)),
                                             manifest.sample_rate, id, options, out.log));
    }

    const SegmentAnalysis* eo = nullptr;
    const SegmentAnalysis* ec = nullptr;
    for (std::size_t i = first; i < out.segments.size(); ++i) {
      const auto& s = out.segments[i];
      if (!s.accepted) continue;
      if (s.marked.label == "EO" && !eo) eo = &s;
      if (s.marked.label == "EC" && !ec) ec = &s;
    }
    if (!eo) {
      if (!options.skip_missing_baseline) {
        throw Error(ErrorCode::MissingBaseline, "participant " + p.id + " has no accepted EO baseline segment");
      }
      for (std::size_t i = first; i < out.segments.size(); ++i) {
        auto& s = out.segments[i];
        if (s.accepted && s.marked.label != "EO" && s.marked.label != "EC") {
          s.accepted = false;
          out.log.push_back({p.id, s.segment_id, s.marked.label, "rejected", "participant has no EO baseline", 0});
        }
      }
      out.log.push_back({p.id, "", "", "skipped", "no accepted EO baseline segment", 0});
      continue;
    }
    const BaselineRecord baseline = make_baseline(*eo->table, ec ? std::optional(*ec->table) : std::nullopt);
    out.baselines.push_back(baseline);

    for (std::size_t i = first; i < out.segments.size(); ++i) {
      auto& s = out.segments[i];
      if (!s.accepted) continue;
      const auto label = parse_label(s.marked.label);
      const auto* cond = std::get_if<ConditionLabel>(&label);
      if (!cond) continue;
      try {
        out.records.push_back(build_engagement_record(*s.table, baseline, *cond));
      } catch (const Error& e) {
        s.accepted = false;
        out.log.push_back({p.id, s.segment_id, s.marked.label, "rejected", e.what(), s.table->valid_sample_count});
      }
    }
  }

  for (auto& w : apply_z_pass(out.records)) out.log.push_back({"", "", "", "z_degenerate", std::move(w), 0});
  for (const auto& s : out.segments) ++(s.accepted ? out.accepted : out.rejected);
  return out;
}

std::string log_entry_json(const LogEntry& e) {
  ojson j;
  j["participant"] = e.participant;
  j["segment_id"] = e.segment_id;
  j["label"] = e.label;
  j["kind"] = e.kind;
  j["detail"] = e.detail;
  j["valid_samples"] = e.valid_samples;
  return j.dump();
}

void write_log(const std::filesystem::path& path, const std::vector<LogEntry>& log) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  for (const auto& e : log) out << log_entry_json(e) << '\n';
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

// ---- contrasts -----------------------------------------------------------

std::string_view to_string(AnalysisUnit u) noexcept { return u == AnalysisUnit::Aggregated ? "aggregated" : "segment"; }

const Contrast* ContrastReport::find(std::string_view name, AnalysisUnit unit) const {
  for (const auto& c : contrasts) {
    if (c.name == name && c.unit == unit) return &c;
  }
  return nullptr;
}

namespace {

using Metric = std::function<double(const EngagementRecord&)>;

struct MetricDef {
  std::string column;
  Metric get;
};

MetricDef band_metric(Band b, bool z) {
  if (z) return {band_column(b, "_Mean_Corrected_Z"), [b](const EngagementRecord& r) { return r.band_corrected_z[index(b)]; }};
  return {band_column(b, "_Mean_Corrected"), [b](const EngagementRecord& r) { return r.band_corrected[index(b)]; }};
}

const MetricDef kArousal{"Arousal_Index", [](const EngagementRecord& r) { return r.arousal; }};
const MetricDef kArousalCorrected{"Arousal_Index_Corrected", [](const EngagementRecord& r) { return r.arousal_minus_eo; }};
const MetricDef kAlphaFraction{"Relative_Alpha_Fraction", [](const EngagementRecord& r) { return r.alpha_fraction; }};
const MetricDef kFaa{"FAA", [](const EngagementRecord& r) { return r.faa; }};

struct Subject {
  std::string id;
  std::optional<Group> group;
  // Records per modality, in block order.
  std::map<Modality, std::vector<const EngagementRecord*>> by_modality;
};

double mean_finite(const std::vector<double>& v) {
  double s = 0.0;
  std::size_t n = 0;
  for (double x : v) {
    if (std::isfinite(x)) {
      s += x;
      ++n;
    }
  }
  return n ? s / static_cast<double>(n) : kNaN;
}

std::vector<double> finite(const std::vector<double>& v) {
  std::vector<double> out;
  for (double x : v) {
    if (std::isfinite(x)) out.push_back(x);
  }
  return out;
}

void finish(Contrast& c, double alpha, bool is_faa) {
  if (!c.result) {
    c.label = "not tested";
    return;
  }
  c.significant = c.result->p_two_sided < alpha;
  if (is_faa && !c.significant) {
    c.label = std::string(kNoReliableModulation);
  } else {
    c.label = c.significant ? "significant" : "not significant";
  }
}

void run_between(Contrast& c, const std::vector<double>& a_raw, const std::vector<double>& b_raw, TestMethod method,
                 double alpha) {
  const auto a = finite(a_raw), b = finite(b_raw);
  c.n_a = a.size();
  c.n_b = b.size();
  c.mean_a = mean_finite(a);
  c.mean_b = mean_finite(b);
  try {
    c.result = method == TestMethod::MannWhitney ? mann_whitney_u(a, b) : welch_t(a, b);
  } catch (const Error& e) {
    c.error = std::string(to_string(e.code())) + ": " + e.what();
  }
  finish(c, alpha, c.metric == kFaa.column);
}

void run_paired(Contrast& c, const std::vector<std::pair<double, double>>& pairs_raw, double alpha) {
  std::vector<double> a, b;
  for (const auto& [x, y] : pairs_raw) {
    if (std::isfinite(x) && std::isfinite(y)) {
      a.push_back(x);
      b.push_back(y);
    }
  }
  c.n_a = a.size();
  c.n_b = b.size();
  c.mean_a = mean_finite(a);
  c.mean_b = mean_finite(b);
  try {
    c.result = paired_t(a, b);
  } catch (const Error& e) {
    c.error = std::string(to_string(e.code())) + ": " + e.what();
  }
  finish(c, alpha, c.metric == kFaa.column);
}

}  // namespace

ContrastReport compare_modalities(const std::vector<EngagementRecord>& records, const CompareOptions& options) {
  ContrastReport report;
  report.alpha = options.alpha;

  std::map<std::string, Subject> subjects;
  for (const auto& r : records) {
    auto& s = subjects[r.subject_id];
    s.id = r.subject_id;
    s.by_modality[r.condition.modality].push_back(&r);
  }
  for (auto& [id, s] : subjects) {
    for (auto& [m, v] : s.by_modality) {
      std::stable_sort(v.begin(), v.end(), [](const EngagementRecord* a, const EngagementRecord* b) {
        return a->condition.block < b->condition.block;
      });
    }
    const bool immersive = s.by_modality.count(Modality::ImmersiveProjection) > 0;
    const bool display = s.by_modality.count(Modality::DisplayVideo) > 0;
    if (immersive && display) {
      throw Error(ErrorCode::InvalidSpec, "subject " + id + " has segments of both interpretive modalities");
    }
    if (immersive) s.group = Group::ImmersiveGroup;
    if (display) s.group = Group::DisplayGroup;
    if (!s.group) report.notes.push_back("subject " + id + " has no interpretive segments and joins no group");
  }

  auto members = [&](Group g) {
    std::vector<const Subject*> out;
    for (const auto& [id, s] : subjects) {
      if (s.group == g) out.push_back(&s);
    }
    return out;
  };
  const auto display = members(Group::DisplayGroup);
  const auto immersive = members(Group::ImmersiveGroup);
  report.display_subjects = display.size();
  report.immersive_subjects = immersive.size();

  const std::vector<std::pair<MetricDef, TestMethod>> between{{kArousal, TestMethod::Welch},
                                                              {kArousalCorrected, TestMethod::Welch},
                                                              {kAlphaFraction, TestMethod::MannWhitney},
                                                              {kFaa, TestMethod::Welch}};
  const std::vector<MetricDef> within{band_metric(Band::Alpha, false), band_metric(Band::Gamma, false),
                                      band_metric(Band::Theta, true),  band_metric(Band::Alpha, true),
                                      band_metric(Band::Delta, true),  kFaa};

  // Cell sizes are checked up front so a thin cohort fails loudly.
  for (const auto& [metric, method] : between) {
    if (display.size() < 2 || immersive.size() < 2) {
      throw Error(ErrorCode::InsufficientCell,
                  "contrast between:" + metric.column + " needs 2 subjects per group (DisplayGroup " +
                      std::to_string(display.size()) + ", ImmersiveGroup " + std::to_string(immersive.size()) + ")");
    }
  }
  for (Group g : {Group::DisplayGroup, Group::ImmersiveGroup}) {
    std::size_t paired = 0;
    for (const auto* s : members(g)) paired += s->by_modality.count(Modality::OriginalArtwork) ? 1 : 0;
    if (paired < 2) {
      throw Error(ErrorCode::InsufficientCell,
                  "contrast within:" + std::string(to_string(interpretive_modality(g))) + ":" + within[0].column +
                      " needs 2 subjects with both modalities, found " + std::to_string(paired));
    }
  }

  std::vector<AnalysisUnit> units{AnalysisUnit::Aggregated};
  if (options.include_segment_unit) units.push_back(AnalysisUnit::Segment);
  for (AnalysisUnit unit : units) {
    auto values = [&](const std::vector<const Subject*>& group, Group g, const Metric& get) {
      std::vector<double> out;
      for (const auto* s : group) {
        std::vector<double> v;
        for (const auto* r : s->by_modality.at(interpretive_modality(g))) v.push_back(get(*r));
        if (unit == AnalysisUnit::Aggregated) {
          out.push_back(mean_finite(v));
        } else {
          out.insert(out.end(), v.begin(), v.end());
        }
      }
      return out;
    };
    for (const auto& [metric, method] : between) {
      Contrast c;
      c.name = "between:" + metric.column;
      c.kind = "between";
      c.metric = metric.column;
      c.group_a = to_string(Group::DisplayGroup);
      c.group_b = to_string(Group::ImmersiveGroup);
      c.unit = unit;
      run_between(c, values(display, Group::DisplayGroup, metric.get),
                  values(immersive, Group::ImmersiveGroup, metric.get), method, options.alpha);
      report.contrasts.push_back(std::move(c));
    }
    for (Group g : {Group::DisplayGroup, Group::ImmersiveGroup}) {
      const Modality interp = interpretive_modality(g);
      for (const auto& metric : within) {
        Contrast c;
        c.name = "within:" + std::string(to_string(interp)) + ":" + metric.column;
        c.kind = "within";
        c.metric = metric.column;
        c.group_a = to_string(interp);
        c.group_b = to_string(Modality::OriginalArtwork);
        c.unit = unit;
        std::vector<std::pair<double, double>> pairs;
        for (const auto* s : members(g)) {
          auto it = s->by_modality.find(Modality::OriginalArtwork);
          if (it == s->by_modality.end()) continue;
          const auto& task = s->by_modality.at(interp);
          const auto& orig = it->second;
          if (unit == AnalysisUnit::Aggregated) {
            std::vector<double> a, b;
            for (const auto* r : task) a.push_back(metric.get(*r));
            for (const auto* r : orig) b.push_back(metric.get(*r));
            pairs.emplace_back(mean_finite(a), mean_finite(b));
          } else {
            // k-th interpretive block against the k-th original block.
            for (std::size_t k = 0; k < std::min(task.size(), orig.size()); ++k) {
              pairs.emplace_back(metric.get(*task[k]), metric.get(*orig[k]));
            }
          }
        }
        run_paired(c, pairs, options.alpha);
        report.contrasts.push_back(std::move(c));
      }
    }
  }
  return report;
}

std::string report_json(const ContrastReport& report, const SessionAnalysis* analysis) {
  ojson j;
  j["schema"] = kReportSchema;
  j["version"] = kReportVersion;
  j["alpha"] = report.alpha;
  j["default_unit"] = to_string(AnalysisUnit::Aggregated);
  j["subjects"] = {{"DisplayGroup", report.display_subjects}, {"ImmersiveGroup", report.immersive_subjects}};
  if (analysis) {
    j["segments"] = {{"total", analysis->segments.size()},
                     {"accepted", analysis->accepted},
                     {"rejected", analysis->rejected},
                     {"records", analysis->records.size()}};
  }
  ojson list = ojson::array();
  for (const auto& c : report.contrasts) {
    ojson e;
    e["name"] = c.name;
    e["kind"] = c.kind;
    e["metric"] = c.metric;
    e["unit"] = to_string(c.unit);
    e["a"] = {{"label", c.group_a}, {"n", c.n_a}, {"mean", number(c.mean_a)}};
    e["b"] = {{"label", c.group_b}, {"n", c.n_b}, {"mean", number(c.mean_b)}};
    if (c.result) {
      e["test"] = to_string(c.result->method);
      e["statistic"] = number(c.result->statistic);
      e["df"] = c.result->df ? number(*c.result->df) : ojson(nullptr);
      e["p"] = number(c.result->p_two_sided);
      if (c.result->method == TestMethod::MannWhitney) e["exact"] = c.result->exact;
    } else {
      e["test"] = nullptr;
      e["statistic"] = nullptr;
      e["df"] = nullptr;
      e["p"] = nullptr;
    }
    e["significant"] = c.significant;
    e["label"] = c.label;
    if (!c.error.empty()) e["error"] = c.error;
    list.push_back(std::move(e));
  }
  j["contrasts"] = std::move(list);
  j["notes"] = report.notes;
  return j.dump(2) + "\n";
}

}  // namespace geeg
