#pragma once

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <deque>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>
#include <vector>

namespace geeg {

// Column layouts of the recorded stream files. Every file starts with
// t_ref (reference clock, s) and device_ts (device clock, s).
const std::vector<std::string>& eeg_stream_header();    // + TP9..TP10 µV, q_TP9..q_TP10, accel_mag
const std::vector<std::string>& accel_stream_header();  // + x, y, z, mag
const std::vector<std::string>& gaze_stream_header();   // + gaze_x, gaze_y, confidence
const std::vector<std::string>& events_header();        // + participant, kind, label

// Event kinds in the events file.
inline constexpr std::string_view kEventMark = "mark";
inline constexpr std::string_view kEventBlockStart = "block_start";
inline constexpr std::string_view kEventBlockStop = "block_stop";
inline constexpr std::string_view kEventGap = "gap";

// Append-only CSV file with its own buffer; rows reach the kernel only on
// flush(), always as whole lines, so a killed process leaves a parseable
// prefix. Throws Io.
class CsvAppender {
 public:
  CsvAppender(const std::filesystem::path& path, const std::vector<std::string>& header);
  ~CsvAppender();
  CsvAppender(const CsvAppender&) = delete;
  CsvAppender& operator=(const CsvAppender&) = delete;

  void append(std::string_view line);  // one complete CRLF-terminated row
  void flush();
  void sync();  // flush + fsync

  std::size_t rows() const noexcept { return rows_; }
  std::size_t buffered() const noexcept { return buf_.size(); }
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  int fd_ = -1;
  std::string buf_;
  std::size_t rows_ = 0;
};

struct StreamWriterOptions {
  std::size_t queue_capacity = 1 << 17;  // rows; producers block beyond this
  double flush_interval_s = 0.25;
  std::size_t flush_bytes = 64 * 1024;
  std::size_t wake_rows = 4096;  // producers wake the writer early past this backlog
};

// The single thread that owns every stream file. Producers hand over
// formatted rows through a bounded queue that blocks rather than drops.
// The first I/O error stops all writing and is reported through error().
class StreamWriter {
 public:
  explicit StreamWriter(StreamWriterOptions options = {});
  ~StreamWriter();
  StreamWriter(const StreamWriter&) = delete;
  StreamWriter& operator=(const StreamWriter&) = delete;

  // Opens the file and writes its header now. Call before start().
  int add_stream(const std::filesystem::path& path, const std::vector<std::string>& header);
  void start();
  void write(int stream, std::string line);
  // Hands over several rows under one lock; `rows` is left empty.
  using Row = std::pair<int, std::string>;
  void write(std::vector<Row>& rows);
  // Drains the queue, flushes and fsyncs every file.
  void stop();

  std::size_t rows(int stream) const;
  bool failed() const noexcept { return failed_.load(); }
  std::optional<std::string> error() const;

 private:
  using Item = Row;
  void run();
  void fail(const std::string& what);

  StreamWriterOptions opt_;
  std::vector<std::unique_ptr<CsvAppender>> files_;
  mutable std::mutex mu_;
  std::condition_variable not_empty_, not_full_;
  std::deque<Item> queue_;
  std::vector<std::size_t> rows_;  // rows accepted per stream
  bool stopping_ = false;
  std::atomic<bool> failed_{false};
  std::optional<std::string> error_;
  std::thread thread_;
};

}  // namespace geeg
