#include "geeg/recording.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>

#include "geeg/csv.hpp"
#include "geeg/error.hpp"

namespace geeg {

const std::vector<std::string>& eeg_stream_header() {
  static const std::vector<std::string> h{"t_ref", "device_ts", "TP9",    "AF7",    "AF8",      "TP10",
                                          "q_TP9", "q_AF7",     "q_AF8",  "q_TP10", "accel_mag"};
  return h;
}

const std::vector<std::string>& accel_stream_header() {
  static const std::vector<std::string> h{"t_ref", "device_ts", "x", "y", "z", "mag"};
  return h;
}

const std::vector<std::string>& gaze_stream_header() {
  static const std::vector<std::string> h{"t_ref", "device_ts", "gaze_x", "gaze_y", "confidence"};
  return h;
}

const std::vector<std::string>& events_header() {
  static const std::vector<std::string> h{"t_ref", "device_ts", "participant", "kind", "label"};
  return h;
}

CsvAppender::CsvAppender(const std::filesystem::path& path, const std::vector<std::string>& header)
    : path_(path) {
  fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd_ < 0) throw Error(ErrorCode::Io, "cannot create " + path.string() + ": " + std::strerror(errno));
  buf_ = csv::format_row(header);
  flush();
}

CsvAppender::~CsvAppender() {
  if (fd_ >= 0) ::close(fd_);
}

void CsvAppender::append(std::string_view line) {
  buf_.append(line);
  ++rows_;
}

void CsvAppender::flush() {
  std::size_t done = 0;
  while (done < buf_.size()) {
    const auto n = ::write(fd_, buf_.data() + done, buf_.size() - done);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      const std::string why = n < 0 ? std::strerror(errno) : "short write";
      buf_.erase(0, done);
      throw Error(ErrorCode::Io, "write to " + path_.string() + " failed: " + why);
    }
    done += static_cast<std::size_t>(n);
  }
  buf_.clear();
}

void CsvAppender::sync() {
  flush();
  if (::fsync(fd_) != 0 && errno != EINVAL) {
    throw Error(ErrorCode::Io, "fsync " + path_.string() + ": " + std::strerror(errno));
  }
}

StreamWriter::StreamWriter(StreamWriterOptions options) : opt_(options) {}

StreamWriter::~StreamWriter() { stop(); }

int StreamWriter::add_stream(const std::filesystem::path& path, const std::vector<std::string>& header) {
  files_.push_back(std::make_unique<CsvAppender>(path, header));
  rows_.push_back(0);
  return static_cast<int>(files_.size() - 1);
}

void StreamWriter::start() {
  thread_ = std::thread([this] { run(); });
}

void StreamWriter::write(int stream, std::string line) {
  std::vector<Row> one;
  one.emplace_back(stream, std::move(line));
  write(one);
}

void StreamWriter::write(std::vector<Row>& rows) {
  if (rows.empty()) return;
  std::unique_lock lock(mu_);
  // An oversized batch is admitted once the queue has drained.
  not_full_.wait(lock, [&] {
    return queue_.size() + rows.size() <= opt_.queue_capacity || queue_.empty() || stopping_ || failed_;
  });
  if (failed_ || stopping_) {
    rows.clear();
    return;
  }
  const std::size_t before = queue_.size();
  for (auto& r : rows) {
    ++rows_[static_cast<std::size_t>(r.first)];
    queue_.push_back(std::move(r));
  }
  rows.clear();
  // The writer also wakes on its own timer; waking it per row costs a
  // context switch per sample.
  if (before < opt_.wake_rows && queue_.size() >= opt_.wake_rows) not_empty_.notify_one();
}

std::size_t StreamWriter::rows(int stream) const {
  std::lock_guard lock(mu_);
  return rows_[static_cast<std::size_t>(stream)];
}

std::optional<std::string> StreamWriter::error() const {
  std::lock_guard lock(mu_);
  return error_;
}

void StreamWriter::fail(const std::string& what) {
  std::lock_guard lock(mu_);
  if (!error_) error_ = what;
  failed_ = true;
  queue_.clear();
  not_full_.notify_all();
}

void StreamWriter::run() {
  using clock = std::chrono::steady_clock;
  const auto interval = std::chrono::duration_cast<clock::duration>(
      std::chrono::duration<double>(opt_.flush_interval_s));
  auto last_flush = clock::now();
  std::deque<Item> batch;
  for (;;) {
    bool done = false;
    {
      std::unique_lock lock(mu_);
      not_empty_.wait_for(lock, interval / 4, [&] { return queue_.size() >= opt_.wake_rows || stopping_; });
      batch.swap(queue_);
      done = stopping_ && batch.empty();
      not_full_.notify_all();
    }
    if (failed_) return;
    try {
      for (auto& item : batch) {
        auto& f = *files_[static_cast<std::size_t>(item.first)];
        f.append(item.second);
        if (f.buffered() >= opt_.flush_bytes) f.flush();
      }
      batch.clear();
      if (clock::now() - last_flush >= interval || done) {
        for (auto& f : files_) f->flush();
        last_flush = clock::now();
      }
      if (done) {
        for (auto& f : files_) f->sync();
        return;
      }
    } catch (const Error& e) {
      fail(e.what());
      return;
    }
  }
}

void StreamWriter::stop() {
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
  }
  not_empty_.notify_all();
  not_full_.notify_all();
  if (thread_.joinable()) thread_.join();
}

}  // namespace geeg
