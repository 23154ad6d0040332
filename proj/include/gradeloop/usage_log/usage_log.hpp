#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

namespace gradeloop::usage {

struct UsageRecord {
    std::int64_t sequence = 0;
    std::string timestamp;  // ISO 8601, UTC
    std::string pseudonym;
    int exercise_id = 0;
    double score_percent = 0.0;
};

enum class UsageErrc { StorageFailure, InvalidRecord, CorruptLog };

std::string_view to_string(UsageErrc code);

class UsageError : public std::runtime_error {
public:
    UsageError(UsageErrc code, const std::string& detail);
    UsageErrc code() const noexcept { return code_; }

private:
    UsageErrc code_;
};

/// One log line: sequence,timestamp,pseudonym,exercise_id,score_percent
std::string format_record(const UsageRecord& record);
/// Parses a whole log. Throws CorruptLog on malformed lines or a sequence
/// that does not strictly increase.
std::vector<UsageRecord> parse_log(std::string_view text);
std::vector<UsageRecord> read_log(const std::filesystem::path& path);

/// Append-only usage log backed by a file. Appends are serialized and each
/// record is flushed to stable storage before append() returns.
class UsageLog {
public:
    using Clock = std::function<std::chrono::system_clock::time_point()>;

    explicit UsageLog(std::filesystem::path path, Clock clock = nullptr);
    ~UsageLog();
    UsageLog(const UsageLog&) = delete;
    UsageLog& operator=(const UsageLog&) = delete;

    UsageRecord append(const std::string& pseudonym, int exercise_id, double score_percent);
    std::vector<UsageRecord> snapshot() const;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    Clock clock_;
    mutable std::mutex mu_;
    int fd_ = -1;
    std::int64_t last_sequence_ = 0;
};

/// pseudonym -> exercise_id -> scores in log order.
using Grouped = std::map<std::string, std::map<int, std::vector<double>>>;

Grouped submissions_by_student(const std::vector<UsageRecord>& records);

}  // namespace gradeloop::usage
