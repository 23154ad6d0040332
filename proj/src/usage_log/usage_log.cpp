#include "gradeloop/usage_log/usage_log.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstring>
#include <ctime>
#include <fstream>
#include <sstream>

namespace gradeloop::usage {
namespace {

bool valid_pseudonym(std::string_view p) {
    if (p.empty() || p.size() > 128) return false;
    for (char c : p)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') return false;
    return true;
}

std::string iso_timestamp(std::chrono::system_clock::time_point tp) {
    const std::time_t t = std::chrono::system_clock::to_time_t(tp);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string format_score(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

void write_all(int fd, const std::string& data) {
    std::size_t done = 0;
    while (done < data.size()) {
        const ssize_t n = ::write(fd, data.data() + done, data.size() - done);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw UsageError(UsageErrc::StorageFailure, std::strerror(errno));
        }
        done += static_cast<std::size_t>(n);
    }
}

}  // namespace

std::string_view to_string(UsageErrc code) {
    switch (code) {
        case UsageErrc::StorageFailure: return "StorageFailure";
        case UsageErrc::InvalidRecord: return "InvalidRecord";
        case UsageErrc::CorruptLog: return "CorruptLog";
    }
    return "UsageError";
}

UsageError::UsageError(UsageErrc code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

std::string format_record(const UsageRecord& r) {
    return std::to_string(r.sequence) + "," + r.timestamp + "," + r.pseudonym + "," + std::to_string(r.exercise_id) +
           "," + format_score(r.score_percent);
}

std::vector<UsageRecord> parse_log(std::string_view text) {
    std::vector<UsageRecord> out;
    std::size_t pos = 0, line_no = 0;
    while (pos < text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;

        std::vector<std::string_view> f;
        std::size_t start = 0;
        while (true) {
            const auto comma = line.find(',', start);
            f.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        const auto bad = [&](const std::string& why) {
            return UsageError(UsageErrc::CorruptLog, "line " + std::to_string(line_no) + ": " + why);
        };
        if (f.size() != 5) throw bad("expected 5 fields");
        UsageRecord r;
        if (!parse_number(f[0], r.sequence)) throw bad("bad sequence");
        r.timestamp = std::string(f[1]);
        r.pseudonym = std::string(f[2]);
        if (!valid_pseudonym(r.pseudonym)) throw bad("bad pseudonym");
        if (!parse_number(f[3], r.exercise_id)) throw bad("bad exercise id");
        if (!parse_number(f[4], r.score_percent) || !(r.score_percent >= 0.0 && r.score_percent <= 100.0))
            throw bad("bad score");
        if (!out.empty() && r.sequence <= out.back().sequence) throw bad("sequence does not increase");
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<UsageRecord> read_log(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError(UsageErrc::StorageFailure, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_log(ss.str());
}

UsageLog::UsageLog(std::filesystem::path path, Clock clock) : path_(std::move(path)), clock_(std::move(clock)) {
    if (!clock_) clock_ = [] { return std::chrono::system_clock::now(); };
    fd_ = ::open(path_.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0600);
    if (fd_ < 0) throw UsageError(UsageErrc::StorageFailure, "cannot open " + path_.string() + ": " + std::strerror(errno));
    const auto existing = read_log(path_);
    if (!existing.empty()) last_sequence_ = existing.back().sequence;
}

UsageLog::~UsageLog() {
    if (fd_ >= 0) ::close(fd_);
}

UsageRecord UsageLog::append(const std::string& pseudonym, int exercise_id, double score_percent) {
    if (!valid_pseudonym(pseudonym)) throw UsageError(UsageErrc::InvalidRecord, "bad pseudonym");
    if (!(score_percent >= 0.0 && score_percent <= 100.0))
        throw UsageError(UsageErrc::InvalidRecord, "score_percent out of [0, 100]: " + format_score(score_percent));
    if (exercise_id < 0) throw UsageError(UsageErrc::InvalidRecord, "negative exercise id");

    std::lock_guard lock(mu_);
    UsageRecord r{last_sequence_ + 1, iso_timestamp(clock_()), pseudonym, exercise_id, score_percent};
    write_all(fd_, format_record(r) + "\n");
    if (::fsync(fd_) != 0) throw UsageError(UsageErrc::StorageFailure, std::strerror(errno));
    last_sequence_ = r.sequence;
    return r;
}

std::vector<UsageRecord> UsageLog::snapshot() const {
    std::lock_guard lock(mu_);
    return read_log(path_);
}

Grouped submissions_by_student(const std::vector<UsageRecord>& records) {
    Grouped out;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (i > 0 && records[i].sequence <= records[i - 1].sequence)
            throw UsageError(UsageErrc::CorruptLog, "sequence does not increase at record " + std::to_string(i + 1));
        out[records[i].pseudonym][records[i].exercise_id].push_back(records[i].score_percent);
    }
    return out;
}

}  // namespace gradeloop::usage
