#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include "gradeloop/exercise_format/zip_archive.hpp"

namespace gradeloop::privacy {

/// Short-lived, in-memory storage for uploads and merged feedback. Blob
/// memory is overwritten before it is released. Thread-safe.
class SessionStore {
public:
    using Clock = std::function<std::chrono::system_clock::time_point()>;

    explicit SessionStore(std::chrono::seconds ttl = std::chrono::hours(24), Clock clock = nullptr);
    ~SessionStore();
    SessionStore(const SessionStore&) = delete;
    SessionStore& operator=(const SessionStore&) = delete;

    /// New session with a random 128-bit id (32 hex characters).
    std::string create();
    bool exists(const std::string& id) const;

    void put(const std::string& id, const std::string& name, Bytes data);
    std::optional<Bytes> get(const std::string& id, const std::string& name) const;
    /// Removes and returns a blob (single-use download).
    std::optional<Bytes> take(const std::string& id, const std::string& name);

    void set_attribute(const std::string& id, const std::string& key, std::string value);
    std::optional<std::string> attribute(const std::string& id, const std::string& key) const;

    /// Wipes every blob of the session and forgets it. Throws UnknownSession.
    void purge(const std::string& id);
    /// Purges sessions older than the TTL; returns how many were removed.
    std::size_t sweep_expired();

    std::size_t blob_count(const std::string& id) const;
    std::size_t total_blobs() const;
    std::size_t session_count() const;

private:
    struct Session {
        std::chrono::system_clock::time_point created;
        std::map<std::string, Bytes> blobs;
        std::map<std::string, std::string> attributes;
    };

    Session& require(const std::string& id);
    static void wipe(Session& session);

    std::chrono::seconds ttl_;
    Clock clock_;
    mutable std::mutex mu_;
    std::map<std::string, Session> sessions_;
};

}  // namespace gradeloop::privacy
