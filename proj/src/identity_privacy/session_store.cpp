#include "gradeloop/identity_privacy/session_store.hpp"

#include <openssl/crypto.h>
#include <openssl/rand.h>

#include "gradeloop/identity_privacy/identity.hpp"

namespace gradeloop::privacy {

SessionStore::SessionStore(std::chrono::seconds ttl, Clock clock) : ttl_(ttl), clock_(std::move(clock)) {
    if (!clock_) clock_ = [] { return std::chrono::system_clock::now(); };
}

SessionStore::~SessionStore() {
    for (auto& [id, s] : sessions_) wipe(s);
}

void SessionStore::wipe(Session& session) {
    for (auto& [name, blob] : session.blobs)
        if (!blob.empty()) OPENSSL_cleanse(blob.data(), blob.size());
    session.blobs.clear();
    session.attributes.clear();
}

SessionStore::Session& SessionStore::require(const std::string& id) {
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw PrivacyError(PrivacyErrc::UnknownSession, "");
    return it->second;
}

std::string SessionStore::create() {
    unsigned char raw[16];
    if (RAND_bytes(raw, sizeof raw) != 1) throw std::runtime_error("RAND_bytes failed");
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string id;
    for (unsigned char b : raw) {
        id += kDigits[b >> 4];
        id += kDigits[b & 0xF];
    }
    std::lock_guard lock(mu_);
    sessions_[id].created = clock_();
    return id;
}

bool SessionStore::exists(const std::string& id) const {
    std::lock_guard lock(mu_);
    return sessions_.count(id) > 0;
}

void SessionStore::put(const std::string& id, const std::string& name, Bytes data) {
    std::lock_guard lock(mu_);
    auto& blobs = require(id).blobs;
    if (auto it = blobs.find(name); it != blobs.end() && !it->second.empty())
        OPENSSL_cleanse(it->second.data(), it->second.size());
    blobs[name] = std::move(data);
}

std::optional<Bytes> SessionStore::get(const std::string& id, const std::string& name) const {
    std::lock_guard lock(mu_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) return std::nullopt;
    auto blob = it->second.blobs.find(name);
    if (blob == it->second.blobs.end()) return std::nullopt;
    return blob->second;
}

std::optional<Bytes> SessionStore::take(const std::string& id, const std::string& name) {
    std::lock_guard lock(mu_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) return std::nullopt;
    auto blob = it->second.blobs.find(name);
    if (blob == it->second.blobs.end()) return std::nullopt;
    Bytes out = std::move(blob->second);
    it->second.blobs.erase(blob);
    return out;
}

void SessionStore::set_attribute(const std::string& id, const std::string& key, std::string value) {
    std::lock_guard lock(mu_);
    require(id).attributes[key] = std::move(value);
}

std::optional<std::string> SessionStore::attribute(const std::string& id, const std::string& key) const {
    std::lock_guard lock(mu_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) return std::nullopt;
    auto a = it->second.attributes.find(key);
    if (a == it->second.attributes.end()) return std::nullopt;
    return a->second;
}

void SessionStore::purge(const std::string& id) {
    std::lock_guard lock(mu_);
    wipe(require(id));
    sessions_.erase(id);
}

std::size_t SessionStore::sweep_expired() {
    std::lock_guard lock(mu_);
    const auto now = clock_();
    std::size_t removed = 0;
    for (auto it = sessions_.begin(); it != sessions_.end();) {
        if (now - it->second.created >= ttl_) {
            wipe(it->second);
            it = sessions_.erase(it);
            ++removed;
        } else {
            ++it;
        }
    }
    return removed;
}

std::size_t SessionStore::blob_count(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = sessions_.find(id);
    return it == sessions_.end() ? 0 : it->second.blobs.size();
}

std::size_t SessionStore::total_blobs() const {
    std::lock_guard lock(mu_);
    std::size_t n = 0;
    for (const auto& [id, s] : sessions_) n += s.blobs.size();
    return n;
}

std::size_t SessionStore::session_count() const {
    std::lock_guard lock(mu_);
    return sessions_.size();
}

}  // namespace gradeloop::privacy
