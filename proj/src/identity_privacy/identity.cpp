#include "gradeloop/identity_privacy/identity.hpp"

#include <openssl/evp.h>
#include <openssl/hmac.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>

#include "gradeloop/exercise_format/exercise.hpp"

namespace gradeloop::privacy {
namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

/// Same-length case fold: ASCII, plus two-byte UTF-8 Latin-1 capitals
/// (U+00C0..U+00DE except U+00D7).
std::string fold(std::string_view s) {
    std::string out(s);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto c = static_cast<unsigned char>(out[i]);
        if (c < 0x80) {
            out[i] = static_cast<char>(std::tolower(c));
        } else if (c == 0xC3 && i + 1 < out.size()) {
            const auto next = static_cast<unsigned char>(out[i + 1]);
            if (next >= 0x80 && next <= 0x9E && next != 0x97) out[i + 1] = static_cast<char>(next + 0x20);
            ++i;
        }
    }
    return out;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw PrivacyError(PrivacyErrc::InvalidRegistry, "cannot read " + path.string());
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    return lines;
}

}  // namespace

std::string_view to_string(PrivacyErrc code) {
    switch (code) {
        case PrivacyErrc::NotRegistered: return "NotRegistered";
        case PrivacyErrc::InvalidEmailSyntax: return "InvalidEmailSyntax";
        case PrivacyErrc::UnknownSession: return "UnknownSession";
        case PrivacyErrc::InvalidRegistry: return "InvalidRegistry";
        case PrivacyErrc::MissingSalt: return "MissingSalt";
    }
    return "PrivacyError";
}

PrivacyError::PrivacyError(PrivacyErrc code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + (detail.empty() ? "" : ": " + detail)), code_(code) {}

std::string normalize_email(std::string_view email) {
    std::string out(trim(email));
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

bool valid_email_syntax(std::string_view e) {
    if (e.empty() || e.size() > 254) return false;
    const auto at = e.find('@');
    if (at == std::string_view::npos || at == 0 || e.find('@', at + 1) != std::string_view::npos) return false;
    const auto local = e.substr(0, at);
    const auto domain = e.substr(at + 1);
    if (local.size() > 64 || domain.empty()) return false;
    for (char c : e)
        if (static_cast<unsigned char>(c) <= 0x20 || c == '<' || c == '>' || c == ',' || c == ';' || c == '"')
            return false;
    const auto dot = domain.find('.');
    if (dot == std::string_view::npos || dot == 0 || domain.back() == '.' || domain.find("..") != std::string_view::npos)
        return false;
    return true;
}

StudentRegistry::StudentRegistry(const std::vector<std::string>& emails, std::string salt,
                                 const std::map<std::string, std::vector<std::string>>& identities)
    : salt_(std::move(salt)) {
    if (salt_.empty()) throw PrivacyError(PrivacyErrc::MissingSalt, "pseudonym salt must not be empty");
    for (const auto& raw : emails) {
        const std::string e = normalize_email(raw);
        if (!valid_email_syntax(e)) throw PrivacyError(PrivacyErrc::InvalidRegistry, "bad address in registry: " + e);
        emails_.insert(e);
    }
    for (const auto& [raw, strings] : identities) {
        const std::string e = normalize_email(raw);
        if (!emails_.count(e)) throw PrivacyError(PrivacyErrc::InvalidRegistry, "identity for unregistered " + e);
        auto& list = identities_[e];
        for (const auto& s : strings)
            if (!trim(s).empty()) list.emplace_back(trim(s));
    }
}

StudentRegistry StudentRegistry::load(const std::filesystem::path& email_file,
                                      const std::filesystem::path& identity_file, std::string salt) {
    std::vector<std::string> emails;
    for (const auto& line : read_lines(email_file)) {
        const auto t = trim(line);
        if (!t.empty() && t.front() != '#') emails.emplace_back(t);
    }
    std::map<std::string, std::vector<std::string>> identities;
    if (!identity_file.empty()) {
        for (const auto& line : read_lines(identity_file)) {
            if (trim(line).empty() || trim(line).front() == '#') continue;
            std::vector<std::string> fields;
            std::size_t pos = 0;
            while (true) {
                const auto tab = line.find('\t', pos);
                fields.emplace_back(trim(std::string_view(line).substr(pos, tab == std::string::npos ? std::string::npos : tab - pos)));
                if (tab == std::string::npos) break;
                pos = tab + 1;
            }
            auto& list = identities[normalize_email(fields.front())];
            list.insert(list.end(), fields.begin() + 1, fields.end());
        }
    }
    return StudentRegistry(emails, std::move(salt), identities);
}

std::string StudentRegistry::salt_from_environment() {
    const char* v = std::getenv(kSaltVariable);
    if (!v || !*v) throw PrivacyError(PrivacyErrc::MissingSalt, std::string(kSaltVariable) + " is not set");
    return v;
}

Pseudonym StudentRegistry::derive(const std::string& normalized) const {
    unsigned char mac[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!HMAC(EVP_sha256(), salt_.data(), static_cast<int>(salt_.size()),
              reinterpret_cast<const unsigned char*>(normalized.data()), normalized.size(), mac, &len))
        throw std::runtime_error("HMAC failed");
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string token;
    for (unsigned int i = 0; token.size() < kPseudonymLength && i < len; ++i) {
        token += kDigits[mac[i] >> 4];
        token += kDigits[mac[i] & 0xF];
    }
    return Pseudonym{token};
}

Pseudonym StudentRegistry::check_registration(std::string_view email) const {
    const std::string e = normalize_email(email);
    if (!valid_email_syntax(e)) throw PrivacyError(PrivacyErrc::InvalidEmailSyntax, "");
    if (!emails_.count(e)) throw PrivacyError(PrivacyErrc::NotRegistered, "");
    return derive(e);
}

std::vector<std::string> StudentRegistry::identity_strings(std::string_view email) const {
    const std::string e = normalize_email(email);
    std::vector<std::string> out;
    if (!emails_.count(e)) return out;
    out.push_back(e);
    if (auto it = identities_.find(e); it != identities_.end()) out.insert(out.end(), it->second.begin(), it->second.end());
    return out;
}

std::vector<std::string> StudentRegistry::all_identity_strings() const {
    std::set<std::string> all(emails_.begin(), emails_.end());
    for (const auto& [email, strings] : identities_)
        if (emails_.count(email)) all.insert(strings.begin(), strings.end());
    return {all.begin(), all.end()};
}

std::string scrub_submission(std::string_view text, const std::vector<std::string>& identity_strings) {
    std::vector<std::string> needles;
    for (const auto& s : identity_strings)
        if (!s.empty()) needles.push_back(fold(s));
    if (needles.empty()) return std::string(text);
    // Longest first so "Max Mustermann" wins over "Max".
    std::sort(needles.begin(), needles.end(), [](const auto& a, const auto& b) { return a.size() > b.size(); });

    std::string out;
    out.reserve(text.size());
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        const auto end = nl == std::string_view::npos ? text.size() : nl;
        const std::string_view line = text.substr(pos, end - pos);
        if (exercise::classify_marker(line)) {
            out += line;
        } else {
            const std::string folded = fold(line);
            std::size_t i = 0;
            while (i < line.size()) {
                const std::string* hit = nullptr;
                for (const auto& n : needles)
                    if (folded.compare(i, n.size(), n) == 0) {
                        hit = &n;
                        break;
                    }
                if (hit) {
                    out += kRedacted;
                    i += hit->size();
                } else {
                    out += line[i++];
                }
            }
        }
        if (nl == std::string_view::npos) break;
        out += '\n';
        pos = nl + 1;
    }
    return out;
}

}  // namespace gradeloop::privacy
