#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gradeloop::privacy {

enum class PrivacyErrc { NotRegistered, InvalidEmailSyntax, UnknownSession, InvalidRegistry, MissingSalt };

std::string_view to_string(PrivacyErrc code);

class PrivacyError : public std::runtime_error {
public:
    PrivacyError(PrivacyErrc code, const std::string& detail);
    PrivacyErrc code() const noexcept { return code_; }

private:
    PrivacyErrc code_;
};

inline constexpr std::size_t kPseudonymLength = 16;
inline constexpr std::string_view kRedacted = "[REDACTED]";
inline constexpr const char* kSaltVariable = "GRADELOOP_PSEUDONYM_SALT";

struct Pseudonym {
    std::string token;
    auto operator<=>(const Pseudonym&) const = default;
};

/// Trims and lowercases an address. Does not validate.
std::string normalize_email(std::string_view email);
/// Conservative address syntax check: one '@', non-empty local part, dotted domain.
bool valid_email_syntax(std::string_view normalized);

/// Students allowed to use the service, with the strings that identify them.
class StudentRegistry {
public:
    /// `identities` maps a (normalized) address to its name parts, student id, etc.
    StudentRegistry(const std::vector<std::string>& emails, std::string salt,
                    const std::map<std::string, std::vector<std::string>>& identities = {});

    /// Address file: one address per line, '#' comments. Sidecar: tab-separated
    /// lines "address<TAB>identity<TAB>identity...".
    static StudentRegistry load(const std::filesystem::path& email_file, const std::filesystem::path& identity_file,
                                std::string salt);
    /// Reads the salt from GRADELOOP_PSEUDONYM_SALT. Throws MissingSalt.
    static std::string salt_from_environment();

    /// Pseudonym for a registered address. Throws InvalidEmailSyntax or NotRegistered.
    Pseudonym check_registration(std::string_view email) const;
    /// Strings to scrub for this student: the address plus its sidecar entries.
    std::vector<std::string> identity_strings(std::string_view email) const;
    /// Every registered address and sidecar entry, without duplicates.
    std::vector<std::string> all_identity_strings() const;

    std::size_t size() const { return emails_.size(); }
    const std::set<std::string>& emails() const { return emails_; }

private:
    Pseudonym derive(const std::string& normalized) const;

    std::set<std::string> emails_;
    std::string salt_;
    std::map<std::string, std::vector<std::string>> identities_;
};

/// Replaces every case-insensitive occurrence of an identity string with
/// [REDACTED]. Case folding covers ASCII and Latin-1 letters in UTF-8. Lines
/// that are answer or feedback markers are left untouched.
std::string scrub_submission(std::string_view flattened_text, const std::vector<std::string>& identity_strings);

}  // namespace gradeloop::privacy
