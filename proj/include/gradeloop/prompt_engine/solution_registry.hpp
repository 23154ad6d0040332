#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gradeloop/half_points.hpp"
#include "gradeloop/prompt_engine/prompt.hpp"

namespace gradeloop::prompt {

struct ModelSolutionEntry {
    int exercise_id = 0;
    std::string answer_id;
    std::string model_answer;
    MatchPolicy policy = MatchPolicy::close_match();
    HalfPoints max_points;
};

enum class RegistryErrc { DuplicateSolutionKey, MissingField, InvalidPolicy, InvalidValue, Syntax };

std::string_view to_string(RegistryErrc code);

class RegistryError : public std::runtime_error {
public:
    RegistryError(RegistryErrc code, std::string subject, std::size_t line);

    RegistryErrc code() const noexcept { return code_; }
    /// Field name, key or offending value.
    const std::string& subject() const noexcept { return subject_; }
    std::size_t line() const noexcept { return line_; }

private:
    RegistryErrc code_;
    std::string subject_;
    std::size_t line_;
};

/// Teacher model solutions keyed by (exercise_id, answer_id); immutable once
/// loaded.
///
/// File format, one record per `[solution]` header:
///
///     # comment
///     [solution]
///     exercise_id: 8
///     answer_id: 8.1a
///     max_points: 4
///     mode: close            # close | partial | flexible
///     n: 2                   # partial only
///     model_answer: <<<
///     free text, any number of lines
///     >>>
///
/// `model_answer: text` on a single line also works.
class SolutionRegistry {
public:
    using Key = std::pair<int, std::string>;

    static SolutionRegistry parse(std::string_view source);
    static SolutionRegistry load_file(const std::filesystem::path& path);

    const ModelSolutionEntry* find(int exercise_id, std::string_view answer_id) const;
    std::size_t size() const { return entries_.size(); }
    const std::map<Key, ModelSolutionEntry>& entries() const { return entries_; }

    /// Serializes back into the file format.
    std::string to_text() const;

private:
    std::map<Key, ModelSolutionEntry> entries_;
};

}  // namespace gradeloop::prompt
