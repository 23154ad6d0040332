#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gradeloop/exercise_format/zip_archive.hpp"
#include "gradeloop/graded_answer.hpp"
#include "gradeloop/half_points.hpp"

namespace gradeloop::exercise {

enum class FormatErrc {
    UnmatchedStartMarker,
    UnmatchedEndMarker,
    MarkerIdMismatch,
    DuplicateAnswerId,
    InvalidPointsToken,
    NoAnswerBlocks,
    GradeBlockMismatch,
};

std::string_view to_string(FormatErrc code);

class FormatError : public std::runtime_error {
public:
    FormatError(FormatErrc code, std::string subject, std::string detail = {});

    FormatErrc code() const noexcept { return code_; }
    /// Marker id or raw token the error is about.
    const std::string& subject() const noexcept { return subject_; }
    /// Second id for MarkerIdMismatch (the end marker's id).
    const std::string& detail() const noexcept { return detail_; }

private:
    FormatErrc code_;
    std::string subject_;
    std::string detail_;
};

struct AnswerBlock {
    std::string answer_id;
    std::string question_text;
    HalfPoints max_points;
    std::string student_answer;
    std::size_t start_line = 0;  // zero-based line of the start marker in source_text
    std::size_t end_line = 0;
};

struct ExercisePaper {
    int exercise_id = 0;
    std::vector<AnswerBlock> blocks;
    std::string source_text;

    HalfPoints total_max_points() const;
    const AnswerBlock* find(std::string_view answer_id) const;
};

enum class MarkerKind { AnswerStart, AnswerEnd, FeedbackStart, FeedbackEnd };

struct Marker {
    MarkerKind kind;
    std::string id;
    std::string points_token;  // AnswerStart only; raw, unvalidated
};

/// Classifies one line. Markers must fill the whole line (surrounding
/// whitespace aside); anything else returns nullopt.
std::optional<Marker> classify_marker(std::string_view line);

/// Splits on '\n'. A trailing newline does not produce an empty last line.
std::vector<std::string_view> split_lines(std::string_view text);

ExercisePaper extract_blocks(std::string_view flattened_text, int exercise_id);

/// Reads the content part and extracts blocks in one step.
ExercisePaper parse_exercise(ByteView container, int exercise_id);

/// Lines of the feedback section written after a block's end marker.
std::vector<std::string> feedback_section(const AnswerBlock& block, const GradedAnswer& grade);

/// Writes one feedback section after each block's end-marker paragraph of
/// `original_container`. Original paragraphs are left byte-identical.
Bytes merge_feedback(const ExercisePaper& paper, std::span<const GradedAnswer> graded, ByteView original_container);

}  // namespace gradeloop::exercise
