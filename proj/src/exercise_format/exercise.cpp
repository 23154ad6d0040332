#include "gradeloop/exercise_format/exercise.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>

#include "gradeloop/exercise_format/odt.hpp"

namespace gradeloop::exercise {
namespace {

bool is_blank(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v'; }

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_blank(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_blank(s.back())) s.remove_suffix(1);
    return s;
}

/// Tiny lexer over one trimmed marker candidate.
class MarkerLexer {
public:
    explicit MarkerLexer(std::string_view s) : s_(s) {}

    bool literal(std::string_view word) {
        if (s_.substr(pos_, word.size()) != word) return false;
        pos_ += word.size();
        return true;
    }
    /// At least one whitespace character.
    bool gap() {
        const std::size_t before = pos_;
        spaces();
        return pos_ > before;
    }
    void spaces() {
        while (pos_ < s_.size() && is_blank(s_[pos_])) ++pos_;
    }
    /// One or more characters that are neither whitespace nor '#'.
    std::string_view token() {
        const std::size_t begin = pos_;
        while (pos_ < s_.size() && !is_blank(s_[pos_]) && s_[pos_] != '#') ++pos_;
        return s_.substr(begin, pos_ - begin);
    }
    bool done() const { return pos_ == s_.size(); }

private:
    std::string_view s_;
    std::size_t pos_ = 0;
};

bool is_placeholder(std::string_view line) {
    line = trim(line);
    if (line.size() < 2 || line.front() != '<' || line.back() != '>') return false;
    std::string_view inner = trim(line.substr(1, line.size() - 2));
    constexpr std::string_view kPlaceholder = "your answer here";
    if (inner.size() != kPlaceholder.size()) return false;
    for (std::size_t i = 0; i < inner.size(); ++i) {
        char c = inner[i];
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        if (c != kPlaceholder[i]) return false;
    }
    return true;
}

/// Joins lines and strips leading/trailing blank lines and whitespace.
std::string join_trimmed(const std::vector<std::string_view>& lines) {
    std::string out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (i) out += '\n';
        out.append(lines[i]);
    }
    return std::string(trim(out));
}

}  // namespace

std::string_view to_string(FormatErrc code) {
    switch (code) {
        case FormatErrc::UnmatchedStartMarker: return "UnmatchedStartMarker";
        case FormatErrc::UnmatchedEndMarker: return "UnmatchedEndMarker";
        case FormatErrc::MarkerIdMismatch: return "MarkerIdMismatch";
        case FormatErrc::DuplicateAnswerId: return "DuplicateAnswerId";
        case FormatErrc::InvalidPointsToken: return "InvalidPointsToken";
        case FormatErrc::NoAnswerBlocks: return "NoAnswerBlocks";
        case FormatErrc::GradeBlockMismatch: return "GradeBlockMismatch";
    }
    return "FormatError";
}

namespace {
std::string describe(FormatErrc code, const std::string& subject, const std::string& detail) {
    std::string what(to_string(code));
    what += "(" + subject;
    if (!detail.empty()) what += ", " + detail;
    return what + ")";
}
}  // namespace

FormatError::FormatError(FormatErrc code, std::string subject, std::string detail)
    : std::runtime_error(describe(code, subject, detail)),
      code_(code),
      subject_(std::move(subject)),
      detail_(std::move(detail)) {}

HalfPoints ExercisePaper::total_max_points() const {
    HalfPoints total;
    for (const AnswerBlock& b : blocks) total += b.max_points;
    return total;
}

const AnswerBlock* ExercisePaper::find(std::string_view answer_id) const {
    auto it = std::find_if(blocks.begin(), blocks.end(), [&](const AnswerBlock& b) { return b.answer_id == answer_id; });
    return it == blocks.end() ? nullptr : &*it;
}

std::optional<Marker> classify_marker(std::string_view line) {
    MarkerLexer lex(trim(line));
    if (!lex.literal("##")) return std::nullopt;
    lex.spaces();
    bool feedback = false;
    if (lex.literal("Feedback")) feedback = true;
    else if (!lex.literal("Answer")) return std::nullopt;
    if (!lex.gap()) return std::nullopt;
    const std::string_view id = lex.token();
    if (id.empty() || !lex.gap()) return std::nullopt;

    Marker marker;
    marker.id = std::string(id);
    if (lex.literal("Start")) {
        marker.kind = feedback ? MarkerKind::FeedbackStart : MarkerKind::AnswerStart;
    } else if (lex.literal("End")) {
        marker.kind = feedback ? MarkerKind::FeedbackEnd : MarkerKind::AnswerEnd;
    } else {
        return std::nullopt;
    }
    lex.spaces();
    if (!lex.literal("##")) return std::nullopt;
    lex.spaces();
    if (marker.kind != MarkerKind::AnswerStart) {
        return lex.done() ? std::optional<Marker>(marker) : std::nullopt;
    }

    // A start marker with a broken POINTS clause is still a start marker; the
    // bad token is reported rather than silently treating the line as text.
    if (lex.done()) return marker;
    if (!lex.literal("POINTS:")) {
        marker.points_token = std::string(lex.token());
        return marker;
    }
    lex.spaces();
    marker.points_token = std::string(lex.token());
    lex.spaces();
    if (lex.literal("##")) lex.spaces();
    if (!lex.done()) marker.points_token += "?";
    return marker;
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        const auto nl = text.find('\n', start);
        if (nl == std::string_view::npos) {
            lines.push_back(text.substr(start));
            break;
        }
        lines.push_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    return lines;
}

ExercisePaper extract_blocks(std::string_view flattened_text, int exercise_id) {
    enum class State { Outside, InAnswer, InFeedback };

    ExercisePaper paper;
    paper.exercise_id = exercise_id;
    paper.source_text = std::string(flattened_text);

    const std::vector<std::string_view> lines = split_lines(paper.source_text);
    std::set<std::string, std::less<>> seen_ids;
    std::vector<std::string_view> question_lines;
    std::vector<std::string_view> answer_lines;
    AnswerBlock open;
    State state = State::Outside;

    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string_view line = lines[i];
        const std::optional<Marker> marker = classify_marker(line);

        if (state == State::InFeedback) {
            if (marker && marker->kind == MarkerKind::FeedbackEnd) {
                state = State::Outside;
                continue;
            }
            if (!marker || marker->kind != MarkerKind::AnswerStart) continue;
            // A new answer block ends an unterminated feedback section.
            state = State::Outside;
        }

        if (state == State::Outside) {
            if (!marker) {
                question_lines.push_back(line);
                continue;
            }
            switch (marker->kind) {
                case MarkerKind::AnswerStart: {
                    if (seen_ids.count(marker->id)) throw FormatError(FormatErrc::DuplicateAnswerId, marker->id);
                    auto points = HalfPoints::parse(marker->points_token);
                    if (!points || *points <= HalfPoints{})
                        throw FormatError(FormatErrc::InvalidPointsToken, marker->points_token, marker->id);
                    seen_ids.insert(marker->id);
                    open = AnswerBlock{};
                    open.answer_id = marker->id;
                    open.max_points = *points;
                    open.question_text = join_trimmed(question_lines);
                    open.start_line = i;
                    question_lines.clear();
                    answer_lines.clear();
                    state = State::InAnswer;
                    break;
                }
                case MarkerKind::AnswerEnd:
                    throw FormatError(FormatErrc::UnmatchedEndMarker, marker->id);
                case MarkerKind::FeedbackStart:
                    state = State::InFeedback;
                    break;
                case MarkerKind::FeedbackEnd:
                    break;  // stray; dropped
            }
            continue;
        }

        // InAnswer
        if (marker && marker->kind == MarkerKind::AnswerEnd) {
            if (marker->id != open.answer_id)
                throw FormatError(FormatErrc::MarkerIdMismatch, open.answer_id, marker->id);
            std::vector<std::string_view> kept;
            for (std::string_view l : answer_lines)
                if (!is_placeholder(l)) kept.push_back(l);
            open.student_answer = join_trimmed(kept);
            open.end_line = i;
            paper.blocks.push_back(std::move(open));
            open = AnswerBlock{};
            state = State::Outside;
        } else if (marker && marker->kind == MarkerKind::AnswerStart) {
            throw FormatError(FormatErrc::UnmatchedStartMarker, open.answer_id);
        } else {
            answer_lines.push_back(line);
        }
    }
    if (state == State::InAnswer) throw FormatError(FormatErrc::UnmatchedStartMarker, open.answer_id);
    if (paper.blocks.empty()) throw FormatError(FormatErrc::NoAnswerBlocks, "");
    return paper;
}

ExercisePaper parse_exercise(ByteView container, int exercise_id) {
    return extract_blocks(odt::parse_odt(container), exercise_id);
}

std::vector<std::string> feedback_section(const AnswerBlock& block, const GradedAnswer& grade) {
    std::vector<std::string> lines;
    lines.push_back("## Feedback " + block.answer_id + " Start ##");
    for (std::string_view line : split_lines(grade.feedback_text)) {
        // Feedback that happens to look like a marker must not become one.
        if (classify_marker(line)) lines.push_back("> " + std::string(line));
        else lines.emplace_back(line);
    }
    if (grade.ungraded_reason) lines.push_back("UNGRADED: " + *grade.ungraded_reason);
    lines.push_back("AWARDED: " + grade.awarded_points.to_string() + " / " + block.max_points.to_string());
    lines.push_back("## Feedback " + block.answer_id + " End ##");
    return lines;
}

Bytes merge_feedback(const ExercisePaper& paper, std::span<const GradedAnswer> graded, ByteView original_container) {
    std::unordered_map<std::string_view, const GradedAnswer*> by_id;
    for (const GradedAnswer& g : graded) {
        if (!by_id.emplace(g.answer_id, &g).second)
            throw FormatError(FormatErrc::GradeBlockMismatch, g.answer_id, "graded twice");
    }
    if (graded.size() != paper.blocks.size())
        throw FormatError(FormatErrc::GradeBlockMismatch, std::to_string(graded.size()),
                          std::to_string(paper.blocks.size()) + " blocks");
    for (const AnswerBlock& b : paper.blocks)
        if (!by_id.count(b.answer_id)) throw FormatError(FormatErrc::GradeBlockMismatch, b.answer_id, "no grade");

    const std::string content = odt::read_content_part(original_container);
    const odt::FlatDocument flat = odt::flatten_content(content);
    // Marker positions come from the container itself so the paper may carry
    // scrubbed text without shifting anything.
    const ExercisePaper located = extract_blocks(flat.text, paper.exercise_id);

    std::vector<odt::Insertion> insertions;
    for (const AnswerBlock& block : paper.blocks) {
        const AnswerBlock* here = located.find(block.answer_id);
        if (here == nullptr)
            throw FormatError(FormatErrc::GradeBlockMismatch, block.answer_id, "not in container");
        const odt::Paragraph& anchor = flat.paragraphs[flat.line_paragraph[here->end_line]];
        std::string xml;
        for (const std::string& line : feedback_section(block, *by_id.at(block.answer_id)))
            xml += odt::paragraph_xml(anchor.prefix, line);
        insertions.push_back({anchor.end, std::move(xml)});
    }
    return odt::replace_content_part(original_container, odt::apply_insertions(content, std::move(insertions)));
}

}  // namespace gradeloop::exercise
