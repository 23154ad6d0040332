#include "gradeloop/prompt_engine/solution_registry.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>

namespace gradeloop::prompt {
namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::optional<int> parse_int(std::string_view s) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

struct Field {
    std::string value;
    std::size_t line = 0;
};

struct PendingRecord {
    std::size_t line = 0;
    std::map<std::string, Field, std::less<>> fields;

    const Field& require(std::string_view name) const {
        auto it = fields.find(name);
        if (it == fields.end()) throw RegistryError(RegistryErrc::MissingField, std::string(name), line);
        return it->second;
    }
    const Field* get(std::string_view name) const {
        auto it = fields.find(name);
        return it == fields.end() ? nullptr : &it->second;
    }
};

constexpr std::string_view kKnownFields[] = {"exercise_id", "answer_id", "max_points", "mode", "n", "model_answer"};

ModelSolutionEntry build(const PendingRecord& rec) {
    ModelSolutionEntry entry;

    const Field& exercise = rec.require("exercise_id");
    auto exercise_id = parse_int(exercise.value);
    if (!exercise_id || *exercise_id < 1) throw RegistryError(RegistryErrc::InvalidValue, exercise.value, exercise.line);
    entry.exercise_id = *exercise_id;

    const Field& answer = rec.require("answer_id");
    if (answer.value.empty() || answer.value.find_first_of(" \t#") != std::string::npos)
        throw RegistryError(RegistryErrc::InvalidValue, answer.value, answer.line);
    entry.answer_id = answer.value;

    const Field& points = rec.require("max_points");
    auto max_points = HalfPoints::parse(points.value);
    if (!max_points || *max_points <= HalfPoints{})
        throw RegistryError(RegistryErrc::InvalidValue, points.value, points.line);
    entry.max_points = *max_points;

    const Field& mode = rec.require("mode");
    const std::string m = lower(mode.value);
    const Field* n = rec.get("n");
    if (m == "close" || m == "closematch" || m == "close_match") {
        if (n) throw RegistryError(RegistryErrc::InvalidPolicy, "n given for close match", n->line);
        entry.policy = MatchPolicy::close_match();
    } else if (m == "flexible" || m == "flexiblematch" || m == "flexible_match") {
        if (n) throw RegistryError(RegistryErrc::InvalidPolicy, "n given for flexible match", n->line);
        entry.policy = MatchPolicy::flexible_match();
    } else if (m == "partial" || m == "partialmatch" || m == "partial_match") {
        const Field& count = rec.require("n");
        auto value = parse_int(count.value);
        if (!value || *value < 1) throw RegistryError(RegistryErrc::InvalidPolicy, count.value, count.line);
        entry.policy = MatchPolicy::partial_match(*value);
    } else {
        throw RegistryError(RegistryErrc::InvalidPolicy, mode.value, mode.line);
    }

    entry.model_answer = rec.require("model_answer").value;
    return entry;
}

std::string describe(RegistryErrc code, const std::string& subject, std::size_t line) {
    return std::string(to_string(code)) + "(" + subject + ") at line " + std::to_string(line);
}

}  // namespace

std::string_view to_string(RegistryErrc code) {
    switch (code) {
        case RegistryErrc::DuplicateSolutionKey: return "DuplicateSolutionKey";
        case RegistryErrc::MissingField: return "MissingField";
        case RegistryErrc::InvalidPolicy: return "InvalidPolicy";
        case RegistryErrc::InvalidValue: return "InvalidValue";
        case RegistryErrc::Syntax: return "Syntax";
    }
    return "RegistryError";
}

RegistryError::RegistryError(RegistryErrc code, std::string subject, std::size_t line)
    : std::runtime_error(describe(code, subject, line)), code_(code), subject_(std::move(subject)), line_(line) {}

SolutionRegistry SolutionRegistry::parse(std::string_view source) {
    SolutionRegistry registry;
    std::optional<PendingRecord> record;
    std::optional<std::string> heredoc;  // open multi-line model answer
    std::size_t heredoc_line = 0;

    auto finish = [&] {
        if (!record) return;
        ModelSolutionEntry entry = build(*record);
        Key key{entry.exercise_id, entry.answer_id};
        if (registry.entries_.count(key))
            throw RegistryError(RegistryErrc::DuplicateSolutionKey,
                                std::to_string(entry.exercise_id) + "/" + entry.answer_id, record->line);
        registry.entries_.emplace(std::move(key), std::move(entry));
        record.reset();
    };

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= source.size()) {
        const auto nl = source.find('\n', pos);
        std::string_view raw = source.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? source.size() + 1 : nl + 1;
        ++line_no;
        if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);

        if (heredoc) {
            if (trim(raw) == ">>>") {
                record->fields["model_answer"] = Field{*heredoc, heredoc_line};
                heredoc.reset();
            } else {
                if (!heredoc->empty() || heredoc_line != line_no - 1) *heredoc += '\n';
                *heredoc += raw;
            }
            continue;
        }

        const std::string_view line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        if (line == "[solution]") {
            finish();
            record = PendingRecord{line_no, {}};
            continue;
        }
        const auto colon = line.find(':');
        if (!record || colon == std::string_view::npos)
            throw RegistryError(RegistryErrc::Syntax, std::string(line), line_no);
        const std::string key(trim(line.substr(0, colon)));
        const std::string_view value = trim(line.substr(colon + 1));
        if (std::find(std::begin(kKnownFields), std::end(kKnownFields), key) == std::end(kKnownFields))
            throw RegistryError(RegistryErrc::Syntax, "unknown field " + key, line_no);
        if (record->fields.count(key)) throw RegistryError(RegistryErrc::Syntax, "repeated field " + key, line_no);
        if (key == "model_answer" && value == "<<<") {
            heredoc.emplace();
            heredoc_line = line_no;
            continue;
        }
        record->fields[key] = Field{std::string(value), line_no};
    }
    if (heredoc) throw RegistryError(RegistryErrc::Syntax, "unterminated model_answer block", heredoc_line);
    finish();
    return registry;
}

SolutionRegistry SolutionRegistry::load_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read registry " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

const ModelSolutionEntry* SolutionRegistry::find(int exercise_id, std::string_view answer_id) const {
    auto it = entries_.find(Key{exercise_id, std::string(answer_id)});
    return it == entries_.end() ? nullptr : &it->second;
}

std::string SolutionRegistry::to_text() const {
    std::string out;
    for (const auto& [key, e] : entries_) {
        out += "[solution]\n";
        out += "exercise_id: " + std::to_string(e.exercise_id) + "\n";
        out += "answer_id: " + e.answer_id + "\n";
        out += "max_points: " + e.max_points.to_string() + "\n";
        out += "mode: " + std::string(to_string(e.policy.mode())) + "\n";
        if (e.policy.min_elements()) out += "n: " + std::to_string(*e.policy.min_elements()) + "\n";
        out += "model_answer: <<<\n" + e.model_answer + "\n>>>\n\n";
    }
    return out;
}

}  // namespace gradeloop::prompt
