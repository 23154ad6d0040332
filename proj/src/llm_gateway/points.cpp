#include "gradeloop/llm_gateway/points.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>

namespace gradeloop::llm {
namespace {

bool is_decoration(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '*' || c == '_' || c == '`'; }

std::string describe(PointsErrc code, double value, HalfPoints max) {
    std::string out(to_string(code));
    if (code == PointsErrc::MissingPointsMarker) return out;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", value);
    out += "(";
    out += buf;
    if (code == PointsErrc::PointsOutOfRange) out += ", " + max.to_string();
    return out + ")";
}

}  // namespace

std::string_view to_string(PointsErrc code) {
    switch (code) {
        case PointsErrc::MissingPointsMarker: return "MissingPointsMarker";
        case PointsErrc::PointsOffGrid: return "PointsOffGrid";
        case PointsErrc::PointsOutOfRange: return "PointsOutOfRange";
    }
    return "PointsError";
}

PointsError::PointsError(PointsErrc code, double value, HalfPoints max_points)
    : std::runtime_error(describe(code, value, max_points)), code_(code), value_(value), max_(max_points) {}

HalfPoints parse_points(std::string_view response, HalfPoints max_points) {
    if (max_points <= HalfPoints{}) throw std::invalid_argument("max_points must be positive");
    const double nan = std::numeric_limits<double>::quiet_NaN();

    const auto at = response.rfind(kPointsMarker);
    if (at == std::string_view::npos) throw PointsError(PointsErrc::MissingPointsMarker, nan, max_points);

    std::string_view rest = response.substr(at + kPointsMarker.size());
    while (!rest.empty() && is_decoration(rest.front())) rest.remove_prefix(1);
    std::size_t len = 0;
    while (len < rest.size() && (std::isdigit(static_cast<unsigned char>(rest[len])) || rest[len] == '.' ||
                                 rest[len] == ',' || ((rest[len] == '-' || rest[len] == '+') && len == 0)))
        ++len;
    std::string_view token = rest.substr(0, len);
    // A sentence may end right after the number: "POINTS: 4." or "POINTS: 3, because".
    while (!token.empty() && (token.back() == '.' || token.back() == ',')) token.remove_suffix(1);

    const auto value = parse_decimal(token);
    if (!value) throw PointsError(PointsErrc::MissingPointsMarker, nan, max_points);
    const auto points = HalfPoints::from_value(*value);
    if (!points) throw PointsError(PointsErrc::PointsOffGrid, *value, max_points);
    if (*points < HalfPoints{} || *points > max_points)
        throw PointsError(PointsErrc::PointsOutOfRange, *value, max_points);
    return *points;
}

std::string strip_points_statement(std::string_view response) {
    const auto at = response.rfind(kPointsMarker);
    std::string_view head = at == std::string_view::npos ? response : response.substr(0, at);
    while (!head.empty() && (std::isspace(static_cast<unsigned char>(head.back())) || head.back() == '*' ||
                             head.back() == '_' || head.back() == '`' || head.back() == '#'))
        head.remove_suffix(1);
    return std::string(head);
}

}  // namespace gradeloop::llm
