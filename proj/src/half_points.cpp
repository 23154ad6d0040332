#include "gradeloop/half_points.hpp"

#include <charconv>
#include <cmath>

namespace gradeloop {

std::optional<HalfPoints> HalfPoints::from_value(double value) {
    if (!std::isfinite(value)) return std::nullopt;
    const double doubled = value * 2.0;
    const double nearest = std::round(doubled);
    if (std::fabs(doubled - nearest) > 1e-9) return std::nullopt;
    return HalfPoints(static_cast<std::int64_t>(nearest));
}

std::optional<double> parse_decimal(std::string_view token) {
    if (token.empty() || token.size() > 32) return std::nullopt;
    bool negative = false;
    if (token.front() == '+' || token.front() == '-') {
        negative = token.front() == '-';
        token.remove_prefix(1);
    }
    const auto separator = token.find_first_of(".,");
    std::string_view integral = token.substr(0, separator);
    std::string_view fraction =
        separator == std::string_view::npos ? std::string_view{} : token.substr(separator + 1);
    if (integral.empty() && fraction.empty()) return std::nullopt;
    auto all_digits = [](std::string_view part) {
        for (char c : part)
            if (c < '0' || c > '9') return false;
        return true;
    };
    if (!all_digits(integral) || !all_digits(fraction)) return std::nullopt;

    std::string normalized = integral.empty() ? "0" : std::string(integral);
    if (!fraction.empty()) {
        normalized += '.';
        normalized += fraction;
    }
    double value = 0.0;
    const char* last = normalized.data() + normalized.size();
    auto [ptr, ec] = std::from_chars(normalized.data(), last, value);
    if (ec != std::errc{} || ptr != last) return std::nullopt;
    return negative ? -value : value;
}

std::optional<HalfPoints> HalfPoints::parse(std::string_view token) {
    auto value = parse_decimal(token);
    if (!value) return std::nullopt;
    return from_value(*value);
}

std::string HalfPoints::to_string() const {
    const bool negative = halves_ < 0;
    const std::int64_t magnitude = negative ? -halves_ : halves_;
    std::string out = negative ? "-" : "";
    out += std::to_string(magnitude / 2);
    if (magnitude % 2 != 0) out += ".5";
    return out;
}

}  // namespace gradeloop
