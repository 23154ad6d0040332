#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace gradeloop {

/// A point value on the 0.5 grading grid, stored as an exact count of halves.
class HalfPoints {
public:
    constexpr HalfPoints() = default;

    static constexpr HalfPoints from_halves(std::int64_t halves) { return HalfPoints(halves); }
    static constexpr HalfPoints whole(std::int64_t points) { return HalfPoints(points * 2); }

    /// Grid membership test for an arbitrary real. Returns nullopt when `value`
    /// is not a multiple of 0.5 (to within 1e-9) or is not finite.
    static std::optional<HalfPoints> from_value(double value);

    /// Parses a decimal token such as "4", "3.5" or "2.50". A comma is
    /// accepted as decimal separator. Nullopt for anything else, including
    /// values that are off the 0.5 grid.
    static std::optional<HalfPoints> parse(std::string_view token);

    constexpr std::int64_t halves() const { return halves_; }
    constexpr double value() const { return static_cast<double>(halves_) / 2.0; }

    /// "4", "3.5", "0", "-1.5"
    std::string to_string() const;

    constexpr HalfPoints operator+(HalfPoints other) const { return HalfPoints(halves_ + other.halves_); }
    constexpr HalfPoints& operator+=(HalfPoints other) {
        halves_ += other.halves_;
        return *this;
    }
    constexpr auto operator<=>(const HalfPoints&) const = default;

private:
    constexpr explicit HalfPoints(std::int64_t halves) : halves_(halves) {}
    std::int64_t halves_ = 0;
};

/// Parses a plain decimal number ("3", "-2.25", "4,5"). Used where the caller
/// needs the value even when it is off the grid.
std::optional<double> parse_decimal(std::string_view token);

}  // namespace gradeloop
