#pragma once

#include <charconv>
#include <cstdio>
#include <chrono>
#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace comove {

/// Calendar date without time of day, stored as days since 1970-01-01.
class Date {
public:
    constexpr Date() = default;
    constexpr explicit Date(std::chrono::sys_days d) : days_(d.time_since_epoch().count()) {}
    constexpr Date(int y, unsigned m, unsigned d)
        : Date(std::chrono::sys_days{std::chrono::year{y} / std::chrono::month{m} / std::chrono::day{d}}) {}

    /// Parses strict ISO-8601 `YYYY-MM-DD`; returns nullopt for anything else
    /// (including impossible dates such as 2021-02-30).
    static std::optional<Date> parse(std::string_view s) {
        while (!s.empty() && (s.front() == ' ' || s.front() == '"')) s.remove_prefix(1);
        while (!s.empty() && (s.back() == ' ' || s.back() == '"' || s.back() == '\r')) s.remove_suffix(1);
        if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
        int y = 0;
        unsigned m = 0, d = 0;
        auto field = [&](std::size_t pos, std::size_t len, auto& out) {
            auto first = s.data() + pos;
            auto [ptr, ec] = std::from_chars(first, first + len, out);
            return ec == std::errc{} && ptr == first + len;
        };
        if (!field(0, 4, y) || !field(5, 2, m) || !field(8, 2, d)) return std::nullopt;
        std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
        if (!ymd.ok()) return std::nullopt;
        return Date{std::chrono::sys_days{ymd}};
    }

    [[nodiscard]] constexpr std::chrono::sys_days sys_days() const {
        return std::chrono::sys_days{std::chrono::days{days_}};
    }
    [[nodiscard]] constexpr std::chrono::year_month_day ymd() const { return {sys_days()}; }
    [[nodiscard]] constexpr long serial() const { return days_; }

    /// Calendar month arithmetic; the day is clamped to the end of the target
    /// month (2020-03-31 minus one month is 2020-02-29).
    [[nodiscard]] Date add_months(int k) const {
        using namespace std::chrono;
        auto d = ymd();
        year_month ym = year_month{d.year(), d.month()} + months{k};
        auto last = year_month_day_last{ym.year(), month_day_last{ym.month()}}.day();
        auto dd = d.day() > last ? last : d.day();
        return Date{std::chrono::sys_days{ym.year() / ym.month() / dd}};
    }

    [[nodiscard]] std::string iso() const {
        auto d = ymd();
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", int(d.year()), unsigned(d.month()), unsigned(d.day()));
        return buf;
    }

    friend constexpr auto operator<=>(const Date&, const Date&) = default;

private:
    long days_ = 0;
};

}  // namespace comove
