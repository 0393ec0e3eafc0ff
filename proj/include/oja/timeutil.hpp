#pragma once

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace oja::timeutil {

/// Seconds since the Unix epoch, UTC. All log timestamps use this type.
using Seconds = std::int64_t;

constexpr std::int64_t kSecondsPerDay = 86400;

/// Days since 1970-01-01 for a proleptic Gregorian civil date.
/// Standard era-based conversion, exact for the full int range.
inline std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline void civil_from_days(std::int64_t z, int& y, unsigned& m, unsigned& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y = static_cast<int>(yy + (m <= 2));
}

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

/// Calendar day number of an instant in the dataset's local timezone.
inline std::int64_t local_day(Seconds t, int tz_offset_min) {
    return floor_div(t + static_cast<std::int64_t>(tz_offset_min) * 60, kSecondsPerDay);
}

namespace detail {

inline bool read_int(std::string_view s, std::size_t& pos, int digits, int& out) {
    if (pos + digits > s.size()) return false;
    int v = 0;
    for (int i = 0; i < digits; ++i) {
        char c = s[pos + i];
        if (c < '0' || c > '9') return false;
        v = v * 10 + (c - '0');
    }
    pos += digits;
    out = v;
    return true;
}

} // namespace detail

/// Parses a timestamp using a strftime-like pattern restricted to
/// %Y %m %d %H %M %S plus literal separators. The special pattern "unix"
/// reads integer epoch seconds directly. A trailing 'Z' in the input marks
/// the value as UTC regardless of tz_offset_min; otherwise the input is
/// interpreted as local time at the given offset.
inline std::optional<Seconds> parse_datetime(std::string_view s, std::string_view pattern,
                                             int tz_offset_min) {
    // trim surrounding whitespace
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    if (s.empty()) return std::nullopt;

    if (pattern == "unix") {
        std::int64_t v = 0;
        bool neg = false;
        std::size_t i = 0;
        if (s[0] == '-') { neg = true; i = 1; }
        if (i == s.size()) return std::nullopt;
        for (; i < s.size(); ++i) {
            if (s[i] < '0' || s[i] > '9') return std::nullopt;
            v = v * 10 + (s[i] - '0');
        }
        return neg ? -v : v;
    }

    bool utc = false;
    if (s.back() == 'Z') {
        utc = true;
        s.remove_suffix(1);
    }
    if (!pattern.empty() && pattern.back() == 'Z') pattern.remove_suffix(1);

    int year = 1970, mon = 1, day = 1, hh = 0, mm = 0, ss = 0;
    std::size_t pos = 0;
    for (std::size_t pi = 0; pi < pattern.size(); ++pi) {
        char pc = pattern[pi];
        if (pc == '%' && pi + 1 < pattern.size()) {
            char tok = pattern[++pi];
            bool ok = true;
            switch (tok) {
                case 'Y': ok = detail::read_int(s, pos, 4, year); break;
                case 'm': ok = detail::read_int(s, pos, 2, mon); break;
                case 'd': ok = detail::read_int(s, pos, 2, day); break;
                case 'H': ok = detail::read_int(s, pos, 2, hh); break;
                case 'M': ok = detail::read_int(s, pos, 2, mm); break;
                case 'S': ok = detail::read_int(s, pos, 2, ss); break;
                default: ok = false; break;
            }
            if (!ok) return std::nullopt;
        } else {
            // 'T' in the pattern also accepts a space, and vice versa
            if (pos >= s.size()) return std::nullopt;
            char c = s[pos];
            bool match = (c == pc) || (pc == 'T' && c == ' ') || (pc == ' ' && c == 'T');
            if (!match) return std::nullopt;
            ++pos;
        }
    }
    if (pos != s.size()) return std::nullopt;
    if (mon < 1 || mon > 12 || day < 1 || day > 31 || hh > 23 || mm > 59 || ss > 60)
        return std::nullopt;

    Seconds t = days_from_civil(year, static_cast<unsigned>(mon), static_cast<unsigned>(day)) *
                    kSecondsPerDay +
                hh * 3600 + mm * 60 + ss;
    if (!utc) t -= static_cast<std::int64_t>(tz_offset_min) * 60;
    return t;
}

/// Tries the common export patterns in a fixed order.
inline std::optional<Seconds> parse_datetime_auto(std::string_view s, int tz_offset_min) {
    if (auto t = parse_datetime(s, "%Y-%m-%d %H:%M:%S", tz_offset_min)) return t;
    if (auto t = parse_datetime(s, "%Y-%m-%dT%H:%M:%S", tz_offset_min)) return t;
    return parse_datetime(s, "unix", tz_offset_min);
}

/// Canonical UTC rendering: "YYYY-MM-DDTHH:MM:SSZ".
inline std::string format_utc(Seconds t) {
    std::int64_t days = floor_div(t, kSecondsPerDay);
    std::int64_t rem = t - days * kSecondsPerDay;
    int y;
    unsigned m, d;
    civil_from_days(days, y, m, d);
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02lld:%02lld:%02lldZ", y, m, d,
                  static_cast<long long>(rem / 3600), static_cast<long long>((rem / 60) % 60),
                  static_cast<long long>(rem % 60));
    return buf;
}

/// Local rendering "YYYY-MM-DD HH:MM:SS" at the given offset (report text).
inline std::string format_local(Seconds t, int tz_offset_min) {
    Seconds shifted = t + static_cast<std::int64_t>(tz_offset_min) * 60;
    std::int64_t days = floor_div(shifted, kSecondsPerDay);
    std::int64_t rem = shifted - days * kSecondsPerDay;
    int y;
    unsigned m, d;
    civil_from_days(days, y, m, d);
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u %02lld:%02lld:%02lld", y, m, d,
                  static_cast<long long>(rem / 3600), static_cast<long long>((rem / 60) % 60),
                  static_cast<long long>(rem % 60));
    return buf;
}

} // namespace oja::timeutil
