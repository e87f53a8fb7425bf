#pragma once

// Raw tick parsing and the five cleaning rules that turn a trade file into
// per-asset log-price series.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "icv/detail/text.hpp"
#include "icv/error.hpp"

namespace icv::ingest {

using Nanos = std::int64_t;

inline constexpr Nanos kNsPerSecond = 1'000'000'000LL;
inline constexpr Nanos kNsPerMinute = 60 * kNsPerSecond;
inline constexpr Nanos kNsPerHour = 60 * kNsPerMinute;

/// Trading session as clock times (ns since midnight).
struct Session {
    Nanos open = 9 * kNsPerHour + 30 * kNsPerMinute;
    Nanos close = 16 * kNsPerHour;

    [[nodiscard]] Nanos length() const noexcept { return close - open; }
    friend bool operator==(const Session&, const Session&) = default;
};

struct RawTick {
    std::string symbol;
    Nanos timestamp = 0; // clock time, ns since midnight
    double price = 0.0;
    std::string cond;
    long corr = 0;
};

/// Cleaned series; `times` are ns since session open, strictly increasing.
struct TickSeries {
    std::string symbol;
    std::vector<Nanos> times;
    std::vector<double> log_prices;
    Session session;

    [[nodiscard]] std::size_t size() const noexcept { return times.size(); }
    [[nodiscard]] bool empty() const noexcept { return times.empty(); }
    friend bool operator==(const TickSeries&, const TickSeries&) = default;
};

/// Parses "HH:MM:SS[.fffffffff]" or a bare integer (ns since midnight).
/// Fractions shorter than nine digits are zero-padded.
inline bool parse_clock(std::string_view s, Nanos& out) {
    if (s.empty()) return false;
    if (s.find(':') == std::string_view::npos) {
        return detail::parse_int(s, out);
    }
    long h = 0, m = 0, sec = 0;
    const auto c1 = s.find(':');
    const auto c2 = s.find(':', c1 + 1);
    if (c2 == std::string_view::npos) return false;
    const auto dot = s.find('.', c2 + 1);
    if (!detail::parse_int(s.substr(0, c1), h) || !detail::parse_int(s.substr(c1 + 1, c2 - c1 - 1), m)) return false;
    const auto sec_end = dot == std::string_view::npos ? s.size() : dot;
    if (!detail::parse_int(s.substr(c2 + 1, sec_end - c2 - 1), sec)) return false;
    if (h < 0 || h > 23 || m < 0 || m > 59 || sec < 0 || sec > 60) return false;
    Nanos frac = 0;
    if (dot != std::string_view::npos) {
        const auto digits = s.substr(dot + 1);
        if (digits.empty() || digits.size() > 9) return false;
        for (char c : digits) {
            if (c < '0' || c > '9') return false;
        }
        if (!detail::parse_int(digits, frac)) return false;
        for (std::size_t k = digits.size(); k < 9; ++k) frac *= 10;
    }
    out = h * kNsPerHour + m * kNsPerMinute + sec * kNsPerSecond + frac;
    return true;
}

inline std::string format_clock(Nanos t) {
    const Nanos h = t / kNsPerHour;
    const Nanos m = (t / kNsPerMinute) % 60;
    const Nanos s = (t / kNsPerSecond) % 60;
    const Nanos frac = t % kNsPerSecond;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%02lld:%02lld:%02lld.%09lld", static_cast<long long>(h), static_cast<long long>(m),
                  static_cast<long long>(s), static_cast<long long>(frac));
    return buf;
}

/// Reads a tick file with header row `symbol,timestamp,price,cond,corr`.
inline std::vector<RawTick> parse_ticks(std::istream& in, char delimiter = ',') {
    std::vector<RawTick> out;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    static constexpr std::string_view kColumns[] = {"symbol", "timestamp", "price", "cond", "corr"};
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split(line, delimiter);
        const auto bad = [&](const std::string& why) {
            fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": " + why);
        };
        if (!header_seen) {
            if (fields.size() != 5) bad("header must have 5 columns");
            for (std::size_t k = 0; k < 5; ++k) {
                if (detail::lower(detail::trim(fields[k])) != kColumns[k]) bad("unexpected header column '" + fields[k] + "'");
            }
            header_seen = true;
            continue;
        }
        if (fields.size() != 5) bad("expected 5 fields, got " + std::to_string(fields.size()));
        RawTick t;
        t.symbol = std::string(detail::trim(fields[0]));
        if (t.symbol.empty()) bad("empty symbol");
        if (!parse_clock(detail::trim(fields[1]), t.timestamp)) bad("bad timestamp '" + fields[1] + "'");
        if (!detail::parse_double(detail::trim(fields[2]), t.price)) bad("bad price '" + fields[2] + "'");
        t.cond = std::string(detail::trim(fields[3]));
        if (!detail::parse_int(detail::trim(fields[4]), t.corr)) bad("bad corr '" + fields[4] + "'");
        out.push_back(std::move(t));
    }
    if (!header_seen) fail(ErrorCode::ParseError, "line 1: missing header row");
    return out;
}

inline void write_ticks(std::ostream& out, const std::vector<RawTick>& ticks, char delimiter = ',') {
    out << "symbol" << delimiter << "timestamp" << delimiter << "price" << delimiter << "cond" << delimiter << "corr\n";
    for (const auto& t : ticks) {
        out << t.symbol << delimiter << format_clock(t.timestamp) << delimiter << detail::fmt_double(t.price) << delimiter
            << t.cond << delimiter << t.corr << '\n';
    }
}

/// Rules 1-4: positive price, non-negative correction, empty/E/F condition, inside the session.
inline bool passes_filters(const RawTick& t, const Session& session) {
    if (!(t.price > 0.0) || !std::isfinite(t.price)) return false;
    if (t.corr < 0) return false;
    if (!t.cond.empty() && t.cond != "E" && t.cond != "F") return false;
    return t.timestamp >= session.open && t.timestamp <= session.close;
}

/// Median with the mean of the two middle values for even group sizes.
inline double median_price(std::vector<double> prices) {
    std::sort(prices.begin(), prices.end());
    const auto k = prices.size();
    if (k % 2 == 1) return prices[k / 2];
    return 0.5 * (prices[k / 2 - 1] + prices[k / 2]);
}

/// Cleans one symbol's ticks. Returns an empty series when nothing survives.
inline TickSeries clean_symbol(std::string symbol, std::vector<RawTick> ticks, const Session& session) {
    std::erase_if(ticks, [&](const RawTick& t) { return !passes_filters(t, session); });
    std::stable_sort(ticks.begin(), ticks.end(), [](const RawTick& a, const RawTick& b) { return a.timestamp < b.timestamp; });
    TickSeries out;
    out.symbol = std::move(symbol);
    out.session = session;
    std::vector<double> group;
    for (std::size_t i = 0; i < ticks.size();) {
        std::size_t j = i;
        group.clear();
        while (j < ticks.size() && ticks[j].timestamp == ticks[i].timestamp) group.push_back(ticks[j++].price);
        out.times.push_back(ticks[i].timestamp - session.open);
        out.log_prices.push_back(std::log(median_price(group)));
        i = j;
    }
    return out;
}

/// Applies all five cleaning rules; output is keyed and ordered by symbol.
/// Throws NoDataForSymbol if any symbol present in the input has no surviving tick.
inline std::map<std::string, TickSeries> clean_ticks(const std::vector<RawTick>& raw, const Session& session = {}) {
    require(session.open < session.close, ErrorCode::InvalidArgument, "session open must precede close");
    std::map<std::string, std::vector<RawTick>> by_symbol;
    for (const auto& t : raw) by_symbol[t.symbol].push_back(t);
    std::map<std::string, TickSeries> out;
    for (auto& [sym, ticks] : by_symbol) {
        auto series = clean_symbol(sym, std::move(ticks), session);
        if (series.empty()) fail(ErrorCode::NoDataForSymbol, sym);
        out.emplace(sym, std::move(series));
    }
    return out;
}

/// Inverse of cleaning for one series: raw rows that clean back to the same series.
inline std::vector<RawTick> to_raw(const TickSeries& s) {
    std::vector<RawTick> out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        out.push_back(RawTick{s.symbol, s.times[i] + s.session.open, std::exp(s.log_prices[i]), "", 0});
    }
    return out;
}

// Cache schema: header `timestamp_ns,log_price`, then one row per tick.
inline void write_cache(std::ostream& out, const TickSeries& s, char delimiter = ',') {
    out << "timestamp_ns" << delimiter << "log_price\n";
    for (std::size_t i = 0; i < s.size(); ++i) out << s.times[i] << delimiter << detail::fmt_double(s.log_prices[i]) << '\n';
}

inline TickSeries read_cache(std::istream& in, std::string symbol, const Session& session = {}, char delimiter = ',') {
    TickSeries s;
    s.symbol = std::move(symbol);
    s.session = session;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1 || detail::trim(line).empty()) continue;
        const auto f = detail::split(line, delimiter);
        Nanos t = 0;
        double lp = 0.0;
        if (f.size() != 2 || !detail::parse_int(detail::trim(f[0]), t) || !detail::parse_double(detail::trim(f[1]), lp)) {
            fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": malformed cache row");
        }
        if (!s.times.empty() && t <= s.times.back()) {
            fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": timestamps not strictly increasing");
        }
        s.times.push_back(t);
        s.log_prices.push_back(lp);
    }
    return s;
}

} // namespace icv::ingest
