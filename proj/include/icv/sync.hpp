#pragma once

// Synchronization of asynchronous tick series onto a common grid.

#include <Eigen/Dense>

#include <algorithm>
#include <functional>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "icv/detail/text.hpp"
#include "icv/error.hpp"
#include "icv/ingest.hpp"

namespace icv::sync {

using ingest::Nanos;
using ingest::TickSeries;

enum class Scheme { PreviousTick, RefreshTime };

/// p x (n+1) log-prices on a strictly increasing grid; row i is asset i.
struct SyncPanel {
    std::vector<Nanos> grid;
    Eigen::MatrixXd log_prices;
    Scheme scheme = Scheme::PreviousTick;
    std::vector<std::string> symbols;

    [[nodiscard]] Eigen::Index assets() const noexcept { return log_prices.rows(); }
    [[nodiscard]] Eigen::Index returns() const noexcept { return log_prices.cols() > 0 ? log_prices.cols() - 1 : 0; }
};

/// p x n matrix of adjacent-grid differences.
struct ReturnsMatrix {
    Eigen::MatrixXd deltas;
    std::vector<Nanos> grid;

    [[nodiscard]] Eigen::Index assets() const noexcept { return deltas.rows(); }
    [[nodiscard]] Eigen::Index count() const noexcept { return deltas.cols(); }
};

inline ReturnsMatrix to_returns(const SyncPanel& panel) {
    ReturnsMatrix r;
    r.grid = panel.grid;
    const auto n = panel.returns();
    r.deltas.resize(panel.assets(), n);
    for (Eigen::Index k = 0; k < n; ++k) r.deltas.col(k) = panel.log_prices.col(k + 1) - panel.log_prices.col(k);
    return r;
}

/// Concatenates return blocks column-wise; the gaps between blocks
/// (e.g. overnight) contribute no return. Grids are not merged.
inline ReturnsMatrix concat_returns(std::span<const ReturnsMatrix> blocks) {
    ReturnsMatrix out;
    if (blocks.empty()) return out;
    Eigen::Index total = 0;
    const auto p = blocks.front().assets();
    for (const auto& b : blocks) {
        require(b.assets() == p, ErrorCode::InvalidArgument, "return blocks disagree on asset count");
        total += b.count();
    }
    out.deltas.resize(p, total);
    Eigen::Index at = 0;
    for (const auto& b : blocks) {
        out.deltas.middleCols(at, b.count()) = b.deltas;
        at += b.count();
    }
    return out;
}

/// Entry (i,k) is the log-price of asset i's latest tick at or before grid[k].
inline SyncPanel previous_tick(std::span<const TickSeries> series, const std::vector<Nanos>& grid) {
    require(!grid.empty(), ErrorCode::InvalidArgument, "empty grid");
    require(std::adjacent_find(grid.begin(), grid.end(), std::greater_equal<>()) == grid.end(), ErrorCode::InvalidArgument,
            "grid must be strictly increasing");
    SyncPanel panel;
    panel.grid = grid;
    panel.scheme = Scheme::PreviousTick;
    panel.log_prices.resize(static_cast<Eigen::Index>(series.size()), static_cast<Eigen::Index>(grid.size()));
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& s = series[i];
        panel.symbols.push_back(s.symbol);
        if (s.empty() || s.times.front() > grid.front()) fail(ErrorCode::InsufficientHistory, s.symbol);
        std::size_t at = 0;
        for (std::size_t k = 0; k < grid.size(); ++k) {
            while (at + 1 < s.times.size() && s.times[at + 1] <= grid[k]) ++at;
            panel.log_prices(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = s.log_prices[at];
        }
    }
    return panel;
}

/// Refresh times from `start`: t0 is the first instant every asset has traded
/// at or after start; each later time is the first instant every asset has
/// traded strictly after the previous one. Ticks at the same instant count
/// for every asset that has them.
inline std::vector<Nanos> refresh_times(std::span<const TickSeries> series, Nanos start) {
    std::vector<Nanos> out;
    if (series.empty()) return out;
    std::vector<std::size_t> next(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& t = series[i].times;
        next[i] = static_cast<std::size_t>(std::lower_bound(t.begin(), t.end(), start) - t.begin());
    }
    while (true) {
        Nanos round = std::numeric_limits<Nanos>::min();
        for (std::size_t i = 0; i < series.size(); ++i) {
            if (next[i] >= series[i].times.size()) return out;
            round = std::max(round, series[i].times[next[i]]);
        }
        out.push_back(round);
        for (std::size_t i = 0; i < series.size(); ++i) {
            const auto& t = series[i].times;
            next[i] = static_cast<std::size_t>(std::upper_bound(t.begin() + static_cast<std::ptrdiff_t>(next[i]), t.end(), round) -
                                               t.begin());
        }
    }
}

/// Refresh-time panel; values are each asset's last tick at or before t*_j.
inline SyncPanel refresh_time(std::span<const TickSeries> series, Nanos start) {
    auto grid = refresh_times(series, start);
    if (grid.size() < 2) fail(ErrorCode::InsufficientRefreshes, std::to_string(grid.size()) + " refresh time(s)");
    auto panel = previous_tick(series, grid);
    panel.scheme = Scheme::RefreshTime;
    return panel;
}

/// open, open+step, ..., close in ns since session open.
inline std::vector<Nanos> regular_grid(const ingest::Session& session, Nanos step) {
    require(step > 0, ErrorCode::InvalidArgument, "grid step must be positive");
    require(session.length() > 0 && session.length() % step == 0, ErrorCode::InvalidArgument,
            "session length must be a positive multiple of the grid step");
    std::vector<Nanos> grid;
    for (Nanos t = 0; t <= session.length(); t += step) grid.push_back(t);
    return grid;
}

inline std::vector<Nanos> fifteen_minute_grid(const ingest::Session& session = {}) {
    return regular_grid(session, 15 * ingest::kNsPerMinute);
}

// Text form: first row the grid, then one row of log-prices per asset.
inline void write_panel(std::ostream& out, const SyncPanel& panel, char delimiter = ',') {
    for (std::size_t k = 0; k < panel.grid.size(); ++k) out << (k ? std::string(1, delimiter) : "") << panel.grid[k];
    out << '\n';
    for (Eigen::Index i = 0; i < panel.assets(); ++i) {
        for (Eigen::Index k = 0; k < panel.log_prices.cols(); ++k) {
            out << (k ? std::string(1, delimiter) : "") << detail::fmt_double(panel.log_prices(i, k));
        }
        out << '\n';
    }
}

inline SyncPanel read_panel(std::istream& in, char delimiter = ',') {
    SyncPanel panel;
    std::string line;
    std::vector<std::vector<double>> rows;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (detail::trim(line).empty()) continue;
        const auto f = detail::split(line, delimiter);
        if (panel.grid.empty()) {
            for (const auto& v : f) {
                Nanos t = 0;
                if (!detail::parse_int(detail::trim(v), t)) fail(ErrorCode::ParseError, "line 1: bad grid timestamp");
                panel.grid.push_back(t);
            }
            continue;
        }
        if (f.size() != panel.grid.size()) fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": row length mismatch");
        auto& row = rows.emplace_back();
        for (const auto& v : f) {
            double x = 0.0;
            if (!detail::parse_double(detail::trim(v), x)) fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": bad value");
            row.push_back(x);
        }
    }
    panel.log_prices.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(panel.grid.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t k = 0; k < rows[i].size(); ++k) {
            panel.log_prices(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
        }
    }
    return panel;
}

} // namespace icv::sync
