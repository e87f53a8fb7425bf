#pragma once

// Daily-rebalance backtest: per evaluation day, estimate a covariance from
// strictly earlier days, form weights, realize the next close-to-close
// log-return. Annualized metrics, rolling windows, sub-periods, grid sweeps.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "icv/dataset.hpp"
#include "icv/detail/parallel.hpp"
#include "icv/detail/text.hpp"
#include "icv/error.hpp"
#include "icv/estimators.hpp"
#include "icv/portfolio.hpp"
#include "icv/spectral.hpp"
#include "icv/sqml.hpp"
#include "icv/sync.hpp"

namespace icv::backtest {

enum class Estimator { None, SP, LS, TS, SQrM, SQrD };
enum class Optimizer { GMV, MwM, L1GMV, EW, EWTQ };

constexpr std::string_view to_string(Estimator e) noexcept {
    switch (e) {
    case Estimator::None: return "none";
    case Estimator::SP: return "SP";
    case Estimator::LS: return "LS";
    case Estimator::TS: return "TS";
    case Estimator::SQrM: return "SQrM";
    case Estimator::SQrD: return "SQrD";
    }
    return "?";
}

constexpr std::string_view to_string(Optimizer o) noexcept {
    switch (o) {
    case Optimizer::GMV: return "GMV";
    case Optimizer::MwM: return "MwM";
    case Optimizer::L1GMV: return "L1-GMV";
    case Optimizer::EW: return "EW";
    case Optimizer::EWTQ: return "EW-TQ";
    }
    return "?";
}

inline Estimator estimator_from_string(std::string_view s) {
    for (auto e : {Estimator::None, Estimator::SP, Estimator::LS, Estimator::TS, Estimator::SQrM, Estimator::SQrD})
        if (s == to_string(e)) return e;
    fail(ErrorCode::InvalidArgument, "unknown estimator '" + std::string(s) + "'");
}

inline Optimizer optimizer_from_string(std::string_view s) {
    for (auto o : {Optimizer::GMV, Optimizer::MwM, Optimizer::L1GMV, Optimizer::EW, Optimizer::EWTQ})
        if (s == to_string(o)) return o;
    fail(ErrorCode::InvalidArgument, "unknown optimizer '" + std::string(s) + "'");
}

struct StrategySpec {
    std::string name;
    Estimator estimator = Estimator::None;
    Optimizer optimizer = Optimizer::EW;
    int j_ls = 100;           // daily returns for linear shrinkage
    int j_sp = 100;           // daily returns for the sample covariance
    int j_ts = 5;             // days averaged for the two-scale estimator
    int j1 = 5;               // SQML eigenvector window (days)
    int j = 6;                // SQML total window (days)
    double c = 1.2;           // gross exposure bound
    int momentum_days = 250;
    int tscv_slow = 10;

    [[nodiscard]] bool needs_covariance() const noexcept { return optimizer != Optimizer::EW && optimizer != Optimizer::EWTQ; }
    [[nodiscard]] bool needs_momentum() const noexcept { return optimizer == Optimizer::MwM || optimizer == Optimizer::EWTQ; }

    /// Earlier days read by the strategy for one evaluation day.
    [[nodiscard]] int lookback_days() const {
        int need = 0;
        if (needs_covariance()) {
            switch (estimator) {
            case Estimator::SP: need = j_sp + 1; break;
            case Estimator::LS: need = j_ls + 1; break;
            case Estimator::TS: need = j_ts; break;
            case Estimator::SQrM: need = j; break;
            case Estimator::SQrD: need = j + 1; break;
            case Estimator::None: break;
            }
        }
        if (needs_momentum()) need = std::max(need, momentum_days + 1);
        return need;
    }

    // Canonical one-line form, used for hashing and tables.
    [[nodiscard]] std::string describe() const {
        std::string s = name + "|" + std::string(to_string(estimator)) + "|" + std::string(to_string(optimizer));
        switch (estimator) {
        case Estimator::SP: s += "|J_SP=" + std::to_string(j_sp); break;
        case Estimator::LS: s += "|J_LS=" + std::to_string(j_ls); break;
        case Estimator::TS: s += "|J_TS=" + std::to_string(j_ts) + "|K=" + std::to_string(tscv_slow); break;
        case Estimator::SQrM:
        case Estimator::SQrD: s += "|J1=" + std::to_string(j1) + "|J=" + std::to_string(j); break;
        case Estimator::None: break;
        }
        if (optimizer == Optimizer::L1GMV) s += "|c=" + icv::detail::fmt_double(c);
        if (needs_momentum()) s += "|mom=" + std::to_string(momentum_days);
        return s;
    }
};

/// Parameter ranges used in the empirical study.
inline void validate(const StrategySpec& s) {
    require(!s.name.empty(), ErrorCode::InvalidArgument, "strategy needs a name");
    const auto in_steps = [](int v, int lo, int hi, int step) { return v >= lo && v <= hi && (v - lo) % step == 0; };
    if (s.needs_covariance()) {
        require(s.estimator != Estimator::None, ErrorCode::InvalidArgument, s.name + ": optimizer needs a covariance estimator");
        switch (s.estimator) {
        case Estimator::LS: require(in_steps(s.j_ls, 50, 250, 10), ErrorCode::InvalidArgument, s.name + ": J_LS must be in {50,...,250 step 10}"); break;
        case Estimator::SP: require(s.j_sp >= 2, ErrorCode::InvalidArgument, s.name + ": J_SP must be >= 2"); break;
        case Estimator::TS:
            require(in_steps(s.j_ts, 1, 10, 1), ErrorCode::InvalidArgument, s.name + ": J_TS must be in {1,...,10}");
            require(s.tscv_slow >= 2, ErrorCode::InvalidArgument, s.name + ": two-scale K must be >= 2");
            break;
        case Estimator::SQrM: require(in_steps(s.j1, 5, 21, 1), ErrorCode::InvalidArgument, s.name + ": J1 must be in {5,...,21}"); break;
        case Estimator::SQrD: require(in_steps(s.j1, 50, 250, 10), ErrorCode::InvalidArgument, s.name + ": J1 must be in {50,...,250 step 10}"); break;
        case Estimator::None: break;
        }
        if (s.estimator == Estimator::SQrM || s.estimator == Estimator::SQrD)
            require(in_steps(s.j - s.j1, 1, 5, 1), ErrorCode::InvalidArgument, s.name + ": J - J1 must be in {1,...,5}");
    }
    if (s.optimizer == Optimizer::L1GMV) require(s.c >= 1.0, ErrorCode::InvalidArgument, s.name + ": c must be >= 1");
    if (s.needs_momentum()) require(s.momentum_days >= 1, ErrorCode::InvalidArgument, s.name + ": momentum window must be >= 1");
}

struct Metrics {
    double av = 0.0;
    double sd = 0.0;
    double ir = std::numeric_limits<double>::quiet_NaN();
    std::size_t n = 0;
};

/// AV = 252 * mean, SD = sqrt(252) * sample sd, IR = AV / SD (NaN when SD = 0).
inline Metrics metrics(std::span<const double> r) {
    Metrics m;
    m.n = r.size();
    if (r.empty()) {
        m.av = m.sd = std::numeric_limits<double>::quiet_NaN();
        return m;
    }
    double mean = 0.0;
    for (double v : r) mean += v;
    mean /= static_cast<double>(r.size());
    double ss = 0.0;
    for (double v : r) ss += (v - mean) * (v - mean);
    if (std::all_of(r.begin(), r.end(), [&](double v) { return v == r.front(); })) ss = 0.0; // exact zero for constant series
    m.av = 252.0 * mean;
    m.sd = r.size() > 1 ? std::sqrt(252.0 * ss / static_cast<double>(r.size() - 1)) : std::numeric_limits<double>::quiet_NaN();
    m.ir = m.sd > 0.0 ? m.av / m.sd : std::numeric_limits<double>::quiet_NaN();
    return m;
}

struct StrategyResult {
    StrategySpec spec;
    std::vector<int> days;        // evaluation day indices with a realized return
    std::vector<double> returns;  // same length as `days`
    std::vector<int> failed_days;
    std::vector<std::string> log; // one line per failed day

    [[nodiscard]] std::size_t attempted() const noexcept { return days.size() + failed_days.size(); }
    [[nodiscard]] double coverage() const {
        return attempted() == 0 ? 0.0 : static_cast<double>(days.size()) / static_cast<double>(attempted());
    }
    [[nodiscard]] Metrics summary() const { return metrics(returns); }
};

struct BacktestReport {
    std::vector<std::string> labels; // label of every day index in the data
    int eval_begin = 0;              // first evaluation day index
    int eval_end = 0;                // one past the last
    std::vector<StrategyResult> strategies;
    std::vector<std::string> log;    // skipped days
    std::uint64_t config_hash = 0;

    [[nodiscard]] bool full_coverage() const {
        for (const auto& s : strategies)
            if (s.coverage() < 1.0) return false;
        return true;
    }
};

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

struct EvalWindow {
    int begin = 0; // first evaluation day index
    int end = 0;   // one past the last
};

struct RunOptions {
    unsigned threads = 1;
    qml::QmlOptions qml;
};

namespace detail {

// Day-level inputs shared by all evaluation days.
struct DayCache {
    std::optional<sync::ReturnsMatrix> coarse;   // 15-minute previous-tick returns
    std::optional<sync::SyncPanel> refresh;      // refresh-time panel
    std::optional<Eigen::MatrixXd> tscv;
    std::string error;                            // non-empty when a derived input failed
};

// Reads days strictly before `limit`; anything else is a look-ahead.
class PastView {
public:
    PastView(const dataset::MarketData& data, const Eigen::MatrixXd& closes, const std::vector<DayCache>& cache, int limit)
        : data_(data), closes_(closes), cache_(cache), limit_(limit) {}

    [[nodiscard]] const DayCache& day(int k) {
        touch(k);
        return cache_[static_cast<std::size_t>(k)];
    }

    /// p x count daily close-to-close returns ending with day limit-1.
    [[nodiscard]] Eigen::MatrixXd daily_returns(int count, int last) {
        require(last - count >= 0, ErrorCode::InsufficientHistory, "not enough days for " + std::to_string(count) + " daily returns");
        touch(last);
        touch(last - count);
        Eigen::MatrixXd r(closes_.rows(), count);
        for (int k = 0; k < count; ++k) r.col(k) = closes_.col(last - count + k + 1) - closes_.col(last - count + k);
        if (!r.allFinite()) fail(ErrorCode::InsufficientHistory, "missing close inside the daily window");
        return r;
    }

    [[nodiscard]] int limit() const noexcept { return limit_; }
    [[nodiscard]] int max_seen() const noexcept { return max_seen_; }

private:
    void touch(int k) {
        if (k >= limit_) fail(ErrorCode::LookAhead, "day " + std::to_string(k) + " read while forming weights for day " + std::to_string(limit_));
        if (k < 0) fail(ErrorCode::InsufficientHistory, "window reaches before the first day");
        max_seen_ = std::max(max_seen_, k);
    }

    const dataset::MarketData& data_;
    const Eigen::MatrixXd& closes_;
    const std::vector<DayCache>& cache_;
    int limit_;
    int max_seen_ = -1;
};

struct Estimate {
    Eigen::MatrixXd sigma;
    Eigen::MatrixXd sigma_inv; // empty when the estimate is not invertible
};

inline Eigen::MatrixXd safe_inverse(const Eigen::MatrixXd& s) {
    const Eigen::LLT<Eigen::MatrixXd> llt(s);
    if (llt.info() != Eigen::Success) return {};
    return llt.solve(Eigen::MatrixXd::Identity(s.rows(), s.cols()));
}

inline const DayCache& checked(const DayCache& c, int k) {
    if (!c.error.empty()) fail(ErrorCode::InsufficientRefreshes, "day " + std::to_string(k) + ": " + c.error);
    return c;
}

template <class T>
const T& need(const std::optional<T>& v, int k) {
    if (!v) fail(ErrorCode::InvalidArgument, "day " + std::to_string(k) + " input was not prepared");
    return *v;
}

inline Estimate estimate(const StrategySpec& s, PastView& view, const RunOptions& opt) {
    const int d = view.limit();
    Estimate e;
    switch (s.estimator) {
    case Estimator::SP: {
        const Eigen::MatrixXd r = view.daily_returns(s.j_sp, d - 1);
        e.sigma = r * r.transpose() / s.j_sp;
        break;
    }
    case Estimator::LS: {
        sync::ReturnsMatrix r;
        r.deltas = view.daily_returns(s.j_ls, d - 1);
        e.sigma = estimators::linear_shrinkage(estimators::sample_cov_daily(r), r.deltas).first.matrix;
        break;
    }
    case Estimator::TS: {
        Eigen::MatrixXd acc;
        for (int k = d - s.j_ts; k < d; ++k) {
            const auto& c = checked(view.day(k), k);
            acc = acc.size() == 0 ? need(c.tscv, k) : Eigen::MatrixXd(acc + need(c.tscv, k));
        }
        e.sigma = spectral::psd_project(acc / s.j_ts);
        break;
    }
    case Estimator::SQrM:
    case Estimator::SQrD: {
        sqml::SqmlConfig cfg;
        cfg.variant = s.estimator == Estimator::SQrM ? sqml::Variant::SQrM : sqml::Variant::SQrD;
        cfg.total_days = s.j;
        cfg.history_days = s.j1;
        cfg.holding_days = 1;
        const int dense = s.j - s.j1;
        sync::ReturnsMatrix history;
        if (cfg.variant == sqml::Variant::SQrM) {
            std::vector<sync::ReturnsMatrix> blocks;
            for (int k = d - s.j; k < d - dense; ++k) blocks.push_back(need(checked(view.day(k), k).coarse, k));
            history = sync::concat_returns(blocks);
        } else {
            history.deltas = view.daily_returns(s.j1, d - dense - 1);
        }
        std::vector<sync::SyncPanel> panels;
        for (int k = d - dense; k < d; ++k) panels.push_back(need(checked(view.day(k), k).refresh, k));
        auto est = sqml::sqml_estimate(cfg, history, panels, opt.qml, 1);
        e.sigma = std::move(est.sigma_hat);
        e.sigma_inv = std::move(est.sigma_inv_hat);
        return e;
    }
    case Estimator::None: fail(ErrorCode::InvalidArgument, "no estimator configured");
    }
    e.sigma_inv = safe_inverse(e.sigma);
    return e;
}

inline portfolio::Weights weights_for_day(const StrategySpec& s, PastView& view, Eigen::Index p, const RunOptions& opt) {
    const int d = view.limit();
    std::optional<portfolio::MomentumSignal> signal;
    if (s.needs_momentum()) {
        if (d - 1 - s.momentum_days < 0)
            fail(ErrorCode::InsufficientMomentumHistory, "momentum needs " + std::to_string(s.momentum_days) + " earlier daily returns");
        signal = portfolio::momentum_signal(view.daily_returns(s.momentum_days, d - 1), s.momentum_days);
    }
    switch (s.optimizer) {
    case Optimizer::EW: return portfolio::equal_weights(p);
    case Optimizer::EWTQ: return portfolio::equal_weights_top_quintile(*signal);
    default: break;
    }
    const auto est = estimate(s, view, opt);
    switch (s.optimizer) {
    case Optimizer::GMV:
        if (est.sigma_inv.size() == 0) fail(ErrorCode::NotPD, "covariance estimate is singular");
        return portfolio::gmv_weights(est.sigma_inv);
    case Optimizer::MwM:
        if (est.sigma_inv.size() == 0) fail(ErrorCode::NotPD, "covariance estimate is singular");
        return portfolio::mwm_weights(est.sigma_inv, *signal);
    case Optimizer::L1GMV: return portfolio::gmv_l1_weights(spectral::psd_project(est.sigma), s.c);
    default: break;
    }
    fail(ErrorCode::InvalidArgument, "unhandled optimizer");
}

inline void build_cache(const dataset::MarketData& data, const std::vector<StrategySpec>& specs, int first, int last,
                        std::vector<DayCache>& cache, unsigned threads) {
    bool coarse = false, refresh = false, tscv = false;
    int slow = 10;
    for (const auto& s : specs) {
        if (!s.needs_covariance()) continue;
        coarse = coarse || s.estimator == Estimator::SQrM;
        refresh = refresh || s.estimator == Estimator::SQrM || s.estimator == Estimator::SQrD;
        if (s.estimator == Estimator::TS) {
            require(!tscv || slow == s.tscv_slow, ErrorCode::InvalidArgument, "all TS strategies must share K");
            tscv = true;
            slow = s.tscv_slow;
        }
    }
    const auto grid = sync::fifteen_minute_grid(data.session);
    first = std::max(first, 0);
    icv::detail::parallel_for(static_cast<std::size_t>(std::max(0, last - first)), threads, [&](std::size_t off) {
        const int k = first + static_cast<int>(off);
        auto& c = cache[static_cast<std::size_t>(k)];
        const auto& ticks = data.days[static_cast<std::size_t>(k)].ticks;
        try {
            if (coarse) c.coarse = sync::to_returns(sync::previous_tick(ticks, grid));
            if (refresh) c.refresh = sync::refresh_time(ticks, 0);
            if (tscv) c.tscv = estimators::tscv_pairwise(ticks, 0, data.session.length(), static_cast<std::size_t>(slow), 1).matrix;
        } catch (const Error& e) {
            c.error = e.what();
        }
    });
}

} // namespace detail

/// Runs every strategy over evaluation days [window.begin, window.end).
/// Day d's return is w' (close_d - close_{d-1}) with w built from days < d.
inline BacktestReport run_backtest(const std::vector<StrategySpec>& specs, const dataset::MarketData& data, EvalWindow window,
                                   const RunOptions& opt = {}) {
    require(!specs.empty(), ErrorCode::InvalidArgument, "no strategies");
    require(window.begin >= 1 && window.end <= data.day_count() && window.begin < window.end, ErrorCode::InvalidArgument,
            "evaluation window must be a non-empty range of days after the first");
    int lookback = 0;
    std::string canonical;
    for (const auto& s : specs) {
        validate(s);
        lookback = std::max(lookback, s.lookback_days());
        canonical += s.describe() + "\n";
    }
    require(window.begin - lookback >= 0, ErrorCode::InsufficientHistory,
            "evaluation starts at day " + std::to_string(window.begin) + " but strategies need " + std::to_string(lookback) + " earlier days");

    BacktestReport report;
    for (const auto& d : data.days) report.labels.push_back(d.label);
    report.eval_begin = window.begin;
    report.eval_end = window.end;
    canonical += std::to_string(window.begin) + ":" + std::to_string(window.end) + "\n";
    for (const auto& l : report.labels) canonical += l + ",";
    report.config_hash = fnv1a(canonical);

    const Eigen::MatrixXd closes = data.closes();
    const auto p = data.assets();
    std::vector<detail::DayCache> cache(data.days.size());
    detail::build_cache(data, specs, window.begin - lookback, window.end - 1, cache, opt.threads);

    std::vector<int> eval_days;
    for (int d = window.begin; d < window.end; ++d) {
        if (!closes.col(d).allFinite() || !closes.col(d - 1).allFinite()) {
            report.log.push_back("day " + report.labels[static_cast<std::size_t>(d)] + " skipped: missing close prices");
            continue;
        }
        eval_days.push_back(d);
    }

    const std::size_t jobs = specs.size() * eval_days.size();
    std::vector<double> realized(jobs, std::numeric_limits<double>::quiet_NaN());
    std::vector<std::string> errors(jobs);
    icv::detail::parallel_for(jobs, opt.threads, [&](std::size_t job) {
        const auto& s = specs[job / eval_days.size()];
        const int d = eval_days[job % eval_days.size()];
        detail::PastView view(data, closes, cache, d);
        try {
            const auto w = detail::weights_for_day(s, view, p, opt);
            if (view.max_seen() >= d) fail(ErrorCode::LookAhead, "input from day " + std::to_string(view.max_seen()));
            realized[job] = w.w.dot(closes.col(d) - closes.col(d - 1));
        } catch (const Error& e) {
            if (e.code() == ErrorCode::LookAhead) throw;
            errors[job] = e.what();
        }
    });

    for (std::size_t si = 0; si < specs.size(); ++si) {
        StrategyResult r;
        r.spec = specs[si];
        for (std::size_t k = 0; k < eval_days.size(); ++k) {
            const std::size_t job = si * eval_days.size() + k;
            const auto& label = report.labels[static_cast<std::size_t>(eval_days[k])];
            if (errors[job].empty()) {
                r.days.push_back(eval_days[k]);
                r.returns.push_back(realized[job]);
            } else {
                r.failed_days.push_back(eval_days[k]);
                r.log.push_back(label + ": " + errors[job]);
            }
        }
        report.strategies.push_back(std::move(r));
    }
    return report;
}

/// (SD, IR) over every run of `window` consecutive returns.
inline std::vector<Metrics> rolling_windows(std::span<const double> returns, std::size_t window = 42) {
    require(window >= 2, ErrorCode::InvalidArgument, "window must be >= 2");
    std::vector<Metrics> out;
    for (std::size_t k = 0; k + window <= returns.size(); ++k) out.push_back(metrics(returns.subspan(k, window)));
    return out;
}

/// Splits the report at an evaluation day index: [begin, split) and [split, end).
inline std::pair<BacktestReport, BacktestReport> subperiod_split(const BacktestReport& report, int split) {
    require(split > report.eval_begin && split < report.eval_end, ErrorCode::InvalidArgument, "split must leave both sub-periods non-empty");
    BacktestReport a = report, b = report;
    a.eval_end = split;
    b.eval_begin = split;
    for (std::size_t si = 0; si < report.strategies.size(); ++si) {
        const auto& src = report.strategies[si];
        auto& x = a.strategies[si];
        auto& y = b.strategies[si];
        for (auto* r : {&x, &y}) r->days.clear(), r->returns.clear(), r->failed_days.clear(), r->log.clear();
        for (std::size_t k = 0; k < src.days.size(); ++k) {
            auto& dst = src.days[k] < split ? x : y;
            dst.days.push_back(src.days[k]);
            dst.returns.push_back(src.returns[k]);
        }
        for (std::size_t k = 0; k < src.failed_days.size(); ++k) {
            auto& dst = src.failed_days[k] < split ? x : y;
            dst.failed_days.push_back(src.failed_days[k]);
            dst.log.push_back(src.log[k]);
        }
    }
    return {std::move(a), std::move(b)};
}

/// Midpoint split of the evaluation window.
inline std::pair<BacktestReport, BacktestReport> subperiod_split(const BacktestReport& report) {
    return subperiod_split(report, report.eval_begin + (report.eval_end - report.eval_begin) / 2);
}

enum class Objective { MinSD, MaxIR };

struct SweepResult {
    std::size_t best = 0;
    std::vector<StrategySpec> grid;
    std::vector<Metrics> table;
};

/// Picks the best entry of an already evaluated table (NaN IR never wins).
inline std::size_t argbest(const std::vector<Metrics>& table, Objective objective) {
    require(!table.empty(), ErrorCode::InvalidArgument, "empty sweep");
    std::optional<std::size_t> best;
    for (std::size_t k = 0; k < table.size(); ++k) {
        const double v = objective == Objective::MinSD ? -table[k].sd : table[k].ir;
        if (std::isnan(v)) continue;
        const double bv = best ? (objective == Objective::MinSD ? -table[*best].sd : table[*best].ir) : 0.0;
        if (!best || v > bv) best = k;
    }
    return best.value_or(0);
}

/// SQML variants of `base` over J1 x (J - J1).
inline std::vector<StrategySpec> sqml_grid(const StrategySpec& base, const std::vector<int>& j1_values, const std::vector<int>& gaps) {
    std::vector<StrategySpec> out;
    for (int j1 : j1_values) {
        for (int g : gaps) {
            auto s = base;
            s.j1 = j1;
            s.j = j1 + g;
            s.name = base.name + "(J1=" + std::to_string(j1) + ",J=" + std::to_string(j1 + g) + ")";
            out.push_back(std::move(s));
        }
    }
    return out;
}

inline std::vector<int> range_values(int lo, int hi, int step) {
    std::vector<int> v;
    for (int x = lo; x <= hi; x += step) v.push_back(x);
    return v;
}

/// Grid used for the study: J1 in {5..21} (SQrM) or {50..250 step 10} (SQrD), J - J1 in {1..5}.
inline std::vector<StrategySpec> study_grid(const StrategySpec& base) {
    const auto j1 = base.estimator == Estimator::SQrD ? range_values(50, 250, 10) : range_values(5, 21, 1);
    return sqml_grid(base, j1, range_values(1, 5, 1));
}

inline SweepResult grid_sweep(const std::vector<StrategySpec>& grid, const dataset::MarketData& data, EvalWindow window, Objective objective,
                              const RunOptions& opt = {}) {
    SweepResult out;
    out.grid = grid;
    const auto report = run_backtest(grid, data, window, opt);
    for (const auto& s : report.strategies) out.table.push_back(s.summary());
    out.best = argbest(out.table, objective);
    return out;
}

// strategy,AV,SD,IR,days,coverage
inline void write_summary(std::ostream& out, const BacktestReport& r) {
    out << "strategy,AV,SD,IR,days,coverage\n";
    for (const auto& s : r.strategies) {
        const auto m = s.summary();
        out << s.spec.name << ',' << icv::detail::fmt_double(m.av) << ',' << icv::detail::fmt_double(m.sd) << ',' << icv::detail::fmt_double(m.ir) << ','
            << m.n << ',' << icv::detail::fmt_double(s.coverage()) << '\n';
    }
}

// day,<strategy>...; empty cell where a strategy failed
inline void write_returns(std::ostream& out, const BacktestReport& r) {
    out << "day";
    for (const auto& s : r.strategies) out << ',' << s.spec.name;
    out << '\n';
    std::vector<std::size_t> at(r.strategies.size(), 0);
    for (int d = r.eval_begin; d < r.eval_end; ++d) {
        out << r.labels[static_cast<std::size_t>(d)];
        for (std::size_t si = 0; si < r.strategies.size(); ++si) {
            const auto& s = r.strategies[si];
            out << ',';
            if (at[si] < s.days.size() && s.days[at[si]] == d) out << icv::detail::fmt_double(s.returns[at[si]++]);
        }
        out << '\n';
    }
}

// strategy,window,SD,IR
inline void write_rolling(std::ostream& out, const BacktestReport& r, std::size_t window = 42) {
    out << "strategy,window,SD,IR\n";
    for (const auto& s : r.strategies) {
        const auto series = rolling_windows(s.returns, window);
        for (std::size_t k = 0; k < series.size(); ++k)
            out << s.spec.name << ',' << k << ',' << icv::detail::fmt_double(series[k].sd) << ',' << icv::detail::fmt_double(series[k].ir) << '\n';
    }
}

inline void write_log(std::ostream& out, const BacktestReport& r) {
    for (const auto& l : r.log) out << l << '\n';
    for (const auto& s : r.strategies)
        for (const auto& l : s.log) out << s.spec.name << ": " << l << '\n';
}

} // namespace icv::backtest
