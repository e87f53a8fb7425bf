#pragma once

// Multi-day market data: simulated Class-C days with tick output, and the
// on-disk layout (manifest.json, ticks/<day>.csv, truth/<day>.csv).

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "icv/detail/rng.hpp"
#include "icv/detail/text.hpp"
#include "icv/error.hpp"
#include "icv/ingest.hpp"
#include "icv/simulate.hpp"

namespace icv::dataset {

namespace fs = std::filesystem;
using nlohmann::json;

struct Day {
    std::string label;
    std::vector<ingest::TickSeries> ticks; // one per symbol, empty if the symbol did not trade
    Eigen::MatrixXd icv;                   // true ICV when known, else empty
};

struct MarketData {
    std::vector<std::string> symbols;
    ingest::Session session;
    std::vector<Day> days;

    [[nodiscard]] Eigen::Index assets() const noexcept { return static_cast<Eigen::Index>(symbols.size()); }
    [[nodiscard]] int day_count() const noexcept { return static_cast<int>(days.size()); }

    /// p x D last log-price of each day; NaN where a symbol has no tick.
    [[nodiscard]] Eigen::MatrixXd closes() const {
        Eigen::MatrixXd c(assets(), static_cast<Eigen::Index>(days.size()));
        for (std::size_t d = 0; d < days.size(); ++d) {
            for (std::size_t i = 0; i < symbols.size(); ++i) {
                const auto& s = days[d].ticks[i];
                c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) =
                    s.empty() ? std::numeric_limits<double>::quiet_NaN() : s.log_prices.back();
            }
        }
        return c;
    }
};

struct SimConfig {
    Eigen::Index p = 30;
    int days = 3;
    Eigen::Index fine_steps = 23400;            // one per second
    double daily_variance = 1e-4;               // average per-asset variance of one day
    std::vector<double> spectrum_atoms{0.25, 1.0, 4.0};
    std::vector<double> spectrum_weights{0.4, 0.4, 0.2};
    double intraday_ratio = 2.0;                // gamma in the afternoon relative to the morning
    double day_level_sd = 0.2;                  // log-sd of the daily gamma level
    double noise_variance = 1e-7;               // per-asset microstructure noise variance
    double intensity = 2000.0;                  // expected ticks per asset per day
    double initial_price = 50.0;
    std::uint64_t seed = 1;
};

inline void validate(const SimConfig& c) {
    require(c.p >= 1 && c.days >= 1 && c.fine_steps >= 2, ErrorCode::InvalidArgument, "p, days and fine_steps must be positive");
    require(c.daily_variance > 0.0 && c.intraday_ratio > 0.0 && c.day_level_sd >= 0.0 && c.noise_variance >= 0.0 && c.intensity > 0.0 &&
                c.initial_price > 0.0,
            ErrorCode::InvalidArgument, "simulation parameters out of range");
    require(!c.spectrum_atoms.empty() && c.spectrum_atoms.size() == c.spectrum_weights.size(), ErrorCode::InvalidArgument,
            "spectrum atoms/weights mismatch");
}

inline std::string day_label(int d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "d%04d", d + 1);
    return buf;
}

/// Days share Lambda; each day has its own gamma level and a two-piece
/// intraday profile. The latent path carries over between days.
inline MarketData simulate(const SimConfig& cfg) {
    validate(cfg);
    MarketData out;
    detail::Rng setup(detail::sub_seed(cfg.seed, 0));
    const Eigen::VectorXd spec = simulate::spectrum_from_mixture(cfg.p, cfg.spectrum_atoms, cfg.spectrum_weights);
    const Eigen::MatrixXd lambda = simulate::lambda_from_spectrum(spec, setup);
    for (Eigen::Index i = 0; i < cfg.p; ++i) out.symbols.push_back(simulate::default_symbol(i));

    std::normal_distribution<double> level(0.0, cfg.day_level_sd);
    // morning gamma g, afternoon r*g: (g^2 + r^2 g^2)/2 = daily_variance on average
    const double base = std::sqrt(2.0 * cfg.daily_variance / (1.0 + cfg.intraday_ratio * cfg.intraday_ratio));

    simulate::TickOptions ticks;
    ticks.emit_ticks = true;
    ticks.intensity = {cfg.intensity};
    ticks.symbols = out.symbols;
    ticks.open_close_prints = true;

    Eigen::VectorXd x = Eigen::VectorXd::Constant(cfg.p, std::log(cfg.initial_price));
    for (int d = 0; d < cfg.days; ++d) {
        const double g = base * std::exp(level(setup));
        simulate::ClassCModel m;
        m.lambda = lambda;
        m.gamma = simulate::GammaPath::two_piece(g, cfg.intraday_ratio * g, 0.5);
        if (cfg.noise_variance > 0.0) m.noise_cov = cfg.noise_variance * Eigen::MatrixXd::Identity(cfg.p, cfg.p);
        m.seed = detail::sub_seed(cfg.seed, static_cast<std::uint64_t>(d) + 1);
        auto rec = simulate::simulate_paths(m, cfg.fine_steps, 1.0, ticks, 0.0, x);
        x = rec.latent.col(rec.latent.cols() - 1);
        out.days.push_back(Day{day_label(d), std::move(rec.ticks), std::move(rec.icv)});
    }
    return out;
}

inline json to_json(const SimConfig& c) {
    return json{{"p", c.p},
                {"days", c.days},
                {"fine_steps", c.fine_steps},
                {"daily_variance", c.daily_variance},
                {"spectrum_atoms", c.spectrum_atoms},
                {"spectrum_weights", c.spectrum_weights},
                {"intraday_ratio", c.intraday_ratio},
                {"day_level_sd", c.day_level_sd},
                {"noise_variance", c.noise_variance},
                {"intensity", c.intensity},
                {"initial_price", c.initial_price},
                {"seed", c.seed}};
}

/// Fields absent from `j` keep their defaults; unknown keys are rejected.
inline SimConfig sim_config_from_json(const json& j) {
    require(j.is_object(), ErrorCode::InvalidArgument, "simulation config must be a JSON object");
    SimConfig c;
    const json known = to_json(c);
    for (const auto& [key, _] : j.items()) require(known.contains(key), ErrorCode::InvalidArgument, "unknown simulation key '" + key + "'");
    try {
        c.p = j.value("p", c.p);
        c.days = j.value("days", c.days);
        c.fine_steps = j.value("fine_steps", c.fine_steps);
        c.daily_variance = j.value("daily_variance", c.daily_variance);
        c.spectrum_atoms = j.value("spectrum_atoms", c.spectrum_atoms);
        c.spectrum_weights = j.value("spectrum_weights", c.spectrum_weights);
        c.intraday_ratio = j.value("intraday_ratio", c.intraday_ratio);
        c.day_level_sd = j.value("day_level_sd", c.day_level_sd);
        c.noise_variance = j.value("noise_variance", c.noise_variance);
        c.intensity = j.value("intensity", c.intensity);
        c.initial_price = j.value("initial_price", c.initial_price);
        c.seed = j.value("seed", c.seed);
    } catch (const json::exception& e) {
        fail(ErrorCode::InvalidArgument, std::string("simulation config: ") + e.what());
    }
    validate(c);
    return c;
}

// Plain p x p matrix, one comma-separated row per line.
inline void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << detail::fmt_double(m(i, j));
        out << '\n';
    }
}

inline Eigen::MatrixXd read_matrix(std::istream& in) {
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        std::vector<double> row;
        for (const auto& f : detail::split(detail::trim(line), ',')) {
            double v = 0.0;
            if (!detail::parse_double(detail::trim(f), v)) fail(ErrorCode::ParseError, "line " + std::to_string(rows.size() + 1) + ": bad number");
            row.push_back(v);
        }
        if (!rows.empty() && row.size() != rows.front().size()) fail(ErrorCode::ParseError, "ragged matrix");
        rows.push_back(std::move(row));
    }
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return m;
}

namespace detail_io {
inline std::ofstream open_out(const fs::path& p) {
    std::ofstream f(p, std::ios::binary);
    if (!f) fail(ErrorCode::Io, "cannot write " + p.string());
    return f;
}
inline std::ifstream open_in(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) fail(ErrorCode::Io, "cannot read " + p.string());
    return f;
}
} // namespace detail_io

/// Writes the dataset; `extra` is stored verbatim under "config" in the manifest.
inline void save(const MarketData& data, const fs::path& dir, const json& extra = json::object()) {
    fs::create_directories(dir / "ticks");
    const bool has_truth = !data.days.empty() && data.days.front().icv.size() > 0;
    if (has_truth) fs::create_directories(dir / "truth");
    json labels = json::array();
    for (const auto& day : data.days) {
        labels.push_back(day.label);
        std::vector<ingest::RawTick> raw;
        for (const auto& s : day.ticks) {
            auto r = ingest::to_raw(s);
            raw.insert(raw.end(), r.begin(), r.end());
        }
        auto f = detail_io::open_out(dir / "ticks" / (day.label + ".csv"));
        ingest::write_ticks(f, raw);
        if (has_truth) {
            auto t = detail_io::open_out(dir / "truth" / (day.label + ".csv"));
            write_matrix(t, day.icv);
        }
    }
    json manifest{{"format", "icv-dataset-1"},
                  {"symbols", data.symbols},
                  {"days", labels},
                  {"session", {{"open", ingest::format_clock(data.session.open)}, {"close", ingest::format_clock(data.session.close)}}},
                  {"truth", has_truth},
                  {"config", extra}};
    auto m = detail_io::open_out(dir / "manifest.json");
    m << manifest.dump(2) << '\n';
}

inline json read_manifest(const fs::path& dir) {
    auto f = detail_io::open_in(dir / "manifest.json");
    try {
        return json::parse(f);
    } catch (const json::exception& e) {
        fail(ErrorCode::ParseError, "manifest.json: " + std::string(e.what()));
    }
}

/// Loads and cleans every day. Symbols missing on a day get an empty series.
inline MarketData load(const fs::path& dir) {
    const json manifest = read_manifest(dir);
    MarketData data;
    try {
        require(manifest.at("format") == "icv-dataset-1", ErrorCode::ParseError, "unsupported dataset format");
        data.symbols = manifest.at("symbols").get<std::vector<std::string>>();
        const auto& session = manifest.at("session");
        require(ingest::parse_clock(session.at("open").get<std::string>(), data.session.open) &&
                    ingest::parse_clock(session.at("close").get<std::string>(), data.session.close),
                ErrorCode::ParseError, "bad session clock");
        const bool has_truth = manifest.value("truth", false);
        for (const auto& label : manifest.at("days").get<std::vector<std::string>>()) {
            Day day;
            day.label = label;
            auto f = detail_io::open_in(dir / "ticks" / (label + ".csv"));
            std::map<std::string, ingest::TickSeries> cleaned;
            try {
                cleaned = ingest::clean_ticks(ingest::parse_ticks(f), data.session);
            } catch (const Error& e) {
                fail(e.code(), "ticks/" + label + ".csv: " + e.what());
            }
            for (const auto& sym : data.symbols) {
                auto it = cleaned.find(sym);
                if (it != cleaned.end()) {
                    day.ticks.push_back(std::move(it->second));
                } else {
                    ingest::TickSeries empty;
                    empty.symbol = sym;
                    empty.session = data.session;
                    day.ticks.push_back(std::move(empty));
                }
            }
            if (has_truth) {
                auto t = detail_io::open_in(dir / "truth" / (label + ".csv"));
                day.icv = read_matrix(t);
            }
            data.days.push_back(std::move(day));
        }
    } catch (const json::exception& e) {
        fail(ErrorCode::ParseError, "manifest.json: " + std::string(e.what()));
    }
    return data;
}

} // namespace icv::dataset
