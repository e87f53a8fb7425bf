// icv_cli: batch front end for simulation, cleaning, synchronization,
// covariance estimation, backtesting and the random-matrix checks.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Core>
#include <boost/version.hpp>
#include <fftw3.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "icv/backtest.hpp"
#include "icv/dataset.hpp"
#include "icv/detail/parallel.hpp"
#include "icv/estimators.hpp"
#include "icv/ingest.hpp"
#include "icv/rmt_limits.hpp"
#include "icv/sqml.hpp"
#include "icv/sync.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace icv;

namespace {

constexpr const char* kVersion = "1.0.0";

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

[[noreturn]] void usage(const std::string& what) { throw UsageError(what); }

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) usage("cannot open config file " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        usage("config " + path + ": " + e.what());
    }
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream f(p, std::ios::binary);
    if (!f) fail(ErrorCode::Io, "cannot write " + p.string());
    return f;
}

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// Writes run_manifest.json next to the outputs: everything needed to rerun.
void write_manifest(const fs::path& dir, const std::string& command, const json& config, std::uint64_t seed, unsigned threads) {
    const std::string canonical = config.dump();
    json versions;
    versions["icv"] = kVersion;
    versions["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." + std::to_string(EIGEN_MINOR_VERSION);
    versions["boost"] = std::string(BOOST_LIB_VERSION);
    versions["fftw"] = std::string(fftw_version);
    json m;
    m["command"] = command;
    m["config"] = config;
    m["config_hash"] = hex64(backtest::fnv1a(canonical));
    m["seed"] = seed;
    m["threads"] = threads;
    m["versions"] = versions;
    auto f = open_out(dir / "run_manifest.json");
    f << m.dump(2) << '\n';
}

struct Common {
    std::optional<std::uint64_t> seed;
    unsigned threads = detail::default_threads();
    std::string config_path;
};

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    std::string out;
    std::optional<long> p, days, fine_steps;
    std::optional<double> intensity, noise;
};

int cmd_simulate(const SimulateArgs& a, const Common& c) {
    json cfg = c.config_path.empty() ? json::object() : read_json_file(c.config_path);
    if (cfg.contains("simulate")) cfg = cfg["simulate"];
    if (a.p) cfg["p"] = *a.p;
    if (a.days) cfg["days"] = *a.days;
    if (a.fine_steps) cfg["fine_steps"] = *a.fine_steps;
    if (a.intensity) cfg["intensity"] = *a.intensity;
    if (a.noise) cfg["noise_variance"] = *a.noise;
    if (c.seed) cfg["seed"] = *c.seed;
    dataset::SimConfig sim;
    try {
        sim = dataset::sim_config_from_json(cfg);
    } catch (const Error& e) {
        usage(e.what());
    }
    const auto data = dataset::simulate(sim);
    const json effective = dataset::to_json(sim);
    dataset::save(data, a.out, effective);
    write_manifest(a.out, "simulate", effective, sim.seed, c.threads);
    std::cout << "simulated " << sim.days << " day(s), p = " << sim.p << " -> " << a.out << '\n';
    return 0;
}

// ---------------------------------------------------------------- ingest

struct IngestArgs {
    std::string in, out;
    char delimiter = ',';
};

int cmd_ingest(const IngestArgs& a, const Common& c) {
    std::ifstream f(a.in);
    if (!f) fail(ErrorCode::Io, "cannot read " + a.in);
    const auto cleaned = ingest::clean_ticks(ingest::parse_ticks(f, a.delimiter));
    fs::create_directories(a.out);
    for (const auto& [sym, series] : cleaned) {
        auto o = open_out(fs::path(a.out) / (sym + ".csv"));
        ingest::write_cache(o, series);
        std::cout << sym << ": " << series.size() << " ticks\n";
    }
    write_manifest(a.out, "ingest", json{{"in", a.in}, {"delimiter", std::string(1, a.delimiter)}}, c.seed.value_or(0), c.threads);
    return 0;
}

// ---------------------------------------------------------------- sync

struct SyncArgs {
    std::string in, out, scheme = "refresh";
    long step_minutes = 15;
};

std::vector<ingest::TickSeries> load_tick_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) fail(ErrorCode::Io, "cannot read " + path);
    std::vector<ingest::TickSeries> out;
    for (auto& [sym, s] : ingest::clean_ticks(ingest::parse_ticks(f))) out.push_back(std::move(s));
    return out;
}

int cmd_sync(const SyncArgs& a, const Common& c) {
    if (a.scheme != "refresh" && a.scheme != "previous") usage("--scheme must be 'refresh' or 'previous'");
    const auto series = load_tick_file(a.in);
    const auto panel = a.scheme == "refresh" ? sync::refresh_time(series, 0)
                                             : sync::previous_tick(series, sync::regular_grid(ingest::Session{}, a.step_minutes * ingest::kNsPerMinute));
    fs::create_directories(a.out);
    auto o = open_out(fs::path(a.out) / "panel.csv");
    sync::write_panel(o, panel);
    write_manifest(a.out, "sync", json{{"in", a.in}, {"scheme", a.scheme}, {"step_minutes", a.step_minutes}}, c.seed.value_or(0), c.threads);
    std::cout << panel.assets() << " assets, " << panel.returns() << " returns\n";
    return 0;
}

// ---------------------------------------------------------------- estimate

struct EstimateArgs {
    std::string dataset, panel, out, kind;
    long day = -1;     // default: last day
    long window = 100; // daily returns for SAMPLE / LS
    long j1 = 5, j = 6;
    std::string variant = "SQrM";
};

int cmd_estimate(const EstimateArgs& a, const Common& c) {
    estimators::CovKind kind{};
    try {
        kind = estimators::cov_kind_from_string(a.kind);
    } catch (const Error&) {
        usage("unknown --kind '" + a.kind + "' (RCV, TVA, SAMPLE, LS, TSCV, SQML)");
    }
    fs::create_directories(a.out);
    json cfg{{"kind", a.kind}};

    if (!a.panel.empty()) {
        if (kind != estimators::CovKind::RCV && kind != estimators::CovKind::TVA) usage("--panel only works with RCV or TVA");
        std::ifstream f(a.panel);
        if (!f) fail(ErrorCode::Io, "cannot read " + a.panel);
        const auto r = sync::to_returns(sync::read_panel(f));
        const auto e = kind == estimators::CovKind::RCV ? estimators::realized_cov(r) : estimators::tva_cov(r);
        auto o = open_out(fs::path(a.out) / "cov.csv");
        estimators::write_cov(o, e);
        cfg["panel"] = a.panel;
        write_manifest(a.out, "estimate", cfg, c.seed.value_or(0), c.threads);
        return 0;
    }
    if (a.dataset.empty()) usage("estimate needs --dataset or --panel");
    const auto data = dataset::load(a.dataset);
    const int day = a.day < 0 ? data.day_count() - 1 : static_cast<int>(a.day);
    if (day >= data.day_count()) usage("--day out of range");
    const auto& ticks = data.days[static_cast<std::size_t>(day)].ticks;
    cfg["dataset"] = a.dataset;
    cfg["day"] = day;

    estimators::CovEstimate est;
    switch (kind) {
    case estimators::CovKind::RCV:
    case estimators::CovKind::TVA: {
        const auto r = sync::to_returns(sync::refresh_time(ticks, 0));
        est = kind == estimators::CovKind::RCV ? estimators::realized_cov(r) : estimators::tva_cov(r);
        break;
    }
    case estimators::CovKind::SAMPLE:
    case estimators::CovKind::LS: {
        if (a.window < 2 || a.window > day) usage("--window must lie in [2, day]");
        const Eigen::MatrixXd closes = data.closes();
        sync::ReturnsMatrix r;
        r.deltas = closes.middleCols(day - a.window + 1, a.window) - closes.middleCols(day - a.window, a.window);
        est = estimators::sample_cov_daily(r);
        if (kind == estimators::CovKind::LS) est = estimators::linear_shrinkage(est, r.deltas).first;
        cfg["window"] = a.window;
        break;
    }
    case estimators::CovKind::TSCV: est = estimators::tscv_pairwise(ticks, 0, data.session.length(), 10, 1, c.threads); break;
    case estimators::CovKind::SQML: {
        sqml::SqmlConfig s;
        s.variant = a.variant == "SQrD" ? sqml::Variant::SQrD : sqml::Variant::SQrM;
        if (a.variant != "SQrM" && a.variant != "SQrD") usage("--variant must be SQrM or SQrD");
        s.history_days = static_cast<int>(a.j1);
        s.total_days = static_cast<int>(a.j);
        try {
            sqml::validate(s);
        } catch (const Error& e) {
            usage(e.what());
        }
        const int first = day + 1 - s.total_days;
        if (first < (s.variant == sqml::Variant::SQrD ? 1 : 0)) usage("not enough days before --day for the SQML window");
        const int dense_from = day + 1 - s.dense_days();
        sync::ReturnsMatrix history;
        if (s.variant == sqml::Variant::SQrM) {
            std::vector<sync::ReturnsMatrix> blocks;
            const auto grid = sync::fifteen_minute_grid(data.session);
            for (int k = first; k < dense_from; ++k) blocks.push_back(sync::to_returns(sync::previous_tick(data.days[static_cast<std::size_t>(k)].ticks, grid)));
            history = sync::concat_returns(blocks);
        } else {
            const Eigen::MatrixXd closes = data.closes();
            history.deltas = closes.middleCols(first, s.history_days) - closes.middleCols(first - 1, s.history_days);
        }
        std::vector<sync::SyncPanel> panels;
        for (int k = dense_from; k <= day; ++k) panels.push_back(sync::refresh_time(data.days[static_cast<std::size_t>(k)].ticks, 0));
        const auto q = sqml::sqml_estimate(s, history, panels, {}, c.threads);
        auto o = open_out(fs::path(a.out) / "sqml.csv");
        sqml::write_estimate(o, q);
        est.kind = estimators::CovKind::SQML;
        est.matrix = q.sigma_hat;
        est.warnings = q.warnings;
        cfg["variant"] = a.variant;
        cfg["j1"] = a.j1;
        cfg["j"] = a.j;
        break;
    }
    }
    auto o = open_out(fs::path(a.out) / "cov.csv");
    estimators::write_cov(o, est);
    for (const auto& w : est.warnings) std::cerr << "warning: " << w << '\n';
    write_manifest(a.out, "estimate", cfg, c.seed.value_or(0), c.threads);
    std::cout << estimators::to_string(est.kind) << " estimate (p = " << est.matrix.rows() << ") -> " << a.out << '\n';
    return 0;
}

// ---------------------------------------------------------------- backtest

struct BacktestArgs {
    std::string dataset, out;
    std::optional<long> eval_begin, eval_end;
};

backtest::StrategySpec strategy_from_json(const json& j) {
    backtest::StrategySpec s;
    try {
        s.name = j.at("name").get<std::string>();
        s.estimator = backtest::estimator_from_string(j.value("estimator", std::string("none")));
        s.optimizer = backtest::optimizer_from_string(j.at("optimizer").get<std::string>());
        s.j_ls = j.value("J_LS", s.j_ls);
        s.j_sp = j.value("J_SP", s.j_sp);
        s.j_ts = j.value("J_TS", s.j_ts);
        s.j1 = j.value("J1", s.j1);
        s.j = j.value("J", s.j);
        s.c = j.value("c", s.c);
        s.momentum_days = j.value("momentum_days", s.momentum_days);
        s.tscv_slow = j.value("K", s.tscv_slow);
        backtest::validate(s);
    } catch (const json::exception& e) {
        usage(std::string("strategy: ") + e.what());
    } catch (const Error& e) {
        usage(e.what());
    }
    return s;
}

int cmd_backtest(const BacktestArgs& a, const Common& c) {
    if (c.config_path.empty()) usage("backtest needs --config");
    json cfg = read_json_file(c.config_path);
    if (!a.dataset.empty()) cfg["dataset"] = a.dataset;
    if (a.eval_begin) cfg["eval"]["begin"] = *a.eval_begin;
    if (a.eval_end) cfg["eval"]["end"] = *a.eval_end;
    if (c.seed) cfg["seed"] = *c.seed;
    if (!cfg.contains("dataset") || !cfg.contains("eval") || !cfg.contains("strategies")) usage("config needs dataset, eval and strategies");

    std::vector<backtest::StrategySpec> specs;
    for (const auto& s : cfg["strategies"]) specs.push_back(strategy_from_json(s));
    if (specs.empty()) usage("no strategies configured");
    int begin = 0, end = 0;
    std::size_t rolling = 42;
    try {
        begin = cfg["eval"].at("begin").get<int>();
        end = cfg["eval"].at("end").get<int>();
        rolling = cfg.value("rolling_window", rolling);
    } catch (const json::exception& e) {
        usage(std::string("eval: ") + e.what());
    }
    if (end <= begin) usage("empty evaluation window");

    fs::path dataset_path = cfg["dataset"].get<std::string>();
    if (dataset_path.is_relative() && !fs::exists(dataset_path)) dataset_path = fs::path(c.config_path).parent_path() / dataset_path;
    const auto data = dataset::load(dataset_path);
    if (begin < 1 || end > data.day_count()) usage("evaluation window outside the dataset (1.." + std::to_string(data.day_count()) + ")");

    backtest::RunOptions opt;
    opt.threads = c.threads;
    backtest::BacktestReport report;
    try {
        report = backtest::run_backtest(specs, data, {begin, end}, opt);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::InsufficientHistory || e.code() == ErrorCode::InvalidArgument) usage(e.what());
        throw;
    }

    fs::create_directories(a.out);
    const fs::path out = a.out;
    {
        auto f = open_out(out / "summary.csv");
        backtest::write_summary(f, report);
    }
    {
        auto f = open_out(out / "returns.csv");
        backtest::write_returns(f, report);
    }
    {
        auto f = open_out(out / "rolling.csv");
        backtest::write_rolling(f, report, rolling);
    }
    if (end - begin >= 2) {
        const auto [first, second] = backtest::subperiod_split(report);
        auto f1 = open_out(out / "summary_first_half.csv");
        backtest::write_summary(f1, first);
        auto f2 = open_out(out / "summary_second_half.csv");
        backtest::write_summary(f2, second);
    }
    {
        auto f = open_out(out / "log.txt");
        backtest::write_log(f, report);
    }
    if (cfg.contains("sweep")) {
        const auto& sw = cfg["sweep"];
        const auto base = strategy_from_json(sw.at("base"));
        const auto grid = backtest::sqml_grid(base, sw.at("J1").get<std::vector<int>>(), sw.at("gap").get<std::vector<int>>());
        const auto objective = sw.value("objective", std::string("minSD")) == "maxIR" ? backtest::Objective::MaxIR : backtest::Objective::MinSD;
        const auto result = backtest::grid_sweep(grid, data, {begin, end}, objective, opt);
        auto f = open_out(out / "sweep.csv");
        f << "strategy,AV,SD,IR,best\n";
        for (std::size_t k = 0; k < grid.size(); ++k) {
            f << grid[k].name << ',' << detail::fmt_double(result.table[k].av) << ',' << detail::fmt_double(result.table[k].sd) << ','
              << detail::fmt_double(result.table[k].ir) << ',' << (k == result.best ? 1 : 0) << '\n';
        }
    }
    write_manifest(out, "backtest", cfg, cfg.value("seed", std::uint64_t{0}), c.threads);

    std::cout << "config hash " << hex64(report.config_hash) << '\n';
    backtest::write_summary(std::cout, report);
    if (!report.full_coverage()) std::cerr << "warning: coverage below 100%, see " << (out / "log.txt").string() << '\n';
    for (const auto& l : report.log) std::cerr << "warning: " << l << '\n';
    return 0;
}

// ---------------------------------------------------------------- rmt-check

struct RmtArgs {
    std::string out, population;
    double y = 0.5;
    long points = 50;
};

rmt::PopulationSpectrum read_population(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot read " + path);
    std::vector<double> atoms, weights;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto t = detail::trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto f = detail::split(t, ',');
        double a = 0.0, w = 1.0;
        if (f.empty() || f.size() > 2 || !detail::parse_double(detail::trim(f[0]), a) || (f.size() == 2 && !detail::parse_double(detail::trim(f[1]), w)))
            fail(ErrorCode::ParseError, path + " line " + std::to_string(line_no) + ": expected 'atom[,weight]'");
        atoms.push_back(a);
        weights.push_back(w);
    }
    if (atoms.empty()) fail(ErrorCode::ParseError, path + ": no atoms");
    return rmt::PopulationSpectrum(atoms, weights);
}

int cmd_rmt_check(const RmtArgs& a, const Common& c) {
    if (std::abs(a.y - 1.0) <= 1e-12) usage("y = 1 is not supported (the boundary transform is singular there)");
    if (!(a.y > 0.0)) usage("y must be positive");
    if (a.points < 2) usage("--points must be >= 2");
    const auto h = a.population.empty() ? rmt::PopulationSpectrum::point(1.0) : read_population(a.population);
    const rmt::SpectralLimit f(h, a.y);

    std::vector<double> xs;
    bool all_pass = true;
    double max_dev = 0.0;
    for (const auto& iv : f.support()) {
        for (long k = 1; k <= a.points; ++k) xs.push_back(iv.lo + (iv.hi - iv.lo) * static_cast<double>(k) / static_cast<double>(a.points + 1));
    }
    fs::create_directories(a.out);
    {
        auto o = open_out(fs::path(a.out) / "table.csv");
        rmt::write_table(o, f, xs);
    }

    std::cout << "support:";
    for (const auto& iv : f.support()) std::cout << " [" << iv.lo << ", " << iv.hi << "]";
    std::cout << '\n';
    if (h.atoms.size() == 1) {
        for (double x : xs) max_dev = std::max(max_dev, std::abs(f.delta(x) - h.atoms[0]));
        const bool ok = max_dev < 1e-3 * h.atoms[0];
        all_pass = all_pass && ok;
        std::cout << "delta≡" << h.atoms[0] << ' ' << (ok ? "PASS" : "FAIL") << " (max dev " << max_dev << (ok ? " < " : " >= ") << 1e-3 * h.atoms[0]
                  << ")\n";
    }
    double mean_h = 0.0;
    for (std::size_t k = 0; k < h.atoms.size(); ++k) mean_h += h.atoms[k] * h.weights[k];
    const double total = f.psi(f.support().back().hi + 1.0);
    if (a.y < 1.0) {
        const bool mass_ok = std::abs(total - mean_h) < 1e-4 * mean_h;
        all_pass = all_pass && mass_ok;
        std::cout << "psi total mass " << (mass_ok ? "PASS" : "FAIL") << " (" << total << " vs mean(H) " << mean_h << ")\n";
    } else {
        std::cout << "psi mass on the continuous part " << total << " (null space carries " << mean_h - total << ")\n";
    }
    if (a.y < 1.0) {
        const auto loss = rmt::limit_loss(f, [&](double x) { return f.delta(x); });
        const auto naive = rmt::limit_loss(f, [](double x) { return x; });
        const bool ok = loss.value <= naive.value + 1e-6;
        all_pass = all_pass && ok;
        std::cout << "limit loss optimal " << loss.value << " vs sample eigenvalues " << naive.value << ' ' << (ok ? "PASS" : "FAIL") << '\n';
        for (const auto& w : loss.warnings) std::cerr << "warning: " << w << '\n';
    }
    write_manifest(a.out, "rmt-check", json{{"y", a.y}, {"population", a.population}, {"points", a.points}}, c.seed.value_or(0), c.threads);
    return all_pass ? 0 : 1;
}

int exit_code_for(const Error& e) {
    switch (e.code()) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::UnsupportedRatio: return 2;
    default: return 1;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Integrated covariance estimation toolkit"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    Common common;
    std::uint64_t seed = 0;
    auto* seed_opt = app.add_option("--seed", seed, "random seed (overrides the config file)");
    app.add_option("--threads", common.threads, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--config", common.config_path, "JSON configuration file");
    app.fallthrough();

    SimulateArgs sim;
    auto* s_sim = app.add_subcommand("simulate", "simulate a multi-day tick dataset");
    s_sim->add_option("--out", sim.out, "output directory")->required();
    s_sim->add_option("--p", sim.p, "number of assets");
    s_sim->add_option("--days", sim.days, "number of trading days");
    s_sim->add_option("--fine-steps", sim.fine_steps, "latent steps per day");
    s_sim->add_option("--intensity", sim.intensity, "expected ticks per asset per day");
    s_sim->add_option("--noise", sim.noise, "microstructure noise variance");

    IngestArgs ing;
    auto* s_ing = app.add_subcommand("ingest", "clean a raw tick file into per-symbol caches");
    s_ing->add_option("--in", ing.in, "raw tick file")->required();
    s_ing->add_option("--out", ing.out, "output directory")->required();
    s_ing->add_option("--delimiter", ing.delimiter, "field delimiter");

    SyncArgs syn;
    auto* s_syn = app.add_subcommand("sync", "synchronize a tick file onto a common grid");
    s_syn->add_option("--in", syn.in, "raw tick file")->required();
    s_syn->add_option("--out", syn.out, "output directory")->required();
    s_syn->add_option("--scheme", syn.scheme, "refresh | previous");
    s_syn->add_option("--step-minutes", syn.step_minutes, "previous-tick grid step")->check(CLI::PositiveNumber);

    EstimateArgs est;
    auto* s_est = app.add_subcommand("estimate", "estimate an integrated covariance matrix");
    s_est->add_option("--kind", est.kind, "RCV | TVA | SAMPLE | LS | TSCV | SQML")->required();
    s_est->add_option("--dataset", est.dataset, "dataset directory");
    s_est->add_option("--panel", est.panel, "synchronized panel file (RCV, TVA)");
    s_est->add_option("--day", est.day, "day index (default: last)");
    s_est->add_option("--window", est.window, "daily returns for SAMPLE / LS");
    s_est->add_option("--variant", est.variant, "SQrM | SQrD");
    s_est->add_option("--j1", est.j1, "eigenvector window in days");
    s_est->add_option("--j", est.j, "total window in days");
    s_est->add_option("--out", est.out, "output directory")->required();

    BacktestArgs bt;
    auto* s_bt = app.add_subcommand("backtest", "run the daily-rebalance backtest");
    s_bt->add_option("--dataset", bt.dataset, "dataset directory (overrides the config)");
    s_bt->add_option("--eval-begin", bt.eval_begin, "first evaluation day index");
    s_bt->add_option("--eval-end", bt.eval_end, "one past the last evaluation day");
    s_bt->add_option("--out", bt.out, "output directory")->required();

    RmtArgs rmt_args;
    auto* s_rmt = app.add_subcommand("rmt-check", "limiting spectral quantities and self-checks");
    s_rmt->add_option("--y", rmt_args.y, "dimension ratio p/n");
    s_rmt->add_option("--population", rmt_args.population, "population spectrum file (atom[,weight] per line)");
    s_rmt->add_option("--points", rmt_args.points, "grid points per support interval");
    s_rmt->add_option("--out", rmt_args.out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    if (seed_opt->count() > 0) common.seed = seed;

    try {
        if (*s_sim) return cmd_simulate(sim, common);
        if (*s_ing) return cmd_ingest(ing, common);
        if (*s_syn) return cmd_sync(syn, common);
        if (*s_est) return cmd_estimate(est, common);
        if (*s_bt) return cmd_backtest(bt, common);
        if (*s_rmt) return cmd_rmt_check(rmt_args, common);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
