#include "stf/commands.hpp"

#include "stf/archive.hpp"
#include "stf/errors.hpp"
#include "stf/report.hpp"
#include "stf/seasonal.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace stf {

namespace {

void require_file(const std::filesystem::path& p) {
    if (!std::filesystem::is_regular_file(p)) throw ConfigError("missing file: " + p.string());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
    require_file(path);
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string ranks_label(const Ranks& r) {
    std::string s = "(" + std::to_string(r.r);
    for (auto k : r.k) s += "," + std::to_string(k);
    return s + ")";
}

TensorSeries scaled(const TensorSeries& y, Scaling scaling) {
    return scaling == Scaling::Estimate ? standardize(y, estimate_standardization(y)) : y;
}

Ranks resolve_ranks(const RunConfig& cfg, const TensorSeries& y, std::ostream& log) {
    if (cfg.ranks) return *cfg.ranks;
    const Ranks r = select_ranks(scaled(y, cfg.scaling), cfg.r_max, cfg.k_max);
    log << "auto-selected ranks " << ranks_label(r) << "\n";
    return r;
}

}  // namespace

TensorSeries load_series(const RunConfig& cfg, std::ostream& log) {
    if (cfg.archive) {
        require_file(*cfg.archive);
        if (cfg.verbose) log << "reading " << cfg.archive->string() << "\n";
        return read_tensor_archive(*cfg.archive);
    }
    if (!cfg.csv_paths.empty()) {
        for (const auto& p : cfg.csv_paths) require_file(p);
        const auto res = ingest_csv(cfg.csv_paths, cfg.span);
        return fold(res.panel, cfg.calendar);
    }
    const auto p = cfg.tensor_archive_path();
    if (!std::filesystem::is_regular_file(p))
        throw ConfigError("no input data: set data.archive or data.paths (looked for " + p.string() + ")");
    if (cfg.verbose) log << "reading " << p.string() << "\n";
    return read_tensor_archive(p);
}

void cmd_ingest(const RunConfig& cfg, std::ostream& log) {
    if (cfg.csv_paths.empty()) throw ConfigError("ingest needs data.paths");
    for (const auto& p : cfg.csv_paths) require_file(p);
    const auto res = ingest_csv(cfg.csv_paths, cfg.span);
    const auto ts = fold(res.panel, cfg.calendar);
    if (ts.length() == 0) throw std::runtime_error("ingest: the common span holds no complete period");
    const auto out = cfg.out_dir / "tensors.txt";
    write_tensor_archive(out, ts);

    const std::size_t hours = res.panel.values.empty() ? 0 : res.panel.values.front().size();
    nlohmann::ordered_json j;
    j["providers"] = ts.provider_ids;
    j["hours"] = hours;
    j["first_hour"] = format_datetime(res.panel.start);
    j["periods"] = ts.length();
    j["first_period"] = format_datetime(ts.period_starts.front());
    j["duplicates_averaged"] = res.report.duplicates_averaged;
    j["cells_interpolated"] = res.report.cells_interpolated;
    j["hours_trimmed"] = res.report.hours_trimmed;
    write_text(cfg.out_dir / "ingest.json", j.dump(2) + "\n");

    log << "ingest: N=" << ts.provider_ids.size() << " hours=" << hours << " T=" << ts.length()
        << " duplicates_averaged=" << res.report.duplicates_averaged
        << " cells_interpolated=" << res.report.cells_interpolated << " hours_trimmed=" << res.report.hours_trimmed
        << "\nwrote " << out.string() << "\n";
}

RankSelection cmd_ranks(const RunConfig& cfg, std::ostream& log) {
    const auto y = load_series(cfg, log);
    const auto sel = select_ranks_detailed(scaled(y, cfg.scaling), cfg.r_max, cfg.k_max);
    nlohmann::ordered_json j;
    j["ranks"] = {{"r", sel.ranks.r}, {"k", sel.ranks.k}};
    j["eigenvalues"] = nlohmann::ordered_json::array();
    for (const auto& v : sel.eigenvalues) j["eigenvalues"].push_back(std::vector<double>(v.data(), v.data() + v.size()));
    write_text(cfg.out_dir / "ranks.json", j.dump(2) + "\n");
    log << "ranks: selected " << ranks_label(sel.ranks) << "\n";
    if (cfg.verbose)
        for (std::size_t m = 0; m < sel.eigenvalues.size(); ++m) {
            log << "  mode " << m << " eigenvalues:";
            for (Eigen::Index i = 0; i < sel.eigenvalues[m].size(); ++i) log << ' ' << sel.eigenvalues[m](i);
            log << "\n";
        }
    return sel;
}

ModelArchive cmd_fit(const RunConfig& cfg, std::ostream& log) {
    const auto y = load_series(cfg, log);
    const Ranks ranks = resolve_ranks(cfg, y, log);
    ModelArchive m;
    m.fit = fit_tfm(y, ranks, cfg.scaling);
    m.provider_ids = y.provider_ids;
    m.periods = y.periods;
    m.period_starts = y.period_starts;
    m.seasonal_period = cfg.seasonal_period;
    m.in_sample_mse = in_sample_mse(y, fitted_values(m.fit));
    save_model(cfg.model_file(), m);

    nlohmann::ordered_json j;
    j["ranks"] = {{"r", ranks.r}, {"k", ranks.k}};
    j["in_sample_mse"] = m.in_sample_mse;
    j["degenerate"] = m.fit.degenerate;
    j["clamped_cells"] = m.fit.z.clamped_cells;
    // A loading matrix L (p x k) is scaled so that L'L / p = I; the mean
    // squared entry per column should therefore be 1.
    auto scale = [](const Matrix& l) { return l.squaredNorm() / static_cast<double>(l.size()); };
    j["loading_scale"] = nlohmann::ordered_json::array();
    j["loading_scale"].push_back(scale(m.fit.loadings.lambda));
    for (const auto& b : m.fit.loadings.b) j["loading_scale"].push_back(scale(b));
    write_text(cfg.out_dir / "fit.json", j.dump(2) + "\n");

    log << "fit: ranks " << ranks_label(ranks) << " T=" << y.length() << " in-sample MSE " << m.in_sample_mse << "\n";
    log << "  loading scale (mean squared entry): lambda " << scale(m.fit.loadings.lambda);
    for (std::size_t i = 0; i < m.fit.loadings.b.size(); ++i) log << ", B" << i + 1 << ' ' << scale(m.fit.loadings.b[i]);
    log << "\n";
    if (m.fit.degenerate) log << "  warning: standardized data has no variation; forecasts fall back to the mean\n";
    if (m.fit.z.clamped_cells > 0) log << "  " << m.fit.z.clamped_cells << " cells had their scale clamped\n";
    log << "wrote " << cfg.model_file().string() << "\n";
    return m;
}

TensorSeries cmd_forecast(const RunConfig& cfg, std::size_t n, std::ostream& log) {
    require_file(cfg.model_file());
    const auto m = load_model(cfg.model_file());
    const std::size_t T = m.fit.factors.tensors.size();
    if (n < 1 || n > T)
        throw ConfigError("forecast horizon must lie in [1, " + std::to_string(T) + "], got " + std::to_string(n));
    auto fc = forecast_tfm(m.fit, m.seasonal_period, n);
    fc.provider_ids = m.provider_ids;
    fc.periods = m.periods;
    fc.period_starts.clear();
    const auto cycle = static_cast<Hour>(product(m.periods));
    const Hour last = m.period_starts.empty() ? 0 : m.period_starts.back();
    for (std::size_t h = 1; h <= n; ++h) fc.period_starts.push_back(last + static_cast<Hour>(h) * cycle);

    std::string csv = "step,period_start,provider";
    for (std::size_t j = 0; j < m.periods.size(); ++j) csv += ",s" + std::to_string(j + 1);
    csv += ",value\n";
    for (std::size_t h = 0; h < n; ++h) {
        const Tensor& x = fc.tensors[h];
        const Dims& d = x.dims();
        std::vector<std::size_t> idx(d.size(), 0);
        // Rows run provider-major, last seasonal index fastest.
        const std::size_t total = x.size();
        for (std::size_t c = 0; c < total; ++c) {
            std::size_t rem = c;
            for (std::size_t k = d.size(); k-- > 0;) {
                idx[k] = rem % d[k];
                rem /= d[k];
            }
            csv += std::to_string(h + 1) + ',' + format_datetime(fc.period_starts[h]) + ',' + fc.provider_ids[idx[0]];
            for (std::size_t k = 1; k < d.size(); ++k) csv += ',' + std::to_string(idx[k]);
            csv += ',' + format_double(x(idx)) + '\n';
        }
    }
    write_text(cfg.out_dir / "forecast.csv", csv);
    write_tensor_archive(cfg.out_dir / "forecast.txt", fc);
    log << "forecast: " << n << " periods ahead from " << format_datetime(last) << "\nwrote "
        << (cfg.out_dir / "forecast.csv").string() << "\n";
    return fc;
}

std::vector<Forecaster> configured_forecasters(const RunConfig& cfg, const Ranks& ranks) {
    std::vector<Forecaster> models{tfm_forecaster(ranks, cfg.seasonal_period, cfg.scaling)};
    if (cfg.use_mfm) {
        MfmOptions o = cfg.mfm;
        o.period = cfg.seasonal_period;
        models.push_back(mfm_forecaster(o));
    }
    if (cfg.use_vfm) {
        VfmOptions o = cfg.vfm;
        o.period = cfg.seasonal_period;
        models.push_back(vfm_forecaster(o, cfg.vfm_stacked));
    }
    if (cfg.use_fts) {
        FpcaOptions o = cfg.fpca;
        o.period = cfg.seasonal_period;
        models.push_back(fpca_forecaster(o));
    }
    return models;
}

EvalReport cmd_backtest(const RunConfig& cfg, std::ostream& log, const std::optional<std::vector<Forecaster>>& models) {
    const auto y = load_series(cfg, log);
    try {
        cfg.plan.validate(y.length());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("backtest: ") + e.what());
    }
    std::string ranks_text = "n/a";
    std::vector<Forecaster> set;
    if (models) {
        set = *models;
    } else {
        // Auto ranks are chosen on the first training window only.
        const Ranks ranks = cfg.ranks ? *cfg.ranks : resolve_ranks(cfg, y.slice(0, cfg.plan.train_length), log);
        ranks_text = ranks_label(ranks);
        set = configured_forecasters(cfg, ranks);
    }
    if (cfg.verbose) {
        log << "backtest: T=" << y.length() << " train_length=" << cfg.plan.train_length << " models:";
        for (const auto& f : set) log << ' ' << f.name;
        log << "\n";
    }
    EvalReport r = rolling_evaluate(set, y, cfg.plan);
    r.metadata["ranks"] = ranks_text;
    r.metadata["config_hash"] = cfg.hash();
    r.metadata["span_first"] = format_datetime(y.period_starts.front());
    r.metadata["span_last"] = format_datetime(y.period_starts.back());
    r.metadata["periods"] = std::to_string(y.length());
    r.metadata["train_length"] = std::to_string(cfg.plan.train_length);
    emit_report(r, cfg.out_dir);
    std::size_t failed = 0;
    for (const auto& c : r.cells) failed += c.failed ? 1 : 0;
    log << "backtest: " << r.cells.size() << " cells, " << failed << " failed\nwrote report files to "
        << cfg.out_dir.string() << "\n";
    return r;
}

Simulation cmd_simulate(const RunConfig& cfg, std::ostream& log) {
    SimSpec spec = cfg.sim;
    spec.periods = cfg.calendar.periods;
    spec.seed = cfg.seed;
    Simulation sim = simulate(spec);
    write_tensor_archive(cfg.out_dir / "tensors.txt", sim.y);
    ModelArchive truth;
    truth.fit.ranks = spec.ranks;
    truth.fit.z = sim.truth;
    truth.fit.loadings = sim.loadings;
    truth.fit.factors = sim.factors;
    truth.provider_ids = sim.y.provider_ids;
    truth.periods = sim.y.periods;
    truth.period_starts = sim.y.period_starts;
    truth.seasonal_period = cfg.seasonal_period;
    save_model(cfg.out_dir / "truth.json", truth);
    log << "simulate: N=" << spec.providers << " T=" << spec.length << " ranks " << ranks_label(spec.ranks)
        << " seed " << spec.seed << "\nwrote " << (cfg.out_dir / "tensors.txt").string() << "\n";
    return sim;
}

void cmd_report(const RunConfig& cfg, std::ostream& log) {
    const auto path = cfg.out_dir / "report.json";
    const EvalReport r = parse_report_json(read_text(path));
    emit_report(r, cfg.out_dir);
    log << "report: " << r.cells.size() << " cells rebuilt from " << path.string() << "\n";
}

int run_cli(int argc, const char* const* argv, std::ostream& log) {
    CLI::App app{"Multi-level tensor factor models for seasonal panels"};
    app.require_subcommand(1, 1);
    app.footer("Config schema and defaults:\n" + config_schema());

    std::string config_path;
    std::optional<std::size_t> horizon, threads;
    std::optional<std::uint64_t> seed;
    std::string out;
    bool verbose = false;
    app.add_option("--config", config_path, "configuration file")->check(CLI::ExistingFile);
    app.add_option("--horizon", horizon, "forecast horizon in periods");
    app.add_option("--threads", threads, "worker thread cap (0 = all cores)");
    app.add_option("--seed", seed, "random seed");
    app.add_option("--out", out, "output directory");
    app.add_flag("--verbose", verbose, "detailed progress on stderr");

    for (const char* name : {"ingest", "ranks", "fit", "forecast", "backtest", "simulate", "report"})
        app.add_subcommand(name)->fallthrough();
    app.get_subcommand("ingest")->description("read provider CSVs and write the folded tensor archive");
    app.get_subcommand("ranks")->description("select ranks by eigenvalue ratios");
    app.get_subcommand("fit")->description("fit the tensor factor model and write the model archive");
    app.get_subcommand("forecast")->description("forecast from the model archive");
    app.get_subcommand("backtest")->description("rolling-window evaluation of TFM and benchmarks");
    app.get_subcommand("simulate")->description("write a synthetic archive and its ground truth");
    app.get_subcommand("report")->description("rebuild report tables from report.json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        std::ostringstream o, err;
        const int rc = app.exit(e, o, err);
        log << o.str() << err.str();
        return rc;
    } catch (const CLI::ParseError& e) {
        std::ostringstream o, err;
        app.exit(e, o, err);
        log << o.str() << err.str();
        return 2;
    }
    const std::string cmd = app.get_subcommands().front()->get_name();

    RunConfig cfg;
    try {
        if (!config_path.empty()) cfg = load_config(config_path);
        if (seed) cfg.seed = *seed;
        if (threads) cfg.plan.threads = *threads;
        if (!out.empty()) cfg.out_dir = out;
        if (horizon) cfg.horizon = *horizon;
        cfg.verbose = verbose;
        cfg.validate();
    } catch (const ConfigError& e) {
        log << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        std::filesystem::create_directories(cfg.out_dir);
        if (cfg.model_file().has_parent_path()) std::filesystem::create_directories(cfg.model_file().parent_path());
        if (cmd == "ingest") cmd_ingest(cfg, log);
        else if (cmd == "ranks") cmd_ranks(cfg, log);
        else if (cmd == "fit") cmd_fit(cfg, log);
        else if (cmd == "forecast") cmd_forecast(cfg, cfg.horizon, log);
        else if (cmd == "backtest") cmd_backtest(cfg, log);
        else if (cmd == "simulate") cmd_simulate(cfg, log);
        else if (cmd == "report") cmd_report(cfg, log);
    } catch (const ConfigError& e) {
        log << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        log << "error: " << cmd << ": " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace stf
