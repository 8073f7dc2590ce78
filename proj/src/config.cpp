#include "stf/config.hpp"

#include "stf/archive.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace stf {

namespace {

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(v);
    while (std::getline(in, cur, ',')) out.push_back(trim(cur));
    return out;
}

std::size_t to_size(const std::string& key, const std::string& v) {
    std::size_t x = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (v.empty() || ec != std::errc() || p != v.data() + v.size())
        throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
    return x;
}

double to_double(const std::string& key, const std::string& v) {
    double x = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (v.empty() || ec != std::errc() || p != v.data() + v.size())
        throw ConfigError(key + ": expected a number, got '" + v + "'");
    return x;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
    if (v == "false" || v == "no" || v == "off" || v == "0") return false;
    throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::vector<std::size_t> to_sizes(const std::string& key, const std::string& v) {
    std::vector<std::size_t> out;
    if (trim(v).empty()) return out;
    for (const auto& s : split_list(v)) out.push_back(to_size(key, s));
    return out;
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
    std::vector<double> out;
    if (trim(v).empty()) return out;
    for (const auto& s : split_list(v)) out.push_back(to_double(key, s));
    return out;
}

Ranks to_ranks(const std::string& key, const std::string& v) {
    const auto xs = to_sizes(key, v);
    if (xs.size() < 2) throw ConfigError(key + ": expected R,K1,...,KM");
    return Ranks{xs[0], std::vector<std::size_t>(xs.begin() + 1, xs.end())};
}

Hour to_hour(const std::string& key, const std::string& v) {
    try {
        return parse_datetime(v);
    } catch (const std::exception& e) {
        throw ConfigError(key + ": " + e.what());
    }
}

template <class T>
std::string join(const std::vector<T>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ',';
        if constexpr (std::is_floating_point_v<T>)
            out += format_double(xs[i]);
        else if constexpr (std::is_same_v<T, std::filesystem::path>)
            out += xs[i].string();
        else
            out += std::to_string(xs[i]);
    }
    return out;
}

std::string ranks_text(const Ranks& r) {
    std::vector<std::size_t> xs{r.r};
    xs.insert(xs.end(), r.k.begin(), r.k.end());
    return join(xs);
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

struct Entry {
    std::string section;  // empty = global
    std::string key;
    std::function<void(RunConfig&, const std::string& name, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

const std::vector<Entry>& schema() {
    using C = RunConfig;
    using S = const std::string&;
    static const std::vector<Entry> entries{
        {"", "seed", [](C& c, S n, S v) { c.seed = to_size(n, v); }, [](const C& c) { return std::to_string(c.seed); }},

        {"data", "paths",
         [](C& c, S, S v) {
             c.csv_paths.clear();
             if (!trim(v).empty())
                 for (const auto& p : split_list(v)) c.csv_paths.emplace_back(p);
         },
         [](const C& c) { return join(c.csv_paths); }},
        {"data", "archive", [](C& c, S, S v) { c.archive = trim(v).empty() ? std::nullopt : std::optional<std::filesystem::path>(v); },
         [](const C& c) { return c.archive ? c.archive->string() : std::string(); }},
        {"data", "span_first",
         [](C& c, S n, S v) {
             if (trim(v).empty()) return;
             if (!c.span) c.span = Span{0, 0};
             c.span->first = to_hour(n, v);
         },
         [](const C& c) { return c.span ? format_datetime(c.span->first) : std::string(); }},
        {"data", "span_last",
         [](C& c, S n, S v) {
             if (trim(v).empty()) return;
             if (!c.span) c.span = Span{0, 0};
             c.span->last = to_hour(n, v);
         },
         [](const C& c) { return c.span ? format_datetime(c.span->last) : std::string(); }},

        {"calendar", "periods", [](C& c, S n, S v) { c.calendar.periods = to_sizes(n, v); },
         [](const C& c) { return join(c.calendar.periods); }},
        {"calendar", "anchor", [](C& c, S n, S v) { c.calendar.anchor = to_hour(n, v); },
         [](const C& c) { return format_datetime(c.calendar.anchor); }},

        {"model", "ranks",
         [](C& c, S n, S v) { c.ranks = v == "auto" ? std::nullopt : std::optional<Ranks>(to_ranks(n, v)); },
         [](const C& c) { return c.ranks ? ranks_text(*c.ranks) : std::string("auto"); }},
        {"model", "r_max", [](C& c, S n, S v) { c.r_max = to_size(n, v); }, [](const C& c) { return std::to_string(c.r_max); }},
        {"model", "k_max", [](C& c, S n, S v) { c.k_max = to_sizes(n, v); }, [](const C& c) { return join(c.k_max); }},
        {"model", "standardize",
         [](C& c, S n, S v) {
             if (v == "estimate")
                 c.scaling = Scaling::Estimate;
             else if (v == "none")
                 c.scaling = Scaling::Identity;
             else
                 throw ConfigError(n + ": expected estimate or none, got '" + v + "'");
         },
         [](const C& c) { return std::string(c.scaling == Scaling::Estimate ? "estimate" : "none"); }},
        {"model", "seasonal_period", [](C& c, S n, S v) { c.seasonal_period = to_size(n, v); },
         [](const C& c) { return std::to_string(c.seasonal_period); }},
        {"model", "path", [](C& c, S, S v) { c.model_path = trim(v).empty() ? std::nullopt : std::optional<std::filesystem::path>(v); },
         [](const C& c) { return c.model_path ? c.model_path->string() : std::string(); }},

        {"forecast", "horizon", [](C& c, S n, S v) { c.horizon = to_size(n, v); },
         [](const C& c) { return std::to_string(c.horizon); }},

        {"backtest", "train_length", [](C& c, S n, S v) { c.plan.train_length = to_size(n, v); },
         [](const C& c) { return std::to_string(c.plan.train_length); }},
        {"backtest", "horizons", [](C& c, S n, S v) { c.plan.horizons = to_sizes(n, v); },
         [](const C& c) { return join(c.plan.horizons); }},
        {"backtest", "normalizer",
         [](C& c, S n, S v) {
             if (v == "variance")
                 c.plan.normalizer = Normalizer::Variance;
             else if (v == "sd")
                 c.plan.normalizer = Normalizer::StandardDeviation;
             else
                 throw ConfigError(n + ": expected variance or sd, got '" + v + "'");
         },
         [](const C& c) { return std::string(c.plan.normalizer == Normalizer::Variance ? "variance" : "sd"); }},
        {"backtest", "threads", [](C& c, S n, S v) { c.plan.threads = to_size(n, v); },
         [](const C& c) { return std::to_string(c.plan.threads); }},
        {"backtest", "mfm", [](C& c, S n, S v) { c.use_mfm = to_bool(n, v); }, [](const C& c) { return bool_text(c.use_mfm); }},
        {"backtest", "vfm", [](C& c, S n, S v) { c.use_vfm = to_bool(n, v); }, [](const C& c) { return bool_text(c.use_vfm); }},
        {"backtest", "fts", [](C& c, S n, S v) { c.use_fts = to_bool(n, v); }, [](const C& c) { return bool_text(c.use_fts); }},
        {"backtest", "mfm_day_factors", [](C& c, S n, S v) { c.mfm.day_factors = to_size(n, v); },
         [](const C& c) { return std::to_string(c.mfm.day_factors); }},
        {"backtest", "mfm_hour_factors", [](C& c, S n, S v) { c.mfm.hour_factors = to_size(n, v); },
         [](const C& c) { return std::to_string(c.mfm.hour_factors); }},
        {"backtest", "vfm_factors", [](C& c, S n, S v) { c.vfm.factors = to_size(n, v); },
         [](const C& c) { return std::to_string(c.vfm.factors); }},
        {"backtest", "vfm_stacked", [](C& c, S n, S v) { c.vfm_stacked = to_bool(n, v); },
         [](const C& c) { return bool_text(c.vfm_stacked); }},
        {"backtest", "fts_components", [](C& c, S n, S v) { c.fpca.components = to_size(n, v); },
         [](const C& c) { return std::to_string(c.fpca.components); }},
        {"backtest", "fts_explained_variance", [](C& c, S n, S v) { c.fpca.explained_variance = to_double(n, v); },
         [](const C& c) { return format_double(c.fpca.explained_variance); }},
        {"backtest", "fts_max_components", [](C& c, S n, S v) { c.fpca.max_components = to_size(n, v); },
         [](const C& c) { return std::to_string(c.fpca.max_components); }},
        {"backtest", "fts_max_ar_order", [](C& c, S n, S v) { c.fpca.max_ar_order = to_size(n, v); },
         [](const C& c) { return std::to_string(c.fpca.max_ar_order); }},

        {"simulate", "providers", [](C& c, S n, S v) { c.sim.providers = to_size(n, v); },
         [](const C& c) { return std::to_string(c.sim.providers); }},
        {"simulate", "length", [](C& c, S n, S v) { c.sim.length = to_size(n, v); },
         [](const C& c) { return std::to_string(c.sim.length); }},
        {"simulate", "ranks", [](C& c, S n, S v) { c.sim.ranks = to_ranks(n, v); },
         [](const C& c) { return ranks_text(c.sim.ranks); }},
        {"simulate", "ar_coefficient", [](C& c, S n, S v) { c.sim.ar_coefficient = to_double(n, v); },
         [](const C& c) { return format_double(c.sim.ar_coefficient); }},
        {"simulate", "ar_noise_sd", [](C& c, S n, S v) { c.sim.ar_noise_sd = to_double(n, v); },
         [](const C& c) { return format_double(c.sim.ar_noise_sd); }},
        {"simulate", "cycle_periods", [](C& c, S n, S v) { c.sim.cycle_periods = to_doubles(n, v); },
         [](const C& c) { return join(c.sim.cycle_periods); }},
        {"simulate", "cycle_amplitudes", [](C& c, S n, S v) { c.sim.cycle_amplitudes = to_doubles(n, v); },
         [](const C& c) { return join(c.sim.cycle_amplitudes); }},
        {"simulate", "idiosyncratic_sd", [](C& c, S n, S v) { c.sim.idiosyncratic_sd = to_double(n, v); },
         [](const C& c) { return format_double(c.sim.idiosyncratic_sd); }},
        {"simulate", "layer_sd", [](C& c, S n, S v) { c.sim.layer_sd = to_doubles(n, v); },
         [](const C& c) { return join(c.sim.layer_sd); }},
        {"simulate", "mean_level", [](C& c, S n, S v) { c.sim.mean_level = to_double(n, v); },
         [](const C& c) { return format_double(c.sim.mean_level); }},
        {"simulate", "mean_spread", [](C& c, S n, S v) { c.sim.mean_spread = to_double(n, v); },
         [](const C& c) { return format_double(c.sim.mean_spread); }},
        {"simulate", "scale_level", [](C& c, S n, S v) { c.sim.scale_level = to_double(n, v); },
         [](const C& c) { return format_double(c.sim.scale_level); }},
        {"simulate", "scale_spread", [](C& c, S n, S v) { c.sim.scale_spread = to_double(n, v); },
         [](const C& c) { return format_double(c.sim.scale_spread); }},

        {"output", "dir", [](C& c, S, S v) { c.out_dir = v; }, [](const C& c) { return c.out_dir.string(); }},
    };
    return entries;
}

const Entry* find_entry(const std::string& section, const std::string& key) {
    for (const auto& e : schema())
        if (e.section == section && e.key == key) return &e;
    return nullptr;
}

std::string full_name(const std::string& section, const std::string& key) {
    return section.empty() ? key : section + "." + key;
}

}  // namespace

std::filesystem::path RunConfig::tensor_archive_path() const { return archive ? *archive : out_dir / "tensors.txt"; }

std::filesystem::path RunConfig::model_file() const { return model_path ? *model_path : out_dir / "model.json"; }

void RunConfig::validate() const {
    try {
        calendar.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("calendar: ") + e.what());
    }
    const std::size_t M = calendar.periods.size();
    if (ranks) {
        if (ranks->k.size() != M) throw ConfigError("model.ranks: expected one rank per seasonal period plus the provider rank");
        if (ranks->r < 1) throw ConfigError("model.ranks: ranks must be positive");
        for (std::size_t j = 0; j < M; ++j)
            if (ranks->k[j] < 1 || ranks->k[j] > calendar.periods[j])
                throw ConfigError("model.ranks: seasonal rank exceeds its period");
    }
    if (r_max < 1) throw ConfigError("model.r_max must be positive");
    if (k_max.size() != M) throw ConfigError("model.k_max: expected one value per seasonal period");
    for (std::size_t j = 0; j < M; ++j)
        if (k_max[j] < 1 || k_max[j] >= calendar.periods[j]) throw ConfigError("model.k_max: values must lie in [1, period - 1]");
    if (seasonal_period < 2) throw ConfigError("model.seasonal_period must be at least 2");
    if (horizon < 1) throw ConfigError("forecast.horizon must be positive");
    if (plan.horizons.empty()) throw ConfigError("backtest.horizons must not be empty");
    for (auto h : plan.horizons)
        if (h < 1) throw ConfigError("backtest.horizons must be positive");
    if (plan.train_length < 2 * seasonal_period)
        throw ConfigError("backtest.train_length must cover two seasonal periods (" + std::to_string(2 * seasonal_period) + ")");
    if (mfm.day_factors < 1 || mfm.hour_factors < 1 || vfm.factors < 1)
        throw ConfigError("backtest: benchmark factor counts must be positive");
    if (M != 2 && (use_mfm || use_vfm || use_fts))
        throw ConfigError("backtest: the MFM, VFM and FTS benchmarks need a two-period calendar");
    if (M == 2 && (mfm.day_factors > calendar.periods[0] || mfm.hour_factors > calendar.periods[1]))
        throw ConfigError("backtest: MFM factor counts exceed the calendar periods");
    if (M == 2 && vfm.factors > calendar.cycle()) throw ConfigError("backtest.vfm_factors exceeds the cycle length");
    if (!(fpca.explained_variance > 0.0 && fpca.explained_variance <= 1.0))
        throw ConfigError("backtest.fts_explained_variance must lie in (0, 1]");
    if (fpca.max_components < 1) throw ConfigError("backtest.fts_max_components must be positive");
    if (span && span->first > span->last) throw ConfigError("data: span_first is after span_last");
    SimSpec s = sim;
    s.periods = calendar.periods;
    try {
        s.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("simulate: ") + e.what());
    }
    if (out_dir.empty()) throw ConfigError("output.dir must not be empty");
}

std::string RunConfig::canonical() const {
    std::string out;
    std::string section = "\x01";
    for (const auto& e : schema()) {
        if (e.section != section) {
            section = e.section;
            if (!section.empty()) out += "\n[" + section + "]\n";
        }
        out += e.key + " = " + e.get(*this) + "\n";
    }
    return out;
}

std::string RunConfig::hash() const {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : canonical()) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

RunConfig parse_config(const std::string& text, const std::string& source) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(source + ":" + std::to_string(e.line()) + ": " + e.message());
    }
    RunConfig c;
    bool span_first = false, span_last = false;
    for (const auto& [name, node] : tree) {
        if (node.empty()) {
            const Entry* e = find_entry("", name);
            if (!e) throw ConfigError(source + ": unknown key '" + name + "'");
            e->set(c, name, trim(node.data()));
            continue;
        }
        bool known_section = false;
        for (const auto& e : schema()) known_section |= e.section == name;
        if (!known_section) throw ConfigError(source + ": unknown section [" + name + "]");
        for (const auto& [key, leaf] : node) {
            const Entry* e = find_entry(name, key);
            if (!e) throw ConfigError(source + ": unknown key '" + full_name(name, key) + "'");
            e->set(c, full_name(name, key), trim(leaf.data()));
            if (name == "data" && key == "span_first") span_first = !trim(leaf.data()).empty();
            if (name == "data" && key == "span_last") span_last = !trim(leaf.data()).empty();
        }
    }
    if (span_first != span_last) throw ConfigError(source + ": data.span_first and data.span_last must be given together");
    c.sim.periods = c.calendar.periods;
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.string());
}

std::string config_schema() { return RunConfig{}.canonical(); }

}  // namespace stf
