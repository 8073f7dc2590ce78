#include "stf/report.hpp"

#include "stf/archive.hpp"
#include "stf/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

namespace stf {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& s, std::size_t line) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    double v;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw ParseError("report.csv", line, "bad number '" + s + "'");
    return v;
}

std::string num(double v) { return std::isfinite(v) ? format_double(v) : "nan"; }

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

std::string horizon_label(std::size_t horizon) {
    switch (horizon) {
        case 1: return "Week";
        case 4: return "Month";
        case 13: return "Quarter";
        case 26: return "Semester";
        default: return "h=" + std::to_string(horizon);
    }
}

std::string report_csv(const EvalReport& r) {
    std::string out = "model,horizon,provider,mse,normalizer,relative_mse,status\n";
    for (const auto& c : r.cells) {
        out += c.model + ',' + std::to_string(c.horizon) + ',' + c.provider + ',';
        if (c.failed) {
            out += "nan,nan,nan,failed\n";
        } else {
            out += num(c.mse) + ',' + num(c.normalizer) + ',' + num(c.relative_mse) + ",ok\n";
        }
    }
    return out;
}

std::string trace_csv(const EvalReport& r) {
    std::string out = "model,horizon,provider,window,mse\n";
    for (const auto& c : r.cells)
        for (std::size_t w = 0; w < c.trace.size(); ++w)
            out += c.model + ',' + std::to_string(c.horizon) + ',' + c.provider + ',' + std::to_string(w) + ',' +
                   num(c.trace[w]) + '\n';
    return out;
}

std::string report_json(const EvalReport& r) {
    nlohmann::ordered_json j;
    j["metadata"] = r.metadata;
    j["cells"] = nlohmann::ordered_json::array();
    for (const auto& c : r.cells) {
        nlohmann::ordered_json cell;
        cell["model"] = c.model;
        cell["horizon"] = c.horizon;
        cell["provider"] = c.provider;
        cell["failed"] = c.failed;
        if (c.failed) {
            cell["failure"] = c.failure;
        } else {
            cell["mse"] = c.mse;
            cell["normalizer"] = c.normalizer;
            cell["relative_mse"] = c.relative_mse;
            cell["trace"] = c.trace;
        }
        j["cells"].push_back(std::move(cell));
    }
    return j.dump(2) + "\n";
}

EvalReport parse_report_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    EvalReport r;
    r.metadata = j.at("metadata").get<std::map<std::string, std::string>>();
    for (const auto& cell : j.at("cells")) {
        EvalCell c;
        c.model = cell.at("model").get<std::string>();
        c.horizon = cell.at("horizon").get<std::size_t>();
        c.provider = cell.at("provider").get<std::string>();
        c.failed = cell.at("failed").get<bool>();
        if (c.failed) {
            c.failure = cell.at("failure").get<std::string>();
        } else {
            c.mse = cell.at("mse").get<double>();
            c.normalizer = cell.at("normalizer").get<double>();
            c.relative_mse = cell.at("relative_mse").get<double>();
            c.trace = cell.at("trace").get<std::vector<double>>();
        }
        r.cells.push_back(std::move(c));
    }
    return r;
}

EvalReport parse_report_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || split(line, ',').size() != 7 || line.rfind("model,horizon,provider", 0) != 0)
        throw ParseError("report.csv", 1, "bad header");
    EvalReport r;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != 7) throw ParseError("report.csv", lineno, "expected 7 fields");
        EvalCell c;
        c.model = f[0];
        std::size_t h = 0;
        auto [ptr, ec] = std::from_chars(f[1].data(), f[1].data() + f[1].size(), h);
        if (ec != std::errc() || ptr != f[1].data() + f[1].size()) throw ParseError("report.csv", lineno, "bad horizon");
        c.horizon = h;
        c.provider = f[2];
        c.failed = f[6] == "failed";
        if (!c.failed) {
            c.mse = parse_double(f[3], lineno);
            c.normalizer = parse_double(f[4], lineno);
            c.relative_mse = parse_double(f[5], lineno);
        }
        r.cells.push_back(std::move(c));
    }
    return r;
}

std::string report_markdown(const EvalReport& r) {
    std::vector<std::string> models, providers;
    std::vector<std::size_t> horizons;
    auto add = [](auto& v, const auto& x) {
        if (std::find(v.begin(), v.end(), x) == v.end()) v.push_back(x);
    };
    for (const auto& c : r.cells) {
        add(models, c.model);
        add(providers, c.provider);
        add(horizons, c.horizon);
    }
    std::ostringstream out;
    out << "| Horizon |";
    for (const auto& p : providers) out << ' ' << p << " |";
    out << "\n|---|";
    for (std::size_t i = 0; i < providers.size(); ++i) out << "---:|";
    out << '\n';
    for (const auto& m : models) {
        out << "| **" << m << "** |";
        for (std::size_t i = 0; i < providers.size(); ++i) out << " |";
        out << '\n';
        for (auto h : horizons) {
            out << "| " << horizon_label(h) << " |";
            for (const auto& p : providers) {
                const EvalCell* c = r.find(m, h, p);
                if (c == nullptr || c->failed) {
                    out << " failed |";
                    continue;
                }
                bool best = true;
                for (const auto& other : models) {
                    const EvalCell* o = r.find(other, h, p);
                    if (o != nullptr && !o->failed && o->relative_mse < c->relative_mse) best = false;
                }
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.4f", c->relative_mse);
                out << ' ' << (best ? "**" : "") << buf << (best ? "**" : "") << " |";
            }
            out << '\n';
        }
    }
    return out.str();
}

void emit_report(const EvalReport& r, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_file(dir / "report.csv", report_csv(r));
    write_file(dir / "report.json", report_json(r));
    write_file(dir / "report.md", report_markdown(r));
    write_file(dir / "trace.csv", trace_csv(r));
}

}  // namespace stf
