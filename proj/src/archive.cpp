#include "stf/archive.hpp"

#include "stf/errors.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace stf {

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw std::runtime_error("format_double failed");
    return std::string(buf, ptr);
}

namespace {

std::string iso_datetime(Hour h) {
    std::string s = format_datetime(h);
    s[10] = 'T';
    return s;
}

template <typename T>
std::vector<T> read_keyed_line(std::istream& in, const std::string& key, const std::string& source,
                               std::size_t lineno) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError(source, lineno, "expected '" + key + "'");
    std::istringstream ss(line);
    std::string k;
    ss >> k;
    if (k != key) throw ParseError(source, lineno, "expected '" + key + "', got '" + k + "'");
    std::vector<T> out;
    T v;
    while (ss >> v) out.push_back(v);
    if (!ss.eof()) throw ParseError(source, lineno, "malformed '" + key + "' line");
    return out;
}

}  // namespace

void write_tensor_archive(std::ostream& out, const TensorSeries& ts) {
    out << "stf-tensor-archive 1\n";
    out << "providers";
    for (const auto& p : ts.provider_ids) out << ' ' << p;
    out << "\nperiods";
    for (auto s : ts.periods) out << ' ' << s;
    out << "\ndims";
    if (ts.length() > 0)
        for (auto d : ts.dims()) out << ' ' << d;
    out << "\ncount " << ts.length() << '\n';
    for (std::size_t t = 0; t < ts.length(); ++t) {
        out << (t < ts.period_starts.size() ? iso_datetime(ts.period_starts[t]) : iso_datetime(0));
        for (double v : ts.tensors[t].data()) out << ' ' << format_double(v);
        out << '\n';
    }
}

void write_tensor_archive(const std::filesystem::path& path, const TensorSeries& ts) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_tensor_archive(out, ts);
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

TensorSeries read_tensor_archive(std::istream& in, const std::string& source) {
    std::string line;
    if (!std::getline(in, line) || line != "stf-tensor-archive 1")
        throw ParseError(source, 1, "not a tensor archive");
    TensorSeries ts;
    ts.provider_ids = read_keyed_line<std::string>(in, "providers", source, 2);
    ts.periods = read_keyed_line<std::size_t>(in, "periods", source, 3);
    const Dims dims = read_keyed_line<std::size_t>(in, "dims", source, 4);
    const auto count = read_keyed_line<std::size_t>(in, "count", source, 5);
    if (count.size() != 1) throw ParseError(source, 5, "malformed count");
    if (count[0] > 0) {
        if (dims.size() != ts.periods.size() + 1 || dims[0] != ts.provider_ids.size())
            throw ParseError(source, 4, "dims do not match providers and periods");
        for (std::size_t j = 0; j < ts.periods.size(); ++j)
            if (dims[j + 1] != ts.periods[j]) throw ParseError(source, 4, "dims do not match periods");
    }
    const std::size_t cells = count[0] > 0 ? product(dims) : 0;
    for (std::size_t t = 0; t < count[0]; ++t) {
        const std::size_t lineno = 6 + t;
        if (!std::getline(in, line)) throw ParseError(source, lineno, "truncated archive");
        std::string_view rest(line);
        const auto sp = rest.find(' ');
        if (sp == std::string_view::npos) throw ParseError(source, lineno, "missing values");
        try {
            ts.period_starts.push_back(parse_datetime(rest.substr(0, sp)));
        } catch (const std::invalid_argument& e) {
            throw ParseError(source, lineno, e.what());
        }
        rest.remove_prefix(sp + 1);
        std::vector<double> values;
        values.reserve(cells);
        while (!rest.empty()) {
            const auto next = rest.find(' ');
            const auto tok = rest.substr(0, next);
            double v;
            auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
            if (ec != std::errc() || ptr != tok.data() + tok.size())
                throw ParseError(source, lineno, "bad value '" + std::string(tok) + "'");
            values.push_back(v);
            if (next == std::string_view::npos) break;
            rest.remove_prefix(next + 1);
        }
        if (values.size() != cells) throw ParseError(source, lineno, "wrong number of values");
        ts.tensors.emplace_back(dims, std::move(values));
    }
    return ts;
}

TensorSeries read_tensor_archive(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return read_tensor_archive(in, path.string());
}

}  // namespace stf
