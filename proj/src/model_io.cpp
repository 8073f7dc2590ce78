#include "stf/model_io.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace stf {

namespace {

using nlohmann::ordered_json;

ordered_json matrix_json(const Matrix& m) {
    ordered_json rows = ordered_json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        ordered_json row = ordered_json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from(const nlohmann::json& j) {
    const auto rows = j.get<std::vector<std::vector<double>>>();
    if (rows.empty()) throw std::runtime_error("model archive: empty matrix");
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.front().size()) throw std::runtime_error("model archive: ragged matrix");
        for (std::size_t k = 0; k < rows[i].size(); ++k)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    }
    return m;
}

ordered_json tensor_json(const Tensor& x) {
    ordered_json j;
    j["dims"] = x.dims();
    j["data"] = std::vector<double>(x.data().begin(), x.data().end());
    return j;
}

Tensor tensor_from(const nlohmann::json& j) {
    return Tensor(j.at("dims").get<Dims>(), j.at("data").get<std::vector<double>>());
}

}  // namespace

std::string model_to_json(const ModelArchive& m) {
    ordered_json j;
    j["format"] = "stf-model 1";
    j["ranks"] = {{"r", m.fit.ranks.r}, {"k", m.fit.ranks.k}};
    j["providers"] = m.provider_ids;
    j["periods"] = m.periods;
    j["period_starts"] = m.period_starts;
    j["seasonal_period"] = m.seasonal_period;
    j["in_sample_mse"] = m.in_sample_mse;
    j["degenerate"] = m.fit.degenerate;
    j["lambda"] = matrix_json(m.fit.loadings.lambda);
    j["b"] = ordered_json::array();
    for (const auto& b : m.fit.loadings.b) j["b"].push_back(matrix_json(b));
    j["mu"] = tensor_json(m.fit.z.mu);
    j["sigma"] = tensor_json(m.fit.z.sigma);
    j["clamped_cells"] = m.fit.z.clamped_cells;
    j["factors"] = ordered_json::array();
    for (const auto& f : m.fit.factors.tensors) j["factors"].push_back(std::vector<double>(f.data().begin(), f.data().end()));
    return j.dump(1) + "\n";
}

ModelArchive model_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format").get<std::string>() != "stf-model 1") throw std::runtime_error("not a model archive");
    ModelArchive m;
    m.fit.ranks.r = j.at("ranks").at("r").get<std::size_t>();
    m.fit.ranks.k = j.at("ranks").at("k").get<std::vector<std::size_t>>();
    m.provider_ids = j.at("providers").get<std::vector<std::string>>();
    m.periods = j.at("periods").get<std::vector<std::size_t>>();
    m.period_starts = j.at("period_starts").get<std::vector<Hour>>();
    m.seasonal_period = j.at("seasonal_period").get<std::size_t>();
    m.in_sample_mse = j.at("in_sample_mse").get<double>();
    m.fit.degenerate = j.at("degenerate").get<bool>();
    m.fit.loadings.lambda = matrix_from(j.at("lambda"));
    for (const auto& b : j.at("b")) m.fit.loadings.b.push_back(matrix_from(b));
    m.fit.z.mu = tensor_from(j.at("mu"));
    m.fit.z.sigma = tensor_from(j.at("sigma"));
    m.fit.z.clamped_cells = j.at("clamped_cells").get<std::size_t>();
    if (m.fit.loadings.ranks() != m.fit.ranks) throw std::runtime_error("model archive: loadings do not match ranks");
    Dims core{m.fit.ranks.r};
    core.insert(core.end(), m.fit.ranks.k.begin(), m.fit.ranks.k.end());
    for (const auto& f : j.at("factors")) m.fit.factors.tensors.emplace_back(core, f.get<std::vector<double>>());
    return m;
}

void save_model(const std::filesystem::path& path, const ModelArchive& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << model_to_json(m);
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

ModelArchive load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return model_from_json(ss.str());
}

}  // namespace stf
