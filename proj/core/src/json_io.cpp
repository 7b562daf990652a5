#include <fstream>

#include "fockforge/json_io.hpp"

namespace fockforge {

nlohmann::json to_json(const FieldElem& x) {
    if (x.is_rational()) return x.to_rational().get_str();
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& t : x.terms()) arr.push_back({{"rad", t.rad}, {"coef", t.coef.get_str()}});
    return arr;
}

FieldElem field_from_json(const nlohmann::json& j) {
    if (j.is_number_integer()) return FieldElem(j.get<long>());
    if (j.is_string()) return FieldElem::parse(j.get<std::string>());
    if (j.is_object() && j.contains("rad") && j.contains("coef")) {
        FieldElem out = field_from_json(j["coef"]) * FieldElem::unit_radical(j["rad"].get<std::int64_t>());
        if (j.contains("rat")) out += field_from_json(j["rat"]);
        return out;
    }
    if (j.is_array()) {
        FieldElem out;
        for (const auto& t : j) {
            require(t.is_object() && t.contains("rad") && t.contains("coef"), ErrorKind::Parse,
                    "field term needs \"rad\" and \"coef\"");
            out += field_from_json(t);
        }
        return out;
    }
    fail(ErrorKind::Parse, "expected an exact number, got " + j.dump());
}

nlohmann::json to_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int j = 0; j < m.cols(); ++j) row.push_back(to_json(m(i, j)));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const nlohmann::json& j) {
    require(j.is_array() && !j.empty() && j[0].is_array(), ErrorKind::Parse, "expected a matrix");
    int r = static_cast<int>(j.size()), c = static_cast<int>(j[0].size());
    Matrix m(r, c);
    for (int i = 0; i < r; ++i) {
        require(j[i].is_array() && static_cast<int>(j[i].size()) == c, ErrorKind::Parse, "ragged matrix");
        for (int k = 0; k < c; ++k) m(i, k) = field_from_json(j[i][k]);
    }
    return m;
}

nlohmann::json to_json(const MatSeries& s) {
    nlohmann::json arr = nlohmann::json::array();
    for (int k = 0; k <= s.order(); ++k) arr.push_back(to_json(s[k]));
    return arr;
}

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorKind::MissingFile, "cannot open " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        fail(ErrorKind::Parse, path + ": " + e.what());
    }
}

}  // namespace fockforge
