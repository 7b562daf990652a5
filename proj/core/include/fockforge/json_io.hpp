#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "fockforge/exactnum.hpp"

namespace fockforge {

// Rationals are written as "p/q" strings. Irrational values become an array of
// {"rad": d, "coef": "p/q"} terms with d square-free (d = 1 is the rational part).
nlohmann::json to_json(const FieldElem& x);
// Accepts integers, "p/q" or "a+b*sqrt(d)" strings, the term-array form and single
// {"rat", "rad", "coef"} objects. Sums of several such objects go in an array.
FieldElem field_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);

nlohmann::json to_json(const MatSeries& s);

nlohmann::json read_json_file(const std::string& path);

}  // namespace fockforge
