#pragma once

#include <string>
#include <vector>

#include "fockforge/exactnum.hpp"

namespace fockforge {

// <tau_{l_1} ... tau_{l_n}>_g of the point. Zero unless sum l = 3g - 3 + n and
// 2g - 2 + n > 0. Memoized and safe to call concurrently.
mpq_class intersection_number(int g, std::vector<int> exps);

// Mixed partial of F^g of the point at q0 = 0, q1 = c, q_{>=2} = 0. `levels`
// lists the derivative directions by level. The genus-one zero-point value is
// normalized to zero. Level-0 derivatives beyond q0_order are rejected.
FieldElem wk_jet(int g, const std::vector<int>& levels, const FieldElem& c, int q0_order);

struct WKCorrelator {
    int genus;
    std::vector<int> exps;
    mpq_class value;
};

// All nonzero correlators with sum of exponents <= bound, exponents sorted.
std::vector<WKCorrelator> intersection_table(int bound);

// Keys (g, exps) with sum of exponents <= bound where String or Dilaton fails.
std::vector<std::string> string_dilaton_violations(int bound);

std::string intersection_table_csv(int bound);

}  // namespace fockforge
