#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace fockforge {

struct SuiteReport {
    std::string name;
    std::uint64_t seed = 0;
    int cases = 0;
    std::vector<std::string> failures;  // one line per failed case

    bool passed() const { return failures.empty(); }
    nlohmann::json to_json() const;
};

// Seeded property suites; each case is an exact equality.
//   string-dilaton  String and Dilaton equations on all intersection numbers with level sum <= 12
//   propagator      two propagator formulas on 50 random unitary R, cutoff 8
//   cocycle         T(D1 + D2) = T(D2) T(D1) and T(D) T(-D) = id on random tables, g <= 3, 20 draws
//   rmatrix         unitarity and ODE residual to order 6; V = 0 gives id
//   points          ancestor of N + 1 points equals the Witten-Kontsevich product, N <= 2, g <= 3
//   gauge           ancestor jets unchanged under reordering u_i and flipping sqrt(Delta_i)
//   axioms          tameness, homogeneity and pole bound on transform and ancestor outputs
//   anomaly         anomaly equation, holomorphic form and curvature condition, with mutations
const std::vector<std::string>& suite_names();

// Throws Error(Parse) on an unknown name.
SuiteReport run_suite(const std::string& name, std::uint64_t seed);

}  // namespace fockforge
