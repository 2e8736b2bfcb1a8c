#pragma once

#include <map>
#include <optional>
#include <string>

#include "ddss/lmi.hpp"
#include "ddss/model.hpp"
#include "ddss/quadrature.hpp"
#include "ddss/simulator.hpp"

namespace ddss {

struct Alg1Settings {
    std::map<int, double> alpha_overrides;  // 1-based
    std::optional<std::vector<double>> alphas;  // full list, when given as an array
    double rho1 = 1.0, rho2 = 1.0, eps = 1e-3;
    int max_iters = 50;
};

struct ProblemFile {
    std::string name;
    DelaySystem sys;
    SupplyRate supply;
    std::optional<SimConfig> sim;
    SolverConfig solver;
    QuadConfig quad;
    Alg1Settings alg1;
};

// Errors carry the section and key path of the first offending entry.
ProblemFile parse_problem(const std::string& text, const std::string& name = "<string>");
ProblemFile load_problem(const std::string& path);

}  // namespace ddss
