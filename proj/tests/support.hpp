#pragma once

#include <random>
#include <string>

#include "ddss/tensor.hpp"

#ifndef DDSS_SOURCE_DIR
#define DDSS_SOURCE_DIR "."
#endif

namespace test {

inline std::string fixture(const std::string& name) { return std::string(DDSS_SOURCE_DIR) + "/problems/" + name; }

inline ddss::Mat random_mat(std::mt19937_64& rng, int r, int c) {
    std::normal_distribution<double> nd;
    ddss::Mat m(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) m(i, j) = nd(rng);
    return m;
}

inline double max_abs(const ddss::Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace test
