#pragma once

#include <functional>
#include <vector>

#include "ddss/tensor.hpp"

namespace ddss {

struct QuadConfig {
    int order = 32;
    int panels = 8;
};

struct QuadRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Gauss-Legendre rule on [-1, 1].
QuadRule gauss_legendre(int order);

// Composite Gauss-Legendre nodes and weights on [a, b].
QuadRule composite_rule(double a, double b, const QuadConfig& cfg = {});

// Entrywise integral of a matrix-valued function over [a, b].
Mat quad_matrix(const std::function<Mat(double)>& integrand, double a, double b,
                const QuadConfig& cfg = {});

double quad_scalar(const std::function<double(double)>& integrand, double a, double b,
                   const QuadConfig& cfg = {});

}  // namespace ddss
