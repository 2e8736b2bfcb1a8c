#include "ddss/quadrature.hpp"

#include <cmath>
#include <numbers>

#include "ddss/error.hpp"

namespace ddss {

QuadRule gauss_legendre(int order) {
    if (order < 1) throw Error(ErrorKind::Input, "gauss_legendre: order must be positive");
    QuadRule rule;
    rule.nodes.resize(order);
    rule.weights.resize(order);
    const int half = (order + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
        double dp = 1.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= order; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = order * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= order; ++k) {
            double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = order * (x * p1 - p0) / (x * x - 1.0);
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[order - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[order - 1 - i] = w;
    }
    if (order % 2 == 1) rule.nodes[order / 2] = 0.0;
    return rule;
}

QuadRule composite_rule(double a, double b, const QuadConfig& cfg) {
    if (cfg.panels < 1) throw Error(ErrorKind::Input, "quadrature: panels must be positive");
    QuadRule base = gauss_legendre(cfg.order);
    QuadRule out;
    if (!(b > a)) return out;
    const double h = (b - a) / cfg.panels;
    out.nodes.reserve(base.nodes.size() * cfg.panels);
    out.weights.reserve(base.nodes.size() * cfg.panels);
    for (int p = 0; p < cfg.panels; ++p) {
        double lo = a + p * h;
        double mid = lo + 0.5 * h;
        for (std::size_t i = 0; i < base.nodes.size(); ++i) {
            out.nodes.push_back(mid + 0.5 * h * base.nodes[i]);
            out.weights.push_back(0.5 * h * base.weights[i]);
        }
    }
    return out;
}

Mat quad_matrix(const std::function<Mat(double)>& integrand, double a, double b,
                const QuadConfig& cfg) {
    if (a > b) throw Error(ErrorKind::Input, "quad_matrix: lower limit exceeds upper limit");
    Mat probe = integrand(a == b ? a : 0.5 * (a + b));
    Mat acc = Mat::Zero(probe.rows(), probe.cols());
    if (a == b || probe.size() == 0) return acc;
    QuadRule rule = composite_rule(a, b, cfg);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) acc += rule.weights[i] * integrand(rule.nodes[i]);
    return acc;
}

double quad_scalar(const std::function<double(double)>& integrand, double a, double b,
                   const QuadConfig& cfg) {
    if (a > b) throw Error(ErrorKind::Input, "quad_scalar: lower limit exceeds upper limit");
    if (a == b) return 0.0;
    QuadRule rule = composite_rule(a, b, cfg);
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) acc += rule.weights[i] * integrand(rule.nodes[i]);
    return acc;
}

}  // namespace ddss
