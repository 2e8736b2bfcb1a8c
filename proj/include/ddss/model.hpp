#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ddss/basis.hpp"
#include "ddss/tensor.hpp"

namespace ddss {

enum class RegimeKind { Interior, LowerZero, Point };

const char* regime_name(RegimeKind kind);

struct Regime {
    RegimeKind kind = RegimeKind::Interior;
    int three_hat = 3;
    bool has_x_r1 = true;  // x(t - r1) present in chi
    bool has_x_r2 = true;  // x(t - r2) present in chi

    // n x n identity when the block exists, 0 x n otherwise.
    Mat one_marker(int n) const;
    Mat one_hat_marker(int n) const;
};

Regime classify_regime(double r1, double r2);

// Blocks of chi in their fixed order.
enum class ChiBlock : int { XR1 = 0, XR2, X, Zeta1, Zeta2, Zeta3, W };
inline constexpr int kChiBlocks = 7;

struct ChiLayout {
    std::array<int, kChiBlocks> size{};
    std::array<int, kChiBlocks> offset{};
    int total = 0;

    int size_of(ChiBlock b) const { return size[static_cast<int>(b)]; }
    int offset_of(ChiBlock b) const { return offset[static_cast<int>(b)]; }

    static ChiLayout from_sizes(const std::array<int, kChiBlocks>& sizes);
};

struct DelaySystem {
    int n = 0, m = 0, p = 0, q = 0;
    Mat a1, b1, d1, c1, b4, d2;
    Mat a2, a3, b2k, b3k, c2, c3, b5k, b6k;
    double r1 = 0.0, r2 = 0.0;
    KernelBasis basis1;  // on [-r1, 0]
    KernelBasis basis2;  // on [-r2, -r1]
    // Optional raw kernels keyed by the coefficient they expand into
    // ("a2", "a3", "b2k", "b3k", "c2", "c3", "b5k", "b6k").
    std::map<std::string, std::vector<std::vector<Expr>>> raw_kernels;

    int d1n() const { return basis1.d(); }
    int d2n() const { return basis2.d(); }
    int kappa1() const { return basis1.kappa(); }
    int kappa2() const { return basis2.kappa(); }
    int kappa() const { return kappa1() + 2 * kappa2(); }
    int varrho() const { return (d1n() + d2n()) * n; }
    double r3() const { return r2 - r1; }
    Regime regime() const { return classify_regime(r1, r2); }
    int l0() const { return regime().three_hat * n + kappa() * n + q; }

    // Dimension and regime consistency; throws with the offending field.
    void validate() const;

    // Copy with new delay bounds and basis intervals moved along.
    DelaySystem with_delays(double new_r1, double new_r2) const;
};

// Column layout of chi with x-blocks of width `unit` and a w-block of width `w`.
// The interior form keeps every x-block regardless of the regime.
ChiLayout chi_layout(const DelaySystem& sys, int unit, int w, bool interior_form = false);

// 0/1 map from interior-form columns to regime columns. An absent x-block is
// folded into the block it coincides with: x(t - r1) into x(t) when r1 = 0,
// x(t - r2) into x(t - r1) when r1 = r2.
Mat regime_merge(const DelaySystem& sys, int unit, int w);

struct SupplyRate {
    Mat j1, j_tilde, j2, j3;
    bool gamma_mode = false;  // j1 = -gamma I, j3 = gamma I with gamma a decision scalar
    std::string kind = "custom";

    int m() const { return static_cast<int>(j_tilde.rows()); }
    int q() const { return static_cast<int>(j3.rows()); }

    // s(z, w) with a numeric gamma substituted in gamma_mode.
    double eval(const Vec& z, const Vec& w, double gamma = 0.0) const;
};

SupplyRate supply_l2(double gamma, int m, int q);
SupplyRate supply_l2_variable(int m, int q);
SupplyRate supply_passivity(const Mat& j1, int q);
SupplyRate supply_custom(const Mat& j1, const Mat& j_tilde, const Mat& j2, const Mat& j3);

struct BoldMatrices {
    Mat a, b1, c, b2;       // a, c: rows x L0; b1, b2: rows x ((three_hat + kappa) p + q)
    Mat i_hat_coeff;        // (d1 + d2) x kappa
    Mat i_hat;              // varrho x kappa n
    Mat f_hat;              // (d1 + d2) x (three_hat + kappa)
    ChiLayout chi;          // unit n, w = q
};

BoldMatrices assemble_bold(const DelaySystem& sys, const BasisGeometry& geo1,
                           const BasisGeometry& geo2);

// Same matrices with every x-block kept (no regime folding).
BoldMatrices assemble_bold_interior(const DelaySystem& sys, const BasisGeometry& geo1,
                                    const BasisGeometry& geo2);

// (I_{three_hat + kappa} kron K) dsum O_q.
Mat k_hat(const DelaySystem& sys, const Mat& k);

}  // namespace ddss
