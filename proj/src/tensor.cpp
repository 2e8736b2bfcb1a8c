#include "ddss/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ddss/error.hpp"

namespace ddss {

Mat eye(int n) { return Mat::Identity(n, n); }

Mat zeros(int rows, int cols) { return Mat::Zero(rows, cols); }

Mat kron(const Mat& a, const Mat& b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

Mat commutation_matrix(int n, int d) {
    if (n <= 0 || d <= 0) return Mat(0, 0);
    Mat k = Mat::Zero(n * d, n * d);
    // vec(A)[i + j*n] = A(i,j) lands at vec(A^T)[j + i*d].
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) k(j + i * d, i + j * n) = 1.0;
    return k;
}

Vec vec(const Mat& a) {
    return Eigen::Map<const Vec>(a.data(), a.size());
}

Mat unvec(const Vec& v, int rows, int cols) {
    if (v.size() != static_cast<Eigen::Index>(rows) * cols)
        throw Error(ErrorKind::Dimension, "unvec: length does not match shape");
    return Eigen::Map<const Mat>(v.data(), rows, cols);
}

Mat sy(const Mat& x) {
    if (x.rows() != x.cols())
        throw Error(ErrorKind::Dimension, "sy: matrix is not square");
    return x + x.transpose();
}

Mat dsum(const Mat& x, const Mat& y) {
    Mat out = Mat::Zero(x.rows() + y.rows(), x.cols() + y.cols());
    out.topLeftCorner(x.rows(), x.cols()) = x;
    out.bottomRightCorner(y.rows(), y.cols()) = y;
    return out;
}

Mat dsum(std::initializer_list<Mat> blocks) {
    Eigen::Index r = 0, c = 0;
    for (const auto& b : blocks) {
        r += b.rows();
        c += b.cols();
    }
    Mat out = Mat::Zero(r, c);
    r = c = 0;
    for (const auto& b : blocks) {
        out.block(r, c, b.rows(), b.cols()) = b;
        r += b.rows();
        c += b.cols();
    }
    return out;
}

Mat symmetrize(const Mat& x) { return 0.5 * (x + x.transpose()); }

namespace {

Eigen::SelfAdjointEigenSolver<Mat> eig_of(const Mat& x, const char* who) {
    if (x.rows() != x.cols())
        throw Error(ErrorKind::Dimension, std::string(who) + ": matrix is not square");
    return Eigen::SelfAdjointEigenSolver<Mat>(symmetrize(x));
}

}  // namespace

double min_eig(const Mat& x) {
    if (x.size() == 0) return 0.0;
    return eig_of(x, "min_eig").eigenvalues().minCoeff();
}

double max_eig(const Mat& x) {
    if (x.size() == 0) return 0.0;
    return eig_of(x, "max_eig").eigenvalues().maxCoeff();
}

double spd_tolerance(const Mat& x) {
    if (x.size() == 0) return 1e-10;
    auto ev = eig_of(x, "spd_tolerance").eigenvalues();
    return 1e-10 * std::max(1.0, ev.cwiseAbs().maxCoeff());
}

Mat sqrt_spd(const Mat& x) {
    if (x.size() == 0) return Mat(0, 0);
    auto es = eig_of(x, "sqrt_spd");
    double tol = 1e-10 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    if (es.eigenvalues().minCoeff() <= tol)
        throw Error(ErrorKind::NotPositiveDefinite,
                    "sqrt_spd: minimum eigenvalue " + std::to_string(es.eigenvalues().minCoeff()) +
                        " is not above the SPD tolerance");
    const Mat& v = es.eigenvectors();
    return symmetrize(v * es.eigenvalues().cwiseSqrt().asDiagonal() * v.transpose());
}

Mat inv_sqrt_spd(const Mat& x) {
    if (x.size() == 0) return Mat(0, 0);
    auto es = eig_of(x, "inv_sqrt_spd");
    double tol = 1e-10 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    if (es.eigenvalues().minCoeff() <= tol)
        throw Error(ErrorKind::NotPositiveDefinite,
                    "inv_sqrt_spd: minimum eigenvalue is not above the SPD tolerance");
    const Mat& v = es.eigenvectors();
    return symmetrize(v * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() * v.transpose());
}

Mat sqrt_psd(const Mat& x) {
    if (x.size() == 0) return Mat(0, 0);
    auto es = eig_of(x, "sqrt_psd");
    Vec lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    const Mat& v = es.eigenvectors();
    return symmetrize(v * lam.asDiagonal() * v.transpose());
}

Mat assemble_blocks(const BlockLayout& layout, const std::vector<std::vector<Mat>>& blocks) {
    const auto nr = layout.row_sizes.size();
    const auto nc = layout.col_sizes.size();
    if (blocks.size() != nr)
        throw Error(ErrorKind::Dimension, "assemble_blocks: grid has wrong number of block rows");
    int rows = 0, cols = 0;
    for (int s : layout.row_sizes) rows += s;
    for (int s : layout.col_sizes) cols += s;
    Mat out = Mat::Zero(rows, cols);
    int r0 = 0;
    for (std::size_t i = 0; i < nr; ++i) {
        if (blocks[i].size() != nc)
            throw Error(ErrorKind::Dimension,
                        "assemble_blocks: block row " + std::to_string(i) + " has wrong length");
        int c0 = 0;
        for (std::size_t j = 0; j < nc; ++j) {
            const Mat& b = blocks[i][j];
            if (b.rows() != layout.row_sizes[i] || b.cols() != layout.col_sizes[j])
                throw Error(ErrorKind::Dimension,
                            "assemble_blocks: slot (" + std::to_string(i) + "," + std::to_string(j) +
                                ") expects " + std::to_string(layout.row_sizes[i]) + "x" +
                                std::to_string(layout.col_sizes[j]) + ", got " +
                                std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
            out.block(r0, c0, b.rows(), b.cols()) = b;
            c0 += layout.col_sizes[j];
        }
        r0 += layout.row_sizes[i];
    }
    return out;
}

}  // namespace ddss
