#pragma once

#include <initializer_list>
#include <vector>

#include <Eigen/Dense>

namespace ddss {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

Mat eye(int n);
Mat zeros(int rows, int cols);

Mat kron(const Mat& a, const Mat& b);

// Permutation with K(n,d) * vec(A) = vec(A^T) for every n x d matrix A.
Mat commutation_matrix(int n, int d);

// Column-stacking vectorization and its inverse.
Vec vec(const Mat& a);
Mat unvec(const Vec& v, int rows, int cols);

Mat sy(const Mat& x);

// Block-diagonal sum; a 0x0 operand is absorbed.
Mat dsum(const Mat& x, const Mat& y);
Mat dsum(std::initializer_list<Mat> blocks);

// 1e-10 times the largest eigenvalue magnitude, with a floor of 1.
double spd_tolerance(const Mat& x);

Mat symmetrize(const Mat& x);
double min_eig(const Mat& x);
double max_eig(const Mat& x);

// Principal square root of a symmetric positive definite matrix.
Mat sqrt_spd(const Mat& x);
Mat inv_sqrt_spd(const Mat& x);

// Square root of a symmetric PSD matrix with round-off negatives clamped to 0.
Mat sqrt_psd(const Mat& x);

struct BlockLayout {
    std::vector<int> row_sizes;
    std::vector<int> col_sizes;
};

// Dense assembly of a block grid; zero-size rows or columns vanish.
Mat assemble_blocks(const BlockLayout& layout, const std::vector<std::vector<Mat>>& blocks);

}  // namespace ddss
