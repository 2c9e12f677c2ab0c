#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace olab {

// Spatial dimension is small (1..4); inline storage avoids heap traffic in hot loops.
inline constexpr int kMaxDim = 4;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

double operator_norm(const Mat& m);

// Nearest orthogonal matrix in Frobenius norm (polar factor).
Mat polar_orthogonal(const Mat& m);

double orthogonality_residual(const Mat& o);

bool all_finite(const Vec& v);
bool all_finite(const Mat& m);

// Lexicographic comparison of coordinates.
bool lex_less(const Vec& a, const Vec& b);

std::string format_vec(const Vec& v, int precision = 17);

}  // namespace olab
