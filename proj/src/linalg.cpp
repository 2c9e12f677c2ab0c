#include "olab/linalg.hpp"

#include <cmath>
#include <cstdio>

namespace olab {

double operator_norm(const Mat& m) {
    if (m.size() == 0) return 0.0;
    Eigen::JacobiSVD<Mat> svd(m);
    return svd.singularValues()(0);
}

Mat polar_orthogonal(const Mat& m) {
    Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return svd.matrixU() * svd.matrixV().transpose();
}

double orthogonality_residual(const Mat& o) {
    Mat r = o.transpose() * o - Mat::Identity(o.rows(), o.cols());
    return r.cwiseAbs().maxCoeff();
}

bool all_finite(const Vec& v) { return v.allFinite(); }
bool all_finite(const Mat& m) { return m.allFinite(); }

bool lex_less(const Vec& a, const Vec& b) {
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (a(i) < b(i)) return true;
        if (b(i) < a(i)) return false;
    }
    return false;
}

std::string format_vec(const Vec& v, int precision) {
    std::string out = "(";
    char buf[64];
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.*g", precision, v(i));
        if (i) out += ", ";
        out += buf;
    }
    return out + ")";
}

}  // namespace olab
