#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "lodada/errors.hpp"

namespace lodada {

// Dense row-major matrix sized for the small systems this project needs
// (state dimensions of a handful). Not a general linear algebra library.
struct Mat {
    std::size_t rows = 0, cols = 0;
    std::vector<double> data;

    Mat() = default;
    Mat(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    static Mat identity(std::size_t n) {
        Mat m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static Mat diagonal(const std::vector<double>& d) {
        Mat m(d.size(), d.size());
        for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
        return m;
    }
};

inline std::vector<double> matvec(const Mat& m, const std::vector<double>& x) {
    std::vector<double> y(m.rows, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) y[i] += m(i, j) * x[j];
    return y;
}

inline Mat matmul(const Mat& a, const Mat& b) {
    Mat c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t k = 0; k < a.cols; ++k) {
            double aik = a(i, k);
            for (std::size_t j = 0; j < b.cols; ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

inline Mat transpose(const Mat& a) {
    Mat t(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
    return t;
}

inline Mat add(const Mat& a, const Mat& b) {
    Mat c = a;
    for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] += b.data[i];
    return c;
}

inline Mat scale(const Mat& a, double s) {
    Mat c = a;
    for (double& v : c.data) v *= s;
    return c;
}

// Cholesky factor L (lower) of a symmetric positive definite matrix.
// Throws ArgumentError if the matrix is not SPD.
inline Mat cholesky(const Mat& a) {
    if (a.rows != a.cols) throw ArgumentError("cholesky: matrix not square");
    const std::size_t n = a.rows;
    Mat l(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double sum = a(i, j);
            for (std::size_t k = 0; k < j; ++k) sum -= l(i, k) * l(j, k);
            if (i == j) {
                if (sum <= 0.0 || !std::isfinite(sum))
                    throw ArgumentError("cholesky: matrix not positive definite");
                l(i, i) = std::sqrt(sum);
            } else {
                l(i, j) = sum / l(j, j);
            }
        }
    }
    return l;
}

// Solves A x = b given the Cholesky factor L of A.
inline std::vector<double> cholesky_solve(const Mat& l, const std::vector<double>& b) {
    const std::size_t n = l.rows;
    std::vector<double> y(n), x(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
        y[i] = s / l(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
        double s = y[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= l(k, i) * x[k];
        x[i] = s / l(i, i);
    }
    return x;
}

inline Mat spd_inverse(const Mat& a) {
    const Mat l = cholesky(a);
    const std::size_t n = a.rows;
    Mat inv(n, n);
    std::vector<double> e(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        e[j] = 1.0;
        std::vector<double> col = cholesky_solve(l, e);
        for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
        e[j] = 0.0;
    }
    return inv;
}

inline double spd_log_det(const Mat& a) {
    const Mat l = cholesky(a);
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows; ++i) s += std::log(l(i, i));
    return 2.0 * s;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace lodada
