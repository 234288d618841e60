#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "trusteval/errors.hpp"

namespace trusteval {

using Vec = std::vector<double>;

// Dense row-major matrix. Everything here is tiny (p is at most a few
// hundred), so plain loops are all the optimization this needs.
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

    double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

    bool operator==(const Mat&) const = default;
};

inline void require(bool ok, const char* what) {
    if (!ok) throw validation_error(what);
}

inline Vec matvec(const Mat& m, const Vec& x) {
    require(m.cols == x.size(), "matvec: dimension mismatch");
    Vec y(m.rows, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < m.cols; ++j) s += m.a[i * m.cols + j] * x[j];
        y[i] = s;
    }
    return y;
}

// M^T x, used to push gradients back through a linear map.
inline Vec mat_t_vec(const Mat& m, const Vec& x) {
    require(m.rows == x.size(), "mat_t_vec: dimension mismatch");
    Vec y(m.cols, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double xi = x[i];
        for (std::size_t j = 0; j < m.cols; ++j) y[j] += m.a[i * m.cols + j] * xi;
    }
    return y;
}

// g += u v^T
inline void outer_acc(Mat& g, const Vec& u, const Vec& v) {
    require(g.rows == u.size() && g.cols == v.size(), "outer_acc: dimension mismatch");
    for (std::size_t i = 0; i < g.rows; ++i) {
        const double ui = u[i];
        for (std::size_t j = 0; j < g.cols; ++j) g.a[i * g.cols + j] += ui * v[j];
    }
}

inline void add_in_place(Vec& y, const Vec& x) {
    require(y.size() == x.size(), "add_in_place: dimension mismatch");
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += x[i];
}

// y += alpha * x
inline void axpy(double alpha, const Vec& x, Vec& y) {
    require(y.size() == x.size(), "axpy: dimension mismatch");
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

inline void scale_acc(Mat& target, double alpha, const Mat& g) {
    require(target.rows == g.rows && target.cols == g.cols, "scale_acc: shape mismatch");
    for (std::size_t i = 0; i < target.a.size(); ++i) target.a[i] += alpha * g.a[i];
}

inline double dot(const Vec& u, const Vec& v) {
    require(u.size() == v.size(), "dot: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
    return s;
}

inline double norm(const Vec& u) { return std::sqrt(dot(u, u)); }

inline Vec relu(const Vec& x) {
    Vec y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
    return y;
}

inline Vec tanh_vec(const Vec& x) {
    Vec y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::tanh(x[i]);
    return y;
}

} // namespace trusteval
