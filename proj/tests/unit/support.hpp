// Shared helpers for the unit and acceptance tests: random instances,
// finite-difference checking and small reference implementations written
// with plain loops so they share no code paths with the library.
#ifndef DOCGCN_TESTS_SUPPORT_HPP
#define DOCGCN_TESTS_SUPPORT_HPP

#include "docgcn/common.hpp"
#include "docgcn/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace testing_support {

using docgcn::Matrix;
using docgcn::Rng;

inline Matrix random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.uniform(-scale, scale);
    return m;
}

/// Page with `n` random boxes on a 200 x 200 canvas. Coordinates are drawn
/// from a coarse grid when `grid` is set so that distance ties occur.
inline docgcn::corpus::Page random_page(Rng& rng, std::size_t n, bool grid = false,
                                        docgcn::corpus::ColumnMode mode = docgcn::corpus::ColumnMode::automatic) {
    docgcn::corpus::Page p;
    p.page_id = "rand";
    p.width = 200;
    p.height = 200;
    p.column_mode = mode;
    for (std::size_t i = 0; i < n; ++i) {
        docgcn::corpus::Segment s;
        s.id = "s" + std::to_string(i);
        double x1, y1, w, h;
        if (grid) {
            x1 = 10.0 * static_cast<double>(rng.index(15));
            y1 = 10.0 * static_cast<double>(rng.index(15));
            w = 10.0 * static_cast<double>(1 + rng.index(4));
            h = 10.0 * static_cast<double>(1 + rng.index(4));
        } else {
            x1 = rng.uniform(0, 150);
            y1 = rng.uniform(0, 150);
            w = rng.uniform(1, 50);
            h = rng.uniform(1, 50);
        }
        s.bbox = {x1, y1, x1 + w, y1 + h};
        s.char_count = static_cast<std::int64_t>(rng.index(500));
        s.label = rng.uniform() < 0.5 ? "a" : "b";
        p.segments.push_back(s);
    }
    return p;
}

/// Random forest over n nodes: each node links to an earlier node or to none.
inline std::vector<std::optional<std::size_t>> random_forest(Rng& rng, std::size_t n) {
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    rng.shuffle(perm);
    std::vector<std::optional<std::size_t>> parents(n);
    for (std::size_t k = 1; k < n; ++k)
        if (rng.uniform() < 0.7) parents[perm[k]] = perm[rng.index(k)];
    return parents;
}

inline bool is_forest(const std::vector<std::optional<std::size_t>>& parents) {
    const auto n = parents.size();
    for (std::size_t start = 0; start < n; ++start) {
        std::size_t cur = start, steps = 0;
        while (parents[cur]) {
            if (*parents[cur] >= n || *parents[cur] == cur) return false;
            cur = *parents[cur];
            if (++steps > n) return false;
        }
    }
    return true;
}

/// Relative error between analytic and numeric gradients of one tensor,
/// measured on the whole tensor: |a - n| / max(|a| + |n|, floor).
inline double relative_error(const Matrix& analytic, const Matrix& numeric, double floor = 1e-10) {
    const double diff = (analytic - numeric).norm();
    return diff / std::max(analytic.norm() + numeric.norm(), floor);
}

/// Central-difference gradient of `loss` with respect to every entry of `x`.
inline Matrix numeric_gradient(Matrix& x, const std::function<double()>& loss, double h = 1e-5) {
    Matrix g(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            const double keep = x(i, j);
            x(i, j) = keep + h;
            const double up = loss();
            x(i, j) = keep - h;
            const double down = loss();
            x(i, j) = keep;
            g(i, j) = (up - down) / (2 * h);
        }
    return g;
}

// ---- reference implementations -------------------------------------------

inline Matrix ref_matmul(const Matrix& a, const Matrix& b) {
    Matrix c = Matrix::Zero(a.rows(), b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index k = 0; k < a.cols(); ++k)
            for (Eigen::Index j = 0; j < b.cols(); ++j) c(i, j) += a(i, k) * b(k, j);
    return c;
}

inline Matrix ref_softmax_rows(const Matrix& x) {
    Matrix out(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        double mx = -INFINITY;
        for (Eigen::Index j = 0; j < x.cols(); ++j) mx = std::max(mx, x(i, j));
        double sum = 0;
        for (Eigen::Index j = 0; j < x.cols(); ++j) sum += std::exp(x(i, j) - mx);
        for (Eigen::Index j = 0; j < x.cols(); ++j) out(i, j) = std::exp(x(i, j) - mx) / sum;
    }
    return out;
}

/// D^-1/2 (A + I) D^-1/2 computed entry by entry.
inline Matrix ref_normalize(const Matrix& a) {
    const auto n = a.rows();
    std::vector<double> deg(static_cast<std::size_t>(n), 0.0);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) deg[static_cast<std::size_t>(i)] += a(i, j) + (i == j ? 1.0 : 0.0);
    Matrix out(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            out(i, j) = (a(i, j) + (i == j ? 1.0 : 0.0)) /
                        std::sqrt(deg[static_cast<std::size_t>(i)] * deg[static_cast<std::size_t>(j)]);
    return out;
}

}  // namespace testing_support

#endif  // DOCGCN_TESTS_SUPPORT_HPP
