#include "docgcn/common.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace docgcn {

double Rng::normal() {
    // Box-Muller; u1 kept away from zero.
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

Matrix uniform_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double limit) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(-limit, limit);
    return m;
}

Matrix glorot(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
    return uniform_matrix(rng, rows, cols, std::sqrt(6.0 / static_cast<double>(rows + cols)));
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

Matrix softmax_rows(const Matrix& logits) {
    Matrix p(logits.rows(), logits.cols());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const double mx = logits.row(i).maxCoeff();
        if (!std::isfinite(mx)) {
            p.row(i) = logits.row(i);  // propagate NaN/inf for the caller to detect
            continue;
        }
        p.row(i) = (logits.row(i).array() - mx).exp();
        // Vectorised exp clamps -inf to a denormal; masked entries must be exactly 0.
        for (Eigen::Index j = 0; j < logits.cols(); ++j)
            if (logits(i, j) == -std::numeric_limits<double>::infinity()) p(i, j) = 0.0;
        p.row(i) /= p.row(i).sum();
    }
    return p;
}

double softmax_cross_entropy(const Matrix& logits, const std::vector<int>& labels, Matrix* dlogits) {
    const auto n = logits.rows();
    require(static_cast<std::size_t>(n) == labels.size(), "softmax_cross_entropy: label count != rows");
    require(n > 0, "softmax_cross_entropy: empty batch");
    double loss = 0.0;
    if (dlogits) dlogits->resize(n, logits.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
        const int y = labels[static_cast<std::size_t>(i)];
        require(y >= 0 && y < logits.cols(), "softmax_cross_entropy: label id out of range");
        const double mx = logits.row(i).maxCoeff();
        const RowVector shifted = logits.row(i).array() - mx;
        const double lse = std::log(shifted.array().exp().sum());
        loss += lse - shifted(y);
        if (dlogits) {
            dlogits->row(i) = (shifted.array() - lse).exp();
            (*dlogits)(i, y) -= 1.0;
        }
    }
    if (dlogits) *dlogits /= static_cast<double>(n);
    return loss / static_cast<double>(n);
}

Adam::Adam(AdamConfig cfg, const std::vector<Param>& params) : cfg_(cfg) {
    for (const auto& p : params) {
        m_.push_back(Matrix::Zero(p.value->rows(), p.value->cols()));
        v_.push_back(Matrix::Zero(p.value->rows(), p.value->cols()));
    }
}

void Adam::step(const std::vector<Param>& params) {
    require(params.size() == m_.size(), "Adam::step: parameter list changed");
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto& g = *params[k].grad;
        m_[k] = cfg_.beta1 * m_[k] + (1.0 - cfg_.beta1) * g;
        v_[k] = cfg_.beta2 * v_[k] + (1.0 - cfg_.beta2) * g.cwiseProduct(g);
        params[k].value->array() -=
            cfg_.learning_rate * (m_[k].array() / bc1) / ((v_[k].array() / bc2).sqrt() + cfg_.epsilon);
    }
}

}  // namespace docgcn
