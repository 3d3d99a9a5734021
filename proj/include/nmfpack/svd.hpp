#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "nmfpack/errors.hpp"
#include "nmfpack/matrix.hpp"

namespace nmfpack {

// Full singular value decomposition, singular values nonincreasing. The
// factors satisfy a = left * diag(s) * right^T with k = min(rows, cols)
// columns each; columns of rank-deficient inputs are completed to an
// orthonormal set so downstream projections stay well defined.
struct SvdResult {
    Matrix left;                        // rows x k
    std::vector<double> singular_values; // k, nonincreasing
    Matrix right;                       // cols x k
};

namespace detail {

// One-sided Jacobi on a matrix with rows >= cols: rotates column pairs until
// all are mutually orthogonal, then reads off singular values as column norms.
inline void jacobi_svd_tall(Matrix b, Matrix& u, std::vector<double>& sigma, Matrix& v) {
    const std::size_t p = b.rows(), q = b.cols();
    v = Matrix::identity(q);
    const double tol = 1e-13;
    const int max_sweeps = 60;

    // columns this far below the dominant one are numerically zero; rotating
    // them against each other only stirs roundoff noise
    double scale2 = 0.0;
    for (std::size_t j = 0; j < q; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < p; ++i) s += b(i, j) * b(i, j);
        scale2 = std::max(scale2, s);
    }
    const double negligible2 = scale2 * 1e-28;

    double worst = 0.0;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        worst = 0.0;
        for (std::size_t j = 0; j + 1 < q; ++j) {
            for (std::size_t k = j + 1; k < q; ++k) {
                double ajj = 0.0, akk = 0.0, ajk = 0.0;
                for (std::size_t i = 0; i < p; ++i) {
                    ajj += b(i, j) * b(i, j);
                    akk += b(i, k) * b(i, k);
                    ajk += b(i, j) * b(i, k);
                }
                if (ajj <= negligible2 || akk <= negligible2) continue;
                const double rel = std::fabs(ajk) / std::sqrt(ajj * akk);
                if (rel <= tol) continue;
                worst = std::max(worst, rel);
                const double zeta = (akk - ajj) / (2.0 * ajk);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double cs = 1.0 / std::sqrt(1.0 + t * t);
                const double sn = cs * t;
                for (std::size_t i = 0; i < p; ++i) {
                    const double bj = b(i, j), bk = b(i, k);
                    b(i, j) = cs * bj - sn * bk;
                    b(i, k) = sn * bj + cs * bk;
                }
                for (std::size_t i = 0; i < q; ++i) {
                    const double vj = v(i, j), vk = v(i, k);
                    v(i, j) = cs * vj - sn * vk;
                    v(i, k) = sn * vj + cs * vk;
                }
            }
        }
        if (worst == 0.0) break;
    }
    // double precision can stagnate just above the sweep tolerance on large
    // inputs; only genuinely unorthogonal columns are an error
    if (worst > 1e-9) throw convergence_failure("jacobi svd did not converge");

    sigma.assign(q, 0.0);
    for (std::size_t j = 0; j < q; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < p; ++i) s += b(i, j) * b(i, j);
        sigma[j] = std::sqrt(s);
    }

    std::vector<std::size_t> order(q);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t c) { return sigma[a] > sigma[c]; });

    Matrix bs(p, q), vs(q, q);
    std::vector<double> ss(q);
    for (std::size_t j = 0; j < q; ++j) {
        ss[j] = sigma[order[j]];
        for (std::size_t i = 0; i < p; ++i) bs(i, j) = b(i, order[j]);
        for (std::size_t i = 0; i < q; ++i) vs(i, j) = v(i, order[j]);
    }
    sigma = ss;
    v = vs;

    u = Matrix(p, q);
    const double tiny = (sigma.empty() ? 0.0 : sigma[0]) * 1e-300 + 1e-300;
    std::size_t filled = 0;
    for (std::size_t j = 0; j < q; ++j) {
        if (sigma[j] > tiny) {
            for (std::size_t i = 0; i < p; ++i) u(i, j) = bs(i, j) / sigma[j];
            filled = j + 1;
        }
    }
    // complete a basis for null singular directions
    for (std::size_t j = filled; j < q; ++j) {
        sigma[j] = 0.0;
        for (std::size_t cand = 0; cand < p; ++cand) {
            std::vector<double> e(p, 0.0);
            e[cand] = 1.0;
            for (std::size_t t = 0; t < j; ++t) {
                double d = 0.0;
                for (std::size_t i = 0; i < p; ++i) d += u(i, t) * e[i];
                for (std::size_t i = 0; i < p; ++i) e[i] -= d * u(i, t);
            }
            const double nrm = norm2(e);
            if (nrm > 0.5) {
                for (std::size_t i = 0; i < p; ++i) u(i, j) = e[i] / nrm;
                break;
            }
        }
    }
}

} // namespace detail

inline SvdResult svd(const Matrix& m) {
    if (m.rows() == 0 || m.cols() == 0) return {Matrix(), {}, Matrix()};
    SvdResult r;
    if (m.rows() >= m.cols()) {
        detail::jacobi_svd_tall(m, r.left, r.singular_values, r.right);
    } else {
        Matrix u, v;
        detail::jacobi_svd_tall(m.transpose(), u, r.singular_values, v);
        r.left = v;
        r.right = u;
    }
    return r;
}

// Truncated SVD with a hard cutoff: cutoff_index is the number of leading
// singular values >= threshold. All min(n, m) triples are kept so the full
// reconstruction is available to callers.
struct SvdTruncation {
    std::vector<double> singular_values;
    Matrix left_vectors;
    Matrix right_vectors;
    std::size_t cutoff_index = 0;
    double threshold = 0.0;
};

inline SvdTruncation truncated_svd(const Matrix& m, double threshold) {
    if (threshold < 0.0) throw invalid_params_error("svd threshold must be nonnegative");
    SvdResult r = svd(m);
    SvdTruncation t;
    t.singular_values = std::move(r.singular_values);
    t.left_vectors = std::move(r.left);
    t.right_vectors = std::move(r.right);
    t.threshold = threshold;
    t.cutoff_index = 0;
    for (std::size_t i = 0; i < t.singular_values.size(); ++i)
        if (t.singular_values[i] >= threshold) t.cutoff_index = i + 1;
    return t;
}

inline Matrix svd_reconstruct(const SvdTruncation& t, std::size_t terms) {
    const std::size_t n = t.left_vectors.rows(), m = t.right_vectors.rows();
    Matrix out(n, m);
    for (std::size_t k = 0; k < terms && k < t.singular_values.size(); ++k) {
        const double s = t.singular_values[k];
        if (s == 0.0) continue;
        for (std::size_t i = 0; i < n; ++i) {
            const double us = t.left_vectors(i, k) * s;
            for (std::size_t j = 0; j < m; ++j) out(i, j) += us * t.right_vectors(j, k);
        }
    }
    return out;
}

inline std::size_t numeric_rank(const Matrix& m, double rel_tol = 1e-9) {
    if (m.empty()) return 0;
    const SvdResult r = svd(m);
    if (r.singular_values.empty() || r.singular_values[0] == 0.0) return 0;
    const double cut = rel_tol * r.singular_values[0];
    std::size_t rank = 0;
    for (double s : r.singular_values)
        if (s >= cut) ++rank;
    return rank;
}

// Best Frobenius rank-r approximation.
inline Matrix rank_truncate(const Matrix& m, std::size_t r) {
    if (r < 1 || r > std::min(m.rows(), m.cols()))
        throw invalid_params_error("rank_truncate: r out of range");
    const SvdTruncation t = truncated_svd(m, 0.0);
    return svd_reconstruct(t, r);
}

// Moore-Penrose pseudoinverse. Singular values below `threshold` are dropped;
// threshold 0 keeps everything above 1e-10 relative to the largest.
inline Matrix pseudoinverse(const Matrix& m, double threshold = 0.0) {
    if (threshold < 0.0) throw invalid_params_error("pseudoinverse threshold must be nonnegative");
    const SvdResult r = svd(m);
    Matrix out(m.cols(), m.rows());
    if (r.singular_values.empty()) return out;
    const double cut = threshold > 0.0 ? threshold : 1e-10 * r.singular_values[0];
    for (std::size_t k = 0; k < r.singular_values.size(); ++k) {
        const double s = r.singular_values[k];
        if (s < cut || s == 0.0) continue;
        for (std::size_t i = 0; i < m.cols(); ++i) {
            const double vs = r.right(i, k) / s;
            for (std::size_t j = 0; j < m.rows(); ++j) out(i, j) += vs * r.left(j, k);
        }
    }
    return out;
}

// Orthonormal basis (as columns) of the column span at the numeric rank.
inline Matrix colspan_basis(const Matrix& m, double rel_tol = 1e-9) {
    const SvdResult r = svd(m);
    std::size_t rank = 0;
    if (!r.singular_values.empty() && r.singular_values[0] > 0.0) {
        const double cut = rel_tol * r.singular_values[0];
        for (double s : r.singular_values)
            if (s >= cut) ++rank;
    }
    Matrix basis(m.rows(), rank);
    for (std::size_t k = 0; k < rank; ++k)
        for (std::size_t i = 0; i < m.rows(); ++i) basis(i, k) = r.left(i, k);
    return basis;
}

inline Matrix rowspan_basis(const Matrix& m, double rel_tol = 1e-9) {
    return colspan_basis(m.transpose(), rel_tol);
}

// Minimum-norm least squares solution of A x = b.
inline std::vector<double> least_squares(const Matrix& a, const std::vector<double>& b) {
    return matvec(pseudoinverse(a), b);
}

} // namespace nmfpack
