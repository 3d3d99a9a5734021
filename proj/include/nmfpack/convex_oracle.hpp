#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "nmfpack/errors.hpp"
#include "nmfpack/linprog.hpp"
#include "nmfpack/matrix.hpp"
#include "nmfpack/svd.hpp"

namespace nmfpack {

// Query for the l1 distance from `target` to the convex hull of `generators`,
// with some generators masked out (used to ignore duplicate rows).
struct HullQuery {
    std::vector<double> target;
    std::vector<std::vector<double>> generators;
    std::vector<std::size_t> excluded_indices;
};

struct HullResult {
    double distance = 0.0;
    std::vector<double> weights; // over the kept generators, in kept order
    std::vector<std::size_t> kept; // original generator indices
};

// min over convex weights of || target - sum_k w_k gen_k ||_1, solved as an LP
// with one slack per coordinate.
inline HullResult l1_dist_to_hull_weights(const HullQuery& q) {
    for (const auto& g : q.generators)
        if (g.size() != q.target.size()) throw dimension_mismatch("hull generator dimension");
    std::vector<char> excluded(q.generators.size(), 0);
    for (std::size_t e : q.excluded_indices) {
        if (e >= q.generators.size()) throw index_out_of_range_error("excluded generator index");
        excluded[e] = 1;
    }
    std::vector<std::size_t> kept;
    for (std::size_t k = 0; k < q.generators.size(); ++k)
        if (!excluded[k]) kept.push_back(k);
    if (kept.empty()) throw invalid_params_error("hull query has no generators left");

    const std::size_t dim = q.target.size();
    const std::size_t nk = kept.size();
    SimplexLp lp(nk + dim); // weights, then per-coordinate slacks
    for (std::size_t c = 0; c < dim; ++c) lp.set_cost(nk + c, 1.0);

    for (std::size_t c = 0; c < dim; ++c) {
        std::vector<double> hi(nk + dim, 0.0), lo(nk + dim, 0.0);
        for (std::size_t k = 0; k < nk; ++k) hi[k] = lo[k] = q.generators[kept[k]][c];
        hi[nk + c] = 1.0;  // sum_k w g + s >= t
        lo[nk + c] = -1.0; // sum_k w g - s <= t
        lp.add_ge(std::move(hi), q.target[c]);
        lp.add_le(std::move(lo), q.target[c]);
    }
    std::vector<double> ones(nk + dim, 0.0);
    for (std::size_t k = 0; k < nk; ++k) ones[k] = 1.0;
    lp.add_eq(std::move(ones), 1.0);

    const LpSolution sol = lp.minimize();
    if (sol.status != LpStatus::optimal)
        throw convergence_failure("hull distance LP did not solve");
    HullResult res;
    res.distance = std::max(0.0, sol.objective);
    res.weights.assign(sol.x.begin(), sol.x.begin() + static_cast<std::ptrdiff_t>(nk));
    res.kept = kept;
    return res;
}

inline double l1_dist_to_hull(const HullQuery& q) { return l1_dist_to_hull_weights(q).distance; }

// Nonnegative-combination membership. Returns weights reproducing the target
// within 1e-9 * (1 + ||target||_inf) in max norm, or nothing.
inline std::optional<std::vector<double>> in_cone(const std::vector<double>& target,
                                                  const std::vector<std::vector<double>>& generators) {
    for (const auto& g : generators)
        if (g.size() != target.size()) throw dimension_mismatch("cone generator dimension");
    const std::size_t dim = target.size();
    const std::size_t nk = generators.size();

    SimplexLp lp(nk + 2 * dim); // weights, then residual split p - q
    for (std::size_t c = 0; c < 2 * dim; ++c) lp.set_cost(nk + c, 1.0);
    for (std::size_t c = 0; c < dim; ++c) {
        std::vector<double> row(nk + 2 * dim, 0.0);
        for (std::size_t k = 0; k < nk; ++k) row[k] = generators[k][c];
        row[nk + c] = 1.0;
        row[nk + dim + c] = -1.0;
        lp.add_eq(std::move(row), target[c]);
    }
    const LpSolution sol = lp.minimize();
    if (sol.status != LpStatus::optimal) return std::nullopt;

    std::vector<double> w(sol.x.begin(), sol.x.begin() + static_cast<std::ptrdiff_t>(nk));
    std::vector<double> recon(dim, 0.0);
    for (std::size_t k = 0; k < nk; ++k)
        for (std::size_t c = 0; c < dim; ++c) recon[c] += w[k] * generators[k][c];
    double err = 0.0;
    for (std::size_t c = 0; c < dim; ++c) err = std::max(err, std::fabs(recon[c] - target[c]));
    if (err <= 1e-9 * (1.0 + norm_inf(target))) return w;
    return std::nullopt;
}

// Lawson-Hanson active-set NNLS: min || a x - b ||_2 with x >= 0.
inline std::vector<double> nnls(const Matrix& a, const std::vector<double>& b) {
    if (a.rows() != b.size()) throw dimension_mismatch("nnls rhs");
    const std::size_t n = a.cols();
    std::vector<double> x(n, 0.0);
    std::vector<char> passive(n, 0);

    double scale = 0.0;
    for (double v : b) scale = std::max(scale, std::fabs(v));
    scale = std::max(scale, a.max_abs());
    const double tol = 1e-12 * (1.0 + scale);

    auto gradient = [&]() {
        std::vector<double> resid = b;
        for (std::size_t j = 0; j < n; ++j) {
            if (x[j] == 0.0) continue;
            for (std::size_t i = 0; i < a.rows(); ++i) resid[i] -= a(i, j) * x[j];
        }
        std::vector<double> w(n, 0.0);
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i = 0; i < a.rows(); ++i) w[j] += a(i, j) * resid[i];
        return w;
    };

    for (std::size_t outer = 0; outer < 4 * n + 16; ++outer) {
        const std::vector<double> w = gradient();
        std::size_t best = n;
        double best_w = tol;
        for (std::size_t j = 0; j < n; ++j)
            if (!passive[j] && w[j] > best_w) {
                best_w = w[j];
                best = j;
            }
        if (best == n) break;
        passive[best] = 1;

        for (std::size_t inner = 0; inner < 4 * n + 16; ++inner) {
            std::vector<std::size_t> pset;
            for (std::size_t j = 0; j < n; ++j)
                if (passive[j]) pset.push_back(j);
            const Matrix ap = a.select_cols(pset);
            const std::vector<double> z = least_squares(ap, b);

            bool all_positive = true;
            for (double v : z)
                if (v <= tol) all_positive = false;
            if (all_positive) {
                std::fill(x.begin(), x.end(), 0.0);
                for (std::size_t k = 0; k < pset.size(); ++k) x[pset[k]] = z[k];
                break;
            }
            double alpha = 1.0;
            for (std::size_t k = 0; k < pset.size(); ++k) {
                if (z[k] <= tol) {
                    const double xj = x[pset[k]];
                    const double denom = xj - z[k];
                    if (denom > 0.0) alpha = std::min(alpha, xj / denom);
                }
            }
            for (std::size_t k = 0; k < pset.size(); ++k) {
                const std::size_t j = pset[k];
                x[j] += alpha * (z[k] - x[j]);
                if (x[j] <= tol) {
                    x[j] = 0.0;
                    passive[j] = 0;
                }
            }
        }
    }
    return x;
}

// Row-oriented wrapper: weights w >= 0 minimizing || target - w^T basis ||_2,
// where the rows of `basis` are the generators.
inline std::vector<double> nnls_row(const std::vector<double>& target, const Matrix& basis) {
    if (basis.cols() != target.size()) throw dimension_mismatch("nnls_row basis");
    return nnls(basis.transpose(), target);
}

} // namespace nmfpack
