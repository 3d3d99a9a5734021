#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <vector>

#include "nmfpack/convex_oracle.hpp"
#include "nmfpack/errors.hpp"
#include "nmfpack/factorization.hpp"
#include "nmfpack/linprog.hpp"
#include "nmfpack/matrix.hpp"
#include "nmfpack/parallel.hpp"

namespace nmfpack {

// Noise and margin parameters for the robust solver. All derived fields are
// exact functions of (epsilon, alpha).
struct RobustParams {
    double epsilon = 0.0;       // per-row l1 noise bound
    double alpha = 0.0;         // robust-simplicial margin of the hidden W
    double d = 0.0;             // ignore radius 5e/a + 2e
    double cluster_radius = 0.0; // 2 (d + e)
    double hull_margin = 0.0;   // 2 e
    bool feasible = false;      // 20e/a + 13e < a
    double residual_bound() const { return 10.0 * epsilon / alpha + 7.0 * epsilon; }
};

inline RobustParams derive_params(double epsilon, double alpha) {
    if (epsilon <= 0.0 || alpha <= 0.0)
        throw invalid_params_error("epsilon and alpha must be positive");
    RobustParams p;
    p.epsilon = epsilon;
    p.alpha = alpha;
    p.d = 5.0 * epsilon / alpha + 2.0 * epsilon;
    p.cluster_radius = 2.0 * (p.d + epsilon);
    p.hull_margin = 2.0 * epsilon;
    p.feasible = 20.0 * epsilon / alpha + 13.0 * epsilon < alpha;
    return p;
}

// Robust loner test for row j: drop every other row closer than d in l1, then
// ask whether the hull of what remains is further away than 2 epsilon. An
// empty remainder counts as a loner.
inline bool is_robust_loner(const Matrix& m, std::size_t j, const RobustParams& p) {
    if (j >= m.rows()) throw index_out_of_range_error("row index");
    const std::vector<double> target = m.row(j);
    HullQuery q;
    q.target = target;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        if (i == j) continue;
        const std::vector<double> row = m.row(i);
        if (l1_distance(row, target) >= p.d) q.generators.push_back(row);
    }
    if (q.generators.empty()) return true;
    return l1_dist_to_hull(q) > p.hull_margin;
}

struct RobustResult {
    Factorization factorization;
    std::vector<std::vector<std::size_t>> clusters; // robust-loner rows, grouped
    std::vector<std::size_t> representatives;       // one row index per cluster
};

namespace detail {

// min_w || row - w^T basis ||_1 with w >= 0 and sum(w) within +-band of 1
inline double l1_regression_row(const std::vector<double>& row, const Matrix& basis, double band,
                                std::vector<double>& weights) {
    const std::size_t r = basis.rows(), dim = basis.cols();
    SimplexLp lp(r + dim);
    for (std::size_t c = 0; c < dim; ++c) lp.set_cost(r + c, 1.0);
    for (std::size_t c = 0; c < dim; ++c) {
        std::vector<double> hi(r + dim, 0.0), lo(r + dim, 0.0);
        for (std::size_t k = 0; k < r; ++k) hi[k] = lo[k] = basis(k, c);
        hi[r + c] = 1.0;
        lo[r + c] = -1.0;
        lp.add_ge(std::move(hi), row[c]);
        lp.add_le(std::move(lo), row[c]);
    }
    std::vector<double> sum_lo(r + dim, 0.0), sum_hi(r + dim, 0.0);
    for (std::size_t k = 0; k < r; ++k) sum_lo[k] = sum_hi[k] = 1.0;
    lp.add_ge(std::move(sum_lo), 1.0 - band);
    lp.add_le(std::move(sum_hi), 1.0 + band);

    const LpSolution sol = lp.minimize();
    if (sol.status != LpStatus::optimal)
        throw convergence_failure("l1 regression LP did not solve");
    weights.assign(sol.x.begin(), sol.x.begin() + static_cast<std::ptrdiff_t>(r));
    return std::max(0.0, sol.objective);
}

} // namespace detail

// Noise-tolerant separable factorization: robust loners are clustered at
// radius 2(d + eps), one representative per cluster forms W', and A' rows are
// fit in l1 with near-unit weight sums.
inline RobustResult solve_separable_robust(const Matrix& m_noisy, const RobustParams& p) {
    if (!p.feasible)
        throw infeasible_params_error("20e/a + 13e < a fails for the given epsilon, alpha");

    const std::size_t n = m_noisy.rows();
    std::vector<char> is_loner(n, 0);
    parallel_for(n, [&](std::size_t j) { is_loner[j] = is_robust_loner(m_noisy, j, p) ? 1 : 0; });

    std::vector<std::size_t> loners;
    for (std::size_t j = 0; j < n; ++j)
        if (is_loner[j]) loners.push_back(j);
    if (loners.empty()) throw no_robust_loners_error();

    // single-linkage components of the "within cluster_radius" graph
    std::vector<std::size_t> comp(loners.size());
    std::iota(comp.begin(), comp.end(), 0);
    std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
        while (comp[x] != x) x = comp[x] = comp[comp[x]];
        return x;
    };
    for (std::size_t a = 0; a < loners.size(); ++a)
        for (std::size_t b = a + 1; b < loners.size(); ++b)
            if (l1_distance(m_noisy.row(loners[a]), m_noisy.row(loners[b])) <= p.cluster_radius) {
                const std::size_t ra = find(a), rb = find(b);
                if (ra != rb) comp[std::max(ra, rb)] = std::min(ra, rb);
            }

    RobustResult res;
    std::vector<std::size_t> root_order;
    for (std::size_t a = 0; a < loners.size(); ++a) {
        const std::size_t root = find(a);
        auto it = std::find(root_order.begin(), root_order.end(), root);
        std::size_t slot;
        if (it == root_order.end()) {
            root_order.push_back(root);
            res.clusters.emplace_back();
            slot = root_order.size() - 1;
        } else {
            slot = static_cast<std::size_t>(it - root_order.begin());
        }
        res.clusters[slot].push_back(loners[a]);
    }

    // 1-center representative: least maximum l1 distance to the rest
    for (const auto& cluster : res.clusters) {
        std::size_t best = cluster.front();
        double best_radius = 4.0 * static_cast<double>(m_noisy.cols());
        for (std::size_t cand : cluster) {
            double radius = 0.0;
            for (std::size_t other : cluster)
                radius = std::max(radius, l1_distance(m_noisy.row(cand), m_noisy.row(other)));
            if (radius < best_radius - 1e-15) {
                best_radius = radius;
                best = cand;
            }
        }
        res.representatives.push_back(best);
    }

    const std::size_t r = res.representatives.size();
    const Matrix w = m_noisy.select_rows(res.representatives);

    Matrix a(n, r);
    std::vector<double> row_resid(n, 0.0);
    parallel_for(n, [&](std::size_t i) {
        std::vector<double> weights;
        row_resid[i] = detail::l1_regression_row(m_noisy.row(i), w, p.epsilon, weights);
        for (std::size_t k = 0; k < r; ++k) a(i, k) = weights[k];
    });

    a.clamp_nonnegative(1e-12);
    res.factorization.a = a;
    res.factorization.w = w;
    res.factorization.inner_dim = r;
    recompute_residuals(m_noisy, res.factorization);
    return res;
}

} // namespace nmfpack
