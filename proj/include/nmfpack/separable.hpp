#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "nmfpack/convex_oracle.hpp"
#include "nmfpack/errors.hpp"
#include "nmfpack/factorization.hpp"
#include "nmfpack/linprog.hpp"
#include "nmfpack/matrix.hpp"
#include "nmfpack/parallel.hpp"
#include "nmfpack/svd.hpp"

namespace nmfpack {

struct SeparableOptions {
    double dup_tol = 1e-9;   // rows closer than this in l1 count as copies
    double loner_tol = 1e-7; // hull distance above which a row is a loner
    double residual_tol = 1e-7;
};

struct SeparableResult {
    Factorization factorization;
    std::vector<std::size_t> loner_row_indices; // one representative per distinct loner row
    std::vector<std::size_t> anchor_map;        // column i of A -> anchor row index f(i)
};

namespace detail {

// Hull-membership screen in span coordinates. The l1 objective there brackets
// the true ambient l1 distance within sqrt factors of the dimensions, which
// is enough to classify rows that are far from the decision threshold; the
// remainder fall back to the exact LP.
struct LonerScreen {
    Matrix coords;           // one row per matrix row, span coordinates
    std::size_t ambient_dim; // original column count
    std::size_t span_dim;

    explicit LonerScreen(const Matrix& m) {
        const Matrix basis = rowspan_basis(m); // m.cols() x rank
        coords = m * basis;
        ambient_dim = m.cols();
        span_dim = basis.cols();
    }

    // minimal l1 norm (in span coordinates) of target - convex combination
    double combination_gap(std::size_t j, const std::vector<std::size_t>& gens) const {
        const std::size_t k = gens.size();
        const std::size_t d = span_dim;
        SimplexLp lp(k + 2 * d);
        for (std::size_t c = 0; c < 2 * d; ++c) lp.set_cost(k + c, 1.0);
        for (std::size_t c = 0; c < d; ++c) {
            std::vector<double> row(k + 2 * d, 0.0);
            for (std::size_t g = 0; g < k; ++g) row[g] = coords(gens[g], c);
            row[k + c] = 1.0;
            row[k + d + c] = -1.0;
            lp.add_eq(std::move(row), coords(j, c));
        }
        std::vector<double> ones(k + 2 * d, 0.0);
        for (std::size_t g = 0; g < k; ++g) ones[g] = 1.0;
        lp.add_eq(std::move(ones), 1.0);
        const LpSolution sol = lp.minimize();
        if (sol.status != LpStatus::optimal)
            throw convergence_failure("loner screen LP did not solve");
        return std::max(0.0, sol.objective);
    }
};

} // namespace detail

// Indices j whose row, after ignoring copies of itself, lies at l1 distance
// more than loner_tol from the hull of the remaining rows. Rows must come in
// with unit l1 norm.
inline std::vector<std::size_t> find_loners(const Matrix& m, const SeparableOptions& opts = {}) {
    const std::vector<double> norms = row_l1_norms(m);
    for (std::size_t i = 0; i < m.rows(); ++i)
        if (std::fabs(norms[i] - 1.0) > 1e-8) throw not_normalized_error(i, norms[i]);

    const std::size_t n = m.rows();
    std::vector<std::vector<double>> rows(n);
    for (std::size_t i = 0; i < n; ++i) rows[i] = m.row(i);

    const detail::LonerScreen screen(m);
    const double sqrt_span = std::sqrt(static_cast<double>(std::max<std::size_t>(screen.span_dim, 1)));
    const double sqrt_ambient = std::sqrt(static_cast<double>(std::max<std::size_t>(screen.ambient_dim, 1)));

    std::vector<char> loner(n, 0);
    parallel_for(n, [&](std::size_t j) {
        std::vector<std::size_t> gens;
        for (std::size_t i = 0; i < n; ++i)
            if (i != j && l1_distance(rows[i], rows[j]) > opts.dup_tol) gens.push_back(i);
        if (gens.empty()) {
            loner[j] = 1; // nothing left to span a hull
            return;
        }
        const double gap = screen.combination_gap(j, gens);
        if (gap * sqrt_ambient < opts.loner_tol) return;            // certainly inside
        if (gap / sqrt_span > opts.loner_tol) {                      // certainly outside
            loner[j] = 1;
            return;
        }
        HullQuery q;
        q.target = rows[j];
        for (std::size_t g : gens) q.generators.push_back(rows[g]);
        loner[j] = l1_dist_to_hull(q) > opts.loner_tol ? 1 : 0;
    });

    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < n; ++j)
        if (loner[j]) out.push_back(j);
    return out;
}

// Exact separable factorization: the distinct loner rows are the rows of W
// (ordered by first occurrence) and A is recovered row by row with NNLS.
inline SeparableResult solve_separable(const Matrix& m, std::size_t r, const SeparableOptions& opts = {}) {
    const std::vector<double> scales = row_l1_norms(m);
    const Matrix normalized = normalize_rows_l1(m);

    const std::vector<std::size_t> loners = find_loners(normalized, opts);

    std::vector<std::size_t> reps;
    for (std::size_t j : loners) {
        const std::vector<double> rj = normalized.row(j);
        bool found = false;
        for (std::size_t rep : reps) {
            if (l1_distance(rj, normalized.row(rep)) <= opts.dup_tol) {
                found = true;
                break;
            }
        }
        if (!found) reps.push_back(j);
    }
    if (reps.size() != r) throw not_separable_error(reps.size());

    const Matrix w = normalized.select_rows(reps);

    Matrix a(m.rows(), r);
    std::vector<double> row_resid(m.rows(), 0.0);
    parallel_for(m.rows(), [&](std::size_t i) {
        const std::vector<double> row = normalized.row(i);
        // copies of a loner row take the exact unit weight
        for (std::size_t k = 0; k < reps.size(); ++k) {
            if (l1_distance(row, normalized.row(reps[k])) <= opts.dup_tol) {
                a(i, k) = 1.0;
                double resid = 0.0;
                for (std::size_t c = 0; c < normalized.cols(); ++c)
                    resid += std::fabs(row[c] - w(k, c));
                row_resid[i] = resid;
                return;
            }
        }
        const std::vector<double> weights = nnls_row(row, w);
        double resid = 0.0;
        for (std::size_t c = 0; c < normalized.cols(); ++c) {
            double p = 0.0;
            for (std::size_t k = 0; k < r; ++k) p += weights[k] * w(k, c);
            resid += std::fabs(row[c] - p);
        }
        row_resid[i] = resid;
        for (std::size_t k = 0; k < r; ++k) a(i, k) = weights[k];
    });

    const double worst = *std::max_element(row_resid.begin(), row_resid.end());
    if (worst > opts.residual_tol)
        throw not_separable_error(reps.size(), "row reconstruction residual " + std::to_string(worst));

    // undo the row normalization so a * w reproduces the input
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t k = 0; k < r; ++k) a(i, k) *= scales[i];
    a.clamp_nonnegative(1e-12);

    SeparableResult res;
    res.factorization.a = a;
    res.factorization.w = w;
    res.factorization.inner_dim = r;
    recompute_residuals(m, res.factorization);
    res.loner_row_indices = reps;
    res.anchor_map = reps; // row reps[i] is the anchor for column i by construction
    return res;
}

} // namespace nmfpack
