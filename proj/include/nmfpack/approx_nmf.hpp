#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <tuple>
#include <utility>
#include <vector>

#include "nmfpack/convex_oracle.hpp"
#include "nmfpack/errors.hpp"
#include "nmfpack/factorization.hpp"
#include "nmfpack/matrix.hpp"
#include "nmfpack/nmf_heuristics.hpp"
#include "nmfpack/rng.hpp"
#include "nmfpack/svd.hpp"

namespace nmfpack {

// Scales every row of w to unit Euclidean norm and folds the scales into the
// columns of a, leaving the product unchanged.
inline std::pair<Matrix, Matrix> normalize_factor_pair(Matrix a, Matrix w, double /*m_norm*/ = 0.0) {
    if (a.cols() != w.rows()) throw dimension_mismatch("factor pair shapes");
    for (std::size_t t = 0; t < w.rows(); ++t) {
        double norm = 0.0;
        for (std::size_t j = 0; j < w.cols(); ++j) norm += w(t, j) * w(t, j);
        norm = std::sqrt(norm);
        if (norm == 0.0) throw zero_row_error(t);
        for (std::size_t j = 0; j < w.cols(); ++j) w(t, j) /= norm;
        for (std::size_t i = 0; i < a.rows(); ++i) a(i, t) *= norm;
    }
    return {std::move(a), std::move(w)};
}

// W0 = projection of W onto the leading right-singular directions of A (up to
// the truncation cutoff), W1 the exact remainder.
inline std::pair<Matrix, Matrix> split_w(const Matrix& w, const SvdTruncation& svd_of_a) {
    if (svd_of_a.right_vectors.rows() != w.rows())
        throw dimension_mismatch("split_w: singular vectors vs w rows");
    const std::size_t r = w.rows(), m = w.cols();
    Matrix w0(r, m);
    for (std::size_t t = 0; t < svd_of_a.cutoff_index; ++t) {
        std::vector<double> vt(r);
        for (std::size_t i = 0; i < r; ++i) vt[i] = svd_of_a.right_vectors(i, t);
        const std::vector<double> vtw = vecmat(vt, w); // 1 x m
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < m; ++j) w0(i, j) += vt[i] * vtw[j];
    }
    return {w0, w - w0};
}

struct ApproxConfig {
    double epsilon = 1e-2;
    std::size_t r = 1;
    double delta = 0.0;  // 0 resolves to sqrt(epsilon) / r^(1/4)
    double eps1 = 0.0;   // 0 resolves to epsilon / delta
    double eps2 = 0.0;   // 0 resolves to min(epsilon / (delta r), 0.1)
    double norm_guess_factor = 1.01;
    // desk-scale enumeration caps; the full nets are exponential by design
    std::size_t max_w0_candidates = 400;
    std::size_t max_v_sets = 16;
    std::size_t max_norm_guesses = 12;
    std::size_t max_candidates = 20000;
    std::size_t mu_iters = 300;
    std::size_t anls_rounds = 8;
    std::uint64_t seed = 0;
};

inline ApproxConfig resolve_defaults(ApproxConfig cfg, std::size_t r, double epsilon) {
    cfg.r = r;
    cfg.epsilon = epsilon;
    if (cfg.delta <= 0.0) cfg.delta = std::sqrt(epsilon) / std::pow(static_cast<double>(r), 0.25);
    if (cfg.eps1 <= 0.0) cfg.eps1 = epsilon / cfg.delta;
    if (cfg.eps2 <= 0.0) cfg.eps2 = std::min(epsilon / (cfg.delta * static_cast<double>(r)), 0.1);
    return cfg;
}

namespace detail {

// Gaussian elimination with partial pivoting; the systems here are tiny
// principal submatrices of positive definite forms.
inline std::vector<double> solve_linear(Matrix a, std::vector<double> b) {
    const std::size_t n = a.rows();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t row = col + 1; row < n; ++row)
            if (std::fabs(a(row, col)) > std::fabs(a(piv, col))) piv = row;
        if (piv != col) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(col, j), a(piv, j));
            std::swap(b[col], b[piv]);
        }
        const double d = a(col, col);
        if (d == 0.0) continue;
        for (std::size_t row = col + 1; row < n; ++row) {
            const double f = a(row, col) / d;
            if (f == 0.0) continue;
            for (std::size_t j = col; j < n; ++j) a(row, j) -= f * a(col, j);
            b[row] -= f * b[col];
        }
    }
    std::vector<double> x(n, 0.0);
    for (std::size_t row = n; row-- > 0;) {
        double s = b[row];
        for (std::size_t j = row + 1; j < n; ++j) s -= a(row, j) * x[j];
        x[row] = a(row, row) != 0.0 ? s / a(row, row) : 0.0;
    }
    return x;
}

// Exact active-set solve of min z^T q z subject to z >= lower for positive
// definite q: enumerate bound patterns, accept the first KKT point.
inline std::vector<double> qp_lower_bounded(const Matrix& q, const std::vector<double>& lower) {
    const std::size_t n = lower.size();
    std::vector<std::size_t> subsets(1ULL << n);
    for (std::size_t s = 0; s < subsets.size(); ++s) subsets[s] = s;
    std::stable_sort(subsets.begin(), subsets.end(), [](std::size_t a, std::size_t b) {
        const int pa = __builtin_popcountll(a), pb = __builtin_popcountll(b);
        return pa != pb ? pa < pb : a < b;
    });

    const double tol = 1e-10;
    std::vector<double> z(n, 0.0);
    for (const std::size_t mask : subsets) {
        std::vector<std::size_t> active, free_idx;
        for (std::size_t i = 0; i < n; ++i)
            ((mask >> i) & 1 ? active : free_idx).push_back(i);

        std::vector<double> cand(n, 0.0);
        for (std::size_t i : active) cand[i] = lower[i];
        if (!free_idx.empty()) {
            Matrix qff(free_idx.size(), free_idx.size());
            std::vector<double> rhs(free_idx.size(), 0.0);
            for (std::size_t a = 0; a < free_idx.size(); ++a) {
                for (std::size_t b = 0; b < free_idx.size(); ++b)
                    qff(a, b) = q(free_idx[a], free_idx[b]);
                for (std::size_t i : active) rhs[a] -= q(free_idx[a], i) * lower[i];
            }
            const std::vector<double> zf = solve_linear(std::move(qff), std::move(rhs));
            for (std::size_t a = 0; a < free_idx.size(); ++a) cand[free_idx[a]] = zf[a];
        }

        bool ok = true;
        double scale = 1.0;
        for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::fabs(lower[i]));
        for (std::size_t i : free_idx)
            if (cand[i] < lower[i] - tol * scale) ok = false;
        if (ok) {
            // multipliers at the active bounds must be nonnegative
            for (std::size_t i : active) {
                double g = 0.0;
                for (std::size_t j = 0; j < n; ++j) g += q(i, j) * cand[j];
                if (g < -tol * (1.0 + std::fabs(q(i, i)) * scale)) {
                    ok = false;
                    break;
                }
            }
        }
        if (ok) {
            z = std::move(cand);
            break;
        }
    }
    for (std::size_t i = 0; i < n; ++i) z[i] = std::max(z[i], lower[i]);
    return z;
}

} // namespace detail

// One column of the W1 program: minimize sum_t c_t (v_t . z)^2 over z >= -w0,
// with c_t = a_norm^2 below the cutoff and (delta ||M||)^2 above it. Solved
// exactly by active-set enumeration (the dimension is r).
inline std::vector<double> solve_w1_column(const std::vector<double>& w0_col, const Matrix& v,
                                           std::size_t t0, double a_norm_guess, double delta_norm) {
    const std::size_t r = w0_col.size();
    Matrix q(r, r);
    for (std::size_t t = 0; t < r; ++t) {
        const double c = t < t0 ? a_norm_guess * a_norm_guess : delta_norm * delta_norm;
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < r; ++j) q(i, j) += c * v(i, t) * v(j, t);
    }
    std::vector<double> lower(r);
    for (std::size_t i = 0; i < r; ++i) lower[i] = -w0_col[i];
    return detail::qp_lower_bounded(q, lower);
}

inline double w1_objective(const std::vector<double>& z, const Matrix& v, std::size_t t0,
                           double a_norm_guess, double delta_norm) {
    double obj = 0.0;
    for (std::size_t t = 0; t < v.cols(); ++t) {
        double d = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) d += v(i, t) * z[i];
        obj += (t < t0 ? a_norm_guess * a_norm_guess : delta_norm * delta_norm) * d * d;
    }
    return obj;
}

struct ApproxOutcome {
    Factorization factorization;
    bool budget_exceeded = false;
    std::size_t candidates_tried = 0;
};

namespace detail {

// lattice offsets around a center, ordered by Euclidean length, capped; the
// radius stops growing once the cap is comfortably oversampled or the ball
// radius is reached
inline std::vector<std::vector<int>> lattice_offsets(std::size_t dim, std::size_t cap,
                                                     int ball_radius, Rng& rng) {
    std::vector<std::vector<int>> out;
    if (dim == 0) {
        out.push_back({});
        return out;
    }
    if (dim <= 10) {
        int radius = 1;
        while (radius < ball_radius) {
            double count = 1.0;
            for (std::size_t d = 0; d < dim; ++d) count *= 2.0 * radius + 1.0;
            if (count >= static_cast<double>(cap) * 3.0) break;
            ++radius;
        }
        std::vector<int> cur(dim, -radius);
        for (;;) {
            out.push_back(cur);
            std::size_t d = 0;
            while (d < dim && ++cur[d] > radius) cur[d++] = -radius;
            if (d == dim) break;
        }
        std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
            long na = 0, nb = 0;
            for (int v : a) na += static_cast<long>(v) * v;
            for (int v : b) nb += static_cast<long>(v) * v;
            return na < nb;
        });
    } else {
        out.emplace_back(dim, 0);
        for (std::size_t k = 1; k < cap; ++k) {
            std::vector<int> off(dim, 0);
            for (auto& v : off) v = static_cast<int>(rng.uniform_index(3)) - 1;
            out.push_back(std::move(off));
        }
    }
    if (out.size() > cap) out.resize(cap);
    return out;
}

inline Matrix gram_schmidt_repair(Matrix v) {
    const std::size_t n = v.rows();
    for (std::size_t c = 0; c < v.cols(); ++c) {
        for (std::size_t prev = 0; prev < c; ++prev) {
            double d = 0.0;
            for (std::size_t i = 0; i < n; ++i) d += v(i, prev) * v(i, c);
            for (std::size_t i = 0; i < n; ++i) v(i, c) -= d * v(i, prev);
        }
        double nrm = 0.0;
        for (std::size_t i = 0; i < n; ++i) nrm += v(i, c) * v(i, c);
        nrm = std::sqrt(nrm);
        if (nrm < 1e-8) {
            // degenerate direction: substitute the first unused basis vector
            for (std::size_t cand = 0; cand < n; ++cand) {
                std::vector<double> e(n, 0.0);
                e[cand] = 1.0;
                for (std::size_t prev = 0; prev < c; ++prev) {
                    double d = 0.0;
                    for (std::size_t i = 0; i < n; ++i) d += v(i, prev) * e[i];
                    for (std::size_t i = 0; i < n; ++i) e[i] -= d * v(i, prev);
                }
                const double en = norm2(e);
                if (en > 0.5) {
                    for (std::size_t i = 0; i < n; ++i) v(i, c) = e[i] / en;
                    nrm = 1.0;
                    break;
                }
            }
        } else {
            for (std::size_t i = 0; i < n; ++i) v(i, c) /= nrm;
        }
    }
    return v;
}

} // namespace detail

// Enumeration-based approximate factorization: rank truncation, a lattice net
// of W0 candidates in the row span, orthonormal direction sets and norm
// guesses for the W1 program, per-column convex repair, and per-row NNLS for
// A. Candidates stream in a deterministic order that starts at heuristic
// seeds, and the best verified residual wins; caps make it an anytime method
// and set the budget flag when a net is truncated.
inline ApproxOutcome approx_nmf(const Matrix& m, std::size_t r, double epsilon,
                                ApproxConfig cfg = {}) {
    if (r < 1) throw invalid_params_error("inner dimension must be at least 1");
    cfg = resolve_defaults(cfg, r, epsilon);

    const std::size_t rt = std::min(r, std::min(m.rows(), m.cols()));
    const Matrix mt = rank_truncate(m, rt);
    const double norm_m = frobenius_norm(mt);
    const double mnorm_orig = frobenius_norm(m);

    ApproxOutcome out;
    out.factorization.inner_dim = r;
    out.factorization.a = Matrix(m.rows(), r);
    out.factorization.w = Matrix(r, m.cols());
    recompute_residuals(m, out.factorization);
    double best = out.factorization.residual_fro;

    auto consider = [&](Matrix a, Matrix w) {
        Factorization cand{std::move(a), std::move(w), r, 0.0, 0.0};
        recompute_residuals(m, cand);
        if (cand.residual_fro < best) {
            best = cand.residual_fro;
            out.factorization = std::move(cand);
        }
    };

    // exact witness when the inner dimension covers a full side
    if (r >= m.cols() || r >= m.rows()) {
        Matrix a(m.rows(), r), w(r, m.cols());
        if (r >= m.cols()) {
            for (std::size_t i = 0; i < m.rows(); ++i)
                for (std::size_t j = 0; j < m.cols(); ++j) a(i, j) = m(i, j);
            for (std::size_t j = 0; j < m.cols(); ++j) w(j, j) = 1.0;
        } else {
            for (std::size_t i = 0; i < m.rows(); ++i) a(i, i) = 1.0;
            for (std::size_t i = 0; i < m.rows(); ++i)
                for (std::size_t j = 0; j < m.cols(); ++j) w(i, j) = m(i, j);
        }
        consider(std::move(a), std::move(w));
        if (best <= 1e-10 * mnorm_orig) {
            out.candidates_tried = 1;
            return out;
        }
    }

    if (norm_m == 0.0) return out; // zero matrix: the empty factorization is exact

    Rng rng(cfg.seed);

    // heuristic seeds for the enumeration order
    auto [a_h, w_h] = nmf_multiplicative(mt, r, rng, cfg.mu_iters);
    anls_polish(mt, a_h, w_h, cfg.anls_rounds);
    for (std::size_t t = 0; t < r; ++t) { // keep rows normalizable
        double nrm = 0.0;
        for (std::size_t j = 0; j < w_h.cols(); ++j) nrm += w_h(t, j) * w_h(t, j);
        if (nrm == 0.0) w_h(t, t % w_h.cols()) = 1e-6;
    }
    std::tie(a_h, w_h) = normalize_factor_pair(std::move(a_h), std::move(w_h));

    const Matrix row_basis = rowspan_basis(mt); // m x rho
    const std::size_t rho = row_basis.cols();

    // W0'' candidate coefficients on the eps1 lattice in the row span
    const double grid = cfg.eps1;
    const double row_cap = std::sqrt(static_cast<double>(r));
    auto snap = [&](const Matrix& y) {
        Matrix s = y;
        for (auto& v : s.data()) v = std::round(v / grid) * grid;
        for (std::size_t i = 0; i < s.rows(); ++i) {
            double nrm = 0.0;
            for (std::size_t c = 0; c < s.cols(); ++c) nrm += s(i, c) * s(i, c);
            nrm = std::sqrt(nrm);
            if (nrm > row_cap)
                for (std::size_t c = 0; c < s.cols(); ++c) s(i, c) *= row_cap / nrm;
        }
        return s;
    };

    std::vector<Matrix> w0_candidates;
    const Matrix y_center = snap(w_h * row_basis);
    {
        const Matrix a_pinv = pseudoinverse(a_h, cfg.delta * norm_m);
        w0_candidates.push_back(y_center);
        w0_candidates.push_back(snap(a_pinv * mt * row_basis));
        w0_candidates.push_back(Matrix(r, rho));
        const int ball_radius = static_cast<int>(std::ceil(2.0 * row_cap / grid)) + 1;
        const auto offsets = detail::lattice_offsets(r * rho, cfg.max_w0_candidates, ball_radius, rng);
        for (const auto& off : offsets) {
            Matrix y = y_center;
            for (std::size_t idx = 0; idx < off.size(); ++idx)
                y.data()[idx] += grid * static_cast<double>(off[idx]);
            Matrix snapped = snap(y);
            bool dup = false;
            for (const auto& existing : w0_candidates)
                if (frobenius_norm(existing - snapped) < 1e-12) {
                    dup = true;
                    break;
                }
            if (!dup) w0_candidates.push_back(std::move(snapped));
            if (w0_candidates.size() >= cfg.max_w0_candidates + 3) break;
        }
    }
    out.budget_exceeded |= std::pow(2.0 * row_cap / grid + 1.0, static_cast<double>(r * rho)) >
                           static_cast<double>(w0_candidates.size());

    // orthonormal direction sets: heuristic singular directions first, then a
    // coarse sign net repaired by Gram-Schmidt
    std::vector<Matrix> v_sets;
    {
        const SvdResult sv = svd(a_h);
        Matrix v(r, r);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t t = 0; t < std::min(r, sv.right.cols()); ++t) v(i, t) = sv.right(i, t);
        v_sets.push_back(detail::gram_schmidt_repair(std::move(v)));
        if (r <= 3) {
            // coarse sign net repaired to orthonormal sets
            std::vector<int> digits(r * r, 0);
            for (;;) {
                std::size_t d = 0;
                while (d < digits.size() && ++digits[d] > 1) digits[d++] = -1;
                if (d == digits.size()) break;
                Matrix cand(r, r);
                for (std::size_t idx = 0; idx < digits.size(); ++idx)
                    cand.data()[idx] = static_cast<double>(digits[idx]);
                if (numeric_rank(cand, 1e-6) < r) continue;
                cand = detail::gram_schmidt_repair(std::move(cand));
                bool dup = false;
                for (const auto& existing : v_sets) dup |= frobenius_norm(existing - cand) < 1e-9;
                if (!dup) v_sets.push_back(std::move(cand));
                if (v_sets.size() >= cfg.max_v_sets) break;
            }
        } else {
            while (v_sets.size() < cfg.max_v_sets) {
                Matrix cand(r, r);
                for (auto& x : cand.data()) x = rng.gaussian();
                v_sets.push_back(detail::gram_schmidt_repair(std::move(cand)));
            }
        }
        out.budget_exceeded |= v_sets.size() >= cfg.max_v_sets;
    }

    // cutoff candidates, heuristic first
    std::vector<std::size_t> t0_list;
    {
        const SvdTruncation a_svd = truncated_svd(a_h, cfg.delta * norm_m);
        const std::size_t t0_h = std::max<std::size_t>(1, std::min(a_svd.cutoff_index, r));
        t0_list.push_back(t0_h);
        for (std::size_t t = 1; t <= r; ++t)
            if (t != t0_h) t0_list.push_back(t);
    }

    // ||A|| ladder in powers of the guess factor, nearest rungs first
    std::vector<double> norm_guesses;
    {
        const double lo = norm_m / 10.0, hi = 10.0 * norm_m;
        const double a_norm = std::min(std::max(frobenius_norm(a_h), lo), hi);
        const double lf = std::log(cfg.norm_guess_factor);
        const long center = std::lround(std::log(a_norm / norm_m) / lf);
        for (long step = 0; norm_guesses.size() < cfg.max_norm_guesses; ++step) {
            for (long sgn : {+1L, -1L}) {
                if (step == 0 && sgn < 0) continue;
                const double g = norm_m * std::exp(static_cast<double>(center + sgn * step) * lf);
                if (g >= lo && g <= hi && norm_guesses.size() < cfg.max_norm_guesses)
                    norm_guesses.push_back(g);
            }
            if (step > 2000) break;
        }
        out.budget_exceeded |= true; // the full 1.01 ladder always exceeds the cap
    }

    const double delta_norm = cfg.delta * norm_m;
    for (const Matrix& y : w0_candidates) {
        const Matrix w0 = y * row_basis.transpose(); // r x m
        for (const Matrix& v : v_sets) {
            for (const std::size_t t0 : t0_list) {
                for (const double g : norm_guesses) {
                    if (out.candidates_tried >= cfg.max_candidates) {
                        out.budget_exceeded = true;
                        goto done;
                    }
                    ++out.candidates_tried;

                    Matrix w_prime(r, m.cols());
                    for (std::size_t j = 0; j < m.cols(); ++j) {
                        const std::vector<double> w0_col = w0.col(j);
                        const std::vector<double> z = solve_w1_column(w0_col, v, t0, g, delta_norm);
                        for (std::size_t i = 0; i < r; ++i) w_prime(i, j) = w0_col[i] + z[i];
                    }
                    w_prime.clamp_nonnegative(1e-9);

                    Matrix a_prime(m.rows(), r);
                    for (std::size_t i = 0; i < m.rows(); ++i) {
                        const std::vector<double> row = nnls_row(m.row(i), w_prime);
                        for (std::size_t k = 0; k < r; ++k) a_prime(i, k) = row[k];
                    }
                    consider(std::move(a_prime), std::move(w_prime));
                }
            }
        }
    }
done:
    out.factorization.a.clamp_nonnegative(1e-12);
    out.factorization.w.clamp_nonnegative(1e-12);
    recompute_residuals(m, out.factorization);
    return out;
}

} // namespace nmfpack
