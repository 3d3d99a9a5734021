#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "nmfpack/convex_oracle.hpp"
#include "nmfpack/errors.hpp"
#include "nmfpack/factorization.hpp"
#include "nmfpack/matrix.hpp"
#include "nmfpack/nmf_heuristics.hpp"
#include "nmfpack/partition_enum.hpp"
#include "nmfpack/rng.hpp"
#include "nmfpack/svd.hpp"

namespace nmfpack {

enum class SolveStatus { solved, unresolved, provably_infeasible };

// Basis-reduced view of M for the full-rank factorization search. The only
// unknowns are the two r x r transforms t_c and t_r; candidate factors are
// A = m_r * t_r and W = t_c * m_c.
struct SimplicialSystem {
    Matrix column_basis; // n x r
    Matrix row_basis;    // m x r
    Matrix m_c;          // r x m, columns of M in the column basis
    Matrix m_r;          // n x r, rows of M in the row basis
    Matrix t_c;          // r x r, filled on success
    Matrix t_r;          // r x r, filled on success
};

inline SimplicialSystem build_simplicial_system(const Matrix& m, std::size_t r, const Matrix& column_basis,
                                                const Matrix& row_basis) {
    if (column_basis.rows() != m.rows() || column_basis.cols() != r)
        throw dimension_mismatch("column basis shape");
    if (row_basis.rows() != m.cols() || row_basis.cols() != r)
        throw dimension_mismatch("row basis shape");
    SimplicialSystem sys;
    sys.column_basis = column_basis;
    sys.row_basis = row_basis;
    sys.m_c = pseudoinverse(column_basis) * m;
    sys.m_r = (pseudoinverse(row_basis) * m.transpose()).transpose();
    const double scale = frobenius_norm(m);
    if (frobenius_norm(sys.column_basis * sys.m_c - m) > 1e-8 * scale)
        throw invalid_params_error("column basis does not span the columns of m");
    if (frobenius_norm(sys.m_r * row_basis.transpose() - m) > 1e-8 * scale)
        throw invalid_params_error("row basis does not span the rows of m");
    return sys;
}

inline SimplicialSystem build_simplicial_system(const Matrix& m, std::size_t r) {
    const SvdResult sv = svd(m);
    Matrix u(m.rows(), r), v(m.cols(), r);
    for (std::size_t k = 0; k < r; ++k) {
        for (std::size_t i = 0; i < m.rows(); ++i) u(i, k) = sv.left(i, k);
        for (std::size_t i = 0; i < m.cols(); ++i) v(i, k) = sv.right(i, k);
    }
    return build_simplicial_system(m, r, u, v);
}

struct SfOptions {
    std::size_t restarts = 200;
    std::size_t mu_iters = 300;
    std::size_t anls_rounds = 12;
    std::size_t lbfgs_iters = 300;
    double tol = 1e-7;
    std::uint64_t seed = 0;
};

struct SfOutcome {
    SolveStatus status = SolveStatus::unresolved;
    std::optional<Factorization> factorization;
    SimplicialSystem system;
    VerifyReport report;
    std::size_t restarts_used = 0;
};

namespace detail {

// squared-hinge penalty on negativity plus squared reconstruction error,
// relative to ||m||_F^2
struct SfPenalty {
    const Matrix& m;
    const Matrix& m_c;
    const Matrix& m_r;
    std::size_t r;
    double scale2;
    double lambda = 4.0;

    double operator()(const std::vector<double>& x, std::vector<double>& grad) const {
        const std::size_t rr = r * r;
        Matrix t_c(r, r), t_r(r, r);
        std::copy(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(rr), t_c.data().begin());
        std::copy(x.begin() + static_cast<std::ptrdiff_t>(rr), x.end(), t_r.data().begin());

        const Matrix w = t_c * m_c;       // r x m
        const Matrix a = m_r * t_r;       // n x r
        Matrix e = a * w - m;             // n x m

        double f = 0.0;
        for (double v : e.data()) f += v * v;
        Matrix neg_w(w.rows(), w.cols()), neg_a(a.rows(), a.cols());
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double v = std::min(w.data()[i], 0.0);
            neg_w.data()[i] = v;
            f += lambda * v * v;
        }
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double v = std::min(a.data()[i], 0.0);
            neg_a.data()[i] = v;
            f += lambda * v * v;
        }
        f /= scale2;

        Matrix grad_a = e * w.transpose();             // n x r
        Matrix grad_w = a.transpose() * e;             // r x m
        for (std::size_t i = 0; i < grad_a.size(); ++i)
            grad_a.data()[i] = 2.0 * (grad_a.data()[i] + lambda * neg_a.data()[i]) / scale2;
        for (std::size_t i = 0; i < grad_w.size(); ++i)
            grad_w.data()[i] = 2.0 * (grad_w.data()[i] + lambda * neg_w.data()[i]) / scale2;

        const Matrix g_tc = grad_w * m_c.transpose();  // r x r
        const Matrix g_tr = m_r.transpose() * grad_a;  // r x r
        grad.resize(2 * rr);
        std::copy(g_tc.data().begin(), g_tc.data().end(), grad.begin());
        std::copy(g_tr.data().begin(), g_tr.data().end(), grad.begin() + static_cast<std::ptrdiff_t>(rr));
        return f;
    }
};

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace detail

// Full-rank exact factorization search: multi-start penalty minimization over
// the two r x r transforms, accepted only through verify_factorization.
// Unresolved is an outcome, not an error; it never asserts nonexistence.
inline SfOutcome solve_sf(const Matrix& m, std::size_t r, const SfOptions& opts,
                          SimplicialSystem system) {
    const std::size_t rank = numeric_rank(m);
    if (rank != r) throw rank_mismatch_error(rank, r);

    SfOutcome out;
    out.system = std::move(system);
    const Matrix pinv_mc = pseudoinverse(out.system.m_c); // m x r
    const Matrix pinv_mr = pseudoinverse(out.system.m_r); // r x n
    const double scale = frobenius_norm(m);

    detail::SfPenalty penalty{m, out.system.m_c, out.system.m_r, r, scale * scale, 4.0};

    for (std::size_t attempt = 0; attempt < opts.restarts; ++attempt) {
        out.restarts_used = attempt + 1;
        Rng rng(detail::mix_seed(opts.seed, attempt));

        Matrix t_c(r, r), t_r(r, r);
        // warm start from a heuristic factorization; every fourth attempt digs
        // deeper since alternating updates converge slowly when conditioned badly
        const bool deep = attempt % 4 == 1;
        auto [a0, w0] =
            nmf_multiplicative(m, r, rng, deep ? 5 * opts.mu_iters : opts.mu_iters);
        anls_polish(m, a0, w0, deep ? 4 * opts.anls_rounds : opts.anls_rounds);
        t_c = w0 * pinv_mc;
        t_r = pinv_mr * a0;
        if (attempt > 1 && !deep) {
            const double jitter = attempt < opts.restarts / 2 ? 0.1 : 1.0;
            for (auto& v : t_c.data()) v += jitter * rng.gaussian();
            for (auto& v : t_r.data()) v += jitter * rng.gaussian();
        }

        std::vector<double> x(2 * r * r);
        std::copy(t_c.data().begin(), t_c.data().end(), x.begin());
        std::copy(t_r.data().begin(), t_r.data().end(), x.begin() + static_cast<std::ptrdiff_t>(r * r));
        x = lbfgs_minimize(penalty, std::move(x), opts.lbfgs_iters, 1e-14, 1e-22);

        Matrix t_c_fit(r, r), t_r_fit(r, r);
        std::copy(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(r * r), t_c_fit.data().begin());
        std::copy(x.begin() + static_cast<std::ptrdiff_t>(r * r), x.end(), t_r_fit.data().begin());

        Factorization cand;
        cand.a = out.system.m_r * t_r_fit;
        cand.w = t_c_fit * out.system.m_c;
        cand.inner_dim = r;
        const VerifyReport raw = verify_factorization(m, cand, opts.tol);
        if (!raw.ok) continue;

        cand.a.clamp_nonnegative(1.0); // raw check bounded the negativity already
        cand.w.clamp_nonnegative(1.0);
        const VerifyReport clamped = verify_factorization(m, cand, opts.tol);
        if (!clamped.ok) continue;

        recompute_residuals(m, cand);
        out.status = SolveStatus::solved;
        out.factorization = std::move(cand);
        out.system.t_c = std::move(t_c_fit);
        out.system.t_r = std::move(t_r_fit);
        out.report = raw;
        return out;
    }
    out.status = SolveStatus::unresolved;
    return out;
}

inline SfOutcome solve_sf(const Matrix& m, std::size_t r, const SfOptions& opts = {}) {
    const std::size_t rank = numeric_rank(m);
    if (rank != r) throw rank_mismatch_error(rank, r);
    return solve_sf(m, r, opts, build_simplicial_system(m, r));
}

// ---------------------------------------------------------------------------
// proper chains

// All maximal independent column subsets, i.e. every size-rank(a) subset of
// columns that still has full numeric rank, in ascending lexicographic order.
inline std::vector<std::vector<std::size_t>> maximal_independent_column_sets(const Matrix& a,
                                                                             double rel_tol = 1e-9) {
    const std::size_t s = numeric_rank(a, rel_tol);
    std::vector<std::vector<std::size_t>> out;
    std::vector<std::size_t> pick;
    std::function<void(std::size_t)> rec = [&](std::size_t start) {
        if (pick.size() == s) {
            if (numeric_rank(a.select_cols(pick), rel_tol) == s) out.push_back(pick);
            return;
        }
        for (std::size_t j = start; j + (s - pick.size()) <= a.cols(); ++j) {
            pick.push_back(j);
            rec(j + 1);
            pick.pop_back();
        }
    };
    if (s > 0) rec(0);
    return out;
}

// Lexicographically first maximal independent set whose cone contains the
// column; empty when the column is outside every candidate cone.
inline std::optional<std::vector<std::size_t>> minimal_basis(const Matrix& a,
                                                             const std::vector<double>& column) {
    for (const auto& set : maximal_independent_column_sets(a)) {
        std::vector<std::vector<double>> gens;
        for (std::size_t j : set) gens.push_back(a.col(j));
        if (in_cone(column, gens)) return set;
    }
    return std::nullopt;
}

// Pi(a, u): zero on rows outside u, pseudoinverse of the selected columns on u.
inline Matrix restricted_pseudoinverse(const Matrix& a, const std::vector<std::size_t>& u) {
    const Matrix pinv = pseudoinverse(a.select_cols(u)); // |u| x n
    Matrix out(a.cols(), a.rows());
    for (std::size_t t = 0; t < u.size(); ++t)
        for (std::size_t j = 0; j < a.rows(); ++j) out(u[t], j) = pinv(t, j);
    return out;
}

// Proper chain built from an exact factorization M = a W: per-column minimal
// bases give W', then per-row minimal bases against W' give A'. Weights come
// from the cone LP, so tests can cross-check them against the restricted
// pseudoinverse route.
struct ProperChain {
    Matrix w_prime; // r x m
    Matrix a_prime; // n x r
    std::vector<std::vector<std::size_t>> col_sets; // C(a)
    std::vector<std::vector<std::size_t>> row_sets; // R(w_prime)
    std::vector<std::size_t> sigma_w; // column -> index into col_sets
    std::vector<std::size_t> sigma_a; // row -> index into row_sets
};

inline ProperChain build_proper_chain(const Matrix& m, const Matrix& a) {
    ProperChain chain;
    chain.col_sets = maximal_independent_column_sets(a);
    chain.sigma_w.assign(m.cols(), 0);
    chain.w_prime = Matrix(a.cols(), m.cols());
    for (std::size_t i = 0; i < m.cols(); ++i) {
        const std::vector<double> target = m.col(i);
        bool placed = false;
        for (std::size_t c = 0; c < chain.col_sets.size() && !placed; ++c) {
            std::vector<std::vector<double>> gens;
            for (std::size_t j : chain.col_sets[c]) gens.push_back(a.col(j));
            if (auto weights = in_cone(target, gens)) {
                chain.sigma_w[i] = c;
                for (std::size_t t = 0; t < chain.col_sets[c].size(); ++t)
                    chain.w_prime(chain.col_sets[c][t], i) = (*weights)[t];
                placed = true;
            }
        }
        if (!placed) throw invalid_params_error("column " + std::to_string(i) + " is outside cone(a)");
    }

    const Matrix wt = chain.w_prime.transpose();
    chain.row_sets = maximal_independent_column_sets(wt);
    chain.sigma_a.assign(m.rows(), 0);
    chain.a_prime = Matrix(m.rows(), a.cols());
    for (std::size_t j = 0; j < m.rows(); ++j) {
        const std::vector<double> target = m.row(j);
        bool placed = false;
        for (std::size_t c = 0; c < chain.row_sets.size() && !placed; ++c) {
            std::vector<std::vector<double>> gens;
            for (std::size_t i : chain.row_sets[c]) gens.push_back(chain.w_prime.row(i));
            if (auto weights = in_cone(target, gens)) {
                chain.sigma_a[j] = c;
                for (std::size_t t = 0; t < chain.row_sets[c].size(); ++t)
                    chain.a_prime(j, chain.row_sets[c][t]) = (*weights)[t];
                placed = true;
            }
        }
        if (!placed) throw invalid_params_error("row " + std::to_string(j) + " is outside cone(w')");
    }
    return chain;
}

// ---------------------------------------------------------------------------
// general exact NMF via partition pairs

// Bilinear system for one pair of column/row partitions. Transforms T_p map
// span coordinates of columns to candidate W columns; S_q map row coordinates
// to candidate A rows. Variables are laid out T_0, T_1, ..., then S_0, ...
struct PolySystem {
    std::size_t r = 0;
    std::size_t span_dim = 0;
    Matrix m_c;        // span_dim x m
    Matrix m_r;        // n x span_dim
    Matrix col_basis;  // n x span_dim
    Matrix row_basis;  // m x span_dim
    std::vector<std::size_t> col_part; // column -> compact part id
    std::vector<std::size_t> row_part; // row -> compact part id
    std::size_t num_col_parts = 0;
    std::size_t num_row_parts = 0;

    std::size_t t_size() const { return r * span_dim; }
    std::size_t num_vars() const { return (num_col_parts + num_row_parts) * t_size(); }
    std::size_t t_offset(std::size_t p) const { return p * t_size(); }
    std::size_t s_offset(std::size_t q) const { return (num_col_parts + q) * t_size(); }

    Matrix t_of(const std::vector<double>& x, std::size_t p) const {
        Matrix t(r, span_dim);
        std::copy(x.begin() + static_cast<std::ptrdiff_t>(t_offset(p)),
                  x.begin() + static_cast<std::ptrdiff_t>(t_offset(p) + t_size()), t.data().begin());
        return t;
    }
    Matrix s_of(const std::vector<double>& x, std::size_t q) const {
        Matrix s(span_dim, r);
        std::copy(x.begin() + static_cast<std::ptrdiff_t>(s_offset(q)),
                  x.begin() + static_cast<std::ptrdiff_t>(s_offset(q) + t_size()), s.data().begin());
        return s;
    }

    // W column i = T_{p(i)} mc_i, A row j = mr^j S_{q(j)}
    std::pair<Matrix, Matrix> assemble(const std::vector<double>& x) const {
        std::vector<Matrix> ts, ss;
        for (std::size_t p = 0; p < num_col_parts; ++p) ts.push_back(t_of(x, p));
        for (std::size_t q = 0; q < num_row_parts; ++q) ss.push_back(s_of(x, q));
        Matrix w(r, m_c.cols()), a(m_r.rows(), r);
        for (std::size_t i = 0; i < m_c.cols(); ++i) {
            const Matrix& t = ts[col_part[i]];
            for (std::size_t row = 0; row < r; ++row) {
                double v = 0.0;
                for (std::size_t c = 0; c < span_dim; ++c) v += t(row, c) * m_c(c, i);
                w(row, i) = v;
            }
        }
        for (std::size_t j = 0; j < m_r.rows(); ++j) {
            const Matrix& s = ss[row_part[j]];
            for (std::size_t col = 0; col < r; ++col) {
                double v = 0.0;
                for (std::size_t c = 0; c < span_dim; ++c) v += m_r(j, c) * s(c, col);
                a(j, col) = v;
            }
        }
        return {std::move(a), std::move(w)};
    }

    // largest violated constraint at a candidate assignment: negativity of the
    // transformed columns/rows, and the bilinear reconstruction equations
    double max_violation(const std::vector<double>& x, const Matrix& m) const {
        auto [a, w] = assemble(x);
        double viol = 0.0;
        for (double v : w.data()) viol = std::max(viol, -v);
        for (double v : a.data()) viol = std::max(viol, -v);
        const Matrix prod = a * w;
        for (std::size_t i = 0; i < m.size(); ++i)
            viol = std::max(viol, std::fabs(prod.data()[i] - m.data()[i]));
        return viol;
    }
};

inline PolySystem build_proper_chain_system(const Matrix& m, std::size_t r,
                                            const PartitionSpec& col_partition,
                                            const PartitionSpec& row_partition) {
    PolySystem sys;
    sys.r = r;
    const std::size_t rank = numeric_rank(m);
    sys.span_dim = std::max<std::size_t>(rank, 1);
    sys.col_basis = colspan_basis(m);
    sys.row_basis = rowspan_basis(m);
    if (sys.col_basis.cols() == 0) { // zero matrix still gets a one-dimensional frame
        sys.col_basis = Matrix(m.rows(), 1);
        sys.col_basis(0, 0) = 1.0;
        sys.row_basis = Matrix(m.cols(), 1);
        sys.row_basis(0, 0) = 1.0;
    }
    sys.m_c = sys.col_basis.transpose() * m;
    sys.m_r = m * sys.row_basis;

    const std::size_t transform_cap = r >= 60 ? ~std::size_t{0} : (std::size_t{1} << std::min<std::size_t>(r, 59));

    auto compact = [&](const PartitionSpec& spec, std::size_t expected, const char* what) {
        if (spec.assignment.size() != expected)
            throw invalid_partition_error(std::string(what) + " partition size mismatch");
        std::vector<std::size_t> ids(spec.parts.size(), spec.parts.size());
        std::size_t next = 0;
        std::vector<std::size_t> map(expected, 0);
        for (std::size_t item = 0; item < expected; ++item) {
            const std::size_t part = spec.assignment[item];
            if (part >= spec.parts.size())
                throw invalid_partition_error("part index out of range");
            if (ids[part] == spec.parts.size()) ids[part] = next++;
            map[item] = ids[part];
        }
        if (next > transform_cap)
            throw invalid_partition_error("more parts than available transforms");
        return std::pair{map, next};
    };
    auto [cmap, ccount] = compact(col_partition, m.cols(), "column");
    sys.col_part = cmap;
    sys.num_col_parts = ccount;
    auto [rmap, rcount] = compact(row_partition, m.rows(), "row");
    sys.row_part = rmap;
    sys.num_row_parts = rcount;
    return sys;
}

struct GeneralOptions {
    std::size_t max_pairs = 64;
    std::size_t restarts_per_pair = 50;
    std::size_t enum_k = 1;        // hyperplane-set groups per partition
    std::size_t partition_budget = 200000;
    std::size_t mu_iters = 300;
    std::size_t anls_rounds = 12;
    std::size_t lbfgs_iters = 250;
    double tol = 1e-7;
    std::uint64_t seed = 0;
};

struct GeneralOutcome {
    SolveStatus status = SolveStatus::unresolved;
    std::optional<Factorization> factorization;
    VerifyReport report;
    std::size_t pairs_tried = 0;
    std::size_t restarts_used = 0;
};

// single-part partition: every item in P_1, empty remainder
inline PartitionSpec trivial_partition(std::size_t items) {
    PartitionSpec spec;
    spec.k = 1;
    spec.s = 1;
    spec.parts.assign(2, {});
    spec.assignment.assign(items, 0);
    for (std::size_t i = 0; i < items; ++i) spec.parts[0].push_back(i);
    return spec;
}

inline std::size_t nonempty_parts(const PartitionSpec& spec) {
    std::size_t c = 0;
    for (const auto& p : spec.parts)
        if (!p.empty()) ++c;
    return c;
}

namespace detail {

struct GeneralPenalty {
    const PolySystem& sys;
    const Matrix& m;
    double scale2;
    double lambda = 4.0;

    double operator()(const std::vector<double>& x, std::vector<double>& grad) const {
        auto [a, w] = sys.assemble(x);
        Matrix e = a * w - m;

        double f = 0.0;
        for (double v : e.data()) f += v * v;
        Matrix neg_w(w.rows(), w.cols()), neg_a(a.rows(), a.cols());
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double v = std::min(w.data()[i], 0.0);
            neg_w.data()[i] = v;
            f += lambda * v * v;
        }
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double v = std::min(a.data()[i], 0.0);
            neg_a.data()[i] = v;
            f += lambda * v * v;
        }
        f /= scale2;

        Matrix grad_a = e * w.transpose(); // n x r
        Matrix grad_w = a.transpose() * e; // r x m
        for (std::size_t i = 0; i < grad_a.size(); ++i)
            grad_a.data()[i] = 2.0 * (grad_a.data()[i] + lambda * neg_a.data()[i]) / scale2;
        for (std::size_t i = 0; i < grad_w.size(); ++i)
            grad_w.data()[i] = 2.0 * (grad_w.data()[i] + lambda * neg_w.data()[i]) / scale2;

        grad.assign(sys.num_vars(), 0.0);
        for (std::size_t i = 0; i < sys.m_c.cols(); ++i) {
            const std::size_t off = sys.t_offset(sys.col_part[i]);
            for (std::size_t row = 0; row < sys.r; ++row)
                for (std::size_t c = 0; c < sys.span_dim; ++c)
                    grad[off + row * sys.span_dim + c] += grad_w(row, i) * sys.m_c(c, i);
        }
        for (std::size_t j = 0; j < sys.m_r.rows(); ++j) {
            const std::size_t off = sys.s_offset(sys.row_part[j]);
            for (std::size_t c = 0; c < sys.span_dim; ++c)
                for (std::size_t col = 0; col < sys.r; ++col)
                    grad[off + c * sys.r + col] += sys.m_r(j, c) * grad_a(j, col);
        }
        return f;
    }
};

} // namespace detail

// Exact NMF search for general (possibly rank-deficient) targets: iterate
// candidate partition pairs in ascending complexity, run the multi-start
// penalty solver on each bilinear system, accept only verified factors.
// ProvablyInfeasible comes only from the rank lower bound.
inline GeneralOutcome solve_general_nmf(const Matrix& m, std::size_t r, const GeneralOptions& opts = {}) {
    GeneralOutcome out;
    const std::size_t rank = numeric_rank(m);
    if (r < rank) {
        out.status = SolveStatus::provably_infeasible;
        return out;
    }
    const double scale = frobenius_norm(m);

    // inner dimension large enough for an identity witness
    if (r >= m.cols() || r >= m.rows()) {
        Factorization f;
        f.inner_dim = r;
        if (r >= m.cols()) {
            f.a = Matrix(m.rows(), r);
            for (std::size_t i = 0; i < m.rows(); ++i)
                for (std::size_t j = 0; j < m.cols(); ++j) f.a(i, j) = m(i, j);
            f.w = Matrix(r, m.cols());
            for (std::size_t j = 0; j < m.cols(); ++j) f.w(j, j) = 1.0;
        } else {
            f.a = Matrix(m.rows(), r);
            for (std::size_t i = 0; i < m.rows(); ++i) f.a(i, i) = 1.0;
            f.w = Matrix(r, m.cols());
            for (std::size_t i = 0; i < m.rows(); ++i)
                for (std::size_t j = 0; j < m.cols(); ++j) f.w(i, j) = m(i, j);
        }
        out.report = verify_factorization(m, f, opts.tol);
        recompute_residuals(m, f);
        out.factorization = std::move(f);
        out.status = SolveStatus::solved;
        return out;
    }

    // candidate partitions, cheapest shapes first
    std::vector<PartitionSpec> col_parts{trivial_partition(m.cols())};
    std::vector<PartitionSpec> row_parts{trivial_partition(m.rows())};
    if (opts.enum_k >= 1 && opts.max_pairs > 1) {
        try {
            const std::size_t s_enum = std::max<std::size_t>(rank, 1);
            for (auto& spec : enumerate_simplicial_partitions(m, opts.enum_k, s_enum, opts.partition_budget))
                col_parts.push_back(std::move(spec));
            for (auto& spec :
                 enumerate_simplicial_partitions(m.transpose(), opts.enum_k, s_enum, opts.partition_budget))
                row_parts.push_back(std::move(spec));
        } catch (const budget_exceeded_error&) {
            // fall back to whatever was collected before the cap
        }
    }

    struct PairRef {
        std::size_t cost, ci, ri;
    };
    std::vector<PairRef> order;
    for (std::size_t ci = 0; ci < col_parts.size(); ++ci)
        for (std::size_t ri = 0; ri < row_parts.size(); ++ri)
            order.push_back({nonempty_parts(col_parts[ci]) + nonempty_parts(row_parts[ri]),
                             ci, ri});
    std::stable_sort(order.begin(), order.end(), [](const PairRef& a, const PairRef& b) {
        if (a.cost != b.cost) return a.cost < b.cost;
        if (a.ci != b.ci) return a.ci < b.ci;
        return a.ri < b.ri;
    });
    if (order.size() > opts.max_pairs) order.resize(opts.max_pairs);

    for (std::size_t pair_idx = 0; pair_idx < order.size(); ++pair_idx) {
        out.pairs_tried = pair_idx + 1;
        PolySystem sys;
        try {
            sys = build_proper_chain_system(m, r, col_parts[order[pair_idx].ci],
                                            row_parts[order[pair_idx].ri]);
        } catch (const invalid_partition_error&) {
            continue;
        }
        const Matrix pinv_mc = pseudoinverse(sys.m_c); // m x span_dim
        const Matrix pinv_mr = pseudoinverse(sys.m_r); // span_dim x n
        detail::GeneralPenalty penalty{sys, m, scale * scale, 4.0};

        for (std::size_t attempt = 0; attempt < opts.restarts_per_pair; ++attempt) {
            ++out.restarts_used;
            Rng rng(detail::mix_seed(opts.seed, pair_idx * 10007 + attempt));

            std::vector<double> x(sys.num_vars());
            auto [a0, w0] = nmf_multiplicative(m, r, rng, opts.mu_iters);
            anls_polish(m, a0, w0, attempt == 0 ? opts.anls_rounds : opts.anls_rounds / 2);
            const Matrix t0 = w0 * pinv_mc;  // r x span_dim
            const Matrix s0 = pinv_mr * a0;  // span_dim x r
            for (std::size_t p = 0; p < sys.num_col_parts; ++p)
                std::copy(t0.data().begin(), t0.data().end(),
                          x.begin() + static_cast<std::ptrdiff_t>(sys.t_offset(p)));
            for (std::size_t q = 0; q < sys.num_row_parts; ++q)
                std::copy(s0.data().begin(), s0.data().end(),
                          x.begin() + static_cast<std::ptrdiff_t>(sys.s_offset(q)));
            if (attempt > 0) {
                const double jitter = attempt < opts.restarts_per_pair / 2 ? 0.1 : 1.0;
                for (auto& v : x) v += jitter * rng.gaussian();
            }

            x = lbfgs_minimize(penalty, std::move(x), opts.lbfgs_iters, 1e-14, 1e-22);

            auto [a, w] = sys.assemble(x);
            Factorization cand;
            cand.a = std::move(a);
            cand.w = std::move(w);
            cand.inner_dim = r;
            const VerifyReport raw = verify_factorization(m, cand, opts.tol);
            if (!raw.ok) continue;
            cand.a.clamp_nonnegative(1.0);
            cand.w.clamp_nonnegative(1.0);
            if (!verify_factorization(m, cand, opts.tol).ok) continue;

            recompute_residuals(m, cand);
            out.status = SolveStatus::solved;
            out.factorization = std::move(cand);
            out.report = raw;
            return out;
        }
    }
    out.status = SolveStatus::unresolved;
    return out;
}

} // namespace nmfpack
