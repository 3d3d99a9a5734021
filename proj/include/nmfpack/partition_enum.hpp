#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include "nmfpack/errors.hpp"
#include "nmfpack/linprog.hpp"
#include "nmfpack/matrix.hpp"
#include "nmfpack/svd.hpp"

namespace nmfpack {

// Column labels in {-1, 0, +1} induced by the sign of h . M_i, with a
// relative zero band for columns sitting on the hyperplane.
struct HyperplaneSeparation {
    std::vector<double> normal;
    std::vector<int> labels;
};

inline HyperplaneSeparation hyperplane_separation(const Matrix& m, const std::vector<double>& h) {
    if (h.size() != m.rows()) throw dimension_mismatch("hyperplane normal");
    HyperplaneSeparation sep;
    sep.normal = h;
    sep.labels.resize(m.cols());
    const double hn = norm2(h);
    for (std::size_t i = 0; i < m.cols(); ++i) {
        const std::vector<double> c = m.col(i);
        const double v = dot(h, c);
        const double band = 1e-10 * hn * norm2(c);
        sep.labels[i] = v > band ? 1 : (v < -band ? -1 : 0);
    }
    return sep;
}

// A partition maps every column to +1 or -1; columns exactly on the
// hyperplane take +1.
using HyperplaneLabeling = std::vector<int>;

namespace detail {

struct ColumnGeometry {
    Matrix coords;      // span_dim x m, columns in an orthonormal basis of the span
    Matrix basis;       // ambient x span_dim
    std::size_t span_dim = 0;
    std::size_t m = 0;
};

inline ColumnGeometry column_geometry(const Matrix& mat) {
    ColumnGeometry g;
    g.m = mat.cols();
    g.basis = colspan_basis(mat);
    g.span_dim = g.basis.cols();
    g.coords = g.basis.transpose() * mat;
    return g;
}

// Max-margin feasibility: is there an h with h . x_i >= 0 on +1 columns and
// h . x_i <= -margin on -1 columns? Columns are normalized so the reported
// margin is scale free. Returns the optimal margin (1 when nothing is
// labeled -1, since h = 0 then satisfies everything).
inline double labeling_margin(const ColumnGeometry& g, const HyperplaneLabeling& labels,
                              std::vector<double>* witness = nullptr) {
    const std::size_t d = g.span_dim;
    // variables: h+ (d), h- (d), gamma
    SimplexLp lp(2 * d + 1);
    lp.set_cost(2 * d, -1.0); // maximize gamma
    for (std::size_t i = 0; i < g.m; ++i) {
        std::vector<double> x(d);
        for (std::size_t c = 0; c < d; ++c) x[c] = g.coords(c, i);
        const double nrm = norm2(x);
        if (nrm > 0.0)
            for (double& v : x) v /= nrm;
        std::vector<double> row(2 * d + 1, 0.0);
        for (std::size_t c = 0; c < d; ++c) {
            row[c] = x[c];
            row[d + c] = -x[c];
        }
        if (labels[i] >= 0) {
            lp.add_ge(row, 0.0);
        } else {
            row[2 * d] = 1.0; // h . x + gamma <= 0
            lp.add_le(row, 0.0);
        }
    }
    for (std::size_t c = 0; c < 2 * d; ++c) {
        std::vector<double> row(2 * d + 1, 0.0);
        row[c] = 1.0;
        lp.add_le(row, 1.0);
    }
    {
        std::vector<double> row(2 * d + 1, 0.0);
        row[2 * d] = 1.0;
        lp.add_le(row, 1.0);
    }
    const LpSolution sol = lp.minimize();
    if (sol.status != LpStatus::optimal) return -1.0;
    if (witness) {
        witness->assign(d, 0.0);
        for (std::size_t c = 0; c < d; ++c) (*witness)[c] = sol.x[c] - sol.x[d + c];
    }
    return -sol.objective;
}

} // namespace detail

// Margin of the best separating hyperplane for a +-1 labeling of the columns,
// measured against unit-normalized columns. Positive means realizable.
inline double hyperplane_labeling_margin(const Matrix& m, const HyperplaneLabeling& labels) {
    if (labels.size() != m.cols()) throw dimension_mismatch("labeling length");
    const detail::ColumnGeometry g = detail::column_geometry(m);
    return detail::labeling_margin(g, labels);
}

struct LabeledHyperplane {
    HyperplaneLabeling labels;
    std::vector<double> normal; // ambient witness normal (zero vector for the all-plus labeling)
};

// Enumerates every labeling of the columns realizable as sign(h . M_i) with
// the zero -> +1 convention. The search walks nested sets of columns pinned
// onto each hyperplane level: at every level a spanning subset of the still
// undecided columns fixes the hyperplane up to sign, strictly signed columns
// take labels, and the columns on the hyperplane recurse one level deeper.
// Candidates are deduplicated on the realized labeling and validated by LP
// before inclusion.
inline std::vector<LabeledHyperplane> enumerate_hyperplane_partitions_witnessed(const Matrix& m,
                                                                                std::size_t s) {
    if (m.cols() == 0) throw invalid_params_error("matrix has no columns");
    const detail::ColumnGeometry g = detail::column_geometry(m);
    if (g.span_dim > s) throw rank_too_high_error(g.span_dim, s);

    const std::size_t ncols = g.m;
    std::vector<std::vector<double>> cols(ncols, std::vector<double>(g.span_dim));
    for (std::size_t i = 0; i < ncols; ++i)
        for (std::size_t c = 0; c < g.span_dim; ++c) cols[i][c] = g.coords(c, i);

    std::map<HyperplaneLabeling, std::vector<double>> found; // resolved labeling -> witness
    std::set<std::vector<signed char>> visited;               // states, 0 = undecided

    auto record = [&](const std::vector<signed char>& labels) {
        HyperplaneLabeling resolved(ncols);
        for (std::size_t i = 0; i < ncols; ++i) resolved[i] = labels[i] == 0 ? 1 : labels[i];
        if (found.count(resolved)) return;
        std::vector<double> witness;
        if (detail::labeling_margin(g, resolved, &witness) > 1e-7) {
            std::vector<double> ambient(m.rows(), 0.0);
            for (std::size_t c = 0; c < witness.size(); ++c)
                for (std::size_t i = 0; i < m.rows(); ++i) ambient[i] += g.basis(i, c) * witness[c];
            found.emplace(std::move(resolved), std::move(ambient));
        }
    };

    std::function<void(std::vector<signed char>&, const std::vector<std::size_t>&)> explore =
        [&](std::vector<signed char>& labels, const std::vector<std::size_t>& active) {
            if (!visited.insert(labels).second) return;
            record(labels);
            if (active.empty()) return;

            // orthonormal basis of the active columns' span
            Matrix act(g.span_dim, active.size());
            for (std::size_t j = 0; j < active.size(); ++j)
                for (std::size_t c = 0; c < g.span_dim; ++c) act(c, j) = cols[active[j]][c];
            const Matrix q = colspan_basis(act);
            const std::size_t dv = q.cols();
            if (dv == 0) return; // only zero columns remain

            // every spanning choice of dv-1 independent active columns pins a hyperplane
            std::vector<std::size_t> chosen;
            std::function<void(std::size_t, const Matrix&)> pick = [&](std::size_t start,
                                                                       const Matrix& partial_basis) {
                if (chosen.size() == dv - 1) {
                    // normal = the unique direction of span(active) orthogonal to the
                    // chosen columns: strip their orthonormalized span from the active
                    // basis and keep the first nonzero remainder
                    std::vector<double> normal(g.span_dim, 0.0);
                    for (std::size_t c = 0; c < dv; ++c) {
                        std::vector<double> cand(g.span_dim);
                        for (std::size_t a = 0; a < g.span_dim; ++a) cand[a] = q(a, c);
                        for (std::size_t t = 0; t < partial_basis.cols(); ++t) {
                            double d = 0.0;
                            for (std::size_t a = 0; a < g.span_dim; ++a) d += partial_basis(a, t) * cand[a];
                            for (std::size_t a = 0; a < g.span_dim; ++a) cand[a] -= d * partial_basis(a, t);
                        }
                        const double nrm = norm2(cand);
                        if (nrm > 1e-9) {
                            for (std::size_t a = 0; a < g.span_dim; ++a) normal[a] = cand[a] / nrm;
                            break;
                        }
                    }
                    if (norm2(normal) == 0.0) return;

                    for (int sign : {+1, -1}) {
                        std::vector<std::size_t> next_active;
                        std::vector<std::pair<std::size_t, signed char>> assigned;
                        for (std::size_t idx : active) {
                            const double v = sign * dot(normal, cols[idx]);
                            const double band = 1e-10 * norm2(cols[idx]);
                            if (std::fabs(v) <= band)
                                next_active.push_back(idx);
                            else
                                assigned.emplace_back(idx, v > 0 ? 1 : -1);
                        }
                        if (next_active.size() == active.size()) continue;
                        for (auto [idx, lab] : assigned) labels[idx] = lab;
                        explore(labels, next_active);
                        for (auto [idx, lab] : assigned) labels[idx] = 0;
                    }
                    return;
                }
                for (std::size_t j = start; j < active.size(); ++j) {
                    const std::size_t idx = active[j];
                    // accept only columns independent of the current choice
                    std::vector<double> resid = cols[idx];
                    for (std::size_t c = 0; c < partial_basis.cols(); ++c) {
                        double d = 0.0;
                        for (std::size_t a = 0; a < g.span_dim; ++a) d += partial_basis(a, c) * resid[a];
                        for (std::size_t a = 0; a < g.span_dim; ++a) resid[a] -= d * partial_basis(a, c);
                    }
                    const double rn = norm2(resid);
                    if (rn <= 1e-9 * (norm2(cols[idx]) + 1e-300)) continue;
                    Matrix extended(g.span_dim, partial_basis.cols() + 1);
                    for (std::size_t c = 0; c < partial_basis.cols(); ++c)
                        for (std::size_t a = 0; a < g.span_dim; ++a) extended(a, c) = partial_basis(a, c);
                    for (std::size_t a = 0; a < g.span_dim; ++a)
                        extended(a, partial_basis.cols()) = resid[a] / rn;
                    chosen.push_back(idx);
                    pick(j + 1, extended);
                    chosen.pop_back();
                }
            };

            if (dv >= 1) pick(0, Matrix(g.span_dim, 0));
        };

    std::vector<signed char> labels(ncols, 0);
    std::vector<std::size_t> all(ncols);
    for (std::size_t i = 0; i < ncols; ++i) all[i] = i;
    explore(labels, all);

    std::vector<LabeledHyperplane> out;
    out.reserve(found.size());
    for (auto& [lab, wit] : found) out.push_back({lab, wit});
    return out;
}

inline std::vector<HyperplaneLabeling> enumerate_hyperplane_partitions(const Matrix& m, std::size_t s) {
    std::vector<HyperplaneLabeling> out;
    for (auto& lh : enumerate_hyperplane_partitions_witnessed(m, s)) out.push_back(lh.labels);
    return out;
}

// k sets of s hyperplanes generate parts by peeling: Q_i = columns on the
// nonnegative side of every hyperplane in set i, P_i = Q_i minus earlier
// parts, and one trailing remainder part.
struct PartitionSpec {
    std::size_t k = 0, s = 0;
    std::vector<std::vector<std::vector<double>>> hyperplane_sets; // k lists of s ambient normals
    std::vector<std::vector<std::size_t>> parts;                   // k + 1 disjoint column sets
    std::vector<std::size_t> assignment;                           // column -> part index (0-based)
};

namespace detail {

using Mask = std::vector<std::uint64_t>;

inline Mask full_mask(std::size_t m) {
    Mask b((m + 63) / 64, ~0ULL);
    if (m % 64) b.back() = (1ULL << (m % 64)) - 1;
    return b;
}

inline void mask_and(Mask& a, const Mask& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] &= b[i];
}

inline bool mask_test(const Mask& a, std::size_t i) { return (a[i / 64] >> (i % 64)) & 1ULL; }

} // namespace detail

inline std::vector<PartitionSpec> enumerate_simplicial_partitions(const Matrix& m, std::size_t k,
                                                                  std::size_t s,
                                                                  std::size_t budget = 10000000) {
    if (k < 1 || s < 1) throw invalid_params_error("k and s must be at least 1");
    const auto hyperplanes = enumerate_hyperplane_partitions_witnessed(m, s);
    const std::size_t ncols = m.cols();

    double cartesian = 1.0;
    for (std::size_t t = 0; t < s; ++t) cartesian *= static_cast<double>(hyperplanes.size());
    if (cartesian > static_cast<double>(budget))
        throw budget_exceeded_error("hyperplane set combinations exceed the enumeration budget");

    // candidate Q sets: intersections of up to s positive sides
    std::vector<detail::Mask> positives;
    for (const auto& lh : hyperplanes) {
        detail::Mask b((ncols + 63) / 64, 0);
        for (std::size_t i = 0; i < ncols; ++i)
            if (lh.labels[i] > 0) b[i / 64] |= 1ULL << (i % 64);
        positives.push_back(std::move(b));
    }

    std::map<detail::Mask, std::vector<std::size_t>> q_candidates; // mask -> contributing hyperplanes
    std::vector<std::size_t> combo;
    std::function<void(std::size_t, detail::Mask)> build = [&](std::size_t start, detail::Mask cur) {
        if (!combo.empty()) {
            auto it = q_candidates.find(cur);
            if (it == q_candidates.end()) q_candidates.emplace(cur, combo);
        }
        if (combo.size() == s) return;
        for (std::size_t h = start; h < positives.size(); ++h) {
            detail::Mask next = cur;
            detail::mask_and(next, positives[h]);
            combo.push_back(h);
            build(h, std::move(next));
            combo.pop_back();
        }
    };
    build(0, detail::full_mask(ncols));

    std::vector<std::pair<detail::Mask, std::vector<std::size_t>>> qs(q_candidates.begin(),
                                                                      q_candidates.end());
    double tuples = 1.0;
    for (std::size_t t = 0; t < k; ++t) tuples *= static_cast<double>(qs.size());
    if (tuples > static_cast<double>(budget))
        throw budget_exceeded_error("Q-set tuples exceed the enumeration budget");

    std::map<std::vector<std::size_t>, PartitionSpec> out; // keyed on assignment
    std::vector<std::size_t> pick(k, 0);
    std::function<void(std::size_t)> assemble = [&](std::size_t depth) {
        if (depth == k) {
            PartitionSpec spec;
            spec.k = k;
            spec.s = s;
            spec.parts.assign(k + 1, {});
            spec.assignment.assign(ncols, k);
            std::vector<char> taken(ncols, 0);
            for (std::size_t i = 0; i < k; ++i) {
                for (std::size_t c = 0; c < ncols; ++c) {
                    if (!taken[c] && detail::mask_test(qs[pick[i]].first, c)) {
                        taken[c] = 1;
                        spec.parts[i].push_back(c);
                        spec.assignment[c] = i;
                    }
                }
                std::vector<std::vector<double>> normals;
                for (std::size_t h : qs[pick[i]].second) normals.push_back(hyperplanes[h].normal);
                while (normals.size() < s && !normals.empty()) normals.push_back(normals.back());
                spec.hyperplane_sets.push_back(std::move(normals));
            }
            for (std::size_t c = 0; c < ncols; ++c)
                if (!taken[c]) spec.parts[k].push_back(c);
            out.emplace(spec.assignment, std::move(spec));
            return;
        }
        for (std::size_t q = 0; q < qs.size(); ++q) {
            pick[depth] = q;
            assemble(depth + 1);
        }
    };
    assemble(0);

    std::vector<PartitionSpec> result;
    result.reserve(out.size());
    for (auto& [key, spec] : out) result.push_back(std::move(spec));
    return result;
}

} // namespace nmfpack
