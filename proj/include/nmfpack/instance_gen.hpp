#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "nmfpack/convex_oracle.hpp"
#include "nmfpack/errors.hpp"
#include "nmfpack/matrix.hpp"
#include "nmfpack/rng.hpp"
#include "nmfpack/svd.hpp"

namespace nmfpack {

// Planted ground truth for the separable and robust solvers.
struct PlantedInstance {
    Matrix m;       // observed matrix, rows renormalized after noise
    Matrix a_true;  // anchors stacked over convex combinations
    Matrix w_true;  // row-stochastic, margin at least alpha
    std::size_t r = 0;
    double alpha = 0.0;     // achieved robust-simplicial margin of w_true
    double noise_eps = 0.0; // per-row l1 noise budget actually enforced
    std::uint64_t seed = 0;
};

// Margin of the worst row of w against the hull of the others.
inline double simplicial_margin(const Matrix& w) {
    if (w.rows() < 2) return 2.0;
    double alpha = 2.0;
    for (std::size_t i = 0; i < w.rows(); ++i) {
        HullQuery q;
        q.target = w.row(i);
        for (std::size_t k = 0; k < w.rows(); ++k)
            if (k != i) q.generators.push_back(w.row(k));
        alpha = std::min(alpha, l1_dist_to_hull(q));
    }
    return alpha;
}

// Separable instance: W resampled until its margin reaches alpha_min, A = the
// r anchor rows stacked over random convex combinations, M = A W plus per-row
// l1 noise of total magnitude at most noise_eps (rows are renormalized, and
// the raw noise is halved so renormalization cannot push past the budget).
inline PlantedInstance gen_separable(std::size_t n, std::size_t m, std::size_t r, double alpha_min,
                                     double noise_eps, std::uint64_t seed) {
    if (n < r || m < r) throw invalid_params_error("need n >= r and m >= r");
    if (alpha_min <= 0.0 || alpha_min >= 2.0) throw invalid_params_error("alpha_min must be in (0, 2)");
    if (noise_eps < 0.0) throw invalid_params_error("noise must be nonnegative");

    Rng rng(seed);
    PlantedInstance inst;
    inst.r = r;
    inst.seed = seed;
    inst.noise_eps = noise_eps;

    Matrix w(r, m);
    bool ok = false;
    for (int attempt = 0; attempt < 1000; ++attempt) {
        for (std::size_t i = 0; i < r; ++i) w.set_row(i, rng.simplex_point(m));
        inst.alpha = simplicial_margin(w);
        if (inst.alpha >= alpha_min) {
            ok = true;
            break;
        }
    }
    if (!ok)
        throw generation_failure_error("could not reach alpha_min " + std::to_string(alpha_min) +
                                       " after 1000 attempts");
    inst.w_true = w;

    Matrix a(n, r);
    for (std::size_t i = 0; i < r; ++i) a(i, i) = 1.0;
    for (std::size_t i = r; i < n; ++i) a.set_row(i, rng.simplex_point(r));
    inst.a_true = a;

    Matrix observed = a * w;
    if (noise_eps > 0.0) {
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> z(m);
            for (auto& v : z) v = rng.uniform(-1.0, 1.0);
            const double mass = 0.5 * noise_eps * rng.uniform();
            const double s = norm1(z);
            for (std::size_t j = 0; j < m; ++j) {
                double delta = z[j] / s * mass;
                if (observed(i, j) + delta < 0.0) delta = -observed(i, j);
                observed(i, j) += delta;
            }
        }
        observed = normalize_rows_l1(observed);
    }
    inst.m = std::move(observed);
    return inst;
}

// Full-rank planted product for the simplicial-factorization solver.
inline PlantedInstance gen_planted_product(std::size_t n, std::size_t m, std::size_t r,
                                           std::uint64_t seed) {
    Rng rng(seed);
    PlantedInstance inst;
    inst.r = r;
    inst.seed = seed;
    for (int attempt = 0; attempt < 1000; ++attempt) {
        Matrix a(n, r), w(r, m);
        for (auto& v : a.data()) v = rng.uniform();
        for (auto& v : w.data()) v = rng.uniform();
        Matrix prod = a * w;
        if (numeric_rank(prod) == r) {
            inst.a_true = std::move(a);
            inst.w_true = std::move(w);
            inst.m = std::move(prod);
            return inst;
        }
    }
    throw generation_failure_error("random products kept losing rank");
}

// ---------------------------------------------------------------------------
// hardness gadget geometry

using PlanePoint = std::array<double, 2>; // (y, z)

// Near-triangular hexagon with three corner edges of length eps, together
// with the per-value triangles and the vertices of their intersection.
//
// Closed-form chart: interior angles are all 2pi/3, the short edges AB, CD,
// EF have length eps and the long edges length b = 2/sqrt(3) - eps. Edge AB
// lies on the line y = 0, edge DE on y = 1, and the circumcenter sits on the
// y axis, which forces
//   A = (0, -eps/2)                 B = (0, +eps/2)
//   C = (sqrt(3) b / 2, (eps+b)/2)  D = (1, b/2)
//   E = (1, -b/2)                   F = (1 - sqrt(3) eps / 2, -(b+eps)/2)
//   center = (2/3 - eps/(2 sqrt(3)), 0)
struct Gadget2D {
    std::size_t n_values = 0;
    std::vector<double> values;
    double eps = 0.0;
    std::vector<PlanePoint> hexagon; // A, B, C, D, E, F
    std::vector<PlanePoint> a_points, c_points, e_points;
    std::vector<PlanePoint> intersection_vertices; // exactly 3 n_values of them
    PlanePoint center{};
    bool rigidity_regime = false; // eps below 1/1000
};

namespace detail {

inline std::vector<PlanePoint> clip_half_plane(const std::vector<PlanePoint>& poly, const PlanePoint& a,
                                               double c) {
    std::vector<PlanePoint> out;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const PlanePoint& cur = poly[i];
        const PlanePoint& nxt = poly[(i + 1) % n];
        const double vc = a[0] * cur[0] + a[1] * cur[1] - c;
        const double vn = a[0] * nxt[0] + a[1] * nxt[1] - c;
        if (vc >= -1e-14) out.push_back(cur);
        if ((vc > 1e-14 && vn < -1e-14) || (vc < -1e-14 && vn > 1e-14)) {
            const double t = vc / (vc - vn);
            out.push_back({cur[0] + t * (nxt[0] - cur[0]), cur[1] + t * (nxt[1] - cur[1])});
        }
    }
    return out;
}

inline std::vector<PlanePoint> dedupe_polygon(std::vector<PlanePoint> poly, double tol) {
    std::vector<PlanePoint> out;
    for (const auto& p : poly) {
        bool dup = false;
        for (const auto& q : out)
            dup |= std::fabs(p[0] - q[0]) < tol && std::fabs(p[1] - q[1]) < tol;
        if (!dup) out.push_back(p);
    }
    return out;
}

// inward line form (a, c) with a . p >= c inside, for edge from p to q of a
// polygon containing `inside`
inline std::pair<PlanePoint, double> inward_line(const PlanePoint& p, const PlanePoint& q,
                                                 const PlanePoint& inside) {
    PlanePoint n{-(q[1] - p[1]), q[0] - p[0]};
    double c = n[0] * p[0] + n[1] * p[1];
    if (n[0] * inside[0] + n[1] * inside[1] < c) {
        n = {-n[0], -n[1]};
        c = -c;
    }
    return {n, c};
}

} // namespace detail

inline Gadget2D build_gadget_2d(const std::vector<double>& values, double eps_g) {
    if (eps_g <= 0.0 || eps_g >= 0.02) throw eps_too_large_error(eps_g);
    for (double s : values)
        if (s < 0.0 || s > 1.0) throw invalid_params_error("values must lie in [0, 1]");
    for (std::size_t i = 0; i < values.size(); ++i)
        for (std::size_t j = i + 1; j < values.size(); ++j)
            if (std::fabs(values[i] - values[j]) < 1e-12)
                throw duplicate_values_error("values " + std::to_string(i) + " and " + std::to_string(j) +
                                             " coincide");
    if (values.empty()) throw invalid_params_error("need at least one value");

    Gadget2D g;
    g.n_values = values.size();
    g.values = values;
    g.eps = eps_g;
    g.rigidity_regime = eps_g < 1e-3;

    const double eps = eps_g;
    const double b = 2.0 / std::sqrt(3.0) - eps;
    const double sq3 = std::sqrt(3.0);
    const PlanePoint a{0.0, -eps / 2.0};
    const PlanePoint bb{0.0, eps / 2.0};
    const PlanePoint c{sq3 * b / 2.0, (eps + b) / 2.0};
    const PlanePoint d{1.0, b / 2.0};
    const PlanePoint e{1.0, -b / 2.0};
    const PlanePoint f{1.0 - sq3 * eps / 2.0, -(b + eps) / 2.0};
    g.hexagon = {a, bb, c, d, e, f};
    g.center = {2.0 / 3.0 - eps / (2.0 * sq3), 0.0};

    for (double s : values) {
        g.a_points.push_back({0.0, -eps / 2.0 + eps * s});
        g.c_points.push_back({sq3 * (b + eps * s) / 2.0, (eps + b) / 2.0 - eps * s / 2.0});
        g.e_points.push_back({1.0 - sq3 * eps * s / 2.0, -b / 2.0 - eps * s / 2.0});
    }

    // intersect the triangles by clipping, starting from the hexagon
    std::vector<PlanePoint> poly = g.hexagon;
    for (std::size_t i = 0; i < g.n_values; ++i) {
        const std::array<std::pair<PlanePoint, PlanePoint>, 3> edges{
            std::pair{g.a_points[i], g.c_points[i]},
            std::pair{g.c_points[i], g.e_points[i]},
            std::pair{g.e_points[i], g.a_points[i]},
        };
        for (const auto& [p, q] : edges) {
            const auto [normal, offset] = detail::inward_line(p, q, g.center);
            poly = detail::clip_half_plane(poly, normal, offset);
        }
    }
    poly = detail::dedupe_polygon(std::move(poly), 1e-11);

    // canonical order: by angle around the center
    std::stable_sort(poly.begin(), poly.end(), [&](const PlanePoint& p, const PlanePoint& q) {
        return std::atan2(p[1] - g.center[1], p[0] - g.center[0]) <
               std::atan2(q[1] - g.center[1], q[0] - g.center[0]);
    });
    g.intersection_vertices = std::move(poly);

    if (g.intersection_vertices.size() != 3 * g.n_values)
        throw generation_failure_error("triangle intersection produced " +
                                       std::to_string(g.intersection_vertices.size()) +
                                       " vertices, expected " + std::to_string(3 * g.n_values));
    return g;
}

// ---------------------------------------------------------------------------
// intermediate simplex instance

// Polyhedron H x >= b over (x_1, y_1, z_1, ..., x_d, y_d, z_d, w) plus the
// point set the hidden simplex must cover. The 2-D gadget chart is shifted so
// its z range is nonnegative before embedding; z_shift records the offset.
struct IntermediateSimplexInstance {
    std::size_t dim = 0; // 3 d + 1
    Matrix h_mat;
    std::vector<double> b_vec;
    std::vector<std::vector<double>> points; // O, W, I^i_k (gadget-major), Q
    std::size_t d = 0;
    std::vector<double> source_values;
    double eps_g = 0.0;
    double z_shift = 0.0;
    Gadget2D gadget; // unshifted chart
    bool constraints_full_rank = false;

    std::size_t x_index(std::size_t gadget_i) const { return 3 * gadget_i; }
    std::size_t y_index(std::size_t gadget_i) const { return 3 * gadget_i + 1; }
    std::size_t z_index(std::size_t gadget_i) const { return 3 * gadget_i + 2; }
    std::size_t w_index() const { return 3 * d; }

    bool feasible(const std::vector<double>& p, double tol = 1e-9) const {
        const std::vector<double> hp = matvec(h_mat, p);
        for (std::size_t row = 0; row < hp.size(); ++row)
            if (hp[row] < b_vec[row] - tol) return false;
        return true;
    }
};

inline IntermediateSimplexInstance build_intermediate_simplex(const std::vector<double>& values,
                                                              std::size_t d, double eps_g) {
    if (d < 1) throw invalid_params_error("need at least one gadget");
    IntermediateSimplexInstance inst;
    inst.gadget = build_gadget_2d(values, eps_g);
    inst.d = d;
    inst.dim = 3 * d + 1;
    inst.source_values = values;
    inst.eps_g = eps_g;

    const double b_len = 2.0 / std::sqrt(3.0) - eps_g;
    inst.z_shift = (b_len + eps_g) / 2.0;
    const double z_a = inst.z_shift - eps_g / 2.0; // shifted z coordinate of corner A

    auto shifted = [&](const PlanePoint& p) { return PlanePoint{p[0], p[1] + inst.z_shift}; };

    std::vector<std::vector<double>> rows;
    std::vector<double> rhs;
    auto add_row = [&](std::vector<double> row, double r) {
        rows.push_back(std::move(row));
        rhs.push_back(r);
    };
    auto unit_row = [&](std::size_t idx, double coeff) {
        std::vector<double> row(inst.dim, 0.0);
        row[idx] = coeff;
        return row;
    };

    // box
    for (std::size_t i = 0; i < d; ++i) {
        add_row(unit_row(inst.x_index(i), 1.0), 0.0);
        add_row(unit_row(inst.x_index(i), -1.0), -1.0);
        add_row(unit_row(inst.y_index(i), 1.0), 0.0);
        add_row(unit_row(inst.y_index(i), -1.0), -1.0);
        add_row(unit_row(inst.z_index(i), 1.0), 0.0);
        add_row(unit_row(inst.z_index(i), -1.0), -2.0);
    }
    add_row(unit_row(inst.w_index(), 1.0), 0.0);
    add_row(unit_row(inst.w_index(), -1.0), -1.0);

    // gadget cone: 6 facets through the origin over the shifted hexagon edges,
    // plus the base x <= 1
    const PlanePoint center_sh = shifted(inst.gadget.center);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t e = 0; e < 6; ++e) {
            const PlanePoint p = shifted(inst.gadget.hexagon[e]);
            const PlanePoint q = shifted(inst.gadget.hexagon[(e + 1) % 6]);
            const auto [normal, offset] = detail::inward_line(p, q, center_sh);
            std::vector<double> row(inst.dim, 0.0);
            row[inst.x_index(i)] = -offset;
            row[inst.y_index(i)] = normal[0];
            row[inst.z_index(i)] = normal[1];
            add_row(std::move(row), 0.0);
        }
        add_row(unit_row(inst.x_index(i), -1.0), -1.0);
    }

    // CE: w <= 1 - y_i + (1 - x_i)
    for (std::size_t i = 0; i < d; ++i) {
        std::vector<double> row(inst.dim, 0.0);
        row[inst.x_index(i)] = -1.0;
        row[inst.y_index(i)] = -1.0;
        row[inst.w_index()] = -1.0;
        add_row(std::move(row), -2.0);
    }

    // AB: w within (z_i - z(A) x_i) / eps plus/minus (10 y_i / eps + (1 - x_i))
    for (std::size_t i = 0; i < d; ++i) {
        std::vector<double> upper(inst.dim, 0.0);
        upper[inst.x_index(i)] = -z_a / eps_g - 1.0;
        upper[inst.y_index(i)] = 10.0 / eps_g;
        upper[inst.z_index(i)] = 1.0 / eps_g;
        upper[inst.w_index()] = -1.0;
        add_row(std::move(upper), -1.0);

        std::vector<double> lower(inst.dim, 0.0);
        lower[inst.x_index(i)] = z_a / eps_g - 1.0;
        lower[inst.y_index(i)] = 10.0 / eps_g;
        lower[inst.z_index(i)] = -1.0 / eps_g;
        lower[inst.w_index()] = 1.0;
        add_row(std::move(lower), -1.0);
    }

    inst.h_mat = Matrix(rows.size(), inst.dim);
    for (std::size_t i = 0; i < rows.size(); ++i) inst.h_mat.set_row(i, rows[i]);
    inst.b_vec = std::move(rhs);

    // maximum w compatible with fixed non-w coordinates
    auto w_max_at = [&](const std::vector<double>& p) {
        double hi = 1.0, lo = 0.0;
        for (std::size_t row = 0; row < inst.h_mat.rows(); ++row) {
            const double cw = inst.h_mat(row, inst.w_index());
            if (cw == 0.0) continue;
            double rest = -inst.b_vec[row];
            for (std::size_t c = 0; c < inst.dim; ++c)
                if (c != inst.w_index()) rest += inst.h_mat(row, c) * p[c];
            // cw * w >= b - rest_terms  =>  bound at -rest / cw... reuse: cw*w + rest >= 0
            if (cw > 0.0)
                lo = std::max(lo, -rest / cw);
            else
                hi = std::min(hi, rest / (-cw));
        }
        if (lo > hi + 1e-9)
            throw generation_failure_error("empty w interval while placing a gadget point");
        return hi;
    };

    // point set: O, W, the scaled intersection vertices, Q
    std::vector<double> o(inst.dim, 0.0);
    inst.points.push_back(o);
    std::vector<double> wpt(inst.dim, 0.0);
    wpt[inst.w_index()] = 1.0;
    inst.points.push_back(wpt);

    const std::size_t nn = inst.gadget.n_values;
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t k = 0; k < 3 * nn; ++k) {
            const PlanePoint v = shifted(inst.gadget.intersection_vertices[k]);
            std::vector<double> probe(inst.dim, 0.0);
            probe[inst.x_index(i)] = 1.0;
            probe[inst.y_index(i)] = v[0];
            probe[inst.z_index(i)] = v[1];
            const double wmax = w_max_at(probe);
            std::vector<double> pt(inst.dim, 0.0);
            pt[inst.x_index(i)] = 0.25;
            pt[inst.y_index(i)] = 0.25 * v[0];
            pt[inst.z_index(i)] = 0.25 * v[1];
            pt[inst.w_index()] = 0.25 * wmax;
            inst.points.push_back(std::move(pt));
        }
    }

    std::vector<double> q(inst.dim, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        q[inst.x_index(i)] = 1.0 / static_cast<double>(d);
        q[inst.y_index(i)] = center_sh[0] / static_cast<double>(d);
        q[inst.z_index(i)] = center_sh[1] / static_cast<double>(d);
    }
    q[inst.w_index()] = 1.0 / 6.0;
    inst.points.push_back(std::move(q));

    for (const auto& p : inst.points)
        if (!inst.feasible(p))
            throw generation_failure_error("constructed point violates the polyhedron");

    Matrix augmented(inst.h_mat.rows(), inst.dim + 1);
    for (std::size_t i = 0; i < inst.h_mat.rows(); ++i) {
        for (std::size_t j = 0; j < inst.dim; ++j) augmented(i, j) = inst.h_mat(i, j);
        augmented(i, inst.dim) = inst.b_vec[i];
    }
    inst.constraints_full_rank = numeric_rank(augmented) == inst.dim + 1;
    return inst;
}

// Builds the candidate simplex for the chosen values (the O and W points plus
// one triangle per gadget, with w = s on the AB vertex and w = 0 on the other
// two) and checks that it is feasible and that its hull covers every instance
// point.
inline bool verify_completeness(const IntermediateSimplexInstance& inst,
                                const std::vector<std::size_t>& chosen_indices) {
    if (chosen_indices.size() != inst.d)
        throw index_out_of_range_error("need exactly d chosen indices");
    for (std::size_t k : chosen_indices)
        if (k >= inst.gadget.n_values) throw index_out_of_range_error("chosen value index too large");

    auto shifted = [&](const PlanePoint& p) { return PlanePoint{p[0], p[1] + inst.z_shift}; };

    std::vector<std::vector<double>> t;
    t.emplace_back(inst.dim, 0.0); // O
    t.emplace_back(inst.dim, 0.0); // W
    t.back()[inst.w_index()] = 1.0;
    for (std::size_t i = 0; i < inst.d; ++i) {
        const std::size_t k = chosen_indices[i];
        const std::array<std::pair<PlanePoint, double>, 3> corners{
            std::pair{shifted(inst.gadget.a_points[k]), inst.gadget.values[k]},
            std::pair{shifted(inst.gadget.c_points[k]), 0.0},
            std::pair{shifted(inst.gadget.e_points[k]), 0.0},
        };
        for (const auto& [pt, wval] : corners) {
            std::vector<double> v(inst.dim, 0.0);
            v[inst.x_index(i)] = 1.0;
            v[inst.y_index(i)] = pt[0];
            v[inst.z_index(i)] = pt[1];
            v[inst.w_index()] = wval;
            t.push_back(std::move(v));
        }
    }

    for (const auto& v : t)
        if (!inst.feasible(v)) return false;

    for (const auto& p : inst.points) {
        HullQuery q;
        q.target = p;
        q.generators = t;
        if (l1_dist_to_hull(q) > 1e-8) return false;
    }
    return true;
}

} // namespace nmfpack
