#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include "nmfpack/convex_oracle.hpp"
#include "nmfpack/matrix.hpp"
#include "nmfpack/rng.hpp"

namespace nmfpack {

// Lee-Seung multiplicative updates for || M - A W ||_F. Cheap way to land in
// the basin of an exact factorization before a polishing pass.
inline std::pair<Matrix, Matrix> nmf_multiplicative(const Matrix& m, std::size_t r, Rng& rng,
                                                    std::size_t iters) {
    const std::size_t n = m.rows(), mm = m.cols();
    double mean = 0.0;
    for (double v : m.data()) mean += v;
    mean /= static_cast<double>(std::max<std::size_t>(n * mm, 1));
    const double scale = std::sqrt(std::max(mean, 1e-30) / static_cast<double>(r));

    Matrix a(n, r), w(r, mm);
    for (auto& v : a.data()) v = scale * (0.5 + rng.uniform());
    for (auto& v : w.data()) v = scale * (0.5 + rng.uniform());

    const double guard = 1e-12;
    for (std::size_t it = 0; it < iters; ++it) {
        // W <- W .* (A^T M) ./ (A^T A W)
        const Matrix at = a.transpose();
        const Matrix atm = at * m;
        const Matrix ataw = at * a * w;
        for (std::size_t i = 0; i < w.size(); ++i)
            w.data()[i] *= atm.data()[i] / (ataw.data()[i] + guard);
        // A <- A .* (M W^T) ./ (A W W^T)
        const Matrix wt = w.transpose();
        const Matrix mwt = m * wt;
        const Matrix awwt = a * (w * wt);
        for (std::size_t i = 0; i < a.size(); ++i)
            a.data()[i] *= mwt.data()[i] / (awwt.data()[i] + guard);
    }
    return {std::move(a), std::move(w)};
}

// Alternating exact NNLS sweeps; drives an already-close pair toward a
// stationary point, frequently to machine precision on clean instances.
inline void anls_polish(const Matrix& m, Matrix& a, Matrix& w, std::size_t rounds) {
    for (std::size_t round = 0; round < rounds; ++round) {
        for (std::size_t i = 0; i < m.rows(); ++i) {
            const std::vector<double> row = nnls_row(m.row(i), w);
            for (std::size_t k = 0; k < a.cols(); ++k) a(i, k) = row[k];
        }
        for (std::size_t j = 0; j < m.cols(); ++j) {
            const std::vector<double> col = nnls(a, m.col(j));
            for (std::size_t k = 0; k < w.rows(); ++k) w(k, j) = col[k];
        }
    }
}

// Limited-memory BFGS with Armijo backtracking. fg fills the gradient and
// returns the objective.
inline std::vector<double> lbfgs_minimize(
    const std::function<double(const std::vector<double>&, std::vector<double>&)>& fg,
    std::vector<double> x, std::size_t max_iters, double gtol = 1e-12, double ftol = 0.0) {
    const std::size_t n = x.size();
    const std::size_t mem = 8;
    std::vector<std::vector<double>> s_hist, y_hist;
    std::vector<double> rho_hist;

    std::vector<double> g(n), g_new(n);
    double f = fg(x, g);

    std::vector<double> best_x = x;
    double best_f = f;

    for (std::size_t iter = 0; iter < max_iters; ++iter) {
        double gnorm = 0.0;
        for (double v : g) gnorm += v * v;
        if (std::sqrt(gnorm) < gtol || f <= ftol) break;

        // two-loop recursion
        std::vector<double> d = g;
        std::vector<double> alpha(s_hist.size());
        for (std::size_t h = s_hist.size(); h-- > 0;) {
            alpha[h] = rho_hist[h] * dot(s_hist[h], d);
            for (std::size_t i = 0; i < n; ++i) d[i] -= alpha[h] * y_hist[h][i];
        }
        if (!s_hist.empty()) {
            const auto& s = s_hist.back();
            const auto& y = y_hist.back();
            const double gamma = dot(s, y) / std::max(dot(y, y), 1e-300);
            for (double& v : d) v *= gamma;
        }
        for (std::size_t h = 0; h < s_hist.size(); ++h) {
            const double beta = rho_hist[h] * dot(y_hist[h], d);
            for (std::size_t i = 0; i < n; ++i) d[i] += (alpha[h] - beta) * s_hist[h][i];
        }
        for (double& v : d) v = -v;

        double gd = dot(g, d);
        if (gd > -1e-300) { // not a descent direction, fall back to steepest descent
            for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
            gd = -dot(g, g);
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            if (gd == 0.0) break;
        }

        double step = 1.0;
        std::vector<double> x_new(n);
        double f_new = f;
        bool accepted = false;
        for (int ls = 0; ls < 50; ++ls) {
            for (std::size_t i = 0; i < n; ++i) x_new[i] = x[i] + step * d[i];
            f_new = fg(x_new, g_new);
            if (f_new <= f + 1e-4 * step * gd) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;

        std::vector<double> s(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = x_new[i] - x[i];
            y[i] = g_new[i] - g[i];
        }
        const double sy = dot(s, y);
        if (sy > 1e-14 * norm2(s) * norm2(y)) {
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(y));
            rho_hist.push_back(1.0 / sy);
            if (s_hist.size() > mem) {
                s_hist.erase(s_hist.begin());
                y_hist.erase(y_hist.begin());
                rho_hist.erase(rho_hist.begin());
            }
        }
        x.swap(x_new);
        g.swap(g_new);
        f = f_new;
        if (f < best_f) {
            best_f = f;
            best_x = x;
        }
    }
    return best_x;
}

} // namespace nmfpack
