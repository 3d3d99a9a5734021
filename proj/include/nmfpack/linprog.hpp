#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "nmfpack/errors.hpp"

namespace nmfpack {

enum class LpStatus { optimal, infeasible, unbounded };

struct LpSolution {
    LpStatus status = LpStatus::infeasible;
    std::vector<double> x;   // structural variables only
    double objective = 0.0;
};

// Dense two-phase primal simplex over nonnegative variables.
// Entering rule is most-negative reduced cost, with a permanent switch to
// Bland's rule after a long degenerate stall so cycling cannot occur.
// Free variables must be split by the caller.
class SimplexLp {
public:
    explicit SimplexLp(std::size_t num_vars) : nvars_(num_vars), costs_(num_vars, 0.0) {}

    std::size_t num_vars() const { return nvars_; }

    void set_cost(std::size_t var, double c) { costs_[var] = c; }

    void add_le(std::vector<double> row, double rhs) { add_row(std::move(row), rhs, '<'); }
    void add_ge(std::vector<double> row, double rhs) { add_row(std::move(row), rhs, '>'); }
    void add_eq(std::vector<double> row, double rhs) { add_row(std::move(row), rhs, '='); }

    LpSolution minimize() const {
        const double tol_cost = 1e-9;
        const double tol_pivot = 1e-11;

        // rhs-normalized copies
        std::vector<std::vector<double>> rows = rows_;
        std::vector<double> rhs = rhs_;
        std::vector<char> rel = rel_;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rhs[i] < 0.0) {
                for (double& v : rows[i]) v = -v;
                rhs[i] = -rhs[i];
                rel[i] = (rel[i] == '<') ? '>' : (rel[i] == '>') ? '<' : '=';
            }
        }

        const std::size_t m = rows.size();
        std::size_t nslack = 0, nart = 0;
        for (char r : rel)
            if (r != '=') ++nslack;
        for (char r : rel)
            if (r != '<') ++nart;

        const std::size_t ncols = nvars_ + nslack + nart;
        std::vector<std::vector<double>> t(m, std::vector<double>(ncols + 1, 0.0));
        std::vector<std::size_t> basis(m);

        std::size_t slack_at = nvars_, art_at = nvars_ + nslack;
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < nvars_; ++j) t[i][j] = rows[i][j];
            t[i][ncols] = rhs[i];
            if (rel[i] == '<') {
                t[i][slack_at] = 1.0;
                basis[i] = slack_at++;
            } else if (rel[i] == '>') {
                t[i][slack_at] = -1.0;
                ++slack_at;
                t[i][art_at] = 1.0;
                basis[i] = art_at++;
            } else {
                t[i][art_at] = 1.0;
                basis[i] = art_at++;
            }
        }

        // phase 1: minimize sum of artificials
        if (nart > 0) {
            std::vector<double> z(ncols + 1, 0.0);
            for (std::size_t j = nvars_ + nslack; j < ncols; ++j) z[j] = 1.0;
            for (std::size_t i = 0; i < m; ++i)
                if (basis[i] >= nvars_ + nslack)
                    for (std::size_t j = 0; j <= ncols; ++j) z[j] -= t[i][j];

            if (!run_simplex(t, basis, z, ncols, tol_cost, tol_pivot))
                throw convergence_failure("phase-1 simplex reported unbounded");
            if (-z[ncols] > 1e-9) return {LpStatus::infeasible, {}, 0.0};

            // pivot remaining artificials out; drop rows that turn out redundant
            for (std::size_t i = 0; i < t.size();) {
                if (basis[i] < nvars_ + nslack) {
                    ++i;
                    continue;
                }
                std::size_t enter = ncols;
                for (std::size_t j = 0; j < nvars_ + nslack; ++j)
                    if (std::fabs(t[i][j]) > tol_pivot) {
                        enter = j;
                        break;
                    }
                if (enter == ncols) {
                    t.erase(t.begin() + static_cast<std::ptrdiff_t>(i));
                    basis.erase(basis.begin() + static_cast<std::ptrdiff_t>(i));
                } else {
                    pivot(t, basis, nullptr, i, enter, ncols);
                    ++i;
                }
            }
        }

        // phase 2
        std::vector<double> z(ncols + 1, 0.0);
        for (std::size_t j = 0; j < nvars_; ++j) z[j] = costs_[j];
        for (std::size_t i = 0; i < t.size(); ++i) {
            const double cb = basis[i] < nvars_ ? costs_[basis[i]] : 0.0;
            if (cb != 0.0)
                for (std::size_t j = 0; j <= ncols; ++j) z[j] -= cb * t[i][j];
        }
        // artificial columns are dead in phase 2
        const std::size_t live_cols = nvars_ + nslack;
        if (!run_simplex(t, basis, z, live_cols, tol_cost, tol_pivot, ncols))
            return {LpStatus::unbounded, {}, 0.0};

        LpSolution sol;
        sol.status = LpStatus::optimal;
        sol.x.assign(nvars_, 0.0);
        for (std::size_t i = 0; i < t.size(); ++i)
            if (basis[i] < nvars_) sol.x[basis[i]] = t[i][ncols];
        sol.objective = 0.0;
        for (std::size_t j = 0; j < nvars_; ++j) sol.objective += costs_[j] * sol.x[j];
        return sol;
    }

private:
    void add_row(std::vector<double> row, double rhs, char rel) {
        if (row.size() != nvars_) throw dimension_mismatch("lp constraint row");
        rows_.push_back(std::move(row));
        rhs_.push_back(rhs);
        rel_.push_back(rel);
    }

    static void pivot(std::vector<std::vector<double>>& t, std::vector<std::size_t>& basis,
                      std::vector<double>* z, std::size_t row, std::size_t col, std::size_t rhs_col) {
        const double p = t[row][col];
        for (std::size_t j = 0; j <= rhs_col; ++j) t[row][j] /= p;
        t[row][col] = 1.0;
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (i == row) continue;
            const double f = t[i][col];
            if (f == 0.0) continue;
            for (std::size_t j = 0; j <= rhs_col; ++j) t[i][j] -= f * t[row][j];
            t[i][col] = 0.0;
        }
        if (z) {
            const double f = (*z)[col];
            if (f != 0.0) {
                for (std::size_t j = 0; j <= rhs_col; ++j) (*z)[j] -= f * t[row][j];
                (*z)[col] = 0.0;
            }
        }
        basis[row] = col;
    }

    // returns false on unboundedness
    static bool run_simplex(std::vector<std::vector<double>>& t, std::vector<std::size_t>& basis,
                            std::vector<double>& z, std::size_t num_pricable, double tol_cost,
                            double tol_pivot, std::size_t rhs_col_override = 0) {
        const std::size_t rhs_col = rhs_col_override ? rhs_col_override : (z.size() - 1);
        bool bland = false;
        int stall = 0;
        double last_obj = std::numeric_limits<double>::infinity();
        for (long iter = 0; iter < 200000; ++iter) {
            std::size_t enter = rhs_col;
            if (!bland) {
                double best = -tol_cost;
                for (std::size_t j = 0; j < num_pricable; ++j)
                    if (z[j] < best) {
                        best = z[j];
                        enter = j;
                    }
            } else {
                for (std::size_t j = 0; j < num_pricable; ++j)
                    if (z[j] < -tol_cost) {
                        enter = j;
                        break;
                    }
            }
            if (enter == rhs_col) return true; // optimal

            std::size_t leave = t.size();
            double best_ratio = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < t.size(); ++i) {
                if (t[i][enter] > tol_pivot) {
                    const double ratio = t[i][rhs_col] / t[i][enter];
                    if (ratio < best_ratio - 1e-12 ||
                        (ratio < best_ratio + 1e-12 && (leave == t.size() || basis[i] < basis[leave]))) {
                        best_ratio = ratio;
                        leave = i;
                    }
                }
            }
            if (leave == t.size()) return false;

            pivot(t, basis, &z, leave, enter, rhs_col);

            const double obj = -z[rhs_col];
            if (obj < last_obj - 1e-12) {
                last_obj = obj;
                stall = 0;
            } else if (++stall > 200) {
                bland = true;
            }
        }
        throw convergence_failure("simplex iteration limit reached");
    }

    std::size_t nvars_;
    std::vector<double> costs_;
    std::vector<std::vector<double>> rows_;
    std::vector<double> rhs_;
    std::vector<char> rel_;
};

} // namespace nmfpack
