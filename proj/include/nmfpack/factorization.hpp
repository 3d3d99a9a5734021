#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "nmfpack/errors.hpp"
#include "nmfpack/matrix.hpp"

namespace nmfpack {

// A nonnegative factorization candidate a * w with inner dimension r,
// together with the residuals it was accepted at.
struct Factorization {
    Matrix a; // n x r
    Matrix w; // r x m
    std::size_t inner_dim = 0;
    double residual_fro = 0.0;
    double residual_row_l1_max = 0.0;
};

inline void recompute_residuals(const Matrix& m, Factorization& f) {
    const Matrix prod = f.a * f.w;
    double fro = 0.0, row_max = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double row_l1 = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) {
            const double d = m(i, j) - prod(i, j);
            fro += d * d;
            row_l1 += std::fabs(d);
        }
        row_max = std::max(row_max, row_l1);
    }
    f.residual_fro = std::sqrt(fro);
    f.residual_row_l1_max = row_max;
}

struct VerifyReport {
    bool ok = false;
    double min_entry = 0.0;        // most negative entry across both factors
    double relative_residual = 0.0; // ||m - a w||_F / ||m||_F
};

// Accepts iff both factors are entrywise >= -tol and the relative Frobenius
// residual is at most tol. This is the only gate through which any solver in
// this library reports success.
inline VerifyReport verify_factorization(const Matrix& m, const Factorization& f, double tol) {
    if (f.a.rows() != m.rows() || f.w.cols() != m.cols() || f.a.cols() != f.w.rows())
        throw dimension_mismatch("factorization shapes");
    VerifyReport rep;
    rep.min_entry = std::min(f.a.empty() ? 0.0 : f.a.min_entry(), f.w.empty() ? 0.0 : f.w.min_entry());
    const double mnorm = frobenius_norm(m);
    const double resid = frobenius_norm(m - f.a * f.w);
    rep.relative_residual = mnorm > 0.0 ? resid / mnorm : resid;
    rep.ok = rep.min_entry >= -tol && resid <= tol * mnorm + (mnorm == 0.0 ? tol : 0.0);
    return rep;
}

} // namespace nmfpack
