#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nmfpack {

struct nmf_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct dimension_mismatch : nmf_error {
    explicit dimension_mismatch(const std::string& what) : nmf_error("dimension mismatch: " + what) {}
};

struct zero_row_error : nmf_error {
    std::size_t row;
    explicit zero_row_error(std::size_t r)
        : nmf_error("row " + std::to_string(r) + " is identically zero"), row(r) {}
};

struct not_normalized_error : nmf_error {
    std::size_t row;
    double norm;
    not_normalized_error(std::size_t r, double n)
        : nmf_error("row " + std::to_string(r) + " has l1 norm " + std::to_string(n) + ", expected 1"),
          row(r), norm(n) {}
};

struct not_separable_error : nmf_error {
    std::size_t found_loners;
    explicit not_separable_error(std::size_t found, const std::string& detail = "")
        : nmf_error("matrix is not separable (" + std::to_string(found) + " distinct loner rows)" +
                    (detail.empty() ? "" : ": " + detail)),
          found_loners(found) {}
};

struct invalid_params_error : nmf_error {
    using nmf_error::nmf_error;
};

struct infeasible_params_error : nmf_error {
    using nmf_error::nmf_error;
};

struct no_robust_loners_error : nmf_error {
    no_robust_loners_error() : nmf_error("no robust-loner rows found") {}
};

struct rank_too_high_error : nmf_error {
    std::size_t rank, limit;
    rank_too_high_error(std::size_t rk, std::size_t s)
        : nmf_error("numeric rank " + std::to_string(rk) + " exceeds s = " + std::to_string(s)),
          rank(rk), limit(s) {}
};

struct rank_mismatch_error : nmf_error {
    std::size_t rank, requested;
    rank_mismatch_error(std::size_t rk, std::size_t r)
        : nmf_error("numeric rank " + std::to_string(rk) + " does not equal requested inner dimension " +
                    std::to_string(r)),
          rank(rk), requested(r) {}
};

struct budget_exceeded_error : nmf_error {
    using nmf_error::nmf_error;
};

struct invalid_partition_error : nmf_error {
    using nmf_error::nmf_error;
};

struct generation_failure_error : nmf_error {
    using nmf_error::nmf_error;
};

struct eps_too_large_error : nmf_error {
    double eps;
    explicit eps_too_large_error(double e)
        : nmf_error("gadget eps " + std::to_string(e) + " must be below 1/50"), eps(e) {}
};

struct duplicate_values_error : nmf_error {
    using nmf_error::nmf_error;
};

struct index_out_of_range_error : nmf_error {
    using nmf_error::nmf_error;
};

struct convergence_failure : nmf_error {
    using nmf_error::nmf_error;
};

struct parse_error : nmf_error {
    std::size_t line, column;
    parse_error(std::size_t ln, std::size_t col, const std::string& what)
        : nmf_error("parse error at line " + std::to_string(ln) + ", column " + std::to_string(col) + ": " + what),
          line(ln), column(col) {}
};

struct ragged_rows_error : nmf_error {
    std::size_t line;
    explicit ragged_rows_error(std::size_t ln)
        : nmf_error("ragged row at line " + std::to_string(ln)), line(ln) {}
};

struct non_finite_error : nmf_error {
    std::size_t line;
    explicit non_finite_error(std::size_t ln)
        : nmf_error("non-finite value at line " + std::to_string(ln)), line(ln) {}
};

} // namespace nmfpack
