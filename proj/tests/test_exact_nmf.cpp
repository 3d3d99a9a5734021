#include <catch2/catch.hpp>

#include <algorithm>
#include <vector>

#include "nmfpack/exact_nmf.hpp"
#include "nmfpack/rng.hpp"

using namespace nmfpack;

namespace {

Matrix random_nonneg(std::size_t n, std::size_t m, Rng& rng) {
    Matrix a(n, m);
    for (auto& v : a.data()) v = rng.uniform();
    return a;
}

// full-rank planted product (resampled until the numeric rank equals r)
Matrix planted_product(std::size_t n, std::size_t m, std::size_t r, std::uint64_t seed, Matrix* a_out = nullptr,
                       Matrix* w_out = nullptr) {
    Rng rng(seed);
    for (;;) {
        Matrix a = random_nonneg(n, r, rng);
        Matrix w = random_nonneg(r, m, rng);
        Matrix prod = a * w;
        if (numeric_rank(prod) == r) {
            if (a_out) *a_out = a;
            if (w_out) *w_out = w;
            return prod;
        }
    }
}

// rank-3 matrix with nonnegative rank 4
Matrix nested_square_gap() {
    return Matrix::from_rows({{1, 1, 0, 0}, {1, 0, 1, 0}, {0, 1, 0, 1}, {0, 0, 1, 1}});
}

} // namespace

TEST_CASE("verify_factorization basics") {
    Factorization id{Matrix::identity(2), Matrix::identity(2), 2, 0, 0};
    CHECK(verify_factorization(Matrix::identity(2), id, 1e-8).ok);

    Factorization neg{Matrix::from_rows({{1, 0}, {0, -0.1}}), Matrix::identity(2), 2, 0, 0};
    const VerifyReport rep = verify_factorization(Matrix::from_rows({{1, 0}, {0, -0.1}}), neg, 1e-8);
    CHECK_FALSE(rep.ok);
    CHECK(rep.min_entry == Approx(-0.1));

    Rng rng(3);
    const Matrix a = random_nonneg(5, 3, rng), w = random_nonneg(3, 6, rng);
    Factorization f{a, w, 3, 0, 0};
    CHECK(verify_factorization(a * w, f, 1e-8).ok);

    Factorization bad{a, Matrix::identity(4), 3, 0, 0};
    CHECK_THROWS_AS(verify_factorization(a * w, bad, 1e-8), dimension_mismatch);
}

TEST_CASE("sf penalty gradient matches finite differences") {
    Rng rng(8);
    const Matrix m = planted_product(4, 5, 2, 42);
    const SimplicialSystem sys = build_simplicial_system(m, 2);
    const double s = frobenius_norm(m);
    detail::SfPenalty pen{m, sys.m_c, sys.m_r, 2, s * s, 4.0};

    std::vector<double> x(8);
    for (auto& v : x) v = rng.gaussian();
    std::vector<double> g;
    pen(x, g);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double h = 1e-6;
        std::vector<double> xp = x, xm = x, scratch;
        xp[i] += h;
        xm[i] -= h;
        const double fd = (pen(xp, scratch) - pen(xm, scratch)) / (2 * h);
        CHECK(g[i] == Approx(fd).margin(1e-5 * (1.0 + std::fabs(fd))));
    }
}

TEST_CASE("solve_sf on identity and symmetric witnesses") {
    SfOptions fast;
    fast.restarts = 10;
    const SfOutcome id = solve_sf(Matrix::identity(2), 2, fast);
    REQUIRE(id.status == SolveStatus::solved);
    CHECK(verify_factorization(Matrix::identity(2), *id.factorization, 1e-7).ok);

    const Matrix m = Matrix::from_rows({{2, 1}, {1, 2}});
    const SfOutcome sym = solve_sf(m, 2, fast);
    REQUIRE(sym.status == SolveStatus::solved);
    CHECK(verify_factorization(m, *sym.factorization, 1e-7).ok);
}

TEST_CASE("solve_sf rejects rank mismatches") {
    CHECK_THROWS_AS(solve_sf(Matrix::from_rows({{1, 2}, {2, 4}}), 2), rank_mismatch_error);
}

TEST_CASE("solve_sf recovers planted full-rank factorizations") {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        const std::size_t r = 2 + seed % 3;
        const Matrix m = planted_product(6 + seed, 5 + seed, r, seed * 17);
        SfOptions opts;
        opts.restarts = 40;
        const SfOutcome out = solve_sf(m, r, opts);
        REQUIRE(out.status == SolveStatus::solved);
        const VerifyReport rep = verify_factorization(m, *out.factorization, 1e-7);
        CHECK(rep.ok);

        // structure conditions on the fitted transforms
        const Matrix w = out.system.t_c * out.system.m_c;
        const Matrix a = out.system.m_r * out.system.t_r;
        CHECK(w.min_entry() >= -1e-7);
        CHECK(a.min_entry() >= -1e-7);
        CHECK(frobenius_norm(a * w - m) <= 1e-7 * frobenius_norm(m));
    }
}

TEST_CASE("solve_sf verdict is basis independent") {
    const Matrix m = planted_product(6, 5, 3, 99);
    SfOptions opts;
    opts.restarts = 25;
    Rng rng(5);
    int solved = 0;
    for (int trial = 0; trial < 5; ++trial) {
        // random invertible recombinations of the svd bases
        const SvdResult sv = svd(m);
        Matrix u(m.rows(), 3), v(m.cols(), 3);
        for (std::size_t k = 0; k < 3; ++k) {
            for (std::size_t i = 0; i < m.rows(); ++i) u(i, k) = sv.left(i, k);
            for (std::size_t i = 0; i < m.cols(); ++i) v(i, k) = sv.right(i, k);
        }
        Matrix g(3, 3), h(3, 3);
        do {
            for (auto& x : g.data()) x = rng.gaussian();
        } while (numeric_rank(g) < 3);
        do {
            for (auto& x : h.data()) x = rng.gaussian();
        } while (numeric_rank(h) < 3);
        const SfOutcome out = solve_sf(m, 3, opts, build_simplicial_system(m, 3, u * g, v * h));
        solved += out.status == SolveStatus::solved ? 1 : 0;
    }
    CHECK(solved == 5);
}

TEST_CASE("solve_sf never accepts the rank-3 gap instance") {
    const Matrix m = nested_square_gap();
    REQUIRE(numeric_rank(m) == 3);
    SfOptions opts;
    opts.restarts = 30;
    opts.lbfgs_iters = 150;
    const SfOutcome out = solve_sf(m, 3, opts);
    CHECK(out.status == SolveStatus::unresolved);
    CHECK_FALSE(out.factorization.has_value());
}

TEST_CASE("maximal independent column sets") {
    Rng rng(12);
    const Matrix full = random_nonneg(6, 3, rng);
    REQUIRE(numeric_rank(full) == 3);
    const auto sets = maximal_independent_column_sets(full);
    REQUIRE(sets.size() == 1);
    CHECK(sets[0] == std::vector<std::size_t>{0, 1, 2});

    // third column is the average of the first two: all pairs stay independent
    Matrix def(5, 3);
    for (std::size_t i = 0; i < 5; ++i) {
        def(i, 0) = rng.uniform();
        def(i, 1) = rng.uniform();
        def(i, 2) = 0.5 * (def(i, 0) + def(i, 1));
    }
    const auto pairs = maximal_independent_column_sets(def);
    REQUIRE(pairs.size() == 3);
    CHECK(pairs[0] == std::vector<std::size_t>{0, 1});
    CHECK(pairs[1] == std::vector<std::size_t>{0, 2});
    CHECK(pairs[2] == std::vector<std::size_t>{1, 2});
}

TEST_CASE("restricted pseudoinverse zeroes rows outside the set") {
    Rng rng(31);
    const Matrix a = random_nonneg(5, 3, rng);
    const std::vector<std::size_t> u{0, 2};
    const Matrix pi = restricted_pseudoinverse(a, u);
    REQUIRE(pi.rows() == 3);
    REQUIRE(pi.cols() == 5);
    for (std::size_t j = 0; j < 5; ++j) CHECK(pi(1, j) == 0.0);
    const Matrix sub = pseudoinverse(a.select_cols(u));
    for (std::size_t j = 0; j < 5; ++j) {
        CHECK(pi(0, j) == Approx(sub(0, j)));
        CHECK(pi(2, j) == Approx(sub(1, j)));
    }
}

TEST_CASE("proper chains reproduce W' through the restricted pseudoinverse") {
    Rng rng(71);
    for (int trial = 0; trial < 4; ++trial) {
        const bool deficient = trial % 2 == 1;
        Matrix a(6, 3);
        for (std::size_t i = 0; i < 6; ++i) {
            a(i, 0) = rng.uniform();
            a(i, 1) = rng.uniform();
            a(i, 2) = deficient ? 0.25 * a(i, 0) + 0.75 * a(i, 1) : rng.uniform();
        }
        const Matrix w_true = random_nonneg(3, 7, rng);
        const Matrix m = a * w_true;

        const ProperChain chain = build_proper_chain(m, a);
        // cone-LP weights against the pseudoinverse route, column by column
        for (std::size_t i = 0; i < m.cols(); ++i) {
            const auto& u = chain.col_sets[chain.sigma_w[i]];
            const std::vector<double> via_pinv = matvec(restricted_pseudoinverse(a, u), m.col(i));
            const std::vector<double> via_lp = chain.w_prime.col(i);
            for (std::size_t k = 0; k < 3; ++k)
                CHECK(via_lp[k] == Approx(via_pinv[k]).margin(1e-8));
        }
        CHECK(frobenius_norm(a * chain.w_prime - m) < 1e-7 * frobenius_norm(m));
        CHECK(frobenius_norm(chain.a_prime * chain.w_prime - m) < 1e-7 * frobenius_norm(m));
        CHECK(chain.w_prime.min_entry() >= -1e-9);
        CHECK(chain.a_prime.min_entry() >= -1e-9);

        // minimal bases are lexicographically minimal among cone-containing sets
        for (std::size_t i = 0; i < m.cols(); ++i) {
            const auto mb = minimal_basis(a, m.col(i));
            REQUIRE(mb.has_value());
            CHECK(*mb == chain.col_sets[chain.sigma_w[i]]);
        }
    }
}

TEST_CASE("proper chain system variable counts") {
    const Matrix m1 = planted_product(4, 3, 1, 7);
    const PolySystem sys1 = build_proper_chain_system(m1, 1, trivial_partition(m1.cols()),
                                                      trivial_partition(m1.rows()));
    CHECK(sys1.num_vars() == 2);

    const Matrix m2 = planted_product(5, 4, 2, 8);
    const PolySystem sys2 = build_proper_chain_system(m2, 2, trivial_partition(m2.cols()),
                                                      trivial_partition(m2.rows()));
    CHECK(sys2.num_vars() == 8);
}

TEST_CASE("proper chain system accepts a planted assignment") {
    Matrix a_true, w_true;
    const Matrix m = planted_product(5, 6, 2, 19, &a_true, &w_true);
    const PolySystem sys = build_proper_chain_system(m, 2, trivial_partition(m.cols()),
                                                     trivial_partition(m.rows()));
    std::vector<double> x(sys.num_vars());
    const Matrix t = w_true * pseudoinverse(sys.m_c);
    const Matrix s = pseudoinverse(sys.m_r) * a_true;
    std::copy(t.data().begin(), t.data().end(), x.begin());
    std::copy(s.data().begin(), s.data().end(), x.begin() + static_cast<std::ptrdiff_t>(sys.t_size()));
    CHECK(sys.max_violation(x, m) <= 1e-8 * frobenius_norm(m));
}

TEST_CASE("proper chain system rejects oversized partitions") {
    const Matrix m = planted_product(4, 6, 1, 33);
    PartitionSpec bad;
    bad.k = 5;
    bad.s = 1;
    bad.parts.assign(7, {});
    bad.assignment.resize(6);
    for (std::size_t i = 0; i < 6; ++i) {
        bad.assignment[i] = i; // six distinct parts, above the 2^1 transform cap
        bad.parts[i].push_back(i);
    }
    CHECK_THROWS_AS(
        build_proper_chain_system(m, 1, bad, trivial_partition(m.rows())),
        invalid_partition_error);
}

TEST_CASE("solve_general_nmf flags r below the rank bound") {
    const GeneralOutcome out = solve_general_nmf(Matrix::identity(2), 1);
    CHECK(out.status == SolveStatus::provably_infeasible);
    CHECK_FALSE(out.factorization.has_value());
}

TEST_CASE("solve_general_nmf uses an identity witness for large r") {
    Rng rng(9);
    const Matrix m = random_nonneg(3, 4, rng);
    const GeneralOutcome out = solve_general_nmf(m, 4);
    REQUIRE(out.status == SolveStatus::solved);
    CHECK(out.factorization->residual_fro <= 1e-10 * frobenius_norm(m));
    CHECK(out.factorization->a.cols() == 4);
}

TEST_CASE("solve_general_nmf solves planted instances") {
    for (std::uint64_t seed = 2; seed <= 4; ++seed) {
        const std::size_t r = seed % 3 + 1;
        const Matrix m = planted_product(5 + seed, 4 + seed, r, seed * 31);
        GeneralOptions opts;
        opts.restarts_per_pair = 20;
        opts.max_pairs = 4;
        const GeneralOutcome out = solve_general_nmf(m, r, opts);
        REQUIRE(out.status == SolveStatus::solved);
        CHECK(verify_factorization(m, *out.factorization, 1e-7).ok);
    }
}

TEST_CASE("solve_general_nmf stays sound on the gap instance at r = 3") {
    GeneralOptions opts;
    opts.restarts_per_pair = 6;
    opts.max_pairs = 6;
    opts.lbfgs_iters = 120;
    const GeneralOutcome out = solve_general_nmf(nested_square_gap(), 3, opts);
    CHECK(out.status == SolveStatus::unresolved);
}

TEST_CASE("solve_general_nmf solves the rank gap instance through the identity witness") {
    // 4 x 4 with rank 3 and nonnegative rank 4: r = 4 reaches the column count
    const GeneralOutcome out = solve_general_nmf(nested_square_gap(), 4);
    REQUIRE(out.status == SolveStatus::solved);
    CHECK(out.pairs_tried == 0);
    CHECK(verify_factorization(nested_square_gap(), *out.factorization, 1e-7).ok);
}

TEST_CASE("multi-part systems accept planted chain transforms") {
    // a 2-D fan of three rays: no single independent pair's cone covers all of
    // cone(A), so the chain's choice function genuinely switches bases
    Rng rng(61);
    const Matrix a = Matrix::from_rows({{1, 1, 0}, {0, 1, 1}});
    Matrix w(3, 6);
    for (std::size_t j = 0; j < 6; ++j) {
        // alternate support between {0,1} and {1,2}
        if (j % 2 == 0) {
            w(0, j) = 0.2 + rng.uniform();
            w(1, j) = 0.2 + rng.uniform();
        } else {
            w(1, j) = 0.2 + rng.uniform();
            w(2, j) = 0.2 + rng.uniform();
        }
    }
    const Matrix m = a * w;
    const ProperChain chain = build_proper_chain(m, a);
    const std::size_t col_parts_used =
        1 + *std::max_element(chain.sigma_w.begin(), chain.sigma_w.end());
    REQUIRE(col_parts_used >= 2);

    // partitions induced by the chain's choice functions
    PartitionSpec cols, rows;
    cols.k = chain.col_sets.size();
    cols.s = 2;
    cols.parts.assign(cols.k + 1, {});
    cols.assignment.assign(m.cols(), 0);
    for (std::size_t i = 0; i < m.cols(); ++i) {
        cols.assignment[i] = chain.sigma_w[i];
        cols.parts[chain.sigma_w[i]].push_back(i);
    }
    rows.k = chain.row_sets.size();
    rows.s = 2;
    rows.parts.assign(rows.k + 1, {});
    rows.assignment.assign(m.rows(), 0);
    for (std::size_t j = 0; j < m.rows(); ++j) {
        rows.assignment[j] = chain.sigma_a[j];
        rows.parts[chain.sigma_a[j]].push_back(j);
    }

    const PolySystem sys = build_proper_chain_system(m, 3, cols, rows);
    REQUIRE(sys.num_col_parts >= 2);

    // planted transforms: T_p = Pi(A, U_p) C and S_q = B^T Pi(W'^T, V_q)^T,
    // with C and B the span bases of the system
    std::vector<double> x(sys.num_vars(), 0.0);
    std::vector<std::size_t> col_part_of(sys.num_col_parts, 0), row_part_of(sys.num_row_parts, 0);
    for (std::size_t i = 0; i < m.cols(); ++i) col_part_of[sys.col_part[i]] = chain.sigma_w[i];
    for (std::size_t j = 0; j < m.rows(); ++j) row_part_of[sys.row_part[j]] = chain.sigma_a[j];
    for (std::size_t p = 0; p < sys.num_col_parts; ++p) {
        const Matrix t = restricted_pseudoinverse(a, chain.col_sets[col_part_of[p]]) * sys.col_basis;
        std::copy(t.data().begin(), t.data().end(),
                  x.begin() + static_cast<std::ptrdiff_t>(sys.t_offset(p)));
    }
    const Matrix wt = chain.w_prime.transpose();
    for (std::size_t q = 0; q < sys.num_row_parts; ++q) {
        const Matrix s =
            sys.row_basis.transpose() * restricted_pseudoinverse(wt, chain.row_sets[row_part_of[q]]).transpose();
        std::copy(s.data().begin(), s.data().end(),
                  x.begin() + static_cast<std::ptrdiff_t>(sys.s_offset(q)));
    }
    CHECK(sys.max_violation(x, m) <= 1e-8 * frobenius_norm(m));
}

TEST_CASE("general search on a padded rank gap stays sound") {
    // pad the gap matrix to 5 x 5 (duplicate structure keeps rank 3 and
    // nonnegative rank 4) so the identity witness is out of reach
    const Matrix g = nested_square_gap();
    Matrix m(5, 5);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) m(i, j) = g(i, j);
    for (std::size_t j = 0; j < 4; ++j) m(4, j) = g(0, j) + g(1, j);
    for (std::size_t i = 0; i < 5; ++i) m(i, 4) = m(i, 0) + m(i, 2);
    REQUIRE(numeric_rank(m) == 3);

    GeneralOptions opts;
    opts.enum_k = 2;
    opts.max_pairs = 24;
    opts.restarts_per_pair = 6;
    opts.lbfgs_iters = 150;
    const GeneralOutcome out = solve_general_nmf(m, 4, opts);
    CHECK(out.status != SolveStatus::provably_infeasible);
    if (out.status == SolveStatus::solved) {
        CHECK(verify_factorization(m, *out.factorization, 1e-7).ok);
    }
}
