#include <catch2/catch.hpp>

#include <algorithm>
#include <set>
#include <vector>

#include "nmfpack/partition_enum.hpp"
#include "nmfpack/rng.hpp"

using namespace nmfpack;

namespace {

// independent oracle: try all 2^m labelings against the margin LP
std::set<HyperplaneLabeling> brute_force_labelings(const Matrix& m) {
    std::set<HyperplaneLabeling> out;
    const std::size_t n = m.cols();
    for (std::size_t bits = 0; bits < (1ULL << n); ++bits) {
        HyperplaneLabeling lab(n);
        for (std::size_t i = 0; i < n; ++i) lab[i] = (bits >> i) & 1 ? 1 : -1;
        if (hyperplane_labeling_margin(m, lab) > 1e-7) out.insert(lab);
    }
    return out;
}

std::set<HyperplaneLabeling> as_set(const std::vector<HyperplaneLabeling>& v) {
    return {v.begin(), v.end()};
}

Matrix random_rank_bounded(std::size_t n, std::size_t m, std::size_t rank, Rng& rng) {
    Matrix a(n, rank), b(rank, m);
    for (auto& v : a.data()) v = rng.gaussian();
    for (auto& v : b.data()) v = rng.gaussian();
    return a * b;
}

} // namespace

TEST_CASE("hyperplane_separation labels with a zero band") {
    const Matrix m = Matrix::from_rows({{1, 0, 1}, {0, 1, 1}}); // columns e1, e2, e1+e2
    const HyperplaneSeparation sep = hyperplane_separation(m, {1.0, -1.0});
    CHECK(sep.labels == std::vector<int>{1, -1, 0});
}

TEST_CASE("two basis columns give four labelings") {
    const auto labs = enumerate_hyperplane_partitions(Matrix::identity(2), 2);
    CHECK(labs.size() == 4);
    CHECK(as_set(labs) == brute_force_labelings(Matrix::identity(2)));
}

TEST_CASE("collinear columns give the two constant labelings") {
    const Matrix m = Matrix::from_rows({{1, 2, 0.5}, {2, 4, 1}}); // positive multiples of one vector
    const auto labs = enumerate_hyperplane_partitions(m, 1);
    REQUIRE(labs.size() == 2);
    CHECK(as_set(labs) == std::set<HyperplaneLabeling>{{1, 1, 1}, {-1, -1, -1}});
}

TEST_CASE("the sum column rules out two sign patterns") {
    const Matrix m = Matrix::from_rows({{1, 0, 1}, {0, 1, 1}});
    const auto labs = enumerate_hyperplane_partitions(m, 2);
    CHECK(labs.size() == 6);
    const auto oracle = brute_force_labelings(m);
    CHECK(as_set(labs) == oracle);
    CHECK_FALSE(oracle.count({1, 1, -1}));
    CHECK_FALSE(oracle.count({-1, -1, 1}));
}

TEST_CASE("rank above s is rejected") {
    CHECK_THROWS_AS(enumerate_hyperplane_partitions(Matrix::identity(3), 2), rank_too_high_error);
}

TEST_CASE("zero columns always map to plus one") {
    const Matrix m = Matrix::from_rows({{1, 0, 0}, {0, 1, 0}}); // third column is zero
    for (const auto& lab : enumerate_hyperplane_partitions(m, 2)) CHECK(lab[2] == 1);
}

TEST_CASE("enumeration matches brute force on random matrices") {
    Rng rng(2024);
    for (int trial = 0; trial < 12; ++trial) {
        const std::size_t rank = 1 + trial % 3;
        const std::size_t cols = 4 + rng.uniform_index(3); // up to 6 columns
        const Matrix m = random_rank_bounded(4, cols, rank, rng);
        const auto mine = as_set(enumerate_hyperplane_partitions(m, rank));
        const auto oracle = brute_force_labelings(m);
        CHECK(mine == oracle);

        // loose Harding-style growth sanity on the output size
        double bound = 4.0;
        for (std::size_t t = 0; t < rank; ++t) bound *= static_cast<double>(cols);
        CHECK(static_cast<double>(mine.size()) <= bound + 4.0);
    }
}

TEST_CASE("witness normals reproduce their labelings") {
    Rng rng(55);
    const Matrix m = random_rank_bounded(3, 5, 2, rng);
    for (const auto& lh : enumerate_hyperplane_partitions_witnessed(m, 2)) {
        bool has_negative = false;
        for (int v : lh.labels) has_negative |= v < 0;
        if (!has_negative) continue; // all-plus labeling carries the zero witness
        const HyperplaneSeparation sep = hyperplane_separation(m, lh.normal);
        for (std::size_t i = 0; i < m.cols(); ++i)
            if (sep.labels[i] != 0) CHECK(sep.labels[i] == lh.labels[i]);
    }
}

TEST_CASE("single column simplicial partitions") {
    const Matrix m = Matrix::from_rows({{1.0}});
    const auto parts = enumerate_simplicial_partitions(m, 1, 1);
    REQUIRE(parts.size() == 2);
    std::set<std::vector<std::size_t>> assignments;
    for (const auto& p : parts) assignments.insert(p.assignment);
    CHECK(assignments == std::set<std::vector<std::size_t>>{{0}, {1}});
}

TEST_CASE("simplicial partitions cover every hyperplane split of two basis columns") {
    const Matrix m = Matrix::identity(2);
    const auto parts = enumerate_simplicial_partitions(m, 1, 2);
    std::set<std::vector<std::size_t>> assignments;
    for (const auto& p : parts) assignments.insert(p.assignment);
    for (const auto& lab : enumerate_hyperplane_partitions(m, 2)) {
        std::vector<std::size_t> expect(2);
        for (std::size_t i = 0; i < 2; ++i) expect[i] = lab[i] > 0 ? 0 : 1;
        CHECK(assignments.count(expect));
    }
}

TEST_CASE("every emitted partition is a disjoint cover") {
    Rng rng(99);
    const Matrix m = random_rank_bounded(3, 5, 2, rng);
    for (const auto& spec : enumerate_simplicial_partitions(m, 2, 2)) {
        std::vector<char> seen(m.cols(), 0);
        REQUIRE(spec.parts.size() == spec.k + 1);
        for (std::size_t p = 0; p < spec.parts.size(); ++p)
            for (std::size_t c : spec.parts[p]) {
                CHECK_FALSE(seen[c]);
                seen[c] = 1;
                CHECK(spec.assignment[c] == p);
            }
        for (char s : seen) CHECK(s);
    }
}

TEST_CASE("planted simplicial partitions appear in the enumeration") {
    Rng rng(123);
    for (int trial = 0; trial < 6; ++trial) {
        const std::size_t k = 1 + trial % 2, s = 2;
        const Matrix m = random_rank_bounded(3, 5, 2, rng);

        // plant k random sets of s hyperplanes and build the peeled partition
        std::vector<std::size_t> assignment(m.cols(), k);
        std::vector<char> taken(m.cols(), 0);
        for (std::size_t set_i = 0; set_i < k; ++set_i) {
            std::vector<std::vector<double>> normals(s, std::vector<double>(m.rows()));
            for (auto& h : normals)
                for (auto& v : h) v = rng.gaussian();
            for (std::size_t c = 0; c < m.cols(); ++c) {
                if (taken[c]) continue;
                bool all_nonneg = true;
                for (const auto& h : normals) all_nonneg &= dot(h, m.col(c)) >= 0.0;
                if (all_nonneg) {
                    taken[c] = 1;
                    assignment[c] = set_i;
                }
            }
        }
        bool found = false;
        for (const auto& spec : enumerate_simplicial_partitions(m, k, s))
            found |= spec.assignment == assignment;
        CHECK(found);
    }
}

TEST_CASE("simplicial enumeration respects its budget") {
    CHECK_THROWS_AS(enumerate_simplicial_partitions(Matrix::identity(2), 1, 2, 1),
                    budget_exceeded_error);
}

TEST_CASE("stored hyperplane sets regenerate their parts") {
    Rng rng(321);
    const Matrix m = random_rank_bounded(3, 6, 2, rng);
    for (const auto& spec : enumerate_simplicial_partitions(m, 2, 2)) {
        std::vector<char> taken(m.cols(), 0);
        for (std::size_t i = 0; i < spec.k; ++i) {
            REQUIRE(spec.hyperplane_sets[i].size() == spec.s);
            std::vector<std::size_t> part;
            for (std::size_t c = 0; c < m.cols(); ++c) {
                if (taken[c]) continue;
                const std::vector<double> col = m.col(c);
                bool all_nonneg = true;
                for (const auto& h : spec.hyperplane_sets[i])
                    all_nonneg &= dot(h, col) >= -1e-9 * (norm2(h) * norm2(col) + 1e-30);
                if (all_nonneg) {
                    part.push_back(c);
                    taken[c] = 1;
                }
            }
            CHECK(part == spec.parts[i]);
        }
    }
}
