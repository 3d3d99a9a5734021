#include <catch2/catch.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "nmfpack/convex_oracle.hpp"
#include "nmfpack/rng.hpp"

using namespace nmfpack;

namespace {

// Brute-force convex-combination search on a simplex grid; refined once
// around the best coarse point. Independent of the LP path.
double grid_hull_distance(const std::vector<double>& target,
                          const std::vector<std::vector<double>>& gens, double step) {
    const std::size_t k = gens.size();
    double best = norm1(target) + 1.0;
    std::vector<double> w(k, 0.0);

    auto eval = [&](const std::vector<double>& weights) {
        std::vector<double> p(target.size(), 0.0);
        for (std::size_t g = 0; g < k; ++g)
            for (std::size_t c = 0; c < target.size(); ++c) p[c] += weights[g] * gens[g][c];
        return l1_distance(p, target);
    };

    const long ticks = std::lround(1.0 / step);
    std::vector<long> counts(k, 0);
    // enumerate lattice points of the simplex with k generators
    std::function<void(std::size_t, long)> rec = [&](std::size_t g, long left) {
        if (g + 1 == k) {
            counts[g] = left;
            for (std::size_t i = 0; i < k; ++i) w[i] = static_cast<double>(counts[i]) / ticks;
            best = std::min(best, eval(w));
            return;
        }
        for (long c = 0; c <= left; ++c) {
            counts[g] = c;
            rec(g + 1, left - c);
        }
    };
    rec(0, ticks);
    return best;
}

} // namespace

TEST_CASE("l1_dist_to_hull on hand instances") {
    HullQuery mid{{0.5, 0.5}, {{1, 0}, {0, 1}}, {}};
    CHECK(l1_dist_to_hull(mid) == Approx(0.0).margin(1e-9));

    HullQuery far{{1, 0}, {{0, 1}}, {}};
    CHECK(l1_dist_to_hull(far) == Approx(2.0));

    HullQuery inside{{0.8, 0.2}, {{1, 0}, {0.5, 0.5}}, {}};
    CHECK(l1_dist_to_hull(inside) == Approx(0.0).margin(1e-9));
}

TEST_CASE("l1_dist_to_hull respects exclusions and input checking") {
    HullQuery q{{1, 0}, {{1, 0}, {0, 1}}, {0}};
    CHECK(l1_dist_to_hull(q) == Approx(2.0));

    HullQuery bad{{1, 0}, {{1, 0, 0}}, {}};
    CHECK_THROWS_AS(l1_dist_to_hull(bad), dimension_mismatch);

    HullQuery empty{{1, 0}, {{1, 0}}, {0}};
    CHECK_THROWS_AS(l1_dist_to_hull(empty), invalid_params_error);
}

TEST_CASE("l1_dist_to_hull is invariant under generator permutation") {
    Rng rng(101);
    for (int trial = 0; trial < 15; ++trial) {
        const std::size_t dim = 2 + rng.uniform_index(3);
        const std::size_t k = 2 + rng.uniform_index(3);
        std::vector<std::vector<double>> gens(k, std::vector<double>(dim));
        std::vector<double> target(dim);
        for (auto& g : gens)
            for (auto& v : g) v = rng.uniform();
        for (auto& v : target) v = rng.uniform();

        const double d1 = l1_dist_to_hull({target, gens, {}});
        std::vector<std::vector<double>> shuffled = gens;
        for (std::size_t i = shuffled.size(); i > 1; --i)
            std::swap(shuffled[i - 1], shuffled[rng.uniform_index(i)]);
        const double d2 = l1_dist_to_hull({target, shuffled, {}});
        CHECK(d1 == Approx(d2).margin(1e-8));
    }
}

TEST_CASE("l1_dist_to_hull agrees with the grid oracle") {
    Rng rng(7);
    for (int trial = 0; trial < 12; ++trial) {
        const std::size_t dim = 2 + rng.uniform_index(2);
        const std::size_t k = 2 + rng.uniform_index(3); // up to 4 generators
        std::vector<std::vector<double>> gens(k, std::vector<double>(dim));
        for (auto& g : gens) {
            for (auto& v : g) v = rng.uniform();
            const double s = norm1(g);
            for (auto& v : g) v /= s; // unit l1 rows, as in the loner geometry
        }

        std::vector<double> target(dim, 0.0);
        const bool inside = trial % 2 == 0;
        if (inside) {
            const std::vector<double> w = rng.simplex_point(k);
            for (std::size_t g = 0; g < k; ++g)
                for (std::size_t c = 0; c < dim; ++c) target[c] += w[g] * gens[g][c];
        } else {
            for (auto& v : target) v = rng.uniform() + 1.5; // pushed well outside the hull
        }

        const double lp = l1_dist_to_hull({target, gens, {}});
        const double step = k <= 3 ? 1e-3 : 5e-3;
        const double grid = grid_hull_distance(target, gens, step);
        if (lp < 1e-9) {
            CHECK(grid <= (k <= 3 ? 2e-3 : 2e-2));
        } else {
            CHECK(grid >= lp - 1e-9);
            CHECK(lp >= 0.01); // construction pushes target far out
        }
    }
}

TEST_CASE("in_cone on hand instances") {
    auto w = in_cone({2, 2}, {{1, 0}, {0, 1}});
    REQUIRE(w.has_value());
    CHECK((*w)[0] == Approx(2.0));
    CHECK((*w)[1] == Approx(2.0));

    CHECK_FALSE(in_cone({1, -1}, {{1, 0}, {0, 1}}).has_value());
    CHECK_FALSE(in_cone({1, 1, 0}, {{1, 0, 0}, {0, 1, 1}}).has_value());
}

TEST_CASE("in_cone is sound on random instances") {
    Rng rng(41);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t dim = 3, k = 4;
        std::vector<std::vector<double>> gens(k, std::vector<double>(dim));
        for (auto& g : gens)
            for (auto& v : g) v = rng.uniform();
        std::vector<double> target(dim, 0.0);
        for (std::size_t g = 0; g < k; ++g) {
            const double wg = 2.0 * rng.uniform();
            for (std::size_t c = 0; c < dim; ++c) target[c] += wg * gens[g][c];
        }
        auto w = in_cone(target, gens);
        REQUIRE(w.has_value());
        std::vector<double> recon(dim, 0.0);
        for (std::size_t g = 0; g < k; ++g) {
            CHECK((*w)[g] >= 0.0);
            for (std::size_t c = 0; c < dim; ++c) recon[c] += (*w)[g] * gens[g][c];
        }
        CHECK(norm_inf({recon[0] - target[0], recon[1] - target[1], recon[2] - target[2]}) <=
              1e-9 * (1.0 + norm_inf(target)));
    }
}

TEST_CASE("nnls_row on hand instances") {
    const Matrix basis = Matrix::from_rows({{1, 0}, {0, 1}});
    const std::vector<double> w = nnls_row({0.5, 0.5}, basis);
    CHECK(w[0] == Approx(0.5));
    CHECK(w[1] == Approx(0.5));

    const std::vector<double> z = nnls_row({1, 0}, Matrix::from_rows({{0, 1}}));
    REQUIRE(z.size() == 1);
    CHECK(z[0] == Approx(0.0).margin(1e-12));
}

TEST_CASE("nnls_row beats random nonnegative weight samples") {
    Rng rng(13);
    const std::size_t dim = 6, k = 4;
    Matrix basis(k, dim);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < dim; ++j) basis(i, j) = rng.uniform();
    std::vector<double> target(dim, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        const double wi = rng.uniform();
        for (std::size_t j = 0; j < dim; ++j) target[j] += wi * basis(i, j);
    }

    const std::vector<double> w = nnls_row(target, basis);
    auto residual = [&](const std::vector<double>& weights) {
        std::vector<double> p(dim, 0.0);
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < dim; ++j) p[j] += weights[i] * basis(i, j);
        for (std::size_t j = 0; j < dim; ++j) p[j] -= target[j];
        return norm2(p);
    };
    const double best = residual(w);
    for (int probe = 0; probe < 10000; ++probe) {
        std::vector<double> sample(k);
        for (auto& v : sample) v = 2.0 * rng.uniform();
        CHECK(best <= residual(sample) + 1e-9);
    }
    CHECK(best < 1e-8); // consistent instance reconstructs exactly
}
