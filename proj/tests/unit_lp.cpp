#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <random>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "ewhbench/lp.hpp"

using namespace ewhbench;

namespace {

SparseLp make_lp(int cols, int rows) {
    SparseLp lp;
    lp.num_cols = cols;
    lp.num_rows = rows;
    lp.objective.assign(static_cast<std::size_t>(cols), 0.0);
    lp.col_lower.assign(static_cast<std::size_t>(cols), 0.0);
    lp.col_upper.assign(static_cast<std::size_t>(cols), kInf);
    lp.row_lower.assign(static_cast<std::size_t>(rows), -kInf);
    lp.row_upper.assign(static_cast<std::size_t>(rows), kInf);
    return lp;
}

double feasibility_gap(const SparseLp& lp, const std::vector<double>& x) {
    double worst = 0.0;
    for (int j = 0; j < lp.num_cols; ++j) {
        worst = std::max(worst, lp.col_lower[static_cast<std::size_t>(j)] - x[static_cast<std::size_t>(j)]);
        worst = std::max(worst, x[static_cast<std::size_t>(j)] - lp.col_upper[static_cast<std::size_t>(j)]);
    }
    std::vector<double> act(static_cast<std::size_t>(lp.num_rows), 0.0);
    for (std::size_t e = 0; e < lp.entry_row.size(); ++e)
        act[static_cast<std::size_t>(lp.entry_row[e])] +=
            lp.entry_value[e] * x[static_cast<std::size_t>(lp.entry_col[e])];
    for (int i = 0; i < lp.num_rows; ++i) {
        worst = std::max(worst, lp.row_lower[static_cast<std::size_t>(i)] - act[static_cast<std::size_t>(i)]);
        worst = std::max(worst, act[static_cast<std::size_t>(i)] - lp.row_upper[static_cast<std::size_t>(i)]);
    }
    return worst;
}

// Exhaustive vertex oracle for small dense LPs with finite column bounds.
// Every vertex of the feasible polytope is the solution of n active
// constraints drawn from the column and row bound set, so enumerating all
// n-subsets and keeping the best feasible solve gives the true optimum.
struct VertexOracle {
    bool feasible = false;
    double objective = 0.0;
};

VertexOracle enumerate_vertices(const SparseLp& lp) {
    const int n = lp.num_cols;
    std::vector<std::vector<double>> dense(static_cast<std::size_t>(lp.num_rows),
                                           std::vector<double>(static_cast<std::size_t>(n), 0.0));
    for (std::size_t e = 0; e < lp.entry_row.size(); ++e)
        dense[static_cast<std::size_t>(lp.entry_row[e])][static_cast<std::size_t>(lp.entry_col[e])] +=
            lp.entry_value[e];

    // candidate active constraints: (normal, rhs)
    std::vector<std::vector<double>> normals;
    std::vector<double> rhs;
    for (int j = 0; j < n; ++j) {
        for (double b : {lp.col_lower[static_cast<std::size_t>(j)], lp.col_upper[static_cast<std::size_t>(j)]}) {
            if (!std::isfinite(b)) continue;
            std::vector<double> a(static_cast<std::size_t>(n), 0.0);
            a[static_cast<std::size_t>(j)] = 1.0;
            normals.push_back(a);
            rhs.push_back(b);
        }
    }
    for (int i = 0; i < lp.num_rows; ++i) {
        for (double b : {lp.row_lower[static_cast<std::size_t>(i)], lp.row_upper[static_cast<std::size_t>(i)]}) {
            if (!std::isfinite(b)) continue;
            normals.push_back(dense[static_cast<std::size_t>(i)]);
            rhs.push_back(b);
        }
    }

    VertexOracle best;
    const int total = static_cast<int>(normals.size());
    std::vector<int> pick(static_cast<std::size_t>(n));
    const auto solve_and_score = [&](const std::vector<int>& sel) {
        std::vector<std::vector<double>> a(static_cast<std::size_t>(n),
                                           std::vector<double>(static_cast<std::size_t>(n) + 1, 0.0));
        for (int r = 0; r < n; ++r) {
            for (int c = 0; c < n; ++c)
                a[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] =
                    normals[static_cast<std::size_t>(sel[static_cast<std::size_t>(r)])][static_cast<std::size_t>(c)];
            a[static_cast<std::size_t>(r)][static_cast<std::size_t>(n)] =
                rhs[static_cast<std::size_t>(sel[static_cast<std::size_t>(r)])];
        }
        for (int c = 0; c < n; ++c) {  // gaussian elimination, partial pivot
            int piv = c;
            for (int r = c + 1; r < n; ++r)
                if (std::abs(a[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]) >
                    std::abs(a[static_cast<std::size_t>(piv)][static_cast<std::size_t>(c)]))
                    piv = r;
            if (std::abs(a[static_cast<std::size_t>(piv)][static_cast<std::size_t>(c)]) < 1e-8) return;
            std::swap(a[static_cast<std::size_t>(c)], a[static_cast<std::size_t>(piv)]);
            for (int r = 0; r < n; ++r) {
                if (r == c) continue;
                const double f = a[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] /
                                 a[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)];
                for (int k = c; k <= n; ++k)
                    a[static_cast<std::size_t>(r)][static_cast<std::size_t>(k)] -=
                        f * a[static_cast<std::size_t>(c)][static_cast<std::size_t>(k)];
            }
        }
        std::vector<double> x(static_cast<std::size_t>(n));
        for (int c = 0; c < n; ++c)
            x[static_cast<std::size_t>(c)] = a[static_cast<std::size_t>(c)][static_cast<std::size_t>(n)] /
                                             a[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)];
        if (feasibility_gap(lp, x) > 1e-7) return;
        double obj = 0.0;
        for (int c = 0; c < n; ++c)
            obj += lp.objective[static_cast<std::size_t>(c)] * x[static_cast<std::size_t>(c)];
        if (!best.feasible || obj < best.objective) {
            best.feasible = true;
            best.objective = obj;
        }
    };
    // iterate over n-subsets of the candidate list
    const std::function<void(int, int)> rec = [&](int start, int depth) {
        if (depth == n) {
            solve_and_score(pick);
            return;
        }
        for (int i = start; i < total; ++i) {
            pick[static_cast<std::size_t>(depth)] = i;
            rec(i + 1, depth + 1);
        }
    };
    rec(0, 0);
    return best;
}

}  // namespace

TEST_CASE("bounded two-variable optimum with an active row") {
    SparseLp lp = make_lp(2, 1);
    lp.objective = {-1.0, -2.0};
    lp.col_upper = {3.0, 2.0};
    lp.add_entry(0, 0, 1.0);
    lp.add_entry(0, 1, 1.0);
    lp.row_upper[0] = 4.0;
    lp.row_lower[0] = -kInf;

    const LpSolution sol = solve_lp(lp);
    REQUIRE(sol.status == LpStatus::optimal);
    CHECK(sol.objective == Catch::Approx(-6.0).margin(1e-9));
    CHECK(sol.x[0] == Catch::Approx(2.0).margin(1e-9));
    CHECK(sol.x[1] == Catch::Approx(2.0).margin(1e-9));
    CHECK(sol.row_activity[0] == Catch::Approx(4.0).margin(1e-9));
    CHECK(sol.max_primal_residual <= 1e-7);
    CHECK(sol.max_dual_residual <= 1e-7);
    // active <= row in a minimization carries a nonpositive... here the dual
    // solves c_x - y = 0 with x basic, so y = -1
    CHECK(sol.dual[0] == Catch::Approx(-1.0).margin(1e-9));
}

TEST_CASE("equality and range rows") {
    SparseLp lp = make_lp(2, 2);
    lp.objective = {1.0, 1.0};
    lp.col_upper = {5.0, 5.0};
    lp.add_entry(0, 0, 1.0);
    lp.add_entry(0, 1, 1.0);
    lp.row_lower[0] = 2.0;
    lp.row_upper[0] = 2.0;
    lp.add_entry(1, 0, 1.0);
    lp.add_entry(1, 1, -1.0);
    lp.row_lower[1] = -1.0;
    lp.row_upper[1] = 1.0;

    const LpSolution sol = solve_lp(lp);
    REQUIRE(sol.status == LpStatus::optimal);
    CHECK(sol.objective == Catch::Approx(2.0).margin(1e-9));
    CHECK(feasibility_gap(lp, sol.x) <= 1e-9);
    CHECK(sol.max_dual_residual <= 1e-7);
}

TEST_CASE("greater-equal row pushes off the cheap bound") {
    SparseLp lp = make_lp(2, 1);
    lp.objective = {2.0, 3.0};
    lp.col_upper = {3.0, kInf};
    lp.add_entry(0, 0, 1.0);
    lp.add_entry(0, 1, 1.0);
    lp.row_lower[0] = 4.0;

    const LpSolution sol = solve_lp(lp);
    REQUIRE(sol.status == LpStatus::optimal);
    CHECK(sol.objective == Catch::Approx(9.0).margin(1e-9));
    CHECK(sol.x[0] == Catch::Approx(3.0).margin(1e-9));
    CHECK(sol.x[1] == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("infeasible bound against row") {
    SparseLp lp = make_lp(1, 1);
    lp.objective = {1.0};
    lp.col_upper = {1.0};
    lp.add_entry(0, 0, 1.0);
    lp.row_lower[0] = 2.0;

    const LpSolution sol = solve_lp(lp);
    CHECK(sol.status == LpStatus::infeasible);
}

TEST_CASE("unbounded ray through a slack row") {
    SparseLp lp = make_lp(2, 1);
    lp.objective = {-1.0, 0.0};
    lp.add_entry(0, 0, 1.0);
    lp.add_entry(0, 1, -1.0);
    lp.row_upper[0] = 3.0;

    const LpSolution sol = solve_lp(lp);
    CHECK(sol.status == LpStatus::unbounded);
}

TEST_CASE("no rows at all") {
    SparseLp lp = make_lp(2, 0);
    lp.objective = {1.0, -1.0};
    lp.col_lower = {1.0, 0.0};
    lp.col_upper = {3.0, 2.0};

    const LpSolution sol = solve_lp(lp);
    REQUIRE(sol.status == LpStatus::optimal);
    CHECK(sol.objective == Catch::Approx(-1.0).margin(1e-12));
    CHECK(sol.x[0] == 1.0);
    CHECK(sol.x[1] == 2.0);
}

TEST_CASE("degenerate cycling example terminates at the known optimum") {
    // Beale's cycling LP; anti-cycling must kick in for this to terminate.
    SparseLp lp = make_lp(4, 3);
    lp.objective = {-0.75, 150.0, -0.02, 6.0};
    lp.add_entry(0, 0, 0.25);
    lp.add_entry(0, 1, -60.0);
    lp.add_entry(0, 2, -0.04);
    lp.add_entry(0, 3, 9.0);
    lp.row_upper[0] = 0.0;
    lp.add_entry(1, 0, 0.5);
    lp.add_entry(1, 1, -90.0);
    lp.add_entry(1, 2, -0.02);
    lp.add_entry(1, 3, 3.0);
    lp.row_upper[1] = 0.0;
    lp.add_entry(2, 2, 1.0);
    lp.row_upper[2] = 1.0;

    const LpSolution sol = solve_lp(lp);
    REQUIRE(sol.status == LpStatus::optimal);
    CHECK(sol.objective == Catch::Approx(-0.05).margin(1e-9));
    CHECK(sol.x[2] == Catch::Approx(1.0).margin(1e-9));
    CHECK(sol.max_dual_residual <= 1e-7);
}

TEST_CASE("validate rejects malformed problems") {
    SparseLp lp = make_lp(2, 1);
    lp.add_entry(0, 0, 1.0);
    SECTION("free column") { CHECK_THROWS(validate(lp)); }
    SECTION("crossed bounds") {
        lp.col_upper = {1.0, 2.0};
        lp.col_lower = {2.0, 0.0};
        lp.row_upper[0] = 1.0;
        CHECK_THROWS(validate(lp));
    }
    SECTION("entry out of range") {
        lp.col_upper = {1.0, 1.0};
        lp.row_upper[0] = 1.0;
        lp.add_entry(0, 7, 1.0);
        CHECK_THROWS(validate(lp));
    }
    SECTION("non-finite coefficient") {
        lp.col_upper = {1.0, 1.0};
        lp.row_upper[0] = 1.0;
        lp.entry_value[0] = kInf;
        CHECK_THROWS(validate(lp));
    }
}

TEST_CASE("random boxed LPs agree with exhaustive vertex enumeration") {
    std::mt19937_64 rng(20260819);
    std::uniform_int_distribution<int> ncols(2, 4), nrows(1, 4);
    std::uniform_int_distribution<int> grid(-8, 8);
    std::uniform_int_distribution<int> sense(0, 3);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    int infeasible_seen = 0, optimal_seen = 0;
    for (int trial = 0; trial < 240; ++trial) {
        const int n = ncols(rng), m = nrows(rng);
        SparseLp lp = make_lp(n, m);
        for (int j = 0; j < n; ++j) {
            const double a = grid(rng) * 0.25, b = grid(rng) * 0.25;
            lp.col_lower[static_cast<std::size_t>(j)] = std::min(a, b);
            lp.col_upper[static_cast<std::size_t>(j)] = std::max(a, b);
            lp.objective[static_cast<std::size_t>(j)] = grid(rng) * 0.25;
        }
        for (int i = 0; i < m; ++i) {
            int nonzeros = 0;
            for (int j = 0; j < n; ++j) {
                if (unit(rng) < 0.75) {
                    const double v = grid(rng) * 0.25;
                    if (v != 0.0) {
                        lp.add_entry(i, j, v);
                        ++nonzeros;
                    }
                }
            }
            if (nonzeros == 0) lp.add_entry(i, 0, 1.0);
            const double r = grid(rng) * 0.25;
            switch (sense(rng)) {
                case 0: lp.row_upper[static_cast<std::size_t>(i)] = r; break;
                case 1: lp.row_lower[static_cast<std::size_t>(i)] = r; break;
                case 2:
                    lp.row_lower[static_cast<std::size_t>(i)] = r;
                    lp.row_upper[static_cast<std::size_t>(i)] = r;
                    break;
                default:
                    lp.row_lower[static_cast<std::size_t>(i)] = r;
                    lp.row_upper[static_cast<std::size_t>(i)] = r + 1.0;
                    break;
            }
        }
        validate(lp);

        const LpSolution sol = solve_lp(lp);
        const VertexOracle oracle = enumerate_vertices(lp);
        INFO("trial " << trial << " status " << to_string(sol.status));
        if (oracle.feasible) {
            REQUIRE(sol.status == LpStatus::optimal);
            CHECK(sol.objective == Catch::Approx(oracle.objective).margin(1e-6));
            CHECK(feasibility_gap(lp, sol.x) <= 1e-7);
            CHECK(sol.max_dual_residual <= 1e-7);
            ++optimal_seen;
        } else {
            REQUIRE(sol.status == LpStatus::infeasible);
            ++infeasible_seen;
        }
    }
    // the generator must exercise both outcomes to mean anything
    CHECK(optimal_seen >= 60);
    CHECK(infeasible_seen >= 20);
}

TEST_CASE("starting basis hint is honored and bad hints fall back") {
    SparseLp lp = make_lp(2, 1);
    lp.objective = {-1.0, -2.0};
    lp.col_upper = {3.0, 2.0};
    lp.add_entry(0, 0, 1.0);
    lp.add_entry(0, 1, 1.0);
    lp.row_upper[0] = 4.0;

    const LpSolution cold = solve_lp(lp);
    REQUIRE(cold.status == LpStatus::optimal);

    BasisHint hint;
    hint.basic = {0};                 // x basic in the only row
    hint.at_upper.assign(3, 0);
    hint.at_upper[1] = 1;             // y pinned at its upper bound
    const LpSolution warm = solve_lp(lp, {}, &hint);
    REQUIRE(warm.status == LpStatus::optimal);
    CHECK(warm.objective == cold.objective);
    CHECK(warm.iterations <= cold.iterations);
    CHECK(warm.iterations == 0);

    BasisHint garbage;
    garbage.basic = {0, 0};  // wrong size
    garbage.at_upper.assign(3, 0);
    const LpSolution fallback = solve_lp(lp, {}, &garbage);
    REQUIRE(fallback.status == LpStatus::optimal);
    CHECK(fallback.objective == Catch::Approx(cold.objective).margin(1e-12));

    BasisHint dupes;
    dupes.basic = {0};
    dupes.at_upper.assign(3, 0);
    dupes.basic[0] = 99;  // out of range index
    const LpSolution fb2 = solve_lp(lp, {}, &dupes);
    REQUIRE(fb2.status == LpStatus::optimal);
}

TEST_CASE("repeat solves are bitwise identical") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> grid(-8, 8);
    SparseLp lp = make_lp(6, 5);
    for (int j = 0; j < 6; ++j) {
        lp.col_lower[static_cast<std::size_t>(j)] = -2.0;
        lp.col_upper[static_cast<std::size_t>(j)] = 2.0;
        lp.objective[static_cast<std::size_t>(j)] = grid(rng) * 0.25;
    }
    for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 6; ++j) {
            const double v = grid(rng) * 0.25;
            if (v != 0.0) lp.add_entry(i, j, v);
        }
        lp.row_upper[static_cast<std::size_t>(i)] = 1.0 + i * 0.5;
    }
    const LpSolution a = solve_lp(lp);
    const LpSolution b = solve_lp(lp);
    REQUIRE(a.status == b.status);
    CHECK(std::memcmp(&a.objective, &b.objective, sizeof(double)) == 0);
    REQUIRE(a.x.size() == b.x.size());
    CHECK(std::memcmp(a.x.data(), b.x.data(), a.x.size() * sizeof(double)) == 0);
    CHECK(a.iterations == b.iterations);
}

TEST_CASE("iteration limit reports without crashing") {
    SparseLp lp = make_lp(3, 2);
    lp.objective = {-1.0, -1.0, -1.0};
    lp.col_upper = {1.0, 1.0, 1.0};
    lp.add_entry(0, 0, 1.0);
    lp.add_entry(0, 1, 1.0);
    lp.row_upper[0] = 1.5;
    lp.add_entry(1, 1, 1.0);
    lp.add_entry(1, 2, 1.0);
    lp.row_upper[1] = 1.5;

    SimplexOptions opts;
    opts.max_iterations = 1;
    const LpSolution sol = solve_lp(lp, opts);
    CHECK(sol.status == LpStatus::iteration_limit);
}

TEST_CASE("large chained system stays accurate through refactorizations") {
    // x_{k+1} = 0.9 x_k + u_k with u in [0,1], minimize total u subject to
    // x_n >= 5; forces a long basic chain like the control model's
    // temperature recursion.
    const int n = 120;
    SparseLp lp = make_lp(2 * n, n);
    for (int k = 0; k < n; ++k) {
        const int xk = k, uk = n + k;
        lp.col_upper[static_cast<std::size_t>(xk)] = 100.0;
        lp.col_upper[static_cast<std::size_t>(uk)] = 1.0;
        lp.objective[static_cast<std::size_t>(uk)] = 1.0;
        lp.add_entry(k, xk, 1.0);
        if (k > 0) lp.add_entry(k, xk - 1, -0.9);
        lp.add_entry(k, uk, -1.0);
        lp.row_lower[static_cast<std::size_t>(k)] = 0.0;
        lp.row_upper[static_cast<std::size_t>(k)] = 0.0;
    }
    lp.col_lower[static_cast<std::size_t>(n - 1)] = 5.0;

    SimplexOptions opts;
    opts.refactor_every = 16;
    const LpSolution sol = solve_lp(lp, opts);
    REQUIRE(sol.status == LpStatus::optimal);
    CHECK(feasibility_gap(lp, sol.x) <= 1e-7);
    CHECK(sol.max_primal_residual <= 1e-7);
    CHECK(sol.max_dual_residual <= 1e-7);
    CHECK(sol.x[static_cast<std::size_t>(n - 1)] >= 5.0 - 1e-7);
}
