#include <doctest.h>

#include "ddpred/errors.hpp"
#include "test_helpers.hpp"

using namespace ddpred;

namespace {

Trajectory scalar_trajectory(std::initializer_list<double> u,
                             std::initializer_list<double> y) {
    Matrix inputs(1, Index(u.size()));
    Matrix outputs(1, Index(y.size()));
    Index i = 0;
    for (double v : u) inputs(0, i++) = v;
    i = 0;
    for (double v : y) outputs(0, i++) = v;
    return Trajectory(inputs, outputs);
}

}  // namespace

TEST_CASE("build_page stacks disjoint windows") {
    const auto traj = scalar_trajectory({1, 2, 3, 4}, {5, 6, 7, 8});

    SUBCASE("direct stacking") {
        const auto sm = build_page(traj, 2, 1);
        Matrix expected(4, 2);
        expected << 1, 3, 2, 4, 5, 7, 6, 8;
        CHECK(sm.Z() == expected);
        CHECK(sm.M() == 2);
        CHECK(sm.discarded_samples() == 0);
        CHECK(sm.construction() == Construction::Page);
    }

    SUBCASE("single column when T = L") {
        const auto sm = build_page(traj, 4, 2);
        CHECK(sm.M() == 1);
        Matrix expected(8, 1);
        expected << 1, 2, 3, 4, 5, 6, 7, 8;
        CHECK(sm.Z() == expected);
    }

    SUBCASE("trailing samples dropped") {
        const auto traj5 = scalar_trajectory({1, 2, 3, 4, 5}, {6, 7, 8, 9, 10});
        const auto sm = build_page(traj5, 2, 1);
        CHECK(sm.M() == 2);
        CHECK(sm.discarded_samples() == 1);
    }

    SUBCASE("too short") {
        CHECK_THROWS_AS(build_page(traj, 5, 2), TrajectoryTooShort);
    }
}

TEST_CASE("build_hankel stacks sliding windows") {
    SUBCASE("unit shifts") {
        const auto traj = scalar_trajectory({1, 2, 3}, {4, 5, 6});
        const auto sm = build_hankel(traj, 2, 1);
        Matrix expected(4, 2);
        expected << 1, 2, 2, 3, 4, 5, 5, 6;
        CHECK(sm.Z() == expected);
        CHECK(sm.construction() == Construction::Hankel);
    }

    SUBCASE("T = L matches the page construction") {
        const auto traj = scalar_trajectory({1, 2, 3, 4}, {5, 6, 7, 8});
        CHECK(build_hankel(traj, 4, 2).Z() == build_page(traj, 4, 2).Z());
    }

    SUBCASE("column count is T - L + 1") {
        Rng rng(3);
        const Matrix u = linalg::random_gaussian(1, 10, rng);
        const Matrix y = linalg::random_gaussian(1, 10, rng);
        const auto sm = build_hankel(Trajectory(u, y), 4, 2);
        CHECK(sm.M() == 7);
    }
}

TEST_CASE("from_trajectories") {
    SUBCASE("two experiments, one column each") {
        const auto t1 = scalar_trajectory({1, 2}, {3, 4});
        const auto t2 = scalar_trajectory({5, 6}, {7, 8});
        const auto sm = from_trajectories({t1, t2}, 2, 1);
        CHECK(sm.M() == 2);
        Matrix expected(4, 2);
        expected << 1, 5, 2, 6, 3, 7, 4, 8;
        CHECK(sm.Z() == expected);
        CHECK(sm.construction() == Construction::Independent);
    }

    SUBCASE("single experiment equals page with T = L") {
        const auto t = scalar_trajectory({1, 2}, {3, 4});
        CHECK(from_trajectories({t}, 2, 1).Z() == build_page(t, 2, 1).Z());
    }

    SUBCASE("length mismatch") {
        const auto t1 = scalar_trajectory({1, 2}, {3, 4});
        const auto t2 = scalar_trajectory({1, 2, 3}, {4, 5, 6});
        CHECK_THROWS_AS(from_trajectories({t1, t2}, 2, 1), LengthMismatch);
    }
}

TEST_CASE("check_rank") {
    SUBCASE("noise-free persistently excited data reaches n_u L + n_x") {
        Rng rng(8);
        const auto scenario = testing::make_scenario(rng, 4, 4, 10, 8, 80);
        CHECK(check_rank(scenario.sm, scenario.model.n_x()));
    }

    SUBCASE("too few columns") {
        Rng rng(9);
        const Matrix Z = linalg::random_gaussian(8, 3, rng);
        const SignalMatrix sm(Z, 4, 2, 1, 1, Construction::Independent);
        CHECK(!check_rank(sm, 2));  // rank <= 3 < n_u L + n_x = 6
    }

    SUBCASE("zero matrix") {
        const SignalMatrix sm(Matrix::Zero(8, 10), 4, 2, 1, 1,
                              Construction::Independent);
        CHECK(!check_rank(sm, 1));
    }
}

TEST_CASE("rank condition holds with margin M >= n_u L + n_x + 5") {
    // Statistical property: over 100 seeds, noise-free Gaussian-input data
    // from observable systems reaches full rank nearly always.
    const Index L = 6, L0 = 4;
    int successes = 0;
    for (int seed = 0; seed < 100; ++seed) {
        Rng rng(1000 + seed);
        Rng model_rng = rng.split(0);
        Rng data_rng = rng.split(1);
        const auto model = random_system({3, 5}, 1, 1, model_rng);
        const Index M = 1 * L + model.n_x() + 5;
        const Matrix u = linalg::random_gaussian(1, M * L, data_rng);
        const auto traj = simulate(model, Vector::Zero(model.n_x()), u);
        if (check_rank(build_page(traj, L, L0), model.n_x())) ++successes;
    }
    CHECK(successes >= 99);
}

TEST_CASE("partition restacks to Z") {
    Rng rng(12);
    const Matrix Z = linalg::random_gaussian(2 * (3 + 2), 9, rng);
    const SignalMatrix sm(Z, 5, 3, 1, 1, Construction::Independent);
    const Partition part = sm.partition();
    Matrix restacked(Z.rows(), Z.cols());
    restacked << part.U_p, part.U_f, part.Y_p, part.Y_f;
    CHECK(restacked == Z);
    CHECK(part.U_p.rows() == 3);
    CHECK(part.U_f.rows() == 2);
    CHECK(part.Y_p.rows() == 3);
    CHECK(part.Y_f.rows() == 2);
}

TEST_CASE("page columns are disjoint windows") {
    Rng rng(14);
    Matrix u = linalg::random_gaussian(1, 12, rng);
    Matrix y = linalg::random_gaussian(1, 12, rng);
    const auto base = build_page(Trajectory(u, y), 3, 2);
    for (Index t = 0; t < 12; ++t) {
        Matrix y_mod = y;
        y_mod(0, t) += 1.0;
        const auto perturbed = build_page(Trajectory(u, y_mod), 3, 2);
        int changed = 0;
        for (Index c = 0; c < base.M(); ++c)
            if ((base.Z().col(c) - perturbed.Z().col(c)).cwiseAbs().maxCoeff() > 0)
                ++changed;
        CHECK(changed == 1);
    }
}

TEST_CASE("construction validation") {
    CHECK_THROWS_AS(SignalMatrix(Matrix::Zero(7, 2), 4, 2, 1, 1,
                                 Construction::Page),
                    DimensionError);
    CHECK_THROWS_AS(SignalMatrix(Matrix::Zero(8, 2), 4, 4, 1, 1,
                                 Construction::Page),
                    InvalidArgument);
}
