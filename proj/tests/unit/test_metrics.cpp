#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "spellattack/error.hpp"
#include "spellattack/metrics.hpp"

using namespace spellattack;

TEST_SUITE("metrics") {
    TEST_CASE("itr values") {
        CHECK(metrics::itr(1.0 / 36.0, 36, 0.525) == 0.0);
        CHECK(metrics::itr(0.01, 36, 0.525) == 0.0);
        CHECK(metrics::itr(0.91, 36, 0.525) == doctest::Approx(8.14).epsilon(5e-4));
        CHECK(metrics::itr(1.0, 36, 0.525) == doctest::Approx(std::log2(36.0) / 0.525));
        CHECK(metrics::itr(0.90, 40, 1.38 / 60.0) == doctest::Approx(188.0).epsilon(1e-3));
    }

    TEST_CASE("itr is monotone above chance") {
        double prev = 0.0;
        for (int i = 1; i <= 100; ++i) {
            const double r = 1.0 / 36.0 + (1.0 - 1.0 / 36.0) * i / 100.0;
            const double v = metrics::itr(r, 36, 0.5);
            CHECK(v > prev);
            prev = v;
        }
    }

    TEST_CASE("itr domain errors") {
        CHECK_THROWS_AS(metrics::itr(1.1, 36, 1.0), ParameterError);
        CHECK_THROWS_AS(metrics::itr(-0.1, 36, 1.0), ParameterError);
        CHECK_THROWS_AS(metrics::itr(0.5, 1, 1.0), ParameterError);
        CHECK_THROWS_AS(metrics::itr(0.5, 36, 0.0), ParameterError);
    }

    TEST_CASE("spr") {
        testing::Rng rng(5);
        const MatrixXd x = testing::random_matrix(3, 100, rng);
        CHECK(metrics::spr_db(x, x / 10.0) == doctest::Approx(20.0));
        CHECK(metrics::spr_db(x, x) == doctest::Approx(0.0));
        CHECK_THROWS_AS(metrics::spr_db(x, MatrixXd::Zero(3, 100)), DegenerateInputError);
        CHECK_THROWS_AS(metrics::spr_db(x, MatrixXd::Zero(3, 99)), ParameterError);
        const MatrixXd p = metrics::scale_to_spr(x, 50.0, 25.0);
        CHECK(metrics::spr_db(50.0, metrics::energy(p)) == doctest::Approx(25.0).epsilon(1e-12));
    }

    TEST_CASE("trial spr exceeds period spr for the same perturbation") {
        testing::Rng rng(6);
        const MatrixXd trial = testing::random_matrix(2, 400, rng);
        MatrixXd pert = MatrixXd::Zero(2, 400);
        pert.middleCols(100, 50) = 0.1 * testing::random_matrix(2, 50, rng);
        const double period = metrics::spr_db(trial.middleCols(100, 50), pert.middleCols(100, 50));
        const double whole = metrics::spr_db(trial, pert);
        CHECK(whole - period ==
              doctest::Approx(10.0 * std::log10(trial.squaredNorm() / trial.middleCols(100, 50).squaredNorm())));
        CHECK(whole >= period);
    }
}
