#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "ctrlcert/kalman.hpp"
#include "ctrlcert/numerics.hpp"
#include "random_systems.hpp"

using namespace ctrlcert;

TEST_CASE("controllability matrix of the double integrator") {
    const auto sys = testsupport::double_integrator();
    Eigen::MatrixXd expected(2, 2);
    expected << 0, 1, 1, 0;
    CHECK((kalman::controllability_matrix(sys) - expected).norm() == 0.0);
}

TEST_CASE("controllability matrix with A equal to the identity") {
    Eigen::MatrixXd B(2, 1);
    B << 1, 0;
    const LinearSystem sys(Eigen::MatrixXd::Identity(2, 2), B,
                           ControlSet::box(Eigen::VectorXd::Ones(1)));
    Eigen::MatrixXd expected(2, 2);
    expected << 1, 1, 0, 0;
    CHECK((kalman::controllability_matrix(sys) - expected).norm() == 0.0);
}

TEST_CASE("controllability matrix with A zero pads with zero blocks") {
    std::mt19937_64 rng(3);
    const Eigen::MatrixXd B = testsupport::random_matrix(rng, 3, 2);
    const LinearSystem sys(Eigen::MatrixXd::Zero(3, 3), B,
                           ControlSet::ball(1.0, 2));
    const auto K = kalman::controllability_matrix(sys);
    CHECK((K.leftCols(2) - B).norm() == 0.0);
    CHECK(K.rightCols(4).norm() == 0.0);
}

TEST_CASE("analyze classifies the canonical examples") {
    const auto controllable = kalman::analyze(testsupport::double_integrator());
    CHECK(controllable.rank == 2);
    CHECK(controllable.verdict == kalman::Verdict::Controllable);

    const auto deficient = kalman::analyze(testsupport::deficient_diag());
    CHECK(deficient.rank == 1);
    CHECK(deficient.verdict == kalman::Verdict::Deficient);
    REQUIRE(deficient.subspace_basis.cols() == 1);
    CHECK(std::abs(std::abs(deficient.subspace_basis(0, 0)) - 1.0) <= 1e-12);
    CHECK(std::abs(deficient.subspace_basis(1, 0)) <= 1e-12);
}

TEST_CASE("scalar systems with nonzero input are controllable") {
    Eigen::MatrixXd A(1, 1), B(1, 1);
    A << -3.0;
    B << 0.25;
    const LinearSystem sys(A, B, ControlSet::box(Eigen::VectorXd::Ones(1)));
    CHECK(kalman::analyze(sys).rank == 1);
    CHECK(kalman::analyze(sys).verdict == kalman::Verdict::Controllable);
}

TEST_CASE("the subspace is invariant under A and under the flow") {
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 30; ++trial) {
        const auto def = testsupport::constructed_deficient(rng, 4, 2, 1);
        const auto analysis = kalman::analyze(def.sys);
        REQUIRE(analysis.rank == 2);
        const auto& P = analysis.subspace_basis;

        const Eigen::MatrixXd AP = def.sys.A * P;
        const Eigen::MatrixXd residual = AP - P * (P.transpose() * AP);
        CHECK(residual.norm() <= 1e-9 * std::max(AP.norm(), 1.0));

        for (const double s : {-1.0, -0.5, 0.5, 1.0}) {
            const Eigen::MatrixXd FP = numerics::mat_exp(-def.sys.A, s) * P;
            const Eigen::MatrixXd flow_residual =
                FP - P * (P.transpose() * FP);
            CHECK(flow_residual.norm() <= 1e-9 * std::max(FP.norm(), 1.0));
        }
    }
}

TEST_CASE("appending the next power never changes the rank") {
    std::mt19937_64 rng(37);
    for (int trial = 0; trial < 50; ++trial) {
        const auto sys = testsupport::random_system(rng, 4, 2);
        const auto K = kalman::controllability_matrix(sys);
        Eigen::MatrixXd extended(4, K.cols() + 2);
        Eigen::MatrixXd power = sys.B;
        for (int k = 0; k < 4; ++k) {
            power = sys.A * power;
        }
        extended << K, power;
        CHECK(numerics::numerical_rank(K).rank ==
              numerics::numerical_rank(extended).rank);
    }
}

TEST_CASE("decompose aligns an axis-aligned deficient system") {
    const auto dec = kalman::decompose(testsupport::deficient_diag());
    CHECK(dec.controllable_dim == 1);
    CHECK(std::abs(std::abs(dec.P(0, 0)) - 1.0) <= 1e-12);
    CHECK(std::abs(dec.A_new(1, 0)) <= 1e-9);
    CHECK(std::abs(dec.B_new(1, 0)) <= 1e-9);
}

TEST_CASE("decompose produces the block structure on random systems") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 30; ++trial) {
        const auto def = testsupport::constructed_deficient(rng, 5, 3, 2);
        const auto dec = kalman::decompose(def.sys);
        REQUIRE(dec.controllable_dim == 3);

        const Eigen::MatrixXd ortho =
            dec.P.transpose() * dec.P - Eigen::MatrixXd::Identity(5, 5);
        CHECK(ortho.cwiseAbs().maxCoeff() <= 1e-12);

        CHECK((dec.A_new - dec.P.transpose() * def.sys.A * dec.P).norm() <=
              1e-12);
        CHECK((dec.B_new - dec.P.transpose() * def.sys.B).norm() <= 1e-12);

        CHECK(dec.A_new.bottomLeftCorner(2, 3).cwiseAbs().maxCoeff() <= 1e-9);
        CHECK(dec.B_new.bottomRows(2).cwiseAbs().maxCoeff() <= 1e-9);

        // The first columns of P and the constructed subspace must span the
        // same space: compare orthogonal projectors.
        const Eigen::MatrixXd P1 = dec.P.leftCols(3);
        const Eigen::MatrixXd proj_dec = P1 * P1.transpose();
        const Eigen::MatrixXd proj_ref = def.subspace * def.subspace.transpose();
        CHECK((proj_dec - proj_ref).cwiseAbs().maxCoeff() <= 1e-9);
    }
}

TEST_CASE("controllable systems decompose trivially") {
    const auto dec = kalman::decompose(testsupport::double_integrator());
    CHECK(dec.controllable_dim == 2);
    CHECK((dec.A_new - dec.P.transpose() *
                           testsupport::double_integrator().A * dec.P)
              .norm() <= 1e-12);
}

TEST_CASE("rank is invariant under orthogonal conjugation") {
    std::mt19937_64 rng(43);
    for (int trial = 0; trial < 20; ++trial) {
        const auto def = testsupport::constructed_deficient(rng, 4, 2, 1);
        const Eigen::MatrixXd R = testsupport::random_orthogonal(rng, 4);
        const LinearSystem rotated(R * def.sys.A * R.transpose(),
                                   R * def.sys.B, def.sys.control_set);
        CHECK(kalman::analyze(rotated).rank == kalman::analyze(def.sys).rank);
        CHECK(kalman::decompose(rotated).controllable_dim == 2);
    }
}
