#pragma once

#include <Eigen/Dense>

#include "ctrlcert/errors.hpp"

namespace ctrlcert::numerics {

// exp(s*M) by scaling and squaring. Relative accuracy 1e-12 or better for
// ||s*M||_inf <= 50; larger arguments throw OverflowError.
Eigen::MatrixXd mat_exp(const Eigen::MatrixXd& M, double s);

// Integral of exp(-sigma*M) for sigma in [0, s], computed from one
// exponential of the block matrix [[-M, I], [0, 0]] (upper right block).
// d/ds exp_integral(M, s) = mat_exp(-M, s).
Eigen::MatrixXd exp_integral(const Eigen::MatrixXd& M, double s);

struct RankResult {
    int rank = 0;
    // Orthonormal columns spanning the column space, n x rank.
    Eigen::MatrixXd basis;
    // Absolute singular value threshold that was applied.
    double tolerance_used = 0.0;
};

// Numerical rank by singular value decomposition: rank = number of singular
// values strictly above tol_rel * sigma_max. A zero matrix has rank 0.
RankResult numerical_rank(const Eigen::MatrixXd& M, double tol_rel = 1e-9);

}  // namespace ctrlcert::numerics
