#pragma once

#include <Eigen/Dense>

#include "ctrlcert/numerics.hpp"
#include "ctrlcert/system.hpp"

namespace ctrlcert::kalman {

// [B, AB, ..., A^(n-1)B], an n x (n*m) matrix. Higher powers add nothing
// to the column space (Cayley-Hamilton), so the chain stops at n-1.
Eigen::MatrixXd controllability_matrix(const LinearSystem& sys);

enum class Verdict { Controllable, Deficient };

struct Analysis {
    Eigen::MatrixXd kalman_matrix;
    int rank = 0;
    // Orthonormal basis of the reachable (Kalman) subspace, n x rank.
    Eigen::MatrixXd subspace_basis;
    Verdict verdict = Verdict::Deficient;
};

// Rank test of the controllability matrix. Controllable iff rank == n.
Analysis analyze(const LinearSystem& sys, double tol_rel = 1e-9);

struct Decomposition {
    int controllable_dim = 0;  // n'
    // Orthogonal change of basis; first n' columns span the Kalman subspace.
    Eigen::MatrixXd P;
    Eigen::MatrixXd A_new;  // P^T A P, block upper triangular
    Eigen::MatrixXd B_new;  // P^T B, rows below n' vanish
};

// Coordinates adapted to the Kalman subspace. The lower left
// (n - n') x n' block of A_new and rows n'+1..n of B_new are zero up to
// the decomposition tolerance.
Decomposition decompose(const LinearSystem& sys, double tol_rel = 1e-9);

}  // namespace ctrlcert::kalman
