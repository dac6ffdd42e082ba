#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ctrlcert/numerics.hpp"
#include "ctrlcert/system.hpp"

namespace ctrlcert::lie {

// Affine vector field q -> linear * q + constant on R^n.
struct AffineField {
    Eigen::MatrixXd linear;
    Eigen::VectorXd constant;

    Eigen::VectorXd value_at(const Eigen::VectorXd& q) const {
        return linear * q + constant;
    }
};

// Lie bracket of affine fields, closed form:
//   [X, Y] = (Y.linear X.linear - X.linear Y.linear,
//             Y.linear X.constant - X.linear Y.constant).
// Bilinear, antisymmetric, satisfies the Jacobi identity exactly.
AffineField bracket(const AffineField& X, const AffineField& Y);

// Generator family attached to a linear system: the drift field -A q
// followed by the m constant input directions B_a.
std::vector<AffineField> system_fields(const LinearSystem& sys);

// Dimension and orthonormal basis of the span at q0 of all iterated
// brackets of the generators. Saturates in field space (dimension at most
// n(n+1)), then evaluates at q0; the round cap throwing InternalError is
// defensive.
numerics::RankResult lie_span_at(const std::vector<AffineField>& generators,
                                 const Eigen::VectorXd& q0,
                                 double tol_rel = 1e-9);

// True when the Lie span dimension of system_fields at the origin equals
// the controllability matrix rank (integer comparison at shared tolerance).
bool agrees_with_kalman_rank(const LinearSystem& sys, double tol_rel = 1e-9);

}  // namespace ctrlcert::lie
