#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ctrlcert/lie.hpp"
#include "ctrlcert/system.hpp"

namespace ctrlcert::flows {

// Vector field on the extended space-time (t, q, u): the t and u rates are
// constant, the q rate is affine in (q, u). Fields never depend on t.
struct ExtendedField {
    double dt = 0.0;
    Eigen::MatrixXd dq_q;      // n x n coefficient of q
    Eigen::MatrixXd dq_u;      // n x m coefficient of u
    Eigen::VectorXd dq_const;  // n
    Eigen::VectorXd du;        // m

    bool is_constant() const {
        return dq_q.isZero(0.0) && dq_u.isZero(0.0);
    }

    // Rates at a point, as an extended state increment.
    ExtendedState value_at(const ExtendedState& x) const;

    // The same field as an affine field on R^(1+n+m), coordinates (t, q, u).
    lie::AffineField as_affine() const;
};

// Drift of the mirrored dynamics on extended space-time:
// dt = 1, dq = -(A q + B u), du = 0.
ExtendedField drift_field(const LinearSystem& sys);

// Constant control direction: unit rate along input axis a (0-based), all
// other components zero.
ExtendedField control_direction(const LinearSystem& sys, int a);

// Iterated bracket direction of depth ell >= 0 for input axis a:
// depth 0 is control_direction(a); depth ell >= 1 is constant in q with
// dq = A^(ell-1) B_a and zero t and u rates.
ExtendedField bracket_direction(const LinearSystem& sys, int a, int ell);

// Coordinate vector (du stacked over dq) of bracket_direction in R^(m+n).
Eigen::VectorXd bracket_direction_coords(const LinearSystem& sys, int a,
                                         int ell);

// Flow of the drift field for time s, in closed form:
// t += s, q <- mat_exp(-A, s) q - exp_integral(A, s) B u, u unchanged.
// Exact group property: flowing s then s' equals flowing s + s'.
ExtendedState flow_drift(const LinearSystem& sys, const ExtendedState& x,
                         double s);

// Flow of a constant field: x + s * field. Throws DimensionError when the
// field has a state-dependent part.
ExtendedState flow_straight(const ExtendedField& field, const ExtendedState& x,
                            double s);

// Pushforward of control_direction(a) along the drift flow for time s.
// Constant field, closed form: dq = -exp_integral(A, s) B_a, du = e_a.
ExtendedField pushforward_exact(const LinearSystem& sys, int a, double s);

// Index of one bracket direction: input axis a (0-based) and depth ell.
struct FieldIndex {
    int a = 0;
    int ell = 0;
};
using BasisTuple = std::vector<FieldIndex>;

// Pushforward of control_direction(a) expanded over the bracket directions
// of depth <= ell_max. coefficients(b, ell) multiplies
// bracket_direction(b, ell); depths beyond ell_max are substituted through
// their expansion over `basis` before being accumulated.
struct PushforwardExpansion {
    double s = 0.0;
    Eigen::MatrixXd coefficients;  // m x (ell_max + 1)
    int truncation_terms = 0;      // number of series terms accumulated
    double remainder_bound = 0.0;  // upper bound on the dropped tail
};

// Series route to the pushforward. Terms are added until the next term's
// coefficient magnitudes drop below 1e-16 times the running maximum; more
// than 200 terms throws NoConvergence. `basis` must be a list of
// independent bracket directions of depth <= ell_max whose span contains
// the directions of every depth, which holds for ell_max >=
// saturation_depth(sys).ell_max and basis = attainability::choose_basis.
PushforwardExpansion pushforward_series(const LinearSystem& sys, int a,
                                        double s, int ell_max,
                                        const BasisTuple& basis);

// Reassemble the constant field a PushforwardExpansion denotes.
ExtendedField expansion_field(const LinearSystem& sys,
                              const PushforwardExpansion& expansion);

}  // namespace ctrlcert::flows
