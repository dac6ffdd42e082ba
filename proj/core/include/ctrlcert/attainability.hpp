#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "ctrlcert/flows.hpp"
#include "ctrlcert/system.hpp"

namespace ctrlcert::attainability {

// Activation time grid: tau(a, ell) = (a+1 + ell*m) / (m * (ell_max + 1))
// for 0-based a. The m*(ell_max+1) values are pairwise distinct, lie in
// (0, 1], and increase along ell for fixed a. Flat index runs over (a, ell)
// pairs with a outermost.
class TauGrid {
  public:
    TauGrid(int m, int ell_max);

    int m() const { return m_; }
    int ell_max() const { return ell_max_; }
    int size() const { return m_ * (ell_max_ + 1); }

    int flat_index(int a, int ell) const { return a * (ell_max_ + 1) + ell; }
    flows::FieldIndex pair_at(int flat) const {
        return {flat / (ell_max_ + 1), flat % (ell_max_ + 1)};
    }

    double value(int a, int ell) const;
    double value(int flat) const;

  private:
    int m_;
    int ell_max_;
};

struct SaturationProfile {
    int ell_max = 0;
    // n_ell[ell] = dimension of the span of all bracket directions of
    // depth <= ell; n_ell[0] = m and n_ell[ell_max] = m + Kalman rank.
    std::vector<int> n_ell;
};

// Smallest depth at which the bracket direction span stops growing.
SaturationProfile saturation_depth(const LinearSystem& sys,
                                   double tol_rel = 1e-9);

// Greedy independent subset of the bracket directions, scanned depth-major
// (all depth 0 first). Size equals n_ell[ell_max].
flows::BasisTuple choose_basis(const LinearSystem& sys, int ell_max,
                               double tol_rel = 1e-9);

// Square matrix of size m*(ell_max+1) collecting the pushforward series of
// every grid point: row (a, ell) holds the expansion of the pushforward of
// control direction a at time eps*tau(a, ell). Entries are normalized per
// column by (-1)^k k! so that the matrix tends entrywise to
// vandermonde_block(grid, eps) as eps -> 0.
Eigen::MatrixXd coefficient_matrix(const LinearSystem& sys, double eps,
                                   const TauGrid& grid,
                                   const flows::BasisTuple& basis);

// Ideal limit of coefficient_matrix: block diagonal over a, block a is the
// Vandermonde matrix with rows (1, x, x^2, ..., x^ell_max), x = eps*tau(a, ell).
Eigen::MatrixXd vandermonde_block(const TauGrid& grid, double eps);

// Closed form for det vandermonde_block: eps^(m*ell_max*(ell_max+1)/2)
// times the product over a of the Vandermonde determinants of tau(a, .).
double predicted_determinant(const TauGrid& grid, double eps);

// Largest eps in {T/4, T/8, ...} whose coefficient matrix determinant
// reaches half the predicted Vandermonde value. More than 60 halvings
// throws EpsilonSearchFailed.
double choose_epsilon(const LinearSystem& sys, double T,
                      double tol_rel = 1e-9);

// Attainability map: drift flow for time T from `base`, then one straight
// flow per grid point along the pushforward directions, parameter s(flat).
// The result always lies on the time slice t = base.t + T. The map is
// affine in s; its Jacobian column for (a, ell) is
// pushforward_exact(a, eps*tau(a, ell)).
ExtendedState attainability_map(const LinearSystem& sys, double eps, double T,
                                const Eigen::VectorXd& s,
                                const ExtendedState& base);

enum class CertVerdict { LocallyControllable, Deficient };

struct Certificate {
    double T = 0.0;
    double eps = 0.0;
    SaturationProfile profile;
    flows::BasisTuple basis;
    Eigen::MatrixXd coefficient_mat;
    double determinant = 0.0;
    int jacobian_rank = 0;
    CertVerdict verdict = CertVerdict::Deficient;
};

// Flow-based controllability certificate: rank of the attainability map's
// Jacobian at s = 0. The Jacobian columns are the exact closed-form
// pushforward directions; their span equals the bracket direction span
// whenever the coefficient matrix is invertible, so the rank is read off
// the bracket directions once the determinant clears the Vandermonde
// floor (and off the raw columns otherwise). LocallyControllable iff the
// rank is m + n, which happens iff the Kalman rank is n.
Certificate certify(const LinearSystem& sys, double T, double tol_rel = 1e-9);

struct ReconstructedControl {
    // Control for the mirrored system (-A, -B), starting value = base value.
    PiecewiseConstantControl control;
    // Jump log: (time from the right end, value increment), in chronological
    // order. Entry k jumps the control at time T - jump_offsets[k].
    std::vector<double> jump_offsets;
    std::vector<Eigen::VectorXd> jump_increments;
};

// Piecewise constant control whose mirrored-system trajectory from
// (0, qbar, c) ends at the attainability map value: grid points sorted by
// decreasing eps*tau become control jumps of size s(flat) along input axis
// a. Zero-duration segments are elided and equal neighbours merged.
// Values leaving the control set throw ControlOutOfSet.
ReconstructedControl reconstruct_control(const LinearSystem& sys,
                                         const Eigen::VectorXd& s, double eps,
                                         double T, const TauGrid& grid,
                                         const Eigen::VectorXd& base_control);

struct SteeringResult {
    // Start state of the forward system; within `residual` of the target.
    Eigen::VectorXd initial_state;
    // Forward-system control driving initial_state to qbar over [0, T].
    PiecewiseConstantControl control;
    // max of the Newton residual and the independent simulation's endpoint
    // error against qbar.
    double residual = 0.0;
    int newton_iterations = 0;
    Certificate certificate;
};

struct SteerOptions {
    double T = 1.0;
    double eps = 0.0;          // 0: run choose_epsilon
    double tol_rel = 1e-9;
    double residual_target = 1e-6;
    int max_iterations = 100;
    Eigen::VectorXd base_control;  // empty: zero vector
};

// Constructive steering: find parameters s with the attainability map's
// state projection at the target (damped Newton with the frozen s = 0
// Jacobian, step halving on residual growth), then reconstruct the control
// and time-reverse it into a forward control taking initial_state to qbar.
// Requires a LocallyControllable certificate; Deficient systems throw
// ValidationError, non-converging iterations NewtonDivergence.
SteeringResult steer(const LinearSystem& sys, const Eigen::VectorXd& target,
                     const Eigen::VectorXd& qbar, const SteerOptions& options);

}  // namespace ctrlcert::attainability
