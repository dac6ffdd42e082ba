#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "ctrlcert/system.hpp"

namespace ctrlcert::simulate {

// Exact endpoint of dq/dt = sign * (A q + B c) after time sigma >= 0:
// mat_exp(sign*A, sigma) q0 + sign * exp_integral(-sign*A, sigma) B c.
// sign = -1 follows the mirrored dynamics the stepped graphs use.
Eigen::VectorXd integrate_segment(const LinearSystem& sys,
                                  const Eigen::VectorXd& q0,
                                  const Eigen::VectorXd& c, double sigma,
                                  int sign);

// Trajectory of a piecewise constant control in extended space-time.
// Odd arcs follow the drift (time advances, q flows with sign -1, u fixed);
// even arcs jump u at fixed (t, q). Arcs alternate starting with an odd
// arc, except for one leading even arc when x0.u differs from the first
// control value.
struct SteppedGraph {
    struct OddArc {
        ExtendedState start;
        double duration = 0.0;
        ExtendedState end;
    };
    struct EvenArc {
        ExtendedState from;
        ExtendedState to;
    };
    // Chronological arc list: kind[i] selects odd_arcs or even_arcs next.
    enum class Kind { Odd, Even };
    std::vector<Kind> order;
    std::vector<OddArc> odd_arcs;
    std::vector<EvenArc> even_arcs;

    const ExtendedState& final_state() const;
};

SteppedGraph build_stepped_graph(const LinearSystem& sys,
                                 const PiecewiseConstantControl& control,
                                 const ExtendedState& x0);

// Endpoint cloud of random piecewise constant controls, mirrored dynamics
// from the origin. Bitwise reproducible from (seed, trial count, T,
// segment_count) regardless of worker count: every trial derives its own
// generator from (seed, trial index).
struct SampleCloud {
    Eigen::MatrixXd endpoints;  // n x trials, column per trial
    double horizon = 0.0;
    std::uint64_t seed = 0;
    int segment_count = 0;
};

SampleCloud sample_reachable(const LinearSystem& sys, double T, int trials,
                             int segment_count, std::uint64_t seed,
                             int workers = 1);

// Empirical convexity and symmetry check over pairs of controls sharing
// the horizon T: the midpoint control's endpoint must match the midpoint
// of the endpoints, and negating a control must negate its endpoint
// (mirrored dynamics from the origin, exact integration).
struct ConvexityReport {
    int pairs_checked = 0;
    double max_midpoint_deviation = 0.0;
    double max_symmetry_deviation = 0.0;
};

ConvexityReport convexity_probe(
    const LinearSystem& sys, double T,
    const std::vector<std::pair<PiecewiseConstantControl,
                                PiecewiseConstantControl>>& pairs);

// Span and inscribed-size probe of an endpoint cloud. dimension/basis come
// from the numerical rank of the endpoint matrix. ball_radius_estimate is
// the largest delta with +-delta * (every basis direction) inside the
// convex hull of the endpoints projected to the span: exact hull geometry
// for spans of dimension <= 3, sampled support functions above that.
struct SubspaceProbe {
    int dimension = 0;
    Eigen::MatrixXd basis;  // n x dimension, orthonormal
    double ball_radius_estimate = 0.0;
};

SubspaceProbe subspace_probe(const SampleCloud& cloud, double tol_rel = 1e-9);

}  // namespace ctrlcert::simulate
