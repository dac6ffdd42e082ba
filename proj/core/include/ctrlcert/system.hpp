#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ctrlcert/errors.hpp"

namespace ctrlcert {

// Admissible control value set. Both kinds are bounded, convex, symmetric
// about the origin and contain it in their interior.
class ControlSet {
  public:
    enum class Kind { Box, Ball };

    // Box: per-axis half widths (size m). Ball: single Euclidean radius.
    static ControlSet box(const Eigen::VectorXd& half_widths);
    static ControlSet ball(double radius, int m);

    Kind kind() const { return kind_; }
    int dimension() const { return m_; }

    // Box half-width of one axis, or the ball radius for every axis.
    double radius(int axis) const;
    // Largest Euclidean norm attained over the set.
    double bounding_radius() const;

    // Closed-set membership, exact comparisons.
    bool contains(const Eigen::VectorXd& u) const;

  private:
    ControlSet(Kind kind, int m, Eigen::VectorXd radii);

    Kind kind_;
    int m_;
    Eigen::VectorXd radii_;  // size m for Box, size 1 for Ball
};

// Linear control system dq/dt = A q + B u with u constrained to control_set.
// Invariants: A is n x n, B is n x m with at least one nonzero entry, all
// entries finite, n >= 1, m >= 1.
struct LinearSystem {
    LinearSystem(Eigen::MatrixXd A, Eigen::MatrixXd B, ControlSet control_set);

    int state_dim() const { return static_cast<int>(A.rows()); }
    int input_dim() const { return static_cast<int>(B.cols()); }

    // Same dynamics with (A, B) negated; control set is unchanged since it
    // is symmetric. Trajectories of one traced backward solve the other.
    LinearSystem mirrored() const;

    Eigen::MatrixXd A;
    Eigen::MatrixXd B;
    ControlSet control_set;
};

// Piecewise constant open-loop control: value segments[k].value holds for
// segments[k].duration time units, in order. Durations are strictly positive.
class PiecewiseConstantControl {
  public:
    struct Segment {
        double duration;
        Eigen::VectorXd value;
    };

    PiecewiseConstantControl() = default;
    explicit PiecewiseConstantControl(std::vector<Segment> segments);

    const std::vector<Segment>& segments() const { return segments_; }
    bool empty() const { return segments_.empty(); }
    int input_dim() const;
    double horizon() const;

    // Value at time t in [0, horizon]; segment boundaries take the
    // right-hand value, t == horizon the last value.
    Eigen::VectorXd value_at(double t) const;

    // True when every segment value is a member of the set.
    bool values_in(const ControlSet& set) const;

    // Segments in reverse order: the time reversal u(horizon - t).
    PiecewiseConstantControl reversed() const;

    // Append a segment, merging with the tail when the value is unchanged
    // and dropping zero-duration segments.
    void append(double duration, const Eigen::VectorXd& value);

  private:
    std::vector<Segment> segments_;
};

// Point of the extended space-time: time, state, and current control value.
struct ExtendedState {
    double t = 0.0;
    Eigen::VectorXd q;
    Eigen::VectorXd u;
};

}  // namespace ctrlcert
