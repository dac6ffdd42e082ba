#include "ctrlcert/system.hpp"

#include <cmath>
#include <utility>

namespace ctrlcert {

ControlSet::ControlSet(Kind kind, int m, Eigen::VectorXd radii)
    : kind_(kind), m_(m), radii_(std::move(radii)) {}

ControlSet ControlSet::box(const Eigen::VectorXd& half_widths) {
    if (half_widths.size() < 1) {
        throw ValidationError("box control set needs at least one half-width");
    }
    for (Eigen::Index i = 0; i < half_widths.size(); ++i) {
        if (!std::isfinite(half_widths[i]) || half_widths[i] <= 0.0) {
            throw ValidationError("box half-widths must be positive and finite");
        }
    }
    return ControlSet(Kind::Box, static_cast<int>(half_widths.size()),
                      half_widths);
}

ControlSet ControlSet::ball(double radius, int m) {
    if (m < 1) {
        throw ValidationError("ball control set needs dimension >= 1");
    }
    if (!std::isfinite(radius) || radius <= 0.0) {
        throw ValidationError("ball radius must be positive and finite");
    }
    Eigen::VectorXd r(1);
    r[0] = radius;
    return ControlSet(Kind::Ball, m, r);
}

double ControlSet::radius(int axis) const {
    if (axis < 0 || axis >= m_) {
        throw DimensionError("control set axis out of range");
    }
    return kind_ == Kind::Box ? radii_[axis] : radii_[0];
}

double ControlSet::bounding_radius() const {
    if (kind_ == Kind::Ball) {
        return radii_[0];
    }
    return radii_.norm();
}

bool ControlSet::contains(const Eigen::VectorXd& u) const {
    if (u.size() != m_) {
        throw DimensionError("control value has wrong dimension");
    }
    if (kind_ == Kind::Ball) {
        return u.norm() <= radii_[0];
    }
    return (u.cwiseAbs().array() <= radii_.array()).all();
}

LinearSystem::LinearSystem(Eigen::MatrixXd A_in, Eigen::MatrixXd B_in,
                           ControlSet set)
    : A(std::move(A_in)), B(std::move(B_in)), control_set(std::move(set)) {
    const Eigen::Index n = A.rows();
    const Eigen::Index m = B.cols();
    if (n < 1 || A.cols() != n) {
        throw ValidationError("A must be square with n >= 1");
    }
    if (m < 1 || B.rows() != n) {
        throw ValidationError("B must be n x m with m >= 1");
    }
    if (!A.allFinite() || !B.allFinite()) {
        throw ValidationError("system matrices must have finite entries");
    }
    if (B.isZero(0.0)) {
        throw ValidationError("B must have a nonzero entry");
    }
    if (control_set.dimension() != m) {
        throw DimensionError("control set dimension must match B's columns");
    }
}

LinearSystem LinearSystem::mirrored() const {
    return LinearSystem(-A, -B, control_set);
}

PiecewiseConstantControl::PiecewiseConstantControl(std::vector<Segment> segments)
    : segments_(std::move(segments)) {
    for (const auto& seg : segments_) {
        if (!(seg.duration > 0.0) || !std::isfinite(seg.duration)) {
            throw ValidationError("segment durations must be positive");
        }
        if (seg.value.size() != segments_.front().value.size()) {
            throw ValidationError("segment values must share one dimension");
        }
        if (!seg.value.allFinite()) {
            throw ValidationError("segment values must be finite");
        }
    }
}

int PiecewiseConstantControl::input_dim() const {
    return segments_.empty() ? 0 : static_cast<int>(segments_.front().value.size());
}

double PiecewiseConstantControl::horizon() const {
    double total = 0.0;
    for (const auto& seg : segments_) {
        total += seg.duration;
    }
    return total;
}

Eigen::VectorXd PiecewiseConstantControl::value_at(double t) const {
    if (segments_.empty()) {
        throw DimensionError("control has no segments");
    }
    double elapsed = 0.0;
    for (const auto& seg : segments_) {
        elapsed += seg.duration;
        if (t < elapsed) {
            return seg.value;
        }
    }
    return segments_.back().value;
}

bool PiecewiseConstantControl::values_in(const ControlSet& set) const {
    for (const auto& seg : segments_) {
        if (!set.contains(seg.value)) {
            return false;
        }
    }
    return true;
}

PiecewiseConstantControl PiecewiseConstantControl::reversed() const {
    std::vector<Segment> rev(segments_.rbegin(), segments_.rend());
    return PiecewiseConstantControl(std::move(rev));
}

void PiecewiseConstantControl::append(double duration,
                                      const Eigen::VectorXd& value) {
    if (duration < 0.0 || !std::isfinite(duration)) {
        throw ValidationError("segment durations must be nonnegative");
    }
    if (duration == 0.0) {
        return;
    }
    if (!segments_.empty() &&
        (segments_.back().value.array() == value.array()).all()) {
        segments_.back().duration += duration;
        return;
    }
    segments_.push_back({duration, value});
}

}  // namespace ctrlcert
