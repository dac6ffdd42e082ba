#include "ctrlcert/flows.hpp"

#include <cmath>

#include "ctrlcert/numerics.hpp"

namespace ctrlcert::flows {

ExtendedState ExtendedField::value_at(const ExtendedState& x) const {
    ExtendedState rate;
    rate.t = dt;
    rate.q = dq_q * x.q + dq_u * x.u + dq_const;
    rate.u = du;
    return rate;
}

lie::AffineField ExtendedField::as_affine() const {
    const Eigen::Index n = dq_const.size();
    const Eigen::Index m = du.size();
    lie::AffineField f;
    f.linear = Eigen::MatrixXd::Zero(1 + n + m, 1 + n + m);
    f.linear.block(1, 1, n, n) = dq_q;
    f.linear.block(1, 1 + n, n, m) = dq_u;
    f.constant = Eigen::VectorXd::Zero(1 + n + m);
    f.constant[0] = dt;
    f.constant.segment(1, n) = dq_const;
    f.constant.tail(m) = du;
    return f;
}

namespace {

ExtendedField zero_field(int n, int m) {
    ExtendedField f;
    f.dt = 0.0;
    f.dq_q = Eigen::MatrixXd::Zero(n, n);
    f.dq_u = Eigen::MatrixXd::Zero(n, m);
    f.dq_const = Eigen::VectorXd::Zero(n);
    f.du = Eigen::VectorXd::Zero(m);
    return f;
}

void check_axis(const LinearSystem& sys, int a) {
    if (a < 0 || a >= sys.input_dim()) {
        throw DimensionError("input axis out of range");
    }
}

}  // namespace

ExtendedField drift_field(const LinearSystem& sys) {
    ExtendedField f = zero_field(sys.state_dim(), sys.input_dim());
    f.dt = 1.0;
    f.dq_q = -sys.A;
    f.dq_u = -sys.B;
    return f;
}

ExtendedField control_direction(const LinearSystem& sys, int a) {
    check_axis(sys, a);
    ExtendedField f = zero_field(sys.state_dim(), sys.input_dim());
    f.du[a] = 1.0;
    return f;
}

ExtendedField bracket_direction(const LinearSystem& sys, int a, int ell) {
    check_axis(sys, a);
    if (ell < 0) {
        throw DimensionError("bracket depth must be nonnegative");
    }
    if (ell == 0) {
        return control_direction(sys, a);
    }
    ExtendedField f = zero_field(sys.state_dim(), sys.input_dim());
    Eigen::VectorXd v = sys.B.col(a);
    for (int i = 1; i < ell; ++i) {
        v = sys.A * v;
    }
    f.dq_const = v;
    return f;
}

Eigen::VectorXd bracket_direction_coords(const LinearSystem& sys, int a,
                                         int ell) {
    const ExtendedField f = bracket_direction(sys, a, ell);
    Eigen::VectorXd coords(sys.input_dim() + sys.state_dim());
    coords.head(sys.input_dim()) = f.du;
    coords.tail(sys.state_dim()) = f.dq_const;
    return coords;
}

ExtendedState flow_drift(const LinearSystem& sys, const ExtendedState& x,
                         double s) {
    if (x.q.size() != sys.state_dim() || x.u.size() != sys.input_dim()) {
        throw DimensionError("state dimensions do not match the system");
    }
    ExtendedState out;
    out.t = x.t + s;
    out.q = numerics::mat_exp(-sys.A, s) * x.q -
            numerics::exp_integral(sys.A, s) * (sys.B * x.u);
    out.u = x.u;
    return out;
}

ExtendedState flow_straight(const ExtendedField& field, const ExtendedState& x,
                            double s) {
    if (!field.is_constant()) {
        throw DimensionError("flow_straight needs a constant field");
    }
    if (field.dq_const.size() != x.q.size() || field.du.size() != x.u.size()) {
        throw DimensionError("field dimensions do not match the state");
    }
    ExtendedState out;
    out.t = x.t + s * field.dt;
    out.q = x.q + s * field.dq_const;
    out.u = x.u + s * field.du;
    return out;
}

ExtendedField pushforward_exact(const LinearSystem& sys, int a, double s) {
    check_axis(sys, a);
    ExtendedField f = zero_field(sys.state_dim(), sys.input_dim());
    f.dq_const = -numerics::exp_integral(sys.A, s) * sys.B.col(a);
    f.du[a] = 1.0;
    return f;
}

PushforwardExpansion pushforward_series(const LinearSystem& sys, int a,
                                        double s, int ell_max,
                                        const BasisTuple& basis) {
    check_axis(sys, a);
    if (ell_max < 0) {
        throw DimensionError("ell_max must be nonnegative");
    }
    const int n = sys.state_dim();
    const int m = sys.input_dim();

    Eigen::MatrixXd basis_coords(m + n, static_cast<Eigen::Index>(basis.size()));
    for (std::size_t i = 0; i < basis.size(); ++i) {
        if (basis[i].ell > ell_max) {
            throw DimensionError("basis depth exceeds ell_max");
        }
        basis_coords.col(static_cast<Eigen::Index>(i)) =
            bracket_direction_coords(sys, basis[i].a, basis[i].ell);
    }
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(basis_coords);

    PushforwardExpansion result;
    result.s = s;
    result.coefficients = Eigen::MatrixXd::Zero(m, ell_max + 1);

    // Head of the series: depth ell contributes (-s)^ell / ell! directly.
    double term = 1.0;  // (-s)^r / r!
    double running_max = 0.0;
    for (int r = 0; r <= ell_max; ++r) {
        result.coefficients(a, r) += term;
        running_max = std::max(running_max, std::abs(term));
        ++result.truncation_terms;
        term *= -s / (r + 1);
    }

    // Tail: depth r > ell_max directions are substituted through their
    // expansion over the basis before being accumulated.
    constexpr int kMaxTerms = 200;
    constexpr double kCutoff = 1e-16;
    Eigen::VectorXd v = sys.B.col(a);
    for (int i = 1; i <= ell_max; ++i) {
        v = sys.A * v;  // now v = A^ell_max B_a, the depth ell_max+1 direction
    }
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + n);
    int r = ell_max + 1;
    while (true) {
        if (v.isZero(0.0)) {
            result.remainder_bound = 0.0;
            break;
        }
        rhs.tail(n) = v;
        const Eigen::VectorXd lambda = qr.solve(rhs);
        const double mag = std::abs(term) * lambda.cwiseAbs().maxCoeff();
        if (mag < kCutoff * running_max) {
            // Bound the dropped tail: basis solve amplification times the
            // exponential series tail starting at this term.
            const double sigma_min = Eigen::JacobiSVD<Eigen::MatrixXd>(basis_coords)
                                         .singularValues()
                                         .minCoeff();
            const double a_norm = sys.A.operatorNorm();
            result.remainder_bound = (v.norm() / sigma_min) * std::abs(term) *
                                     std::exp(std::abs(s) * a_norm);
            break;
        }
        if (result.truncation_terms >= kMaxTerms) {
            throw NoConvergence("pushforward series hit the term cap");
        }
        for (std::size_t i = 0; i < basis.size(); ++i) {
            result.coefficients(basis[i].a, basis[i].ell) +=
                term * lambda[static_cast<Eigen::Index>(i)];
        }
        running_max = std::max(running_max, mag);
        ++result.truncation_terms;
        term *= -s / (r + 1);
        v = sys.A * v;
        ++r;
    }
    return result;
}

ExtendedField expansion_field(const LinearSystem& sys,
                              const PushforwardExpansion& expansion) {
    const int n = sys.state_dim();
    const int m = sys.input_dim();
    if (expansion.coefficients.rows() != m) {
        throw DimensionError("expansion does not match the system");
    }
    ExtendedField f = zero_field(n, m);
    f.du = expansion.coefficients.col(0);
    Eigen::MatrixXd power_B = sys.B;  // A^(ell-1) B for the current ell
    for (int ell = 1; ell < expansion.coefficients.cols(); ++ell) {
        f.dq_const += power_B * expansion.coefficients.col(ell);
        power_B = sys.A * power_B;
    }
    return f;
}

}  // namespace ctrlcert::flows
