#include "ctrlcert/attainability.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ctrlcert/numerics.hpp"
#include "ctrlcert/simulate.hpp"

namespace ctrlcert::attainability {

TauGrid::TauGrid(int m, int ell_max) : m_(m), ell_max_(ell_max) {
    if (m < 1 || ell_max < 0) {
        throw DimensionError("tau grid needs m >= 1 and ell_max >= 0");
    }
}

double TauGrid::value(int a, int ell) const {
    if (a < 0 || a >= m_ || ell < 0 || ell > ell_max_) {
        throw DimensionError("tau grid index out of range");
    }
    // 1-based axis in the numerator keeps every value in (0, 1] and all
    // m*(ell_max+1) values pairwise distinct.
    return static_cast<double>(a + 1 + ell * m_) /
           static_cast<double>(m_ * (ell_max_ + 1));
}

double TauGrid::value(int flat) const {
    const auto idx = pair_at(flat);
    return value(idx.a, idx.ell);
}

SaturationProfile saturation_depth(const LinearSystem& sys, double tol_rel) {
    const int n = sys.state_dim();
    const int m = sys.input_dim();

    SaturationProfile profile;
    Eigen::MatrixXd coords(m + n, 0);
    int previous = -1;
    for (int ell = 0; ell <= n + 1; ++ell) {
        coords.conservativeResize(Eigen::NoChange, (ell + 1) * m);
        for (int a = 0; a < m; ++a) {
            coords.col(ell * m + a) = flows::bracket_direction_coords(sys, a, ell);
        }
        const int dim = numerics::numerical_rank(coords, tol_rel).rank;
        if (dim == previous) {
            profile.ell_max = ell - 1;
            return profile;
        }
        profile.n_ell.push_back(dim);
        previous = dim;
    }
    // The span dimension grows by at least one per depth until it
    // stabilizes, so depth n+1 cannot be reached.
    throw InternalError("bracket direction span failed to stabilize");
}

flows::BasisTuple choose_basis(const LinearSystem& sys, int ell_max,
                               double tol_rel) {
    const int n = sys.state_dim();
    const int m = sys.input_dim();
    flows::BasisTuple basis;
    Eigen::MatrixXd ortho(m + n, 0);
    for (int ell = 0; ell <= ell_max; ++ell) {
        for (int a = 0; a < m; ++a) {
            Eigen::VectorXd v = flows::bracket_direction_coords(sys, a, ell);
            const double scale = v.norm();
            if (scale == 0.0) {
                continue;
            }
            Eigen::VectorXd residual = v - ortho * (ortho.transpose() * v);
            residual -= ortho * (ortho.transpose() * residual);
            if (residual.norm() <= tol_rel * scale) {
                continue;
            }
            ortho.conservativeResize(Eigen::NoChange, ortho.cols() + 1);
            ortho.col(ortho.cols() - 1) = residual / residual.norm();
            basis.push_back({a, ell});
        }
    }
    return basis;
}

Eigen::MatrixXd coefficient_matrix(const LinearSystem& sys, double eps,
                                   const TauGrid& grid,
                                   const flows::BasisTuple& basis) {
    if (grid.m() != sys.input_dim()) {
        throw DimensionError("tau grid does not match the system");
    }
    const int size = grid.size();
    const int ell_max = grid.ell_max();

    // Column normalization (-1)^k k! maps the raw series coefficients onto
    // the basis in which the ideal matrix is the block Vandermonde: the
    // leading term of the (a, ell) expansion on depth k is
    // (-1)^k (eps tau)^k / k!, which this scaling turns into (eps tau)^k.
    Eigen::VectorXd column_scale(ell_max + 1);
    double factorial = 1.0;
    for (int k = 0; k <= ell_max; ++k) {
        if (k > 0) {
            factorial *= k;
        }
        column_scale[k] = (k % 2 == 0 ? 1.0 : -1.0) * factorial;
    }

    Eigen::MatrixXd M(size, size);
    for (int row = 0; row < size; ++row) {
        const auto idx = grid.pair_at(row);
        const auto expansion = flows::pushforward_series(
            sys, idx.a, eps * grid.value(row), ell_max, basis);
        for (int col = 0; col < size; ++col) {
            const auto cidx = grid.pair_at(col);
            M(row, col) =
                column_scale[cidx.ell] * expansion.coefficients(cidx.a, cidx.ell);
        }
    }
    return M;
}

Eigen::MatrixXd vandermonde_block(const TauGrid& grid, double eps) {
    const int size = grid.size();
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(size, size);
    for (int a = 0; a < grid.m(); ++a) {
        for (int ell = 0; ell <= grid.ell_max(); ++ell) {
            const double x = eps * grid.value(a, ell);
            double power = 1.0;
            for (int k = 0; k <= grid.ell_max(); ++k) {
                M(grid.flat_index(a, ell), grid.flat_index(a, k)) = power;
                power *= x;
            }
        }
    }
    return M;
}

double predicted_determinant(const TauGrid& grid, double eps) {
    const int ell_max = grid.ell_max();
    double det = std::pow(eps, grid.m() * ell_max * (ell_max + 1) / 2);
    for (int a = 0; a < grid.m(); ++a) {
        for (int k = 0; k <= ell_max; ++k) {
            for (int l = k + 1; l <= ell_max; ++l) {
                det *= grid.value(a, l) - grid.value(a, k);
            }
        }
    }
    return det;
}

namespace {

double epsilon_search(const LinearSystem& sys, double T, const TauGrid& grid,
                      const flows::BasisTuple& basis) {
    if (!(T > 0.0) || !std::isfinite(T)) {
        throw ValidationError("horizon T must be positive");
    }
    double eps = T / 4.0;
    for (int attempt = 0; attempt <= 60; ++attempt) {
        const double det =
            coefficient_matrix(sys, eps, grid, basis).fullPivLu().determinant();
        const double predicted = predicted_determinant(grid, eps);
        if (std::abs(det) >= 0.5 * std::abs(predicted)) {
            return eps;
        }
        eps /= 2.0;
    }
    throw EpsilonSearchFailed("no epsilon reached half the predicted determinant");
}

ExtendedState map_with_grid(const LinearSystem& sys, double eps, double T,
                            const Eigen::VectorXd& s, const ExtendedState& base,
                            const TauGrid& grid) {
    if (s.size() != grid.size()) {
        throw DimensionError("parameter vector must have m*(ell_max+1) entries");
    }
    ExtendedState x = flows::flow_drift(sys, base, T);
    for (int flat = 0; flat < grid.size(); ++flat) {
        const auto idx = grid.pair_at(flat);
        const auto field =
            flows::pushforward_exact(sys, idx.a, eps * grid.value(flat));
        x = flows::flow_straight(field, x, s[flat]);
    }
    return x;
}

Eigen::MatrixXd jacobian_columns(const LinearSystem& sys, double eps,
                                 const TauGrid& grid) {
    const int n = sys.state_dim();
    const int m = sys.input_dim();
    Eigen::MatrixXd J(m + n, grid.size());
    for (int flat = 0; flat < grid.size(); ++flat) {
        const auto idx = grid.pair_at(flat);
        const auto field = flows::pushforward_exact(sys, idx.a,
                                                    eps * grid.value(flat));
        J.col(flat).head(m) = field.du;
        J.col(flat).tail(n) = field.dq_const;
    }
    return J;
}

// Bracket directions over the grid layout, one coordinate column each.
Eigen::MatrixXd direction_columns(const LinearSystem& sys,
                                  const TauGrid& grid) {
    Eigen::MatrixXd D(sys.input_dim() + sys.state_dim(), grid.size());
    for (int flat = 0; flat < grid.size(); ++flat) {
        const auto idx = grid.pair_at(flat);
        D.col(flat) = flows::bracket_direction_coords(sys, idx.a, idx.ell);
    }
    return D;
}

Certificate certify_at(const LinearSystem& sys, double T, double eps,
                       double tol_rel, SaturationProfile profile,
                       flows::BasisTuple basis, const TauGrid& grid) {
    Certificate cert;
    cert.T = T;
    cert.eps = eps;
    cert.profile = std::move(profile);
    cert.basis = std::move(basis);
    cert.coefficient_mat = coefficient_matrix(sys, eps, grid, cert.basis);
    cert.determinant = cert.coefficient_mat.fullPivLu().determinant();
    // The Jacobian columns sit at closely spaced activation times, so an
    // SVD of them inherits the Vandermonde conditioning of the grid. Every
    // column lies in the span of the bracket directions, and once the
    // coefficient matrix is invertible the two spans coincide exactly;
    // the determinant floor from the epsilon search certifies that, which
    // makes the direction matrix the well-posed place to read the rank.
    const double floor = 0.5 * std::abs(predicted_determinant(grid, eps));
    const Eigen::MatrixXd rank_source =
        std::abs(cert.determinant) >= floor
            ? direction_columns(sys, grid)
            : jacobian_columns(sys, eps, grid);
    cert.jacobian_rank = numerics::numerical_rank(rank_source, tol_rel).rank;
    cert.verdict = cert.jacobian_rank == sys.input_dim() + sys.state_dim()
                       ? CertVerdict::LocallyControllable
                       : CertVerdict::Deficient;
    return cert;
}

}  // namespace

double choose_epsilon(const LinearSystem& sys, double T, double tol_rel) {
    const auto profile = saturation_depth(sys, tol_rel);
    const auto basis = choose_basis(sys, profile.ell_max, tol_rel);
    const TauGrid grid(sys.input_dim(), profile.ell_max);
    return epsilon_search(sys, T, grid, basis);
}

ExtendedState attainability_map(const LinearSystem& sys, double eps, double T,
                                const Eigen::VectorXd& s,
                                const ExtendedState& base) {
    const auto profile = saturation_depth(sys);
    const TauGrid grid(sys.input_dim(), profile.ell_max);
    return map_with_grid(sys, eps, T, s, base, grid);
}

Certificate certify(const LinearSystem& sys, double T, double tol_rel) {
    auto profile = saturation_depth(sys, tol_rel);
    auto basis = choose_basis(sys, profile.ell_max, tol_rel);
    const TauGrid grid(sys.input_dim(), profile.ell_max);
    const double eps = epsilon_search(sys, T, grid, basis);
    return certify_at(sys, T, eps, tol_rel, std::move(profile),
                      std::move(basis), grid);
}

ReconstructedControl reconstruct_control(const LinearSystem& sys,
                                         const Eigen::VectorXd& s, double eps,
                                         double T, const TauGrid& grid,
                                         const Eigen::VectorXd& base_control) {
    const int m = sys.input_dim();
    if (grid.m() != m) {
        throw DimensionError("tau grid does not match the system");
    }
    if (s.size() != grid.size()) {
        throw DimensionError("parameter vector must have m*(ell_max+1) entries");
    }
    if (base_control.size() != m) {
        throw DimensionError("base control has wrong dimension");
    }
    if (!(eps > 0.0) || !(eps < T)) {
        throw ValidationError("need 0 < eps < T");
    }
    if (!sys.control_set.contains(base_control)) {
        throw ControlOutOfSet("base control value outside the control set");
    }

    // Grid points sorted by decreasing activation time: the jump attached
    // to offset eps*tau happens at time T - eps*tau, so larger offsets
    // fire first.
    std::vector<int> order(static_cast<std::size_t>(grid.size()));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int lhs, int rhs) {
        return grid.value(lhs) > grid.value(rhs);
    });

    ReconstructedControl result;
    PiecewiseConstantControl control;
    Eigen::VectorXd value = base_control;

    double previous_offset = T;
    for (int flat : order) {
        const double offset = eps * grid.value(flat);
        control.append(previous_offset - offset, value);

        Eigen::VectorXd increment = Eigen::VectorXd::Zero(m);
        increment[grid.pair_at(flat).a] = s[flat];
        value += increment;
        if (!sys.control_set.contains(value)) {
            throw ControlOutOfSet("reconstructed control leaves the control set");
        }
        result.jump_offsets.push_back(offset);
        result.jump_increments.push_back(std::move(increment));
        previous_offset = offset;
    }
    control.append(previous_offset, value);

    result.control = std::move(control);
    return result;
}

SteeringResult steer(const LinearSystem& sys, const Eigen::VectorXd& target,
                     const Eigen::VectorXd& qbar, const SteerOptions& options) {
    const int n = sys.state_dim();
    const int m = sys.input_dim();
    if (target.size() != n || qbar.size() != n) {
        throw DimensionError("target and qbar must have the state dimension");
    }
    const double T = options.T;
    if (!(T > 0.0) || !std::isfinite(T)) {
        throw ValidationError("horizon T must be positive");
    }
    Eigen::VectorXd base_control = options.base_control;
    if (base_control.size() == 0) {
        base_control = Eigen::VectorXd::Zero(m);
    }
    if (base_control.size() != m) {
        throw DimensionError("base control has wrong dimension");
    }
    if (!sys.control_set.contains(base_control)) {
        throw ControlOutOfSet("base control value outside the control set");
    }

    auto profile = saturation_depth(sys, options.tol_rel);
    auto basis = choose_basis(sys, profile.ell_max, options.tol_rel);
    const TauGrid grid(m, profile.ell_max);
    double eps = options.eps;
    if (eps > 0.0) {
        if (!(eps < T / 2.0)) {
            throw ValidationError("eps must lie in (0, T/2)");
        }
    } else {
        eps = epsilon_search(sys, T, grid, basis);
    }
    SteeringResult result;
    result.certificate = certify_at(sys, T, eps, options.tol_rel,
                                    std::move(profile), std::move(basis), grid);
    if (result.certificate.verdict != CertVerdict::LocallyControllable) {
        throw ValidationError("system is not locally controllable");
    }

    const ExtendedState base{0.0, qbar, base_control};

    // The map is affine in s, so the s = 0 Jacobian is exact everywhere;
    // the damping loop is a safety net, not a requirement for convergence.
    const Eigen::MatrixXd jacobian_q =
        jacobian_columns(sys, eps, grid).bottomRows(n);
    const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> solver(
        jacobian_q);

    Eigen::VectorXd s = Eigen::VectorXd::Zero(grid.size());
    auto state_error = [&](const Eigen::VectorXd& params) {
        return Eigen::VectorXd(
            map_with_grid(sys, eps, T, params, base, grid).q - target);
    };
    Eigen::VectorXd residual_vec = state_error(s);
    double residual = residual_vec.norm();
    int iterations = 0;
    while (residual > options.residual_target &&
           iterations < options.max_iterations) {
        const Eigen::VectorXd step = solver.solve(residual_vec);
        double alpha = 1.0;
        bool improved = false;
        for (int halving = 0; halving < 40; ++halving) {
            const Eigen::VectorXd candidate = s - alpha * step;
            const Eigen::VectorXd candidate_vec = state_error(candidate);
            if (candidate_vec.norm() < residual) {
                s = candidate;
                residual_vec = candidate_vec;
                residual = candidate_vec.norm();
                improved = true;
                break;
            }
            alpha /= 2.0;
        }
        ++iterations;
        if (!improved) {
            throw NewtonDivergence("no step reduced the steering residual");
        }
    }
    if (residual > options.residual_target) {
        throw NewtonDivergence("steering residual above target after " +
                               std::to_string(iterations) + " iterations");
    }
    result.newton_iterations = iterations;

    const auto reconstruction =
        reconstruct_control(sys, s, eps, T, grid, base_control);
    result.initial_state = map_with_grid(sys, eps, T, s, base, grid).q;
    result.control = reconstruction.control.reversed();

    // Independent verification: exact forward simulation from the reached
    // initial state must land on qbar.
    Eigen::VectorXd q = result.initial_state;
    for (const auto& seg : result.control.segments()) {
        q = simulate::integrate_segment(sys, q, seg.value, seg.duration, +1);
    }
    result.residual = std::max(residual, (q - qbar).norm());
    return result;
}

}  // namespace ctrlcert::attainability
