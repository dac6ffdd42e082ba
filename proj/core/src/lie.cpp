#include "ctrlcert/lie.hpp"

#include "ctrlcert/kalman.hpp"

namespace ctrlcert::lie {

AffineField bracket(const AffineField& X, const AffineField& Y) {
    if (X.linear.rows() != Y.linear.rows() ||
        X.linear.cols() != Y.linear.cols() ||
        X.constant.size() != Y.constant.size()) {
        throw DimensionError("bracket operands must share dimensions");
    }
    AffineField result;
    result.linear = Y.linear * X.linear - X.linear * Y.linear;
    result.constant = Y.linear * X.constant - X.linear * Y.constant;
    return result;
}

std::vector<AffineField> system_fields(const LinearSystem& sys) {
    const int n = sys.state_dim();
    std::vector<AffineField> fields;
    fields.reserve(static_cast<std::size_t>(sys.input_dim()) + 1);
    fields.push_back({-sys.A, Eigen::VectorXd::Zero(n)});
    for (int a = 0; a < sys.input_dim(); ++a) {
        fields.push_back({Eigen::MatrixXd::Zero(n, n), sys.B.col(a)});
    }
    return fields;
}

namespace {

Eigen::VectorXd vectorize(const AffineField& f) {
    const Eigen::Index n = f.constant.size();
    Eigen::VectorXd v(n * n + n);
    v.head(n * n) = Eigen::Map<const Eigen::VectorXd>(f.linear.data(), n * n);
    v.tail(n) = f.constant;
    return v;
}

}  // namespace

numerics::RankResult lie_span_at(const std::vector<AffineField>& generators,
                                 const Eigen::VectorXd& q0, double tol_rel) {
    if (generators.empty()) {
        throw DimensionError("lie_span_at needs at least one generator");
    }
    const Eigen::Index n = q0.size();
    for (const auto& g : generators) {
        if (g.constant.size() != n || g.linear.rows() != n || g.linear.cols() != n) {
            throw DimensionError("generator dimensions must match q0");
        }
    }

    // Saturate in field space: left-nested brackets with the generators
    // reach the whole generated algebra, whose dimension is at most
    // n^2 + n. ortho holds an orthonormal basis of the vectorized fields.
    const Eigen::Index field_dim = n * n + n;
    Eigen::MatrixXd ortho(field_dim, 0);
    std::vector<AffineField> basis;
    std::vector<AffineField> frontier;

    auto try_add = [&](const AffineField& f, std::vector<AffineField>& out) {
        Eigen::VectorXd v = vectorize(f);
        const double scale = v.norm();
        if (scale == 0.0) {
            return;
        }
        Eigen::VectorXd residual = v - ortho * (ortho.transpose() * v);
        // One re-orthogonalization pass keeps the basis orthonormal.
        residual -= ortho * (ortho.transpose() * residual);
        if (residual.norm() <= tol_rel * scale) {
            return;
        }
        ortho.conservativeResize(Eigen::NoChange, ortho.cols() + 1);
        ortho.col(ortho.cols() - 1) = residual / residual.norm();
        basis.push_back(f);
        out.push_back(f);
    };

    for (const auto& g : generators) {
        try_add(g, frontier);
    }

    const int max_rounds = static_cast<int>(n * (n + 1));
    int round = 0;
    while (!frontier.empty()) {
        if (++round > max_rounds) {
            throw InternalError("lie_span_at failed to saturate");
        }
        std::vector<AffineField> next;
        for (const auto& g : generators) {
            for (const auto& f : frontier) {
                try_add(bracket(g, f), next);
            }
        }
        frontier = std::move(next);
    }

    Eigen::MatrixXd values(n, static_cast<Eigen::Index>(basis.size()));
    for (std::size_t i = 0; i < basis.size(); ++i) {
        values.col(static_cast<Eigen::Index>(i)) = basis[i].value_at(q0);
    }
    return numerics::numerical_rank(values, tol_rel);
}

bool agrees_with_kalman_rank(const LinearSystem& sys, double tol_rel) {
    const auto span = lie_span_at(system_fields(sys),
                                  Eigen::VectorXd::Zero(sys.state_dim()),
                                  tol_rel);
    const auto kal = kalman::analyze(sys, tol_rel);
    return span.rank == kal.rank;
}

}  // namespace ctrlcert::lie
