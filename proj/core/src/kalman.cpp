#include "ctrlcert/kalman.hpp"

namespace ctrlcert::kalman {

Eigen::MatrixXd controllability_matrix(const LinearSystem& sys) {
    const int n = sys.state_dim();
    const int m = sys.input_dim();
    Eigen::MatrixXd K(n, n * m);
    Eigen::MatrixXd block = sys.B;
    for (int p = 0; p < n; ++p) {
        K.middleCols(p * m, m) = block;
        block = sys.A * block;
    }
    return K;
}

Analysis analyze(const LinearSystem& sys, double tol_rel) {
    Analysis result;
    result.kalman_matrix = controllability_matrix(sys);
    auto rank = numerics::numerical_rank(result.kalman_matrix, tol_rel);
    result.rank = rank.rank;
    result.subspace_basis = std::move(rank.basis);
    result.verdict = result.rank == sys.state_dim() ? Verdict::Controllable
                                                    : Verdict::Deficient;
    return result;
}

Decomposition decompose(const LinearSystem& sys, double tol_rel) {
    const int n = sys.state_dim();
    const Eigen::MatrixXd K = controllability_matrix(sys);

    // Full SVD: the left singular vectors past the rank complete the
    // subspace basis to an orthogonal P.
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(K, Eigen::ComputeFullU);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double threshold = tol_rel * (sv.size() > 0 ? sv[0] : 0.0);
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv[i] > threshold) {
            ++rank;
        }
    }

    Decomposition result;
    result.controllable_dim = rank;
    result.P = svd.matrixU();
    result.A_new = result.P.transpose() * sys.A * result.P;
    result.B_new = result.P.transpose() * sys.B;
    return result;
}

}  // namespace ctrlcert::kalman
