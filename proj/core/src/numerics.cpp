#include "ctrlcert/numerics.hpp"

#include <unsupported/Eigen/MatrixFunctions>

namespace ctrlcert::numerics {

namespace {
constexpr double kExpNormLimit = 50.0;
}

Eigen::MatrixXd mat_exp(const Eigen::MatrixXd& M, double s) {
    if (M.rows() != M.cols()) {
        throw DimensionError("mat_exp needs a square matrix");
    }
    const Eigen::MatrixXd scaled = s * M;
    if (!scaled.allFinite()) {
        throw OverflowError("mat_exp argument has non-finite entries");
    }
    if (scaled.cwiseAbs().rowwise().sum().maxCoeff() > kExpNormLimit) {
        throw OverflowError("mat_exp argument norm exceeds supported range");
    }
    return scaled.exp();
}

Eigen::MatrixXd exp_integral(const Eigen::MatrixXd& M, double s) {
    if (M.rows() != M.cols()) {
        throw DimensionError("exp_integral needs a square matrix");
    }
    const Eigen::Index n = M.rows();
    // exp(s [[-M, I], [0, 0]]) = [[exp(-s M), integral], [0, I]].
    Eigen::MatrixXd block = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    block.topLeftCorner(n, n) = -M;
    block.topRightCorner(n, n) = Eigen::MatrixXd::Identity(n, n);
    return mat_exp(block, s).topRightCorner(n, n);
}

RankResult numerical_rank(const Eigen::MatrixXd& M, double tol_rel) {
    if (M.size() == 0) {
        return {0, Eigen::MatrixXd(M.rows(), 0), 0.0};
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double threshold = tol_rel * sv[0];
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv[i] > threshold) {
            ++rank;
        }
    }
    RankResult result;
    result.rank = rank;
    result.basis = svd.matrixU().leftCols(rank);
    result.tolerance_used = threshold;
    return result;
}

}  // namespace ctrlcert::numerics
