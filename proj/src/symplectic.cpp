#include "wavemaslov/symplectic.hpp"

#include <cmath>
#include <sstream>

namespace wavemaslov {

Eigen::MatrixXd complex_structure_matrix(const Eigen::VectorXd& Qdiag) {
    const Eigen::Index n = Qdiag.size();
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    J.topRightCorner(n, n) = Qdiag.asDiagonal();
    J.bottomLeftCorner(n, n) = -Eigen::MatrixXd(Qdiag.asDiagonal());
    return J;
}

ComplexStructure complex_structure(const SkewGradientSystem& system) {
    return ComplexStructure{complex_structure_matrix(system.Q)};
}

double omega(const Eigen::MatrixXd& J, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return a.dot(J * b);
}

void weighted_omega_parts(const Eigen::MatrixXd& J, double c, double z, const Eigen::VectorXd& a,
                          const Eigen::VectorXd& b, double& sign, double& log_abs) {
    const double w = omega(J, a, b);
    if (w == 0.0) {
        sign = 0.0;
        log_abs = -std::numeric_limits<double>::infinity();
        return;
    }
    sign = w > 0 ? 1.0 : -1.0;
    log_abs = std::log(std::abs(w)) + c * z;
}

double weighted_omega(const Eigen::MatrixXd& J, double c, double z, const Eigen::VectorXd& a,
                      const Eigen::VectorXd& b) {
    if (std::abs(c * z) > 700.0) {
        double sign, log_abs;
        weighted_omega_parts(J, c, z, a, b, sign, log_abs);
        if (log_abs > 709.0) return sign * std::numeric_limits<double>::infinity();
        return sign * std::exp(log_abs);
    }
    return std::exp(c * z) * omega(J, a, b);
}

Eigen::MatrixXd pairing_matrix(const Eigen::MatrixXd& J, double c, double z,
                               const Eigen::MatrixXd& V, const Eigen::MatrixXd& W) {
    return std::exp(c * z) * (V.transpose() * J * W);
}

double detection(const Eigen::MatrixXd& J, const Eigen::MatrixXd& V, const Eigen::MatrixXd& W) {
    Eigen::MatrixXd M = V.transpose() * J * W;
    double norm_prod = 1.0;
    for (Eigen::Index j = 0; j < V.cols(); ++j) norm_prod *= V.col(j).norm();
    for (Eigen::Index j = 0; j < W.cols(); ++j) norm_prod *= W.col(j).norm();
    return M.determinant() / norm_prod;
}

std::vector<Eigen::VectorXd> intersection_basis(const Eigen::MatrixXd& V, const Eigen::MatrixXd& W,
                                                double tol) {
    Eigen::MatrixXd C(V.rows(), V.cols() + W.cols());
    C.leftCols(V.cols()) = V;
    for (Eigen::Index j = 0; j < V.cols(); ++j) C.col(j).normalize();
    C.rightCols(W.cols()) = -W;
    for (Eigen::Index j = 0; j < W.cols(); ++j) C.col(V.cols() + j).normalize();

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(C, Eigen::ComputeFullV);
    const Eigen::VectorXd sv = svd.singularValues();

    int null_dim = 0;
    bool ambiguous = false;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv[i] < tol) ++null_dim;
        else if (sv[i] < 10.0 * tol) ambiguous = true;
    }
    if (ambiguous) {
        std::ostringstream msg;
        msg << "singular values cluster at tol=" << tol << "; candidate dims " << null_dim
            << " and " << null_dim + 1;
        raise("RankAmbiguity", msg.str());
    }
    if (null_dim == 0) return {};

    // x = V a for each null vector (a; b); orthonormalize the collected x.
    Eigen::MatrixXd X(V.rows(), null_dim);
    for (int k = 0; k < null_dim; ++k) {
        const Eigen::VectorXd ab = svd.matrixV().col(sv.size() - 1 - k);
        Eigen::VectorXd a = ab.head(V.cols());
        Eigen::VectorXd x = Eigen::VectorXd::Zero(V.rows());
        for (Eigen::Index j = 0; j < V.cols(); ++j) x += a[j] * V.col(j) / V.col(j).norm();
        X.col(k) = x;
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(X);
    Eigen::MatrixXd Qthin = qr.householderQ() * Eigen::MatrixXd::Identity(V.rows(), null_dim);

    std::vector<Eigen::VectorXd> basis;
    basis.reserve(null_dim);
    for (int k = 0; k < null_dim; ++k) basis.push_back(Qthin.col(k));
    return basis;
}

SignatureResult signature(const Eigen::MatrixXd& gram, double tol) {
    if ((gram - gram.transpose()).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + gram.cwiseAbs().maxCoeff()))
        raise("InvalidForm", "signature requires a symmetric matrix");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    SignatureResult sig;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        const double e = es.eigenvalues()[i];
        if (e > tol) ++sig.n_plus;
        else if (e < -tol) ++sig.n_minus;
        else ++sig.n_zero;
    }
    return sig;
}

double lagrangian_defect(const Eigen::MatrixXd& J, const Eigen::MatrixXd& columns) {
    const Eigen::MatrixXd M = columns.transpose() * J * columns;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < columns.cols(); ++i)
        for (Eigen::Index j = 0; j < columns.cols(); ++j) {
            const double denom = columns.col(i).norm() * columns.col(j).norm();
            worst = std::max(worst, std::abs(M(i, j)) / denom);
        }
    return worst;
}

LagrangianFrame make_frame(const Eigen::MatrixXd& J, const Eigen::MatrixXd& columns) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(columns);
    const double smin = svd.singularValues().minCoeff() / columns.colwise().norm().maxCoeff();
    if (smin < 1e-10) raise("InvalidFrame", "frame is rank deficient");
    return LagrangianFrame{columns, lagrangian_defect(J, columns)};
}

}  // namespace wavemaslov
