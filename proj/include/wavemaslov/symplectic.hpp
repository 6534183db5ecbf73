#pragma once

#include <vector>

#include <Eigen/Dense>

#include "wavemaslov/system_model.hpp"

namespace wavemaslov {

struct ComplexStructure {
    Eigen::MatrixXd J;  // J^2 = -I, J^T = -J
};

ComplexStructure complex_structure(const SkewGradientSystem& system);
Eigen::MatrixXd complex_structure_matrix(const Eigen::VectorXd& Qdiag);

// omega(a, b) = <a, J b>
double omega(const Eigen::MatrixXd& J, const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// Omega = e^{cz} omega. For |cz| > 700 the weight leaves double range; the
// _parts form returns sign and log-magnitude instead.
double weighted_omega(const Eigen::MatrixXd& J, double c, double z, const Eigen::VectorXd& a,
                      const Eigen::VectorXd& b);
void weighted_omega_parts(const Eigen::MatrixXd& J, double c, double z, const Eigen::VectorXd& a,
                          const Eigen::VectorXd& b, double& sign, double& log_abs);

// M_ij = Omega(V_i, W_j) at position z.
Eigen::MatrixXd pairing_matrix(const Eigen::MatrixXd& J, double c, double z,
                               const Eigen::MatrixXd& V, const Eigen::MatrixXd& W);

// Normalized transversality determinant det(V^T J W) / prod(column norms).
// Zero (below tolerance) iff span(V) and span(W) intersect nontrivially, for
// Lagrangian V, W. Scale-free: exponential weights cannot move its zero set,
// and the margin thresholds used by callers assume unit normalization.
double detection(const Eigen::MatrixXd& J, const Eigen::MatrixXd& V, const Eigen::MatrixXd& W);

// Orthonormal basis of span(V) & span(W) from singular values of [V | -W]
// below tol. Raises RankAmbiguity when singular values cluster at tol.
std::vector<Eigen::VectorXd> intersection_basis(const Eigen::MatrixXd& V, const Eigen::MatrixXd& W,
                                                double tol);

struct SignatureResult {
    int n_plus = 0;
    int n_minus = 0;
    int n_zero = 0;
    int sign() const { return n_plus - n_minus; }
};

SignatureResult signature(const Eigen::MatrixXd& gram, double tol);

struct LagrangianFrame {
    Eigen::MatrixXd columns;  // 2n x n
    double defect = 0.0;      // max_ij |omega(col_i, col_j)| / (norm_i norm_j)
};

double lagrangian_defect(const Eigen::MatrixXd& J, const Eigen::MatrixXd& columns);

// Validates rank and computes the defect; raises InvalidFrame if rank-deficient.
LagrangianFrame make_frame(const Eigen::MatrixXd& J, const Eigen::MatrixXd& columns);

}  // namespace wavemaslov
