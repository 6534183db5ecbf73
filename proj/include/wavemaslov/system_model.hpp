#pragma once

#include <functional>

#include <Eigen/Dense>

#include "wavemaslov/errors.hpp"

namespace wavemaslov {

enum class SystemKind { fhn, scalar_bistable, custom };

struct FHNParameters {
    double a = 0.1;
    double eps = 1e-3;
    double gamma = 1.0;
};

// Reaction-diffusion system u_t = u_xx + Q S f(u), with f = grad F (so f' is
// symmetric), S positive diagonal and Q diagonal with +-1 entries.
struct SkewGradientSystem {
    int n = 0;
    Eigen::VectorXd S;  // diagonal of S
    Eigen::VectorXd Q;  // diagonal of Q
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> f;
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> df;

    SystemKind kind = SystemKind::custom;
    FHNParameters fhn{};      // populated when kind == fhn
    double scalar_a = 0.0;    // populated when kind == scalar_bistable

    // Q S f'(u); its eigenvalues at u=0 drive the essential-spectrum bound.
    Eigen::MatrixXd kinetics_matrix(const Eigen::VectorXd& u) const {
        return Q.asDiagonal() * Eigen::MatrixXd(S.asDiagonal() * df(u));
    }
};

struct SpectralBound {
    Eigen::VectorXcd nu;  // eigenvalues of Q S f'(0)
    double beta = 0.0;    // max Re(nu)/2; negative iff ok
    bool ok = false;
};

SkewGradientSystem make_fhn(const FHNParameters& params);

// n=1 fixture: S=(1), Q=(+1), f(u) = u(1-u)(u-a). Its standing pulse has one
// unstable eigenvalue, which pins down every sign convention downstream.
SkewGradientSystem make_scalar_bistable(double a);

SpectralBound turing_check(const SkewGradientSystem& system);

// Raises TuringViolated unless turing_check(system).ok.
void require_turing(const SkewGradientSystem& system);

}  // namespace wavemaslov
