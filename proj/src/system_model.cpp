#include "wavemaslov/system_model.hpp"

#include <cmath>
#include <sstream>

namespace wavemaslov {

SkewGradientSystem make_fhn(const FHNParameters& params) {
    if (!(params.a > 0.0 && params.a < 0.5)) raise("InvalidParameter", "fhn requires 0 < a < 1/2");
    if (!(params.eps > 0.0)) raise("InvalidParameter", "fhn requires eps > 0");
    if (!(params.gamma > 0.0)) raise("InvalidParameter", "fhn requires gamma > 0");

    const double a = params.a;
    const double gamma = params.gamma;

    SkewGradientSystem sys;
    sys.n = 2;
    sys.S = Eigen::Vector2d(1.0, params.eps);
    sys.Q = Eigen::Vector2d(1.0, -1.0);
    sys.f = [a, gamma](const Eigen::VectorXd& u) {
        Eigen::VectorXd out(2);
        const double g = u[0] * (1.0 - u[0]) * (u[0] - a);
        out[0] = g - u[1];
        out[1] = -u[0] + gamma * u[1];
        return out;
    };
    sys.df = [a, gamma](const Eigen::VectorXd& u) {
        Eigen::MatrixXd out(2, 2);
        const double gp = -3.0 * u[0] * u[0] + 2.0 * (1.0 + a) * u[0] - a;
        out << gp, -1.0, -1.0, gamma;
        return out;
    };
    sys.kind = SystemKind::fhn;
    sys.fhn = params;
    return sys;
}

SkewGradientSystem make_scalar_bistable(double a) {
    if (!(a > 0.0 && a < 0.5)) raise("InvalidParameter", "scalar fixture requires 0 < a < 1/2");

    SkewGradientSystem sys;
    sys.n = 1;
    sys.S = Eigen::VectorXd::Ones(1);
    sys.Q = Eigen::VectorXd::Ones(1);
    sys.f = [a](const Eigen::VectorXd& u) {
        Eigen::VectorXd out(1);
        out[0] = u[0] * (1.0 - u[0]) * (u[0] - a);
        return out;
    };
    sys.df = [a](const Eigen::VectorXd& u) {
        Eigen::MatrixXd out(1, 1);
        out(0, 0) = -3.0 * u[0] * u[0] + 2.0 * (1.0 + a) * u[0] - a;
        return out;
    };
    sys.kind = SystemKind::scalar_bistable;
    sys.scalar_a = a;
    return sys;
}

SpectralBound turing_check(const SkewGradientSystem& system) {
    const Eigen::MatrixXd K = system.kinetics_matrix(Eigen::VectorXd::Zero(system.n));
    Eigen::EigenSolver<Eigen::MatrixXd> es(K);

    SpectralBound bound;
    bound.nu = es.eigenvalues();
    double max_re = bound.nu.real().maxCoeff();
    bound.ok = max_re < 0.0;
    bound.beta = bound.ok ? max_re / 2.0 : 0.0;
    return bound;
}

void require_turing(const SkewGradientSystem& system) {
    const SpectralBound b = turing_check(system);
    if (!b.ok) {
        std::ostringstream msg;
        msg << "Q S f'(0) has an eigenvalue with Re >= 0 (max Re = " << b.nu.real().maxCoeff() << ")";
        raise("TuringViolated", msg.str());
    }
}

}  // namespace wavemaslov
