#include "wavemaslov/bundle_tracker.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "wavemaslov/symplectic.hpp"
#include "wavemaslov/util.hpp"

namespace wavemaslov {

int BundleTrajectory::index_of(double z) const {
    auto it = std::lower_bound(grid.begin(), grid.end(), z);
    if (it == grid.end()) return int(grid.size()) - 1;
    int i = int(it - grid.begin());
    if (i > 0 && z - grid[i - 1] < grid[i] - z) --i;
    return i;
}

namespace {

// dY/dz = A(lambda, z) Y with the wave interpolated along the profile.
struct EigenSystemRhs {
    const SkewGradientSystem* sys;
    const WaveProfile* prof;
    double lambda;
    double c;
    mutable Eigen::MatrixXd A;

    EigenSystemRhs(const SkewGradientSystem& s, const WaveProfile& p, double lam)
        : sys(&s), prof(&p), lambda(lam), c(p.c) {
        const int n = s.n;
        A = Eigen::MatrixXd::Zero(2 * n, 2 * n);
        A.topRightCorner(n, n) = s.S.asDiagonal();
        A.bottomRightCorner(n, n) = -c * Eigen::MatrixXd::Identity(n, n);
    }

    void operator()(double z, const Eigen::MatrixXd& Y, Eigen::MatrixXd& dY) const {
        const int n = sys->n;
        A.bottomLeftCorner(n, n) =
            lambda * Eigen::MatrixXd(sys->S.cwiseInverse().asDiagonal()) -
            sys->Q.asDiagonal() * sys->df(prof->u_at(z));
        dY.noalias() = A * Y;
    }
};

double principal_angle_gap(const Eigen::MatrixXd& F0, const Eigen::MatrixXd& F1) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(F0.transpose() * F1);
    const double cosmin = std::clamp(svd.singularValues().minCoeff(), -1.0, 1.0);
    return std::acos(cosmin);
}

// A node-to-node angle above the cap can be legitimate fast rotation of the
// plane; split the interval until every sub-step stays below the cap, and
// only fail if refinement cannot smooth it out (a genuine branch jump).
void verify_continuity(const EigenSystemRhs& rhs, const OdeOptions& ode, const Eigen::MatrixXd& Fa,
                       double za, const Eigen::MatrixXd& Fb, double zb, double cap, int depth) {
    if (principal_angle_gap(Fa, Fb) <= cap) return;
    if (depth >= 8) raise("StepFailure", "frame continuity lost near z=" + std::to_string(za));
    DormandPrince<Eigen::MatrixXd, const EigenSystemRhs&> integ(rhs, ode);
    Eigen::MatrixXd Fm = Fa;
    const double zm = 0.5 * (za + zb);
    integ.advance(Fm, za, zm);
    Fm = thin_qr_positive(Fm).first;
    verify_continuity(rhs, ode, Fa, za, Fm, zm, cap, depth + 1);
    verify_continuity(rhs, ode, Fm, zm, Fb, zb, cap, depth + 1);
}

BundleTrajectory track_impl(const SkewGradientSystem& system, const WaveProfile& profile,
                            Side side, double lambda, const TrackOptions& opts, int attempt) {
    const int n = system.n;
    const AsymptoticSystem asym = asymptotic_system(system, profile.c, lambda);
    const Eigen::MatrixXd J = complex_structure_matrix(system.Q);

    // Seed on the raw (analytic-in-lambda) eigenvectors so the bookkeeping
    // reproduces the individually seeded solutions and D(lambda) inherits
    // continuity in lambda.
    Eigen::MatrixXd seeds(2 * n, n);
    for (int i = 0; i < n; ++i)
        seeds.col(i) = asym.raw_eta(side == Side::unstable ? n + i : i);

    const int M = int(profile.grid.size()) - 1;
    BundleTrajectory traj;
    traj.lambda = lambda;
    traj.c = profile.c;
    traj.side = side;
    traj.grid = profile.grid;
    traj.frames.resize(M + 1);
    traj.steps.resize(M + 1);
    traj.logstep.resize(M + 1);
    traj.cum_logdet.resize(M + 1);

    EigenSystemRhs rhs(system, profile, lambda);
    DormandPrince<Eigen::MatrixXd, EigenSystemRhs&> integrator(rhs, opts.ode);

    const int start = side == Side::unstable ? 0 : M;
    const int step_dir = side == Side::unstable ? 1 : -1;

    Eigen::MatrixXd F;
    double cum_logdet = 0.0;
    double cum_scale = 0.0;
    double worst_defect = 0.0;

    for (int k = start;; k += step_dir) {
        Eigen::MatrixXd R;
        if (k == start) {
            std::tie(F, R) = thin_qr_positive(seeds);
        } else {
            integrator.advance(F, traj.grid[k - step_dir], traj.grid[k]);
            std::tie(F, R) = thin_qr_positive(Eigen::MatrixXd(F));
            integrator.invalidate_fsal();
        }

        double detR = 1.0;
        for (int j = 0; j < n; ++j) detR *= R(j, j);
        if (detR <= 0.0) ++traj.orientation_flips;

        const double d = R.cwiseAbs().maxCoeff();
        traj.steps[k] = R / d;
        traj.logstep[k] = std::log(d);
        double logdet_step = n * traj.logstep[k];
        for (int j = 0; j < n; ++j) logdet_step += std::log(std::abs(traj.steps[k](j, j)));
        cum_logdet += logdet_step;
        cum_scale += traj.logstep[k];

        traj.frames[k] = F;
        traj.cum_logdet[k] = cum_logdet;
        traj.renorm_log.emplace_back(traj.grid[k], cum_scale);

        worst_defect = std::max(worst_defect, lagrangian_defect(J, F));
        if (k != start && principal_angle_gap(traj.frames[k - step_dir], F) > opts.max_angle_step)
            verify_continuity(rhs, opts.ode, traj.frames[k - step_dir], traj.grid[k - step_dir], F,
                              traj.grid[k], opts.max_angle_step, 0);
        if (k == (side == Side::unstable ? M : 0)) break;
    }

    if (worst_defect > opts.defect_cap) {
        if (attempt == 0) {
            TrackOptions tighter = opts;
            tighter.ode.rtol /= 10.0;
            tighter.ode.atol /= 10.0;
            return track_impl(system, profile, side, lambda, tighter, 1);
        }
        std::ostringstream msg;
        msg << "Lagrangian defect " << worst_defect << " at lambda=" << lambda;
        raise("DefectBlowup", msg.str());
    }
    return traj;
}

}  // namespace

BundleTrajectory track_side(const SkewGradientSystem& system, const WaveProfile& profile,
                            Side side, double lambda, const TrackOptions& opts) {
    return track_impl(system, profile, side, lambda, opts, 0);
}

BundleTrajectory track_unstable(const SkewGradientSystem& system, const WaveProfile& profile,
                                double lambda, const TrackOptions& opts) {
    return track_impl(system, profile, Side::unstable, lambda, opts, 0);
}

BundleTrajectory track_stable(const SkewGradientSystem& system, const WaveProfile& profile,
                              double lambda, const TrackOptions& opts) {
    return track_impl(system, profile, Side::stable, lambda, opts, 0);
}

Eigen::MatrixXd frame_at(const SkewGradientSystem& system, const WaveProfile& profile,
                         const BundleTrajectory& traj, double z, const TrackOptions& opts) {
    const int k = traj.index_of(z);
    if (traj.grid[k] == z) return traj.frames[k];

    EigenSystemRhs rhs(system, profile, traj.lambda);
    DormandPrince<Eigen::MatrixXd, EigenSystemRhs&> integrator(rhs, opts.ode);
    Eigen::MatrixXd F = traj.frames[k];
    integrator.advance(F, traj.grid[k], z);
    return thin_qr_positive(F).first;
}

BundleSolution solution_through(const BundleTrajectory& traj, int anchor_node,
                                const Eigen::VectorXd& xi) {
    const int M = int(traj.grid.size()) - 1;
    const int toward_seed = traj.side == Side::unstable ? -1 : 1;

    BundleSolution sol;
    sol.unit.assign(M + 1, Eigen::VectorXd());
    sol.lognorm.assign(M + 1, -std::numeric_limits<double>::infinity());

    Eigen::VectorXd gamma = traj.frames[anchor_node].transpose() * xi;
    double lognorm = std::log(std::max(gamma.norm(), 1e-300));
    gamma.normalize();
    sol.unit[anchor_node] = traj.frames[anchor_node] * gamma;
    sol.lognorm[anchor_node] = lognorm;

    // Walk toward the seeding end, undoing one triangular step at a time;
    // each step factor is well conditioned even though their product is not.
    for (int k = anchor_node; k != traj.seed_index(); k += toward_seed) {
        const Eigen::VectorXd y =
            traj.steps[k].triangularView<Eigen::Upper>().solve(gamma);
        lognorm += -traj.logstep[k] + std::log(y.norm());
        gamma = y.normalized();
        const int kk = k + toward_seed;
        sol.unit[kk] = traj.frames[kk] * gamma;
        sol.lognorm[kk] = lognorm;
    }
    return sol;
}

}  // namespace wavemaslov
