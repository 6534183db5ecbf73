#pragma once

#include <array>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "wavemaslov/bundle_tracker.hpp"
#include "wavemaslov/symplectic.hpp"

namespace wavemaslov {

struct CrossingRecord {
    enum class Kind { z_crossing, lambda_crossing };
    enum class Position { interior, left_endpoint, right_endpoint };

    Kind kind = Kind::z_crossing;
    Position position = Position::interior;
    double location = 0.0;  // z* or lambda*
    int dim = 0;
    Eigen::MatrixXd form;  // symmetric dim x dim
    SignatureResult sig;
    int contribution = 0;  // interior: n+ - n-, left end: -n-, right end: +n+
};

int crossing_contribution(const SignatureResult& sig, CrossingRecord::Position pos);

struct BoxOptions {
    int lambda_scan_points = 201;     // coarse scan along the top edge
    int tau_grid_points = 21;         // lambda grid for the tau certificate
    double margin = 1e-4;             // transversality certificates
    double membership_tol = 1e-7;     // phi'-in-span residual required at tau
    double bisect_tol_z = 1e-8;
    double bisect_tol_lambda = 1e-10;
    double lambda_max_override = 0.0;  // 0 = derive via the doubling search
    std::optional<double> tau_tail_tol{};  // applied when the tail can reach it
    int threads = 1;
    TrackOptions track{};
};

struct BoxResult {
    double tau = 0.0;
    double lambda_max = 0.0;
    std::array<int, 4> mu{0, 0, 0, 0};
    std::array<std::vector<CrossingRecord>, 4> crossings;
    bool sum_ok = false;

    int maslov = 0;             // mu[0], the index of the wave itself
    double alpha3_margin = 0;   // min |detection| certificates for the shelves
    double alpha4_margin = 0;
    double corner_alignment = 0;  // angle between the tau intersection and phi'(tau)
};

// Smallest grid value tau such that for every lambda in the grid the
// asymptotic unstable plane stays transverse to E^s(lambda, z) on [tau, L],
// and the tracked unstable bundle at lambda=0 still resolves phi' at tau
// (span-membership residual below membership_tol). An optional wave-tail
// bound can be requested where it is attainable.
double select_tau(const SkewGradientSystem& system, const WaveProfile& profile,
                  const std::vector<double>& lambda_grid,
                  const std::vector<BundleTrajectory>& stable_tracks,
                  const BundleTrajectory& unstable_at_zero, double margin, double membership_tol,
                  std::optional<double> tail_tol);

// Doubling search above the explicit bound c^2/4 + max_z ||QS f'(u)|| + 1
// for a lambda with an all-z transversality certificate against S(lambda).
double select_lambda_max(const SkewGradientSystem& system, const WaveProfile& profile,
                         double margin, const TrackOptions& track_opts = {});

std::vector<CrossingRecord> z_crossings(const SkewGradientSystem& system,
                                        const WaveProfile& profile,
                                        const BundleTrajectory& unstable,
                                        const BundleTrajectory& stable, double tau,
                                        const BoxOptions& opts = {});

// Sum of interior signatures plus n+ of the crossing at the tau endpoint.
int maslov_of_wave(const std::vector<CrossingRecord>& crossings);

// Relative crossing form at lambda*: quadrature of e^{cz} omega(P, A_lambda P)
// over the eigenfunction built from both bundles, with the controlled
// log-scale representation (raw profile tails would be amplified by e^{cz}).
CrossingRecord lambda_crossing_form(const SkewGradientSystem& system, const WaveProfile& profile,
                                    const BundleTrajectory& unstable,
                                    const BundleTrajectory& stable, double lambda_star, double tau,
                                    CrossingRecord::Position position);

BoxResult maslov_box(const SkewGradientSystem& system, const WaveProfile& profile,
                     const BoxOptions& opts = {});

// Eigenfunction samples for lambda*, anchored at the intersection at tau.
struct Eigenfunction {
    std::vector<double> z;
    std::vector<Eigen::VectorXd> unit;  // unit vectors per node
    std::vector<double> lognorm;        // value = unit * e^lognorm
    Eigen::VectorXd xi;                 // anchor value at tau (unit)
};
Eigenfunction extract_eigenfunction(const SkewGradientSystem& system, const WaveProfile& profile,
                                    const BundleTrajectory& unstable,
                                    const BundleTrajectory& stable, double tau,
                                    const Eigen::VectorXd& xi);

}  // namespace wavemaslov
