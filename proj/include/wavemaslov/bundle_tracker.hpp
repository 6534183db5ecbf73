#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "wavemaslov/linearization.hpp"
#include "wavemaslov/ode.hpp"
#include "wavemaslov/wave_solver.hpp"

namespace wavemaslov {

enum class Side { unstable, stable };

// Orientation-consistent Lagrangian frame of E^u or E^s along z at fixed real
// lambda, with triangular bookkeeping so the solutions seeded on the raw
// asymptotic eigenvectors remain recoverable in log scale:
//
//   seeded_solutions(z_k) = frames[k] * M_k,   M_k = step_k e^{logstep_k} M_prev
//
// where "prev" is the previous node in integration order (k-1 for the
// unstable sweep, k+1 for the stable one) and step_k is upper triangular with
// unit max-norm and positive diagonal. At the seeding node M = step e^{logstep}
// alone. cum_logdet[k] = log det M_k (always positive determinant).
struct BundleTrajectory {
    double lambda = 0.0;
    double c = 0.0;
    Side side = Side::unstable;
    std::vector<double> grid;
    std::vector<Eigen::MatrixXd> frames;
    std::vector<Eigen::MatrixXd> steps;
    std::vector<double> logstep;
    std::vector<double> cum_logdet;
    int orientation_flips = 0;
    std::vector<std::pair<double, double>> renorm_log;  // (z, cumulative log scale)

    int index_of(double z) const;  // nearest grid node
    const Eigen::MatrixXd& frame_near(double z) const { return frames[index_of(z)]; }
    int seed_index() const { return side == Side::unstable ? 0 : int(grid.size()) - 1; }
};

struct TrackOptions {
    OdeOptions ode{};             // defaults rtol 1e-10, atol 1e-12
    double defect_cap = 1e-6;     // restart threshold for the Lagrangian defect
    double max_angle_step = 0.2;  // continuity cap per (sub)step
};

BundleTrajectory track_unstable(const SkewGradientSystem& system, const WaveProfile& profile,
                                double lambda, const TrackOptions& opts = {});
BundleTrajectory track_stable(const SkewGradientSystem& system, const WaveProfile& profile,
                              double lambda, const TrackOptions& opts = {});
BundleTrajectory track_side(const SkewGradientSystem& system, const WaveProfile& profile,
                            Side side, double lambda, const TrackOptions& opts = {});

// Frame at arbitrary z: short re-integration from the nearest stored node,
// orthonormalized with the same orientation convention.
Eigen::MatrixXd frame_at(const SkewGradientSystem& system, const WaveProfile& profile,
                         const BundleTrajectory& traj, double z, const TrackOptions& opts = {});

// A solution P(z) of the eigenvalue system lying in the tracked bundle with
// P(at the anchor node) = xi, stored as unit vectors plus log magnitudes
// (values can cross hundreds of orders of magnitude). Entries are only
// meaningful on the trajectory's own side of the anchor.
struct BundleSolution {
    std::vector<Eigen::VectorXd> unit;  // per node
    std::vector<double> lognorm;        // value = unit * e^lognorm
};
BundleSolution solution_through(const BundleTrajectory& traj, int anchor_node,
                                const Eigen::VectorXd& xi);

}  // namespace wavemaslov
