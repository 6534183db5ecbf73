#pragma once

#include <array>
#include <vector>

#include <Eigen/Dense>

#include "wavemaslov/system_model.hpp"

namespace wavemaslov {

struct InitialGuess {
    std::vector<double> grid;
    Eigen::MatrixXd values;  // (M+1) x 2n, row i = state at grid[i]
    double c_guess = 0.0;
};

struct WaveConfig {
    double L = 0.0;        // 0 -> per-system default
    int M = 0;             // number of mesh intervals; 0 -> default
    double tol = 1e-10;    // Newton residual tolerance, inf norm
    double tail_tol = 1e-7;
    int max_iterations = 60;
    bool allow_continuation = true;  // eps ladder fallback for stiff solves
};

WaveConfig default_wave_config(const SkewGradientSystem& system);

// Discretized traveling pulse phi = (u, S^-1 u') with speed c, homoclinic to
// the origin on the truncated interval [-L, L].
struct WaveProfile {
    SkewGradientSystem system;
    std::vector<double> grid;
    Eigen::MatrixXd values;  // (M+1) x 2n
    double c = 0.0;
    double residual = 0.0;               // max interpolant defect, finer grid
    std::array<double, 2> tail_norms{};  // |phi(-L)|, |phi(+L)|

    double L() const { return grid.back(); }
    int n() const { return system.n; }

    // Cubic Hermite in each cell with exact ODE derivatives at the nodes;
    // outside the grid the equilibrium (zero) tail extension is used.
    Eigen::VectorXd state_at(double z) const;
    Eigen::VectorXd u_at(double z) const;
    Eigen::VectorXd derivative_at(double z) const;  // phi'(z)

    void finalize();  // rebuild node derivatives after populating fields

    Eigen::MatrixXd node_derivs;  // (M+1) x 2n, row i = rhs(phi(z_i))
};

// Traveling-wave vector field (S v, -c v - Q f(u)) and its pieces.
Eigen::VectorXd tw_rhs(const SkewGradientSystem& system, double c, const Eigen::VectorXd& y);
Eigen::MatrixXd tw_jacobian(const SkewGradientSystem& system, double c, const Eigen::VectorXd& y);

// Piecewise singular-limit guess for the FHN pulse: fast front, slow
// excursion along the right branch, fast back, slow recovery tail.
InitialGuess singular_guess(const FHNParameters& params, double L, int M);

// sech^2 bump for the scalar standing pulse, c_guess = 0.
InitialGuess bump_guess(double a, double L, int M);

InitialGuess default_guess(const SkewGradientSystem& system, const WaveConfig& config);

WaveProfile solve_wave(const SkewGradientSystem& system, const InitialGuess& guess,
                       const WaveConfig& config);

}  // namespace wavemaslov
