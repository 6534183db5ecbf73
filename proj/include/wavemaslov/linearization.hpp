#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "wavemaslov/symplectic.hpp"
#include "wavemaslov/system_model.hpp"

namespace wavemaslov {

struct WaveProfile;  // wave_solver.hpp

// Spectral data of A_inf(lambda) = lim_{z->+-inf} A(lambda, z).
//
// mu is sorted increasing; for real lambda >= 0 under the Turing condition
// the split is mu_1 <= ... <= mu_n < 0 < -c < mu_{n+1} <= ... <= mu_{2n},
// and the branches pair up as mu_i + mu_{2n+1-i} = -c.
struct AsymptoticSystem {
    double lambda = 0.0;
    double c = 0.0;
    Eigen::MatrixXd A_inf;
    Eigen::VectorXd mu;   // 2n, sorted increasing
    Eigen::MatrixXd eta;  // 2n x 2n, unit columns matching mu
    LagrangianFrame U_frame;  // span eta_{n+1..2n}
    LagrangianFrame S_frame;  // span eta_{1..n}
    bool closed_form = false;

    // Closed-form bookkeeping: kinetics eigenvectors w per family and the
    // family of each sorted slot. raw_eta(i) = (w, mu_i S^-1 w) without
    // normalization, which is analytic in lambda; Evans continuity needs it.
    Eigen::MatrixXd kinetics_vectors;  // n x n
    std::vector<int> family;           // size 2n
    Eigen::VectorXd S_diag;

    Eigen::VectorXd raw_eta(int i) const;
};

// A(lambda, z) evaluated at a state value of the wave.
Eigen::MatrixXd coefficient_matrix_at(const SkewGradientSystem& system, const Eigen::VectorXd& u,
                                      double c, double lambda);

// A(lambda, z) along the solved profile; outside the grid the asymptotic
// value df(0) is used (tail extension).
Eigen::MatrixXd coefficient_matrix(const SkewGradientSystem& system, const WaveProfile& profile,
                                   double lambda, double z);

// dA/dlambda: constant, lower-left block S^-1.
Eigen::MatrixXd lambda_derivative(const SkewGradientSystem& system);

AsymptoticSystem asymptotic_system(const SkewGradientSystem& system, double c, double lambda);

// min |Re mu| over eigenvalues of A_inf(lambda); positive iff lambda is off
// the essential spectrum.
double essential_margin(const SkewGradientSystem& system, double c, std::complex<double> lambda);

// Closed-form continuation of the asymptotic data to complex lambda;
// requires real simple nu. Family order: [mu-_1..mu-_n, mu+_1..mu+_n].
struct ComplexAsymptotics {
    Eigen::VectorXcd mu;
    Eigen::MatrixXcd eta;  // raw (unnormalized) eigenvectors, analytic in lambda
};
ComplexAsymptotics complex_asymptotics(const SkewGradientSystem& system, double c,
                                       std::complex<double> lambda);

}  // namespace wavemaslov
