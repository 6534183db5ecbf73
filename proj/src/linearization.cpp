#include "wavemaslov/linearization.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "wavemaslov/util.hpp"
#include "wavemaslov/wave_solver.hpp"

namespace wavemaslov {

namespace {

// Largest-magnitude component made positive, for reproducible eigenbases.
void fix_sign(Eigen::VectorXd& v) {
    Eigen::Index imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    if (v[imax] < 0) v = -v;
}

struct KineticsEigs {
    bool real_simple = false;
    Eigen::VectorXd nu;       // sorted increasing when real_simple
    Eigen::MatrixXd vectors;  // matching unit eigenvectors
    Eigen::VectorXcd nu_all;  // always populated
};

KineticsEigs kinetics_eigs(const SkewGradientSystem& system) {
    const Eigen::MatrixXd K = system.kinetics_matrix(Eigen::VectorXd::Zero(system.n));
    Eigen::EigenSolver<Eigen::MatrixXd> es(K);

    KineticsEigs out;
    out.nu_all = es.eigenvalues();

    const double scale = out.nu_all.cwiseAbs().maxCoeff() + 1e-300;
    if (out.nu_all.imag().cwiseAbs().maxCoeff() > 1e-12 * scale) return out;

    std::vector<int> order(system.n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return out.nu_all[a].real() < out.nu_all[b].real(); });

    out.nu.resize(system.n);
    out.vectors.resize(system.n, system.n);
    for (int i = 0; i < system.n; ++i) {
        out.nu[i] = out.nu_all[order[i]].real();
        Eigen::VectorXd w = es.eigenvectors().col(order[i]).real();
        w.normalize();
        fix_sign(w);
        out.vectors.col(i) = w;
    }
    out.real_simple = true;
    for (int i = 0; i + 1 < system.n; ++i)
        if (out.nu[i + 1] - out.nu[i] < 1e-10 * (1.0 + scale)) out.real_simple = false;
    return out;
}

}  // namespace

Eigen::VectorXd AsymptoticSystem::raw_eta(int i) const {
    if (!closed_form) return eta.col(i);
    const Eigen::VectorXd& w = kinetics_vectors.col(family[i]);
    Eigen::VectorXd v(2 * w.size());
    v.head(w.size()) = w;
    v.tail(w.size()) = mu[i] * w.cwiseQuotient(S_diag);
    return v;
}

Eigen::MatrixXd coefficient_matrix_at(const SkewGradientSystem& system, const Eigen::VectorXd& u,
                                      double c, double lambda) {
    const int n = system.n;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    A.topRightCorner(n, n) = system.S.asDiagonal();
    A.bottomLeftCorner(n, n) =
        lambda * system.S.cwiseInverse().asDiagonal() * Eigen::MatrixXd::Identity(n, n) -
        system.Q.asDiagonal() * system.df(u);
    A.bottomRightCorner(n, n) = -c * Eigen::MatrixXd::Identity(n, n);
    return A;
}

Eigen::MatrixXd coefficient_matrix(const SkewGradientSystem& system, const WaveProfile& profile,
                                   double lambda, double z) {
    return coefficient_matrix_at(system, profile.u_at(z), profile.c, lambda);
}

Eigen::MatrixXd lambda_derivative(const SkewGradientSystem& system) {
    const int n = system.n;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    A.bottomLeftCorner(n, n) = Eigen::MatrixXd(system.S.cwiseInverse().asDiagonal());
    return A;
}

AsymptoticSystem asymptotic_system(const SkewGradientSystem& system, double c, double lambda) {
    require_turing(system);
    const int n = system.n;

    AsymptoticSystem out;
    out.lambda = lambda;
    out.c = c;
    out.S_diag = system.S;
    out.A_inf = coefficient_matrix_at(system, Eigen::VectorXd::Zero(n), c, lambda);

    const KineticsEigs kin = kinetics_eigs(system);
    const Eigen::MatrixXd J = complex_structure_matrix(system.Q);

    if (kin.real_simple) {
        out.closed_form = true;
        out.kinetics_vectors = kin.vectors;
        out.mu.resize(2 * n);
        out.family.resize(2 * n);

        // Branch pair per kinetics family; nu sorted increasing gives the
        // stable branch sorted increasing and the unstable branch decreasing,
        // so the sorted-label pairing is (i, 2n+1-i).
        for (int i = 0; i < n; ++i) {
            const double disc = c * c + 4.0 * (lambda - kin.nu[i]);
            if (disc <= 0.0) {
                std::ostringstream msg;
                msg << "A_inf(" << lambda << ") has a non-real eigenvalue pair";
                raise("ImaginaryEigenvalue", msg.str());
            }
            const double s = std::sqrt(disc);
            out.mu[i] = 0.5 * (-c - s);            // stable branch
            out.mu[2 * n - 1 - i] = 0.5 * (-c + s);  // unstable partner
            out.family[i] = i;
            out.family[2 * n - 1 - i] = i;
        }
        for (int i = 0; i + 1 < 2 * n; ++i)
            if (out.mu[i + 1] < out.mu[i]) raise("InternalError", "mu ordering lost");

        out.eta.resize(2 * n, 2 * n);
        for (int i = 0; i < 2 * n; ++i) {
            Eigen::VectorXd v = out.raw_eta(i);
            v.normalize();
            fix_sign(v);
            out.eta.col(i) = v;
        }
    } else {
        Eigen::EigenSolver<Eigen::MatrixXd> es(out.A_inf);
        const Eigen::VectorXcd ev = es.eigenvalues();
        const double scale = ev.cwiseAbs().maxCoeff();
        if (ev.real().cwiseAbs().minCoeff() < 1e-12 * scale)
            raise("ImaginaryEigenvalue", "A_inf eigenvalue on the imaginary axis");

        std::vector<int> order(2 * n);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](int a, int b) { return ev[a].real() < ev[b].real(); });

        out.mu.resize(2 * n);
        for (int i = 0; i < 2 * n; ++i) out.mu[i] = ev[order[i]].real();

        // Real invariant basis: one column per real eigenvalue, Re/Im pair
        // per complex-conjugate pair.
        out.eta.resize(2 * n, 2 * n);
        int col = 0;
        for (int i = 0; i < 2 * n && col < 2 * n; ++i) {
            const auto lam = ev[order[i]];
            if (std::abs(lam.imag()) < 1e-12 * scale) {
                Eigen::VectorXd v = es.eigenvectors().col(order[i]).real();
                v.normalize();
                fix_sign(v);
                out.eta.col(col++) = v;
            } else if (lam.imag() > 0) {
                Eigen::VectorXd re = es.eigenvectors().col(order[i]).real();
                Eigen::VectorXd im = es.eigenvectors().col(order[i]).imag();
                re.normalize();
                im = (im - im.dot(re) * re).normalized();
                fix_sign(re);
                fix_sign(im);
                out.eta.col(col++) = re;
                if (col < 2 * n) out.eta.col(col++) = im;
            }
        }
        if (col != 2 * n) raise("InternalError", "failed to build a real invariant basis");
    }

    const int nstab = n;
    if (!(out.mu[nstab - 1] < 0.0 && out.mu[nstab] > 0.0 && out.mu[nstab] >= -c))
        raise("ImaginaryEigenvalue", "hyperbolic splitting violated");
    if (std::min(std::abs(out.mu[nstab - 1]), std::abs(out.mu[nstab] + c)) < 1e-10)
        raise("DegenerateSplitting", "spectral gap below 1e-10");

    auto [Qs, Rs] = thin_qr_positive(Eigen::MatrixXd(out.eta.leftCols(n)));
    auto [Qu, Ru] = thin_qr_positive(Eigen::MatrixXd(out.eta.rightCols(n)));
    out.S_frame = make_frame(J, Qs);
    out.U_frame = make_frame(J, Qu);
    return out;
}

double essential_margin(const SkewGradientSystem& system, double c, std::complex<double> lambda) {
    const KineticsEigs kin = kinetics_eigs(system);
    double margin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < system.n; ++i) {
        const std::complex<double> s = std::sqrt(c * c + 4.0 * (lambda - kin.nu_all[i]));
        margin = std::min(margin, std::abs(0.5 * (-c - s).real()));
        margin = std::min(margin, std::abs(0.5 * (-c + s).real()));
    }
    return margin;
}

ComplexAsymptotics complex_asymptotics(const SkewGradientSystem& system, double c,
                                       std::complex<double> lambda) {
    const KineticsEigs kin = kinetics_eigs(system);
    if (!kin.real_simple)
        raise("DegenerateSplitting", "complex continuation needs real simple nu");

    const int n = system.n;
    ComplexAsymptotics out;
    out.mu.resize(2 * n);
    out.eta.resize(2 * n, 2 * n);
    for (int i = 0; i < n; ++i) {
        const std::complex<double> disc = c * c + 4.0 * (lambda - kin.nu[i]);
        if (disc.real() <= 0.0)
            raise("ImaginaryEigenvalue", "sqrt branch cut crossed in complex continuation");
        const std::complex<double> s = std::sqrt(disc);
        out.mu[i] = 0.5 * (-c - s);
        out.mu[n + i] = 0.5 * (-c + s);
        const Eigen::VectorXd& w = kin.vectors.col(i);
        for (int half = 0; half < 2; ++half) {
            Eigen::VectorXcd v(2 * n);
            v.head(n) = w.cast<std::complex<double>>();
            v.tail(n) = out.mu[half * n + i] * w.cwiseQuotient(system.S).cast<std::complex<double>>();
            out.eta.col(half * n + i) = v;
        }
    }
    return out;
}

}  // namespace wavemaslov
