#include "wavemaslov/wave_solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "wavemaslov/linearization.hpp"
#include "wavemaslov/util.hpp"

namespace wavemaslov {

Eigen::VectorXd tw_rhs(const SkewGradientSystem& system, double c, const Eigen::VectorXd& y) {
    const int n = system.n;
    Eigen::VectorXd out(2 * n);
    const auto u = y.head(n);
    const auto v = y.tail(n);
    out.head(n) = system.S.cwiseProduct(v);
    out.tail(n) = -c * v - system.Q.cwiseProduct(system.f(u));
    return out;
}

Eigen::MatrixXd tw_jacobian(const SkewGradientSystem& system, double c, const Eigen::VectorXd& y) {
    return coefficient_matrix_at(system, y.head(system.n), c, 0.0);
}

namespace {

Eigen::VectorXd tw_dc(const SkewGradientSystem& system, const Eigen::VectorXd& y) {
    const int n = system.n;
    Eigen::VectorXd out = Eigen::VectorXd::Zero(2 * n);
    out.tail(n) = -y.tail(n);
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// WaveProfile interpolation

void WaveProfile::finalize() {
    const int rows = int(values.rows());
    node_derivs.resize(rows, values.cols());
    for (int i = 0; i < rows; ++i)
        node_derivs.row(i) = tw_rhs(system, c, values.row(i).transpose()).transpose();
    tail_norms = {values.row(0).norm(), values.row(rows - 1).norm()};
}

namespace {

int locate_cell(const std::vector<double>& grid, double z) {
    auto it = std::upper_bound(grid.begin(), grid.end(), z);
    int i = int(it - grid.begin()) - 1;
    return std::clamp(i, 0, int(grid.size()) - 2);
}

}  // namespace

Eigen::VectorXd WaveProfile::state_at(double z) const {
    const int m = int(values.cols());
    if (z <= grid.front() - 1e-12 || z >= grid.back() + 1e-12) return Eigen::VectorXd::Zero(m);
    const int i = locate_cell(grid, z);
    const double h = grid[i + 1] - grid[i];
    const double t = (z - grid[i]) / h;
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    return h00 * values.row(i).transpose() + (h10 * h) * node_derivs.row(i).transpose() +
           h01 * values.row(i + 1).transpose() + (h11 * h) * node_derivs.row(i + 1).transpose();
}

Eigen::VectorXd WaveProfile::u_at(double z) const { return state_at(z).head(system.n); }

Eigen::VectorXd WaveProfile::derivative_at(double z) const {
    return tw_rhs(system, c, state_at(z));
}

namespace {

// Derivative of the Hermite interpolant itself (for defect measurement).
Eigen::VectorXd interpolant_derivative(const WaveProfile& p, double z) {
    if (z <= p.grid.front() || z >= p.grid.back())
        return Eigen::VectorXd::Zero(p.values.cols());
    const int i = locate_cell(p.grid, z);
    const double h = p.grid[i + 1] - p.grid[i];
    const double t = (z - p.grid[i]) / h;
    const double d00 = (6 * t * t - 6 * t) / h, d10 = 3 * t * t - 4 * t + 1;
    const double d01 = (-6 * t * t + 6 * t) / h, d11 = 3 * t * t - 2 * t;
    return d00 * p.values.row(i).transpose() + d10 * p.node_derivs.row(i).transpose() +
           d01 * p.values.row(i + 1).transpose() + d11 * p.node_derivs.row(i + 1).transpose();
}

double interpolant_defect(const WaveProfile& p) {
    double worst = 0.0;
    for (size_t i = 0; i + 1 < p.grid.size(); ++i)
        for (double t : {0.25, 0.5, 0.75}) {
            const double z = p.grid[i] + t * (p.grid[i + 1] - p.grid[i]);
            const Eigen::VectorXd defect =
                interpolant_derivative(p, z) - tw_rhs(p.system, p.c, p.state_at(z));
            worst = std::max(worst, defect.cwiseAbs().maxCoeff());
        }
    return worst;
}

// ---------------------------------------------------------------------------
// Initial guesses

double sigma(double x) { return 1.0 / (1.0 + std::exp(-std::clamp(x, -60.0, 60.0))); }

double cubic_g(double a, double u) { return u * (1.0 - u) * (u - a); }

// Real roots of g(u) = v, sorted increasing (companion-matrix eigensolve).
std::vector<double> cubic_roots(double a, double v) {
    Eigen::Matrix3d comp = Eigen::Matrix3d::Zero();
    // monic form u^3 - (1+a) u^2 + a u + v = 0
    comp(0, 2) = -v;
    comp(1, 2) = -a;
    comp(2, 2) = 1.0 + a;
    comp(1, 0) = 1.0;
    comp(2, 1) = 1.0;
    Eigen::EigenSolver<Eigen::Matrix3d> es(comp);
    std::vector<double> roots;
    for (int i = 0; i < 3; ++i)
        if (std::abs(es.eigenvalues()[i].imag()) < 1e-9)
            roots.push_back(es.eigenvalues()[i].real());
    std::sort(roots.begin(), roots.end());
    return roots;
}

double u_branch_high(double a, double v) {
    auto r = cubic_roots(a, v);
    return r.back();
}

double u_branch_low(double a, double v) {
    auto r = cubic_roots(a, v);
    return r.front();
}

// Mesh from a density with bumps at the fast layers.
std::vector<double> stretched_grid(double L, int M, const std::vector<double>& centers,
                                   double width, double weight) {
    const int fine = 40'000;
    std::vector<double> zs(fine + 1), cum(fine + 1, 0.0);
    auto density = [&](double z) {
        double rho = 1.0;
        for (double zc : centers) {
            const double s = 1.0 / std::cosh((z - zc) / width);
            rho += weight * s * s;
        }
        return rho;
    };
    for (int i = 0; i <= fine; ++i) zs[i] = -L + 2.0 * L * i / fine;
    for (int i = 1; i <= fine; ++i)
        cum[i] = cum[i - 1] + 0.5 * (density(zs[i - 1]) + density(zs[i])) * (zs[i] - zs[i - 1]);

    std::vector<double> grid(M + 1);
    grid[0] = -L;
    grid[M] = L;
    int j = 0;
    for (int k = 1; k < M; ++k) {
        const double target = cum[fine] * k / M;
        while (j < fine && cum[j + 1] < target) ++j;
        const double w = (target - cum[j]) / (cum[j + 1] - cum[j]);
        grid[k] = zs[j] + w * (zs[j + 1] - zs[j]);
    }
    return grid;
}

struct FhnSkeleton {
    double c0, v_back, z_front, z_back, k_back, r1b, r3b;
    std::vector<double> zs, vs;  // recovery variable along the pulse
};

FhnSkeleton fhn_skeleton(const FHNParameters& p, double L) {
    FhnSkeleton s;
    s.c0 = std::sqrt(2.0) * (p.a - 0.5);
    const double r2b = (2.0 - p.a) / 3.0;  // speed-matched middle root at the back
    s.v_back = cubic_g(p.a, r2b);

    const double speed = std::abs(s.c0);
    auto slow_up = [&](double v) { return p.eps / speed * (u_branch_high(p.a, v) - p.gamma * v); };

    // Plateau length first, so the excursion can be centered at z = 0; the
    // slow recovery then gets the whole right half of the interval.
    {
        double span = 0.0, v = 0.0;
        const double dz = 0.2;
        while (v < s.v_back && span < 0.7 * L) {
            v = std::min(v + dz * slow_up(v), s.v_back);
            span += dz;
        }
        s.z_front = -0.5 * span;
    }

    // Excursion along the excited branch until the back jump is reached.
    double z = s.z_front, v = 0.0;
    const double dz = 0.2;
    s.zs.push_back(z);
    s.vs.push_back(v);
    const double z_cap = s.z_front + 1.4 * L;
    while (v < s.v_back && z < z_cap) {
        const double k1 = slow_up(v);
        const double k2 = slow_up(std::min(v + 0.5 * dz * k1, s.v_back));
        const double k3 = slow_up(std::min(v + 0.5 * dz * k2, s.v_back));
        const double k4 = slow_up(std::min(v + dz * k3, s.v_back));
        v = std::min(v + dz / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4), s.v_back);
        z += dz;
        s.zs.push_back(z);
        s.vs.push_back(v);
    }
    s.z_back = z;

    auto back_roots = cubic_roots(p.a, s.v_back);
    s.r1b = back_roots.front();
    s.r3b = back_roots.back();
    s.k_back = (s.r3b - s.r1b) / std::sqrt(2.0);

    // Recovery tail along the rest branch.
    auto slow_down = [&](double vv) {
        return p.eps / speed * (u_branch_low(p.a, vv) - p.gamma * vv);
    };
    double zt = z, vt = v;
    const double dzt = 0.5;
    while (zt < L) {
        const double k1 = slow_down(vt);
        const double k2 = slow_down(vt + 0.5 * dzt * k1);
        const double k3 = slow_down(vt + 0.5 * dzt * k2);
        const double k4 = slow_down(vt + dzt * k3);
        vt = std::max(vt + dzt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4), 0.0);
        zt += dzt;
        s.zs.push_back(zt);
        s.vs.push_back(vt);
    }
    return s;
}

double skeleton_v(const FhnSkeleton& s, double z) {
    if (z <= s.zs.front()) return 0.0;
    if (z >= s.zs.back()) return s.vs.back();
    auto it = std::upper_bound(s.zs.begin(), s.zs.end(), z);
    const size_t i = size_t(it - s.zs.begin()) - 1;
    const double w = (z - s.zs[i]) / (s.zs[i + 1] - s.zs[i]);
    return s.vs[i] + w * (s.vs[i + 1] - s.vs[i]);
}

}  // namespace

InitialGuess singular_guess(const FHNParameters& params, double L, int M) {
    const FhnSkeleton sk = fhn_skeleton(params, L);

    InitialGuess guess;
    guess.grid = stretched_grid(L, M, {sk.z_front, sk.z_back}, 3.0, 25.0);
    guess.values.resize(M + 1, 4);
    guess.c_guess = sk.c0;

    const double speed = std::abs(sk.c0);
    for (int i = 0; i <= M; ++i) {
        const double z = guess.grid[i];
        const double v = skeleton_v(sk, z);
        const double s_f = sigma((z - sk.z_front) / std::sqrt(2.0));
        const double s_b = sigma(sk.k_back * (sk.z_back - z));
        const double u =
            s_b * (s_f * u_branch_high(params.a, v)) + (1.0 - s_b) * u_branch_low(params.a, v);
        guess.values(i, 0) = u;
        guess.values(i, 1) = v;
        guess.values(i, 3) = (u - params.gamma * v) / speed;  // v' / eps
    }
    for (int i = 0; i <= M; ++i) {  // u' by centered differences
        const int lo = std::max(i - 1, 0), hi = std::min(i + 1, M);
        guess.values(i, 2) =
            (guess.values(hi, 0) - guess.values(lo, 0)) / (guess.grid[hi] - guess.grid[lo]);
    }
    return guess;
}

InitialGuess bump_guess(double a, double L, int M) {
    const double b = (1.0 + a) / 3.0;
    const double disc = b * b - a / 2.0;
    const double u_turn = 2.0 * (b - std::sqrt(disc));
    const double kappa = std::sqrt(a) / 2.0;

    InitialGuess guess;
    guess.grid = stretched_grid(L, M, {0.0}, 5.0, 3.0);
    guess.values.resize(M + 1, 2);
    guess.c_guess = 0.0;
    for (int i = 0; i <= M; ++i) {
        const double z = guess.grid[i];
        const double sech = 1.0 / std::cosh(kappa * z);
        guess.values(i, 0) = u_turn * sech * sech;
        guess.values(i, 1) = -2.0 * kappa * u_turn * sech * sech * std::tanh(kappa * z);
    }
    return guess;
}

WaveConfig default_wave_config(const SkewGradientSystem& system) {
    WaveConfig cfg;
    if (system.kind == SystemKind::fhn) {
        // Pulse core centered at z=0; the recovery tail leaves the back layer
        // on the nonlinear slow manifold, where decay is slower than the
        // asymptotic rate |mu_2| ~ eps(a*gamma+1)/(a|c|), so 1e-8 tails need
        // the right half to be ~900 units long.
        cfg.L = 1160.0;
        cfg.M = 6100;
    } else {
        cfg.L = 40.0;
        cfg.M = 2400;
    }
    return cfg;
}

InitialGuess default_guess(const SkewGradientSystem& system, const WaveConfig& config) {
    WaveConfig cfg = config;
    const WaveConfig defaults = default_wave_config(system);
    if (cfg.L <= 0) cfg.L = defaults.L;
    if (cfg.M <= 0) cfg.M = defaults.M;
    if (system.kind == SystemKind::fhn) return singular_guess(system.fhn, cfg.L, cfg.M);
    if (system.kind == SystemKind::scalar_bistable) return bump_guess(system.scalar_a, cfg.L, cfg.M);
    raise("InvalidParameter", "no default guess for custom systems");
}

// ---------------------------------------------------------------------------
// Collocation solve (Hermite-Simpson, unknown speed, projection BCs,
// integral phase condition)

namespace {

// Unknowns per node: (y, c, s) with c' = 0 (the speed, promoted to a state so
// its column stays local) and s the running trapezoid of the phase integrand
// <g', y - g>. The Jacobian is then almost-block-diagonal and a natural-order
// sparse LU factors it without fill.
struct CollocationProblem {
    const SkewGradientSystem* sys;
    std::vector<double> grid;
    Eigen::MatrixXd anchor;    // phase anchor g
    Eigen::MatrixXd anchor_d;  // g'
    Eigen::MatrixXd NL, NR;    // complements of the asymptotic frames
    int M = 0, m = 0;

    int stride() const { return m + 2; }
    int size() const { return (M + 1) * stride(); }

    Eigen::VectorXd node(const Eigen::VectorXd& X, int i) const {
        return X.segment(i * stride(), m);
    }
    double speed(const Eigen::VectorXd& X) const { return X[M * stride() + m]; }

    double phase_term(const Eigen::VectorXd& X, int i) const {
        return anchor_d.row(i).dot(node(X, i).transpose() - anchor.row(i));
    }

    // Rows in mesh order: left BC and s(-L)=0, per-interval defects plus the
    // c and s transport equations, right BC and s(L)=0.
    Eigen::VectorXd residual(const Eigen::VectorXd& X) const {
        const int n = m / 2;
        const int st = stride();
        Eigen::VectorXd F(size());
        F.segment(0, n) = NL.transpose() * node(X, 0);
        F[n] = X[m + 1];  // s(-L) = 0
        for (int i = 0; i < M; ++i) {
            const double h = grid[i + 1] - grid[i];
            const double c = X[i * st + m];
            const Eigen::VectorXd yi = node(X, i), yi1 = node(X, i + 1);
            const Eigen::VectorXd fi = tw_rhs(*sys, c, yi), fi1 = tw_rhs(*sys, c, yi1);
            const Eigen::VectorXd yhat = 0.5 * (yi + yi1) + (h / 8.0) * (fi - fi1);
            const Eigen::VectorXd fm = tw_rhs(*sys, c, yhat);
            const int row = n + 1 + i * st;
            F.segment(row, m) = yi1 - yi - (h / 6.0) * (fi + 4.0 * fm + fi1);
            F[row + m] = X[(i + 1) * st + m] - X[i * st + m];
            F[row + m + 1] = X[(i + 1) * st + m + 1] - X[i * st + m + 1] -
                             (h / 2.0) * (phase_term(X, i) + phase_term(X, i + 1));
        }
        F.segment(n + 1 + M * st, n) = NR.transpose() * node(X, M);
        F[size() - 1] = X[M * st + m + 1];  // s(L) = 0
        return F;
    }

    Eigen::SparseMatrix<double> jacobian(const Eigen::VectorXd& X) const {
        const int n = m / 2;
        const int st = stride();
        const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(m, m);
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(size_t(M) * (2 * m * m + 3 * m + 6) + 2 * m * n + 2);

        for (int r = 0; r < n; ++r)
            for (int cc = 0; cc < m; ++cc) trip.emplace_back(r, cc, NL(cc, r));
        trip.emplace_back(n, m + 1, 1.0);

        for (int i = 0; i < M; ++i) {
            const double h = grid[i + 1] - grid[i];
            const double c = X[i * st + m];
            const Eigen::VectorXd yi = node(X, i), yi1 = node(X, i + 1);
            const Eigen::VectorXd fi = tw_rhs(*sys, c, yi), fi1 = tw_rhs(*sys, c, yi1);
            const Eigen::VectorXd yhat = 0.5 * (yi + yi1) + (h / 8.0) * (fi - fi1);
            const Eigen::MatrixXd Ji = tw_jacobian(*sys, c, yi);
            const Eigen::MatrixXd Ji1 = tw_jacobian(*sys, c, yi1);
            const Eigen::MatrixXd Jm = tw_jacobian(*sys, c, yhat);

            const Eigen::MatrixXd Dl =
                -I - (h / 6.0) * (Ji + 4.0 * Jm * (0.5 * I + (h / 8.0) * Ji));
            const Eigen::MatrixXd Dr =
                I - (h / 6.0) * (Ji1 + 4.0 * Jm * (0.5 * I - (h / 8.0) * Ji1));
            const Eigen::VectorXd fci = tw_dc(*sys, yi), fci1 = tw_dc(*sys, yi1);
            const Eigen::VectorXd fch = tw_dc(*sys, yhat) + Jm * ((h / 8.0) * (fci - fci1));
            const Eigen::VectorXd Dc = -(h / 6.0) * (fci + 4.0 * fch + fci1);

            const int row = n + 1 + i * st;
            for (int r = 0; r < m; ++r) {
                for (int cc = 0; cc < m; ++cc) {
                    trip.emplace_back(row + r, i * st + cc, Dl(r, cc));
                    trip.emplace_back(row + r, (i + 1) * st + cc, Dr(r, cc));
                }
                trip.emplace_back(row + r, i * st + m, Dc[r]);
            }
            trip.emplace_back(row + m, i * st + m, -1.0);
            trip.emplace_back(row + m, (i + 1) * st + m, 1.0);
            trip.emplace_back(row + m + 1, i * st + m + 1, -1.0);
            trip.emplace_back(row + m + 1, (i + 1) * st + m + 1, 1.0);
            for (int cc = 0; cc < m; ++cc) {
                trip.emplace_back(row + m + 1, i * st + cc, -(h / 2.0) * anchor_d(i, cc));
                trip.emplace_back(row + m + 1, (i + 1) * st + cc, -(h / 2.0) * anchor_d(i + 1, cc));
            }
        }
        for (int r = 0; r < n; ++r)
            for (int cc = 0; cc < m; ++cc)
                trip.emplace_back(n + 1 + M * st + r, M * st + cc, NR(cc, r));
        trip.emplace_back(size() - 1, M * st + m + 1, 1.0);

        Eigen::SparseMatrix<double> A(size(), size());
        A.setFromTriplets(trip.begin(), trip.end());
        return A;
    }
};

Eigen::MatrixXd orthogonal_complement(const Eigen::MatrixXd& cols) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(cols);
    Eigen::MatrixXd Qfull = qr.householderQ();
    return Qfull.rightCols(cols.rows() - cols.cols());
}

// One damped-Newton solve with frozen boundary projectors. Natural ordering:
// the rows are already arranged banded-with-border, where COLAMD gets lost.
void newton_solve(CollocationProblem& prob, Eigen::VectorXd& X, double tol, int max_iterations) {
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::NaturalOrdering<int>> lu;
    Eigen::VectorXd F = prob.residual(X);
    double fn = F.cwiseAbs().maxCoeff();
    int stall = 0;

    for (int iter = 0; iter < max_iterations; ++iter) {
        if (fn < tol) return;
#ifdef WM_NEWTON_TRACE
        const auto tj0 = std::chrono::steady_clock::now();
        const auto Aj = prob.jacobian(X);
        const auto tj1 = std::chrono::steady_clock::now();
        lu.compute(Aj);
        const auto tj2 = std::chrono::steady_clock::now();
        std::fprintf(stderr, "newton iter %d residual %.3e  jac %.3fs lu %.3fs\n", iter, fn,
                     std::chrono::duration<double>(tj1 - tj0).count(),
                     std::chrono::duration<double>(tj2 - tj1).count());
#else
        lu.compute(prob.jacobian(X));
#endif
        if (lu.info() != Eigen::Success)
            raise("NonConvergence", "collocation Jacobian is singular");
        const Eigen::VectorXd dX = lu.solve(-F);
        if (!dX.allFinite()) raise("NonConvergence", "Newton step is not finite");

        double best_t = 0.0, best_fn = fn;
        Eigen::VectorXd bestF = F, bestX = X;
        for (double t : {1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125}) {
            const Eigen::VectorXd Xt = X + t * dX;
            const Eigen::VectorXd Ft = prob.residual(Xt);
            const double fnt = Ft.cwiseAbs().maxCoeff();
            if (fnt < best_fn) {
                best_t = t;
                best_fn = fnt;
                bestF = Ft;
                bestX = Xt;
            }
            if (fnt < (1.0 - 0.2 * t) * fn) break;
        }
        if (best_t == 0.0) {
            if (++stall >= 2) raise("NonConvergence", "residual stalled at " + std::to_string(fn));
        } else {
            stall = 0;
            X = bestX;
            F = bestF;
            fn = best_fn;
        }
    }
    if (fn >= tol) raise("NonConvergence", "max iterations, residual " + std::to_string(fn));
}

WaveProfile solve_once(const SkewGradientSystem& system, const InitialGuess& guess,
                       const WaveConfig& config) {
    const int m = 2 * system.n;
    const int M = int(guess.grid.size()) - 1;

    CollocationProblem prob;
    prob.sys = &system;
    prob.grid = guess.grid;
    prob.anchor = guess.values;
    prob.M = M;
    prob.m = m;
    prob.anchor_d.resize(M + 1, m);
    for (int i = 0; i <= M; ++i) {
        const int lo = std::max(i - 1, 0), hi = std::min(i + 1, M);
        prob.anchor_d.row(i) =
            (guess.values.row(hi) - guess.values.row(lo)) / (prob.grid[hi] - prob.grid[lo]);
    }

    const int st = prob.stride();
    Eigen::VectorXd X = Eigen::VectorXd::Zero(prob.size());
    for (int i = 0; i <= M; ++i) {
        X.segment(i * st, m) = guess.values.row(i).transpose();
        X[i * st + m] = guess.c_guess;  // s entries start at the exact zero
    }

    double c_frozen = guess.c_guess;
    for (int outer = 0; outer < 3; ++outer) {
        const AsymptoticSystem asym = asymptotic_system(system, c_frozen, 0.0);
        prob.NL = orthogonal_complement(asym.U_frame.columns);
        prob.NR = orthogonal_complement(asym.S_frame.columns);
        newton_solve(prob, X, config.tol, config.max_iterations);
        const double c_new = prob.speed(X);
        if (std::abs(c_new - c_frozen) < 1e-10) break;
        c_frozen = c_new;
    }

    WaveProfile prof;
    prof.system = system;
    prof.grid = prob.grid;
    prof.values.resize(M + 1, m);
    for (int i = 0; i <= M; ++i) prof.values.row(i) = X.segment(i * st, m).transpose();
    prof.c = prob.speed(X);
    prof.finalize();

    const double umax = prof.values.leftCols(system.n).cwiseAbs().maxCoeff();
    if (umax < 1e-2) raise("NonConvergence", "solution collapsed to the equilibrium");
    if (prof.c > 1e-8) raise("NonConvergence", "converged to positive speed c=" + std::to_string(prof.c));
    if (std::max(prof.tail_norms[0], prof.tail_norms[1]) > config.tail_tol) {
        std::ostringstream msg;
        msg << "tails " << prof.tail_norms[0] << ", " << prof.tail_norms[1] << " exceed "
            << config.tail_tol << "; increase L";
        raise("TailTooFat", msg.str());
    }
    prof.residual = interpolant_defect(prof);
    return prof;
}

}  // namespace

WaveProfile solve_wave(const SkewGradientSystem& system, const InitialGuess& guess,
                       const WaveConfig& config) {
    require_turing(system);
    if (int(guess.grid.size()) != guess.values.rows() || guess.values.cols() != 2 * system.n)
        raise("InvalidParameter", "guess shape does not match the system");
    if (guess.values.cwiseAbs().maxCoeff() < 1e-3)
        raise("NonConvergence", "guess is (numerically) the trivial state");

    try {
        return solve_once(system, guess, config);
    } catch (const Error& e) {
        if (!config.allow_continuation || system.kind != SystemKind::fhn ||
            e.code() != "NonConvergence" || system.fhn.eps >= 0.02)
            throw;
    }

    // eps ladder: solve a gentler problem on the target mesh and walk eps down.
    const double eps_target = system.fhn.eps;
    const double eps_start = 0.02;
    const int rungs = std::max(2, int(std::ceil(std::log(eps_start / eps_target) / std::log(2.5))));

    Eigen::MatrixXd warm_values;
    double warm_c = guess.c_guess;
    for (int k = 0; k <= rungs; ++k) {
        const double t = double(k) / rungs;
        FHNParameters p = system.fhn;
        p.eps = eps_start * std::pow(eps_target / eps_start, t);
        if (k == rungs) p.eps = eps_target;
        const SkewGradientSystem rung_sys = (k == rungs) ? system : make_fhn(p);

        InitialGuess rung_guess;
        rung_guess.grid = guess.grid;
        if (k == 0) {
            const FhnSkeleton sk = fhn_skeleton(p, guess.grid.back());
            InitialGuess fresh = singular_guess(p, guess.grid.back(), int(guess.grid.size()) - 1);
            rung_guess.values = fresh.values;  // same mesh family, fresh values
            rung_guess.grid = fresh.grid;
            warm_c = sk.c0;
        } else {
            rung_guess.values = warm_values;
        }
        rung_guess.c_guess = warm_c;

        WaveConfig rung_cfg = config;
        if (k < rungs) {
            rung_cfg.tol = std::max(config.tol, 1e-8);
            rung_cfg.tail_tol = 1.0;  // intermediate rungs may have fat tails
        }
        const WaveProfile prof = solve_once(rung_sys, rung_guess, rung_cfg);
        if (k == rungs) return prof;

        // reuse the solution on the target mesh
        if (k == 0 && rung_guess.grid != guess.grid) {
            warm_values.resize(guess.values.rows(), guess.values.cols());
            for (int i = 0; i < guess.values.rows(); ++i)
                warm_values.row(i) = prof.state_at(guess.grid[i]).transpose();
        } else {
            warm_values = prof.values;
        }
        warm_c = prof.c;
    }
    raise("NonConvergence", "continuation ladder failed");
}

}  // namespace wavemaslov
