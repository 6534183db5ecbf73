#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>

#include <Eigen/Dense>

#include "wavemaslov/errors.hpp"

namespace wavemaslov {

struct OdeOptions {
    double rtol = 1e-10;
    double atol = 1e-12;
    double h_max = 1.0;
    std::int64_t max_steps = 40'000'000;
};

// Dormand-Prince 5(4) with PI step control. State is any Eigen matrix/vector
// type (real or complex); Rhs is callable as rhs(z, y, dydz).
template <class State, class Rhs>
class DormandPrince {
public:
    DormandPrince(Rhs rhs, OdeOptions opts = {}) : rhs_(std::forward<Rhs>(rhs)), opts_(opts) {}

    // Advance y from `from` to `to` (either direction). Keeps the step size
    // between calls so chained node-to-node integration stays efficient.
    void advance(State& y, double from, double to) {
        const double span = to - from;
        if (span == 0.0) return;
        const double dir = span > 0 ? 1.0 : -1.0;

        if (h_ == 0.0 || last_dir_ != dir) h_ = dir * std::min(opts_.h_max, 1e-4 * std::abs(span) + 1e-8);
        last_dir_ = dir;

        double z = from;
        State k1(y.rows(), y.cols());
        if (have_fsal_ && fsal_z_ == z) {
            k1 = fsal_;
        } else {
            rhs_(z, y, k1);
        }

        State k2 = k1, k3 = k1, k4 = k1, k5 = k1, k6 = k1, k7 = k1;
        State ytmp = y, y5 = y;

        while (dir * (to - z) > 0.0) {
            double h = dir * std::min(std::abs(h_), opts_.h_max);
            if (dir * (z + h - to) > 0.0) h = to - z;

            bool accepted = false;
            for (int attempt = 0; attempt < 64 && !accepted; ++attempt) {
                if (++steps_ > opts_.max_steps) raise("StepFailure", "step budget exhausted");

                ytmp = y + (h * a21) * k1;
                rhs_(z + c2 * h, ytmp, k2);
                ytmp = y + h * (a31 * k1 + a32 * k2);
                rhs_(z + c3 * h, ytmp, k3);
                ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
                rhs_(z + c4 * h, ytmp, k4);
                ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
                rhs_(z + c5 * h, ytmp, k5);
                ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
                rhs_(z + h, ytmp, k6);
                y5 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
                rhs_(z + h, y5, k7);

                // embedded 4th-order error estimate
                ytmp = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
                const double err = error_norm(ytmp, y, y5);

                if (err <= 1.0 || std::abs(h) <= 1e-14 * (1.0 + std::abs(z))) {
                    z += h;
                    y.swap(y5);
                    k1 = k7;
                    const double fac = std::clamp(0.9 * std::pow(std::max(err, 1e-10), -0.2), 0.2, 5.0);
                    h_ = dir * std::min(std::abs(h) * fac, opts_.h_max);
                    accepted = true;
                } else {
                    h *= std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.5);
                    if (std::abs(h) < 1e-15 * (1.0 + std::abs(z)))
                        raise("StepFailure", "step size underflow at z=" + std::to_string(z));
                }
            }
            if (!accepted) raise("StepFailure", "no acceptable step at z=" + std::to_string(z));
        }

        fsal_ = k1;
        fsal_z_ = z;
        have_fsal_ = true;
    }

    void reset_step() {
        h_ = 0.0;
        have_fsal_ = false;
    }

    // Call after mutating the state between advances (e.g. renormalization);
    // the cached end-point derivative no longer matches.
    void invalidate_fsal() { have_fsal_ = false; }

    std::int64_t steps() const { return steps_; }

private:
    double error_norm(const State& err, const State& y0, const State& y1) const {
        double acc = 0.0;
        const auto ae = err.cwiseAbs().eval();
        const auto a0 = y0.cwiseAbs().eval();
        const auto a1 = y1.cwiseAbs().eval();
        for (Eigen::Index j = 0; j < err.cols(); ++j)
            for (Eigen::Index i = 0; i < err.rows(); ++i) {
                const double sc = opts_.atol + opts_.rtol * std::max(a0(i, j), a1(i, j));
                const double q = ae(i, j) / sc;
                acc += q * q;
            }
        return std::sqrt(acc / double(err.size()));
    }

    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    Rhs rhs_;
    OdeOptions opts_;
    double h_ = 0.0;
    double last_dir_ = 0.0;
    std::int64_t steps_ = 0;
    State fsal_;
    double fsal_z_ = 0.0;
    bool have_fsal_ = false;
};

template <class State, class Rhs>
DormandPrince<State, Rhs> make_integrator(Rhs rhs, OdeOptions opts = {}) {
    return DormandPrince<State, Rhs>(std::move(rhs), opts);
}

}  // namespace wavemaslov
