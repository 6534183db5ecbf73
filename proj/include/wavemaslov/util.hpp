#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace wavemaslov {

inline std::vector<double> linspace(double lo, double hi, int count) {
    std::vector<double> out(count);
    for (int i = 0; i < count; ++i)
        out[i] = count == 1 ? lo : lo + (hi - lo) * double(i) / double(count - 1);
    return out;
}

// Thin QR with the R diagonal forced positive, so Q is the unique
// orientation-preserving orthonormal representative of the column span.
template <class Mat>
std::pair<Mat, Mat> thin_qr_positive(const Mat& M) {
    using Scalar = typename Mat::Scalar;
    Eigen::HouseholderQR<Mat> qr(M);
    Mat Q = qr.householderQ() * Mat::Identity(M.rows(), M.cols());
    Mat R = Q.adjoint() * M;
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
        const Scalar d = R(j, j);
        const double mag = std::abs(d);
        const Scalar phase = mag > 0 ? d / Scalar(mag) : Scalar(1);
        Q.col(j) *= phase;
        R.row(j) *= (Scalar(1) / phase);
    }
    return {std::move(Q), std::move(R)};
}

// Deterministic worker pool: iteration i always lands in slot i.
inline void parallel_for(int count, int threads, const std::function<void(int)>& body) {
    if (threads <= 1 || count <= 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    const int workers = std::min(threads, count);
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&]() {
            for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) body(i);
        });
    for (auto& t : pool) t.join();
}

// Bisection on a bracketing interval; f(lo) and f(hi) must differ in sign.
inline double bisect(const std::function<double(double)>& f, double lo, double hi, double flo,
                     double xtol, int max_iter = 200) {
    for (int i = 0; i < max_iter && (hi - lo) > xtol; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0) == (flo > 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace wavemaslov
