#include "wavemaslov/maslov_index.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "wavemaslov/util.hpp"

namespace wavemaslov {

int crossing_contribution(const SignatureResult& sig, CrossingRecord::Position pos) {
    switch (pos) {
        case CrossingRecord::Position::interior: return sig.n_plus - sig.n_minus;
        case CrossingRecord::Position::left_endpoint: return -sig.n_minus;
        case CrossingRecord::Position::right_endpoint: return sig.n_plus;
    }
    return 0;
}

namespace {

double span_residual(const Eigen::MatrixXd& frame, Eigen::VectorXd v) {
    const double nrm = v.norm();
    if (nrm == 0.0) return 0.0;
    v /= nrm;
    return (v - frame * (frame.transpose() * v)).norm();
}

// Signature tolerance for a z-crossing form: noise enters through the
// intersection basis, scaled by the coefficient matrix.
double form_tolerance(const Eigen::MatrixXd& A) {
    return 1e-8 * std::max(1.0, A.cwiseAbs().maxCoeff());
}

}  // namespace

double select_tau(const SkewGradientSystem& system, const WaveProfile& profile,
                  const std::vector<double>& lambda_grid,
                  const std::vector<BundleTrajectory>& stable_tracks,
                  const BundleTrajectory& unstable_at_zero, double margin, double membership_tol,
                  std::optional<double> tail_tol) {
    const Eigen::MatrixXd J = complex_structure_matrix(system.Q);
    const int nodes = int(profile.grid.size());

    // Last cell (per lambda) where the transversality of U(lambda) against
    // E^s(lambda, .) fails, by margin or by a sign change between nodes (a
    // sign change means a zero sits inside the cell whatever the node values).
    int last_bad = -1;
    for (size_t l = 0; l < lambda_grid.size(); ++l) {
        const AsymptoticSystem asym = asymptotic_system(system, profile.c, lambda_grid[l]);
        double prev = 0.0;
        for (int k = 0; k < nodes; ++k) {
            const double det =
                detection(J, asym.U_frame.columns, stable_tracks[l].frames[k]);
            if (std::abs(det) <= margin || (k > 0 && prev * det < 0.0))
                last_bad = std::max(last_bad, k);
            prev = det;
        }
    }

    for (int k = last_bad + 1; k < nodes - 1; ++k) {
        const Eigen::VectorXd dphi = profile.derivative_at(profile.grid[k]);
        if (span_residual(unstable_at_zero.frames[k], dphi) > membership_tol) continue;
        if (tail_tol && profile.values.row(k).norm() > *tail_tol) continue;
        return profile.grid[k];
    }
    raise("NoValidTau",
          "no grid point satisfies the transversality and membership conditions; increase L");
}

double select_lambda_max(const SkewGradientSystem& system, const WaveProfile& profile,
                         double margin, const TrackOptions& track_opts) {
    double bound = 0.0;
    for (double z : profile.grid) {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(system.kinetics_matrix(profile.u_at(z)));
        bound = std::max(bound, svd.singularValues()[0]);
    }
    double lambda = profile.c * profile.c / 4.0 + bound + 1.0;

    const Eigen::MatrixXd J = complex_structure_matrix(system.Q);
    for (int attempt = 0; attempt < 10; ++attempt) {
        const AsymptoticSystem asym = asymptotic_system(system, profile.c, lambda);
        const BundleTrajectory traj = track_side(system, profile, Side::unstable, lambda, track_opts);
        double worst = std::numeric_limits<double>::infinity();
        double prev = 0.0;
        for (size_t k = 0; k < traj.frames.size(); ++k) {
            const double det = detection(J, traj.frames[k], asym.S_frame.columns);
            worst = std::min(worst, std::abs(det));
            if (k > 0 && prev * det < 0.0) worst = 0.0;
            prev = det;
        }
        if (worst > margin) return lambda;
        lambda *= 2.0;
    }
    raise("ShelfNotFound", "no transversality certificate after 10 doublings");
}

Eigenfunction extract_eigenfunction(const SkewGradientSystem& system, const WaveProfile& profile,
                                    const BundleTrajectory& unstable,
                                    const BundleTrajectory& stable, double tau,
                                    const Eigen::VectorXd& xi) {
    (void)system;
    const int kt = unstable.index_of(tau);
    const BundleSolution left = solution_through(unstable, kt, xi);
    const BundleSolution right = solution_through(stable, kt, xi);

    Eigenfunction ef;
    ef.z = profile.grid;
    ef.xi = xi.normalized();
    const int nodes = int(profile.grid.size());
    ef.unit.resize(nodes);
    ef.lognorm.resize(nodes);
    for (int k = 0; k < nodes; ++k) {
        if (k <= kt) {
            ef.unit[k] = left.unit[k];
            ef.lognorm[k] = left.lognorm[k];
        } else {
            ef.unit[k] = right.unit[k];
            ef.lognorm[k] = right.lognorm[k];
        }
    }
    return ef;
}

namespace {

struct CrossingScanner {
    const SkewGradientSystem& sys;
    const WaveProfile& prof;
    const BundleTrajectory& moving;
    Eigen::MatrixXd reference;
    Eigen::MatrixXd J;
    const BoxOptions& opts;

    double det_at_node(int k) const { return detection(J, moving.frames[k], reference); }
    double det_at(double z) const {
        return detection(J, frame_at(sys, prof, moving, z, opts.track), reference);
    }
};

CrossingRecord build_z_record(const SkewGradientSystem& sys, const WaveProfile& prof,
                              const Eigen::MatrixXd& J, double z_star,
                              const std::vector<Eigen::VectorXd>& basis,
                              CrossingRecord::Position pos) {
    const Eigen::MatrixXd A = coefficient_matrix(sys, prof, 0.0, z_star);
    const int dim = int(basis.size());
    Eigen::MatrixXd form(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) {
            const double wij = omega(J, basis[i], A * basis[j]);
            const double wji = omega(J, basis[j], A * basis[i]);
            form(i, j) = 0.5 * (wij + wji);
        }

    CrossingRecord rec;
    rec.kind = CrossingRecord::Kind::z_crossing;
    rec.position = pos;
    rec.location = z_star;
    rec.dim = dim;
    rec.form = form;
    rec.sig = signature(form, form_tolerance(A));
    rec.contribution = crossing_contribution(rec.sig, pos);
    return rec;
}

}  // namespace

std::vector<CrossingRecord> z_crossings(const SkewGradientSystem& system,
                                        const WaveProfile& profile,
                                        const BundleTrajectory& unstable,
                                        const BundleTrajectory& stable, double tau,
                                        const BoxOptions& opts) {
    const Eigen::MatrixXd J = complex_structure_matrix(system.Q);
    const int kt = unstable.index_of(tau);
    CrossingScanner scan{system, profile, unstable, stable.frames[kt], J, opts};

    // Left endpoint must be transverse (the compactified z = -inf end).
    if (std::abs(scan.det_at_node(0)) <= opts.margin)
        raise("ShelfViolated", "U(0) is not transverse to the reference plane at z=-L");

    std::vector<CrossingRecord> records;
    std::vector<double> roots;

    double prev = scan.det_at_node(0);
    for (int k = 1; k <= kt; ++k) {
        const double cur = scan.det_at_node(k);
        const double za = unstable.grid[k - 1], zb = unstable.grid[k];
        const bool at_corner = (k == kt);
        if (prev * cur < 0.0 && !(at_corner && std::abs(cur) < 1e-6)) {
            const double z_star =
                bisect([&](double z) { return scan.det_at(z); }, za, zb, prev, opts.bisect_tol_z);
            if (!at_corner || tau - z_star > 1e-6 * (1.0 + std::abs(tau))) roots.push_back(z_star);
        } else if (k + 1 <= kt && std::abs(cur) < 1e-8 && std::abs(prev) >= 1e-8) {
            // touching zero without a sign change: even-dimensional candidate
            const auto basis = intersection_basis(unstable.frames[k], scan.reference, 1e-6);
            if (!basis.empty()) roots.push_back(unstable.grid[k]);
        }
        prev = cur;
    }

    std::sort(roots.begin(), roots.end());
    for (size_t i = 0; i + 1 < roots.size(); ++i)
        if (roots[i + 1] - roots[i] < 1e-6)
            raise("ClusteredRoots", "z-crossings closer than 1e-6 near z=" +
                                        std::to_string(roots[i]));

    for (double z_star : roots) {
        const Eigen::MatrixXd F = frame_at(system, profile, unstable, z_star, opts.track);
        const auto basis = intersection_basis(F, scan.reference, 1e-6);
        if (basis.empty()) continue;  // grazing touch, no actual intersection
        records.push_back(build_z_record(system, profile, J, z_star, basis,
                                         CrossingRecord::Position::interior));
    }

    // The tau endpoint always carries the translation crossing.
    {
        Eigen::VectorXd dphi = profile.derivative_at(tau).normalized();
        auto basis = intersection_basis(unstable.frames[kt], scan.reference,
                                        std::max(1e-6, 10 * span_residual(unstable.frames[kt],
                                                                          dphi)));
        if (basis.empty()) basis.push_back(dphi);
        records.push_back(build_z_record(system, profile, J, unstable.grid[kt], basis,
                                         CrossingRecord::Position::right_endpoint));
    }
    return records;
}

int maslov_of_wave(const std::vector<CrossingRecord>& crossings) {
    int total = 0;
    for (const auto& rec : crossings) {
        if (rec.sig.n_zero > 0)
            raise("IrregularCrossing", "degenerate crossing form at location " +
                                           std::to_string(rec.location));
        total += rec.contribution;
    }
    return total;
}

namespace {

// Trapezoid weights on the profile grid.
std::vector<double> trapezoid_weights(const std::vector<double>& grid) {
    std::vector<double> w(grid.size(), 0.0);
    for (size_t i = 0; i + 1 < grid.size(); ++i) {
        const double h = grid[i + 1] - grid[i];
        w[i] += h / 2;
        w[i + 1] += h / 2;
    }
    return w;
}

// log of int e^{cz} |P|^2 dz for a log-scaled eigenfunction.
double log_weighted_norm2(const Eigenfunction& ef, double c, const std::vector<double>& w) {
    double top = -std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < ef.z.size(); ++k)
        top = std::max(top, c * ef.z[k] + 2 * ef.lognorm[k]);
    double acc = 0.0;
    for (size_t k = 0; k < ef.z.size(); ++k) {
        const double e = c * ef.z[k] + 2 * ef.lognorm[k] - top;
        if (e > -700.0) acc += w[k] * std::exp(e) * ef.unit[k].squaredNorm();
    }
    return top + std::log(acc);
}

}  // namespace

CrossingRecord lambda_crossing_form(const SkewGradientSystem& system, const WaveProfile& profile,
                                    const BundleTrajectory& unstable,
                                    const BundleTrajectory& stable, double lambda_star, double tau,
                                    CrossingRecord::Position position) {
    const Eigen::MatrixXd J = complex_structure_matrix(system.Q);
    const Eigen::MatrixXd Al = lambda_derivative(system);
    const int kt = unstable.index_of(tau);

    std::vector<Eigen::VectorXd> basis =
        intersection_basis(unstable.frames[kt], stable.frames[kt], 1e-6);
    if (basis.empty() && std::abs(lambda_star) < 1e-8)
        basis.push_back(profile.derivative_at(tau).normalized());
    if (basis.empty())
        raise("InternalError", "no intersection at the reported lambda crossing " +
                                   std::to_string(lambda_star));

    const int dim = int(basis.size());
    const auto w = trapezoid_weights(profile.grid);
    const double c = profile.c;

    // Normalized eigenfunctions: int e^{cz} |P|^2 = 1, done in log scale.
    std::vector<Eigenfunction> efs;
    efs.reserve(dim);
    for (const auto& xi : basis) {
        Eigenfunction ef = extract_eigenfunction(system, profile, unstable, stable, tau, xi);
        const double shift = 0.5 * log_weighted_norm2(ef, c, w);
        for (double& l : ef.lognorm) l -= shift;
        efs.push_back(std::move(ef));
    }

    Eigen::MatrixXd form(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = i; j < dim; ++j) {
            double acc = 0.0;
            for (size_t k = 0; k < profile.grid.size(); ++k) {
                const double e = c * profile.grid[k] + efs[i].lognorm[k] + efs[j].lognorm[k];
                if (e < -700.0) continue;
                const double wij = omega(J, efs[i].unit[k], Al * efs[j].unit[k]);
                const double wji = omega(J, efs[j].unit[k], Al * efs[i].unit[k]);
                acc += w[k] * std::exp(e) * 0.5 * (wij + wji);
            }
            form(i, j) = acc;
            form(j, i) = acc;
        }

    CrossingRecord rec;
    rec.kind = CrossingRecord::Kind::lambda_crossing;
    rec.position = position;
    rec.location = lambda_star;
    rec.dim = dim;
    rec.form = form;
    rec.sig = signature(form, 1e-8);
    rec.contribution = crossing_contribution(rec.sig, position);
    return rec;
}

BoxResult maslov_box(const SkewGradientSystem& system, const WaveProfile& profile,
                     const BoxOptions& opts) {
    require_turing(system);
    const Eigen::MatrixXd J = complex_structure_matrix(system.Q);

    BoxResult box;
    box.lambda_max = opts.lambda_max_override > 0.0
                         ? opts.lambda_max_override
                         : select_lambda_max(system, profile, opts.margin, opts.track);

    // Stable tracks over the certificate grid, unstable at lambda = 0.
    const std::vector<double> lam_grid = linspace(0.0, box.lambda_max, opts.tau_grid_points);
    std::vector<BundleTrajectory> stables(lam_grid.size());
    parallel_for(int(lam_grid.size()), opts.threads, [&](int i) {
        stables[i] = track_side(system, profile, Side::stable, lam_grid[i], opts.track);
    });
    const BundleTrajectory uu0 = track_side(system, profile, Side::unstable, 0.0, opts.track);

    box.tau = select_tau(system, profile, lam_grid, stables, uu0, opts.margin,
                         opts.membership_tol, opts.tau_tail_tol);
    const int kt = uu0.index_of(box.tau);

    // alpha_1: z-sweep at lambda = 0.
    box.crossings[0] = z_crossings(system, profile, uu0, stables[0], box.tau, opts);
    box.mu[0] = maslov_of_wave(box.crossings[0]);
    box.maslov = box.mu[0];

    // alpha_2: lambda sweep of E^u(.,tau) against E^s(.,tau).
    const std::vector<double> scan = linspace(0.0, box.lambda_max, opts.lambda_scan_points);
    std::vector<double> dets(scan.size());
    std::vector<BundleTrajectory> scan_u(scan.size()), scan_s(scan.size());
    parallel_for(int(scan.size()), opts.threads, [&](int i) {
        scan_u[i] = i == 0 ? uu0 : track_side(system, profile, Side::unstable, scan[i], opts.track);
        scan_s[i] = i == 0 ? stables[0]
                           : track_side(system, profile, Side::stable, scan[i], opts.track);
        dets[i] = detection(J, scan_u[i].frames[kt], scan_s[i].frames[kt]);
    });

    auto det_at_lambda = [&](double lam) {
        const BundleTrajectory u = track_side(system, profile, Side::unstable, lam, opts.track);
        const BundleTrajectory s = track_side(system, profile, Side::stable, lam, opts.track);
        return detection(J, u.frames[kt], s.frames[kt]);
    };

    std::vector<double> roots;
    for (size_t i = 2; i < scan.size(); ++i) {
        if (dets[i - 1] * dets[i] < 0.0) {
            roots.push_back(bisect(det_at_lambda, scan[i - 1], scan[i], dets[i - 1],
                                   opts.bisect_tol_lambda));
        } else if (i + 1 < scan.size() && std::abs(dets[i]) < 1e-8 &&
                   std::abs(dets[i - 1]) >= 1e-8 && std::abs(dets[i + 1]) >= 1e-8) {
            const auto basis =
                intersection_basis(scan_u[i].frames[kt], scan_s[i].frames[kt], 1e-6);
            if (!basis.empty()) roots.push_back(scan[i]);
        }
    }
    for (size_t i = 0; i + 1 < roots.size(); ++i)
        if (roots[i + 1] - roots[i] < 1e-6)
            raise("ClusteredRoots", "lambda crossings closer than 1e-6");

    box.crossings[1].push_back(lambda_crossing_form(system, profile, uu0, stables[0], 0.0,
                                                    box.tau,
                                                    CrossingRecord::Position::left_endpoint));
    for (double lam : roots) {
        const BundleTrajectory u = track_side(system, profile, Side::unstable, lam, opts.track);
        const BundleTrajectory s = track_side(system, profile, Side::stable, lam, opts.track);
        box.crossings[1].push_back(lambda_crossing_form(system, profile, u, s, lam, box.tau,
                                                        CrossingRecord::Position::interior));
    }
    box.mu[1] = 0;
    for (const auto& rec : box.crossings[1]) box.mu[1] += rec.contribution;

    // alpha_3: right shelf at lambda_max, reference E^s(lambda_max, tau).
    {
        const BundleTrajectory u =
            track_side(system, profile, Side::unstable, box.lambda_max, opts.track);
        const BundleTrajectory s =
            track_side(system, profile, Side::stable, box.lambda_max, opts.track);
        double worst = std::numeric_limits<double>::infinity();
        double prev = 0.0;
        for (int k = 0; k <= kt; ++k) {
            const double det = detection(J, u.frames[k], s.frames[kt]);
            worst = std::min(worst, std::abs(det));
            if (k > 0 && prev * det < 0.0) worst = 0.0;
            prev = det;
        }
        box.alpha3_margin = worst;
        if (worst <= opts.margin)
            raise("ShelfViolated", "conjugate point on the lambda_max edge (margin " +
                                       std::to_string(worst) + ")");
        box.mu[2] = 0;
    }

    // alpha_4: bottom edge (U(lambda), E^s(lambda, tau)).
    {
        double worst = std::numeric_limits<double>::infinity();
        double prev = 0.0;
        for (size_t l = 0; l < lam_grid.size(); ++l) {
            const AsymptoticSystem asym = asymptotic_system(system, profile.c, lam_grid[l]);
            const double det = detection(J, asym.U_frame.columns, stables[l].frames[kt]);
            worst = std::min(worst, std::abs(det));
            if (l > 0 && prev * det < 0.0) worst = 0.0;
            prev = det;
        }
        box.alpha4_margin = worst;
        if (worst <= opts.margin)
            raise("ShelfViolated", "conjugate point on the z=-inf edge (margin " +
                                       std::to_string(worst) + ")");
        box.mu[3] = 0;
    }

    // Corner diagnostic: angle between the tau intersection and phi'(tau).
    {
        const auto basis = intersection_basis(uu0.frames[kt], stables[0].frames[kt],
                                              std::max(1e-6, 10 * opts.membership_tol));
        if (!basis.empty()) {
            const Eigen::VectorXd dphi = profile.derivative_at(box.tau).normalized();
            double best = 0.0;
            for (const auto& v : basis) best = std::max(best, std::abs(v.dot(dphi)));
            box.corner_alignment = std::acos(std::clamp(best, 0.0, 1.0));
        }
    }

    box.sum_ok = (box.mu[0] + box.mu[1] + box.mu[2] + box.mu[3]) == 0;
    return box;
}

}  // namespace wavemaslov
