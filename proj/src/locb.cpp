// SPDX-License-Identifier: Apache-2.0
#include "cartography/locb.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <spdlog/spdlog.h>

namespace cartography
{
    AnchorSet::AnchorSet(std::vector<Point2D> positions) : positions_(std::move(positions))
    {
        if (positions_.size() < 3)
            throw ConfigError("2-D localization needs at least three anchors");
        bool spread = false;
        for (std::size_t i = 2; i < positions_.size() && !spread; ++i)
        {
            const Point2D u = positions_[1] - positions_[0];
            const Point2D v = positions_[i] - positions_[0];
            spread = std::abs(u.cross(v)) > 1e-9 * (u.norm() * v.norm() + 1e-300);
        }
        if (!spread)
            throw ConfigError("anchors are collinear");
    }

    AnchorSet AnchorSet::from_scenario(const Scenario &scenario)
    {
        std::vector<Point2D> pos;
        for (const auto &t : scenario.transmitters())
            pos.push_back(t.position);
        return AnchorSet(std::move(pos));
    }

    Eigen::VectorXd tdoa_feature_set(const PilotMatrix &pilot, double sample_period)
    {
        const Eigen::Index L = pilot.num_transmitters();
        if (L < 2)
            throw InputError("range differences need at least two pilots");
        Eigen::VectorXd out(L - 1);
        const Eigen::VectorXcd ref = estimate_impulse_response(pilot.samples.row(0).transpose());
        for (Eigen::Index l = 1; l < L; ++l)
        {
            const auto c = cross_correlate(ref, estimate_impulse_response(pilot.samples.row(l).transpose()));
            const auto d = estimate_tdoa(c, sample_period);
            out[l - 1] = d ? speed_of_light * *d : missing_value;
        }
        return out;
    }

    namespace
    {
        // Rows: 2 (a_l - a_0)^T x - 2 g_l r_0 = ||a_l||^2 - ||a_0||^2 - g_l^2
        struct LinearSystem
        {
            Eigen::MatrixXd a; // n x 3, unknowns (x, y, r_0)
            Eigen::VectorXd b;
        };

        LinearSystem build_system(const AnchorSet &anchors, const Eigen::VectorXd &range_diffs)
        {
            const auto &pos = anchors.positions();
            const Point2D a0 = pos[0];
            std::vector<Eigen::Index> usable;
            for (Eigen::Index l = 0; l < range_diffs.size(); ++l)
                if (std::isfinite(range_diffs[l]))
                    usable.push_back(l);

            LinearSystem sys{Eigen::MatrixXd(usable.size(), 3), Eigen::VectorXd(usable.size())};
            for (std::size_t i = 0; i < usable.size(); ++i)
            {
                const Point2D al = pos[usable[i] + 1];
                const double g = range_diffs[usable[i]];
                sys.a.row(i) << 2.0 * (al.x - a0.x), 2.0 * (al.y - a0.y), -2.0 * g;
                sys.b[i] = al.dot(al) - a0.dot(a0) - g * g;
            }
            return sys;
        }

        Point2D centroid(const AnchorSet &anchors)
        {
            Point2D c{0.0, 0.0};
            for (const auto &p : anchors.positions())
                c = c + p;
            return c * (1.0 / static_cast<double>(anchors.size()));
        }

        // When the x-block alone has full column rank but (x, r_0) does not, or with
        // only two equations, x is affine in r_0 and ||x - a_0|| = r_0 gives a quadratic.
        std::optional<LocationEstimate> solve_affine(const AnchorSet &anchors, const LinearSystem &sys)
        {
            Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sys.a.leftCols(2));
            qr.setThreshold(1e-10);
            if (qr.rank() < 2)
                return std::nullopt;
            const Eigen::Vector2d u = qr.solve(sys.b);
            const Eigen::Vector2d v = -qr.solve(Eigen::VectorXd(sys.a.col(2)));
            const Point2D a0 = anchors.positions()[0];
            const Eigen::Vector2d w = u - Eigen::Vector2d(a0.x, a0.y);

            const double qa = v.squaredNorm() - 1.0;
            const double qb = 2.0 * v.dot(w);
            const double qc = w.squaredNorm();
            std::vector<double> roots;
            if (std::abs(qa) < 1e-12)
            {
                if (qb != 0.0)
                    roots.push_back(-qc / qb);
            }
            else
            {
                const double disc = qb * qb - 4.0 * qa * qc;
                if (disc >= 0.0)
                {
                    const double s = std::sqrt(disc);
                    roots.push_back((-qb + s) / (2.0 * qa));
                    roots.push_back((-qb - s) / (2.0 * qa));
                }
                else
                    roots.push_back(-qb / (2.0 * qa)); // closest approach under noise
            }

            const Point2D mid = centroid(anchors);
            std::optional<LocationEstimate> best;
            double best_dist = 0.0;
            for (double r0 : roots)
            {
                if (!(r0 >= 0.0) || !std::isfinite(r0))
                    continue;
                const Eigen::Vector2d x = u + v * r0;
                const Point2D p{x[0], x[1]};
                const double d = distance(p, mid);
                if (!best || d < best_dist)
                {
                    best = LocationEstimate{p, (sys.a * Eigen::Vector3d(x[0], x[1], r0) - sys.b).squaredNorm()};
                    best_dist = d;
                }
            }
            return best;
        }
    } // namespace

    namespace
    {
        // Weighted LS over (x, y, r_0) subject to r_0 = ||x - a_0||: with a_0 at the
        // origin the constraint is t^T D t = 0, D = diag(1, 1, -1). The minimizer is
        // t(nu) = (A^T W A + nu D)^-1 A^T W b for the root of t^T D t, which is
        // monotone on the interval keeping the matrix positive definite.
        std::optional<Eigen::Vector3d> constrained_solve(const Eigen::MatrixXd &a, const Eigen::VectorXd &b,
                                                         const Eigen::VectorXd &w)
        {
            const Eigen::Matrix3d h = a.transpose() * w.asDiagonal() * a;
            const Eigen::Vector3d g = a.transpose() * w.asDiagonal() * b;
            const Eigen::Vector3d d(1.0, 1.0, -1.0);

            Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eh(h);
            if (!(eh.eigenvalues().minCoeff() > 0.0))
                return std::nullopt;
            const Eigen::Matrix3d hinv_sqrt = eh.operatorInverseSqrt();
            Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eg(hinv_sqrt * d.asDiagonal() * hinv_sqrt);
            const double mu_max = eg.eigenvalues().maxCoeff();
            const double mu_min = eg.eigenvalues().minCoeff();

            const auto solve = [&](double nu) -> Eigen::Vector3d {
                Eigen::Matrix3d m = h;
                m.diagonal() += nu * d;
                return m.ldlt().solve(g);
            };
            const auto phi = [&](const Eigen::Vector3d &t) { return t.dot(d.cwiseProduct(t)); };

            const Eigen::Vector3d t0 = solve(0.0);
            const double f0 = phi(t0);
            if (std::abs(f0) <= 1e-12 * std::max(1.0, t0.squaredNorm()) && t0[2] >= 0.0)
                return t0;

            // Feasible multipliers lie in (-1/mu_max, -1/mu_min); phi decreases on it.
            double lo = -1.0 / mu_max;
            double hi = -1.0 / mu_min;
            if (f0 > 0.0)
                lo = 0.0;
            else
                hi = 0.0;
            Eigen::Vector3d best = t0;
            for (int it = 0; it < 200; ++it)
            {
                const double nu = 0.5 * (lo + hi);
                const Eigen::Vector3d t = solve(nu);
                if (!t.allFinite())
                    break;
                best = t;
                const double f = phi(t);
                if (f > 0.0)
                    lo = nu;
                else
                    hi = nu;
                if (hi - lo <= 1e-15 * std::max(1.0, std::abs(nu)))
                    break;
            }
            if (!best.allFinite())
                return std::nullopt;
            return best;
        }
    } // namespace

    std::optional<LocationEstimate> srdls_localize(const AnchorSet &anchors, const Eigen::VectorXd &range_diffs,
                                                   const SrdlsOptions &options)
    {
        if (range_diffs.size() != static_cast<Eigen::Index>(anchors.size()) - 1)
            throw InputError("expected one range difference per non-reference anchor");
        if (options.iterations < 0 || !(options.epsilon > 0.0))
            throw ConfigError("reweighting needs a nonnegative round count and positive epsilon");

        // Work relative to the reference anchor so the constraint is homogeneous.
        const Point2D a0 = anchors.positions()[0];
        std::vector<Point2D> shifted;
        for (const auto &p : anchors.positions())
            shifted.push_back(p - a0);
        const AnchorSet local(std::move(shifted));

        const LinearSystem sys = build_system(local, range_diffs);
        if (sys.a.rows() < 2)
            return std::nullopt;
        const auto affine = [&]() {
            auto est = solve_affine(local, sys);
            if (est)
                est->xy = est->xy + a0;
            return est;
        };
        if (sys.a.rows() == 2)
            return affine();

        Eigen::VectorXd w = Eigen::VectorXd::Ones(sys.a.rows());
        Eigen::Vector3d theta;
        for (int round = 0; round <= options.iterations; ++round)
        {
            const Eigen::VectorXd sw = w.cwiseSqrt();
            Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sw.asDiagonal() * sys.a);
            qr.setThreshold(1e-10);
            if (qr.rank() < 3)
                return affine();
            const auto t = constrained_solve(sys.a, sys.b, w);
            if (!t)
                return std::nullopt;
            theta = *t;
            const Eigen::VectorXd res = sys.a * theta - sys.b;
            w = (res.array().square() + options.epsilon).inverse();
            w /= w.maxCoeff();
        }
        if (!theta.allFinite())
            return std::nullopt;
        const Eigen::VectorXd res = sys.a * theta - sys.b;
        return LocationEstimate{Point2D{theta[0], theta[1]} + a0, res.cwiseProduct(w.cwiseSqrt()).squaredNorm()};
    }

    LocbModel locb_fit(const Scenario &scenario, const std::vector<PilotMatrix> &pilots,
                       const Eigen::VectorXd &measured_dbw, const LocbParams &params)
    {
        if (static_cast<Eigen::Index>(pilots.size()) != measured_dbw.size())
            throw InputError("one power measurement per training pilot matrix is required");
        if (pilots.empty())
            throw InputError("LocB needs at least one training measurement");

        AnchorSet anchors = AnchorSet::from_scenario(scenario);
        const double T = scenario.sample_period();

        std::vector<Point2D> located;
        std::vector<double> targets;
        for (std::size_t n = 0; n < pilots.size(); ++n)
        {
            const auto est = srdls_localize(anchors, tdoa_feature_set(pilots[n], T), params.localization);
            if (!est)
                continue;
            located.push_back(est->xy);
            targets.push_back(measured_dbw[static_cast<Eigen::Index>(n)]);
        }
        const int dropped = static_cast<int>(pilots.size() - located.size());
        if (dropped > 0)
            spdlog::debug("LocB: {} of {} training measurements could not be localized and were dropped", dropped,
                          pilots.size());
        if (located.empty())
            throw NumericalError("LocB could not localize any training measurement");

        TrainingSet train{Eigen::MatrixXd(2, located.size()), Eigen::VectorXd(located.size())};
        for (std::size_t n = 0; n < located.size(); ++n)
        {
            train.features.col(n) << located[n].x, located[n].y;
            train.targets[n] = targets[n];
        }
        FittedMap map = fit(train, GaussianKernel(params.sigma), params.lambda, params.fit);
        return LocbModel{std::move(map), std::move(anchors), T, measured_dbw.mean(), dropped, params.localization};
    }

    std::optional<LocationEstimate> locb_localize(const LocbModel &model, const PilotMatrix &pilot)
    {
        return srdls_localize(model.anchors, tdoa_feature_set(pilot, model.sample_period), model.localization);
    }

    double locb_predict(const LocbModel &model, const PilotMatrix &pilot)
    {
        const auto est = locb_localize(model, pilot);
        if (!est)
            return model.fallback_dbw;
        return model.map.evaluate(Eigen::Vector2d(est->xy.x, est->xy.y));
    }

} // namespace cartography
