// SPDX-License-Identifier: Apache-2.0
#ifndef CARTOGRAPHY_LOCB_HPP
#define CARTOGRAPHY_LOCB_HPP

#include "cartography/features.hpp"
#include "cartography/kernel_regression.hpp"

#include <optional>
#include <vector>

namespace cartography
{
    /// Anchor (pilot transmitter) positions; index 0 is the TDoA reference.
    class AnchorSet
    {
    public:
        explicit AnchorSet(std::vector<Point2D> positions);
        static AnchorSet from_scenario(const Scenario &scenario);

        const std::vector<Point2D> &positions() const { return positions_; }
        std::size_t size() const { return positions_.size(); }

    private:
        std::vector<Point2D> positions_;
    };

    struct LocationEstimate
    {
        Point2D xy;
        double residual = 0.0; // final weighted least-squares cost
    };

    /// Range differences r_0 - r_l (meters) for l = 1..L-1 from argmax TDoA.
    /// Entries hold missing_value when a correlation is identically zero.
    Eigen::VectorXd tdoa_feature_set(const PilotMatrix &pilot, double sample_period);

    struct SrdlsOptions
    {
        int iterations = 3;     // reweighting rounds after the initial solve
        double epsilon = 1e-6;  // weight = 1 / (residual^2 + epsilon)
    };

    /// Squared-range-difference least squares with residual reweighting.
    /// range_diffs[l-1] = ||x - a_0|| - ||x - a_l||; missing entries are skipped.
    /// Returns nullopt when fewer than two differences are usable or the
    /// linear system is rank deficient.
    std::optional<LocationEstimate> srdls_localize(const AnchorSet &anchors, const Eigen::VectorXd &range_diffs,
                                                   const SrdlsOptions &options = {});

    struct LocbParams
    {
        double sigma = 0.5;     // kernel width over location estimates (m)
        double lambda = 3.3e-3;
        FitOptions fit;
        SrdlsOptions localization;
    };

    struct LocbModel
    {
        FittedMap map;
        AnchorSet anchors;
        double sample_period = 0.0;
        double fallback_dbw = 0.0; // mean training target, used when a query cannot be localized
        int dropped = 0;           // training measurements without a location estimate
        SrdlsOptions localization;
    };

    /// Localizes each training pilot and fits kernel ridge regression over
    /// the estimated coordinates.
    LocbModel locb_fit(const Scenario &scenario, const std::vector<PilotMatrix> &pilots,
                       const Eigen::VectorXd &measured_dbw, const LocbParams &params);

    std::optional<LocationEstimate> locb_localize(const LocbModel &model, const PilotMatrix &pilot);

    double locb_predict(const LocbModel &model, const PilotMatrix &pilot);

} // namespace cartography

#endif
