// SPDX-License-Identifier: Apache-2.0
#ifndef CARTOGRAPHY_FEATURES_HPP
#define CARTOGRAPHY_FEATURES_HPP

#include "cartography/propagation.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace cartography
{
    /// Finite-sample cross-correlation c[i] = sum_k a[k] conj(b[k - i]) over
    /// lags i = -(K-1)..(K-1).
    struct CrossCorrelation
    {
        Eigen::VectorXcd values; // values[i + K - 1] holds lag i
        int max_lag = 0;         // K - 1

        cplx at(int lag) const { return values[lag + max_lag]; }
        int size() const { return static_cast<int>(values.size()); }
    };

    enum class FeatureKind
    {
        toa,        // thresholded time of arrival (synchronized)
        com_sync,   // center of mass of each impulse response (synchronized)
        tdoa,       // argmax cross-correlation lag, all pairs
        com_nosync, // center of mass of each pairwise cross-correlation
    };

    enum class FeatureScale
    {
        lag,    // raw sample lags
        meters, // lags scaled by T * c
    };

    std::string to_string(FeatureKind kind);
    FeatureKind feature_kind_from_string(const std::string &name);

    struct FeatureVector
    {
        Eigen::VectorXd values; // missing entries hold missing_value
        FeatureKind kind = FeatureKind::com_nosync;
        FeatureScale scale = FeatureScale::meters;

        Eigen::Index size() const { return values.size(); }
        bool complete() const;
        int missing_count() const;
    };

    /// With an impulsive pilot the received row is already the channel estimate.
    Eigen::VectorXcd estimate_impulse_response(const Eigen::VectorXcd &pilot_row);

    /// T times the first tap index whose magnitude reaches gamma; nullopt when none does.
    std::optional<double> estimate_toa(const Eigen::VectorXcd &h, double gamma, double sample_period);

    /// Energy-weighted mean tap index; nullopt for an all-zero response.
    std::optional<double> com_impulse(const Eigen::VectorXcd &h);

    CrossCorrelation cross_correlate(const Eigen::VectorXcd &row_a, const Eigen::VectorXcd &row_b);

    /// T times the lag of maximum magnitude. Ties go to the smallest |lag|,
    /// then to the negative lag.
    std::optional<double> estimate_tdoa(const CrossCorrelation &c, double sample_period);

    /// Energy-weighted mean lag of the correlation; nullopt when identically zero.
    std::optional<double> com_crosscorr(const CrossCorrelation &c);

    /// Number of unordered transmitter pairs, L(L-1)/2.
    inline int num_pairs(int num_transmitters) { return num_transmitters * (num_transmitters - 1) / 2; }

    /// Pairs (l, l') with l < l' in lexicographic order (0-based).
    std::vector<std::pair<int, int>> transmitter_pairs(int num_transmitters);

    /// T c CoM_{l,l'} for all pairs l < l' (range differences in meters).
    FeatureVector feature_vector_nosync(const PilotMatrix &pilot, const Scenario &scenario);

    /// Per-transmitter impulse-response CoM in raw lag units.
    FeatureVector feature_vector_sync(const PilotMatrix &pilot);

    /// T c TDoA for all pairs l < l' (argmax estimator, meters).
    FeatureVector feature_vector_tdoa(const PilotMatrix &pilot, const Scenario &scenario);

    /// T c ToA per transmitter (meters) with threshold gamma.
    FeatureVector feature_vector_toa(const PilotMatrix &pilot, const Scenario &scenario, double gamma);

    /// Default ToA threshold: four noise standard deviations.
    double default_toa_threshold(const Scenario &scenario);

    /// Dispatches on kind; gamma is used only by the ToA kind.
    FeatureVector extract_features(FeatureKind kind, const PilotMatrix &pilot, const Scenario &scenario,
                                   double gamma);

} // namespace cartography

#endif
