// SPDX-License-Identifier: Apache-2.0
#include "cartography/features.hpp"

#include <cstdlib>

namespace cartography
{
    std::string to_string(FeatureKind kind)
    {
        switch (kind)
        {
        case FeatureKind::toa:
            return "toa";
        case FeatureKind::com_sync:
            return "com_sync";
        case FeatureKind::tdoa:
            return "tdoa";
        case FeatureKind::com_nosync:
            return "com_nosync";
        }
        return "unknown";
    }

    FeatureKind feature_kind_from_string(const std::string &name)
    {
        if (name == "toa")
            return FeatureKind::toa;
        if (name == "com_sync")
            return FeatureKind::com_sync;
        if (name == "tdoa")
            return FeatureKind::tdoa;
        if (name == "com_nosync")
            return FeatureKind::com_nosync;
        throw ConfigError("unknown feature kind '" + name + "' (toa, com_sync, tdoa, com_nosync)");
    }

    bool FeatureVector::complete() const { return missing_count() == 0; }

    int FeatureVector::missing_count() const
    {
        int n = 0;
        for (Eigen::Index i = 0; i < values.size(); ++i)
            n += is_missing(values[i]) ? 1 : 0;
        return n;
    }

    Eigen::VectorXcd estimate_impulse_response(const Eigen::VectorXcd &pilot_row) { return pilot_row; }

    std::optional<double> estimate_toa(const Eigen::VectorXcd &h, double gamma, double sample_period)
    {
        if (!(gamma > 0.0))
            throw InputError("ToA threshold must be positive");
        for (Eigen::Index k = 0; k < h.size(); ++k)
            if (std::abs(h[k]) >= gamma)
                return sample_period * static_cast<double>(k);
        return std::nullopt;
    }

    std::optional<double> com_impulse(const Eigen::VectorXcd &h)
    {
        double num = 0.0;
        double den = 0.0;
        for (Eigen::Index k = 0; k < h.size(); ++k)
        {
            const double e = std::norm(h[k]);
            num += e * static_cast<double>(k);
            den += e;
        }
        if (!(den > 0.0))
            return std::nullopt;
        return num / den;
    }

    CrossCorrelation cross_correlate(const Eigen::VectorXcd &row_a, const Eigen::VectorXcd &row_b)
    {
        if (row_a.size() != row_b.size())
            throw InputError("cross-correlation needs rows of equal length");
        const int K = static_cast<int>(row_a.size());
        CrossCorrelation c;
        c.max_lag = K > 0 ? K - 1 : 0;
        c.values = Eigen::VectorXcd::Zero(K > 0 ? 2 * K - 1 : 0);
        for (int i = -(K - 1); i <= K - 1; ++i)
        {
            const int k0 = std::max(0, i);
            const int k1 = std::min(K - 1, K - 1 + i);
            cplx acc = 0.0;
            for (int k = k0; k <= k1; ++k)
                acc += row_a[k] * std::conj(row_b[k - i]);
            c.values[i + c.max_lag] = acc;
        }
        return c;
    }

    std::optional<double> estimate_tdoa(const CrossCorrelation &c, double sample_period)
    {
        double best = 0.0;
        int best_lag = 0;
        bool found = false;
        // Visit lags 0, -1, +1, -2, +2, ... and accept strict improvements only.
        for (int m = 0; m <= c.max_lag; ++m)
        {
            for (int lag : {-m, m})
            {
                if (m == 0 && lag > 0)
                    continue;
                const double e = std::norm(c.at(lag));
                if (e > best)
                {
                    best = e;
                    best_lag = lag;
                    found = true;
                }
                if (m == 0)
                    break;
            }
        }
        if (!found)
            return std::nullopt;
        return sample_period * static_cast<double>(best_lag);
    }

    std::optional<double> com_crosscorr(const CrossCorrelation &c)
    {
        double num = 0.0;
        double den = 0.0;
        for (int i = -c.max_lag; i <= c.max_lag; ++i)
        {
            const double e = std::norm(c.at(i));
            num += e * static_cast<double>(i);
            den += e;
        }
        if (!(den > 0.0))
            return std::nullopt;
        return num / den;
    }

    std::vector<std::pair<int, int>> transmitter_pairs(int num_transmitters)
    {
        std::vector<std::pair<int, int>> out;
        out.reserve(num_pairs(num_transmitters));
        for (int a = 0; a < num_transmitters; ++a)
            for (int b = a + 1; b < num_transmitters; ++b)
                out.emplace_back(a, b);
        return out;
    }

    namespace
    {
        template <typename PairFn>
        FeatureVector pairwise(const PilotMatrix &pilot, FeatureKind kind, PairFn &&fn)
        {
            const int L = static_cast<int>(pilot.num_transmitters());
            if (L < 2)
                throw InputError("pairwise features need at least two transmitters");
            std::vector<Eigen::VectorXcd> h(L);
            for (int l = 0; l < L; ++l)
                h[l] = estimate_impulse_response(pilot.samples.row(l).transpose());

            FeatureVector f;
            f.kind = kind;
            f.scale = FeatureScale::meters;
            f.values.resize(num_pairs(L));
            int m = 0;
            for (const auto &[a, b] : transmitter_pairs(L))
            {
                const auto v = fn(cross_correlate(h[a], h[b]));
                f.values[m++] = v ? *v : missing_value;
            }
            return f;
        }
    } // namespace

    FeatureVector feature_vector_nosync(const PilotMatrix &pilot, const Scenario &scenario)
    {
        const double scale = scenario.sample_period() * speed_of_light;
        return pairwise(pilot, FeatureKind::com_nosync, [scale](const CrossCorrelation &c) -> std::optional<double>
                        {
                            const auto v = com_crosscorr(c);
                            if (!v)
                                return std::nullopt;
                            return scale * *v; });
    }

    FeatureVector feature_vector_tdoa(const PilotMatrix &pilot, const Scenario &scenario)
    {
        const double T = scenario.sample_period();
        return pairwise(pilot, FeatureKind::tdoa, [T](const CrossCorrelation &c) -> std::optional<double>
                        {
                            const auto v = estimate_tdoa(c, T);
                            if (!v)
                                return std::nullopt;
                            return speed_of_light * *v; });
    }

    FeatureVector feature_vector_sync(const PilotMatrix &pilot)
    {
        const auto L = pilot.num_transmitters();
        if (L < 1)
            throw InputError("pilot matrix has no rows");
        FeatureVector f;
        f.kind = FeatureKind::com_sync;
        f.scale = FeatureScale::lag;
        f.values.resize(L);
        for (Eigen::Index l = 0; l < L; ++l)
        {
            const auto v = com_impulse(estimate_impulse_response(pilot.samples.row(l).transpose()));
            f.values[l] = v ? *v : missing_value;
        }
        return f;
    }

    FeatureVector feature_vector_toa(const PilotMatrix &pilot, const Scenario &scenario, double gamma)
    {
        const auto L = pilot.num_transmitters();
        FeatureVector f;
        f.kind = FeatureKind::toa;
        f.scale = FeatureScale::meters;
        f.values.resize(L);
        for (Eigen::Index l = 0; l < L; ++l)
        {
            const auto v = estimate_toa(estimate_impulse_response(pilot.samples.row(l).transpose()), gamma,
                                        scenario.sample_period());
            f.values[l] = v ? speed_of_light * *v : missing_value;
        }
        return f;
    }

    double default_toa_threshold(const Scenario &scenario) { return 4.0 * std::sqrt(scenario.noise_variance()); }

    FeatureVector extract_features(FeatureKind kind, const PilotMatrix &pilot, const Scenario &scenario, double gamma)
    {
        switch (kind)
        {
        case FeatureKind::toa:
            return feature_vector_toa(pilot, scenario, gamma);
        case FeatureKind::com_sync:
            return feature_vector_sync(pilot);
        case FeatureKind::tdoa:
            return feature_vector_tdoa(pilot, scenario);
        case FeatureKind::com_nosync:
            return feature_vector_nosync(pilot, scenario);
        }
        throw ConfigError("unsupported feature kind");
    }

} // namespace cartography
