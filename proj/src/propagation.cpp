// SPDX-License-Identifier: Apache-2.0
#include "cartography/propagation.hpp"

#include <algorithm>
#include <atomic>
#include <optional>

#include <spdlog/spdlog.h>

namespace cartography
{
    namespace
    {
        constexpr double leg_epsilon = 1e-9;

        // Intersection of segment p->q with wall segment; returns the parameter
        // along p->q when the crossing is strictly interior to p->q and within
        // the wall's extent.
        std::optional<double> crossing(const Point2D &p, const Point2D &q, const WallSegment &w)
        {
            const Point2D r = q - p;
            const Point2D s = w.b - w.a;
            const double denom = r.cross(s);
            if (std::abs(denom) < 1e-15 * (r.norm() * s.norm() + 1e-300))
                return std::nullopt;
            const Point2D ap = w.a - p;
            const double t = ap.cross(s) / denom;
            const double u = ap.cross(r) / denom;
            if (t <= leg_epsilon || t >= 1.0 - leg_epsilon || u < 0.0 || u > 1.0)
                return std::nullopt;
            return t;
        }

        Point2D mirror(const Point2D &p, const WallSegment &w)
        {
            const Point2D d = w.b - w.a;
            const double len2 = d.dot(d);
            const Point2D v = p - w.a;
            const Point2D proj = w.a + d * (v.dot(d) / len2);
            return proj * 2.0 - p;
        }

        double incidence_angle(const Point2D &from, const Point2D &at, const WallSegment &w)
        {
            const Point2D dir = at - from;
            const Point2D d = w.b - w.a;
            const Point2D n{-d.y, d.x};
            const double c = std::abs(dir.dot(n)) / (dir.norm() * n.norm());
            return std::acos(std::clamp(c, 0.0, 1.0));
        }

        // Product of transmission gains of all walls crossed by p->q, skipping
        // the walls the leg starts or ends on.
        double leg_gain(const std::vector<WallSegment> &walls, const Point2D &p, const Point2D &q, int skip_a, int skip_b)
        {
            double g = 1.0;
            for (int i = 0; i < static_cast<int>(walls.size()); ++i)
            {
                if (i == skip_a || i == skip_b)
                    continue;
                if (crossing(p, q, walls[i]))
                    g *= walls[i].transmission_gain();
            }
            return g;
        }

        double friis_amplitude(double path_length, double carrier_hz)
        {
            return speed_of_light / (4.0 * pi * carrier_hz * path_length);
        }

        void keep_strongest(std::vector<PathComponent> &paths, std::size_t count)
        {
            std::stable_sort(paths.begin(), paths.end(), [](const PathComponent &a, const PathComponent &b)
                             { return std::abs(a.amplitude) > std::abs(b.amplitude); });
            if (paths.size() > count)
                paths.resize(count);
        }

        double sinc(double x)
        {
            if (x == 0.0)
                return 1.0;
            if (x == std::round(x))
                return 0.0;
            return std::sin(pi * x) / (pi * x);
        }

        std::atomic<long> overflow_events{0};
    } // namespace

    Scenario::Scenario(ScenarioParams params) : p_(std::move(params))
    {
        const auto &r = p_.region;
        if (!(r.x_max > r.x_min) || !(r.y_max > r.y_min))
            throw ConfigError("region must have positive width and height");
        if (p_.transmitters.empty())
            throw ConfigError("scenario needs at least one transmitter");
        for (std::size_t i = 0; i < p_.transmitters.size(); ++i)
        {
            const auto &t = p_.transmitters[i];
            if (!r.contains(t.position))
                throw ConfigError("transmitter " + std::to_string(i) + " lies outside the region");
            if (!(t.power_w > 0.0) || !std::isfinite(t.power_w))
                throw ConfigError("transmitter " + std::to_string(i) + " needs positive pilot power");
        }
        for (std::size_t i = 0; i < p_.walls.size(); ++i)
        {
            const auto &w = p_.walls[i];
            if (w.a == w.b)
                throw ConfigError("wall " + std::to_string(i) + " has zero length");
            if (!r.contains(w.a) || !r.contains(w.b))
                throw ConfigError("wall " + std::to_string(i) + " lies outside the region");
            if (!(w.loss_db >= 0.0))
                throw ConfigError("wall " + std::to_string(i) + " has negative transmission loss");
            if (!(w.max_reflection >= 0.0 && w.max_reflection <= 1.0))
                throw ConfigError("wall " + std::to_string(i) + " reflection coefficient must lie in [0,1]");
        }
        if (!(p_.bandwidth_hz > 0.0) || !std::isfinite(p_.bandwidth_hz))
            throw ConfigError("bandwidth must be positive");
        if (!(p_.carrier_hz > 0.0) || !std::isfinite(p_.carrier_hz))
            throw ConfigError("carrier frequency must be positive");
        if (p_.num_samples < 1)
            throw ConfigError("num_samples must be at least 1");
        if (!(p_.noise_variance_w >= 0.0) || !std::isfinite(p_.noise_variance_w))
            throw ConfigError("noise variance must be nonnegative");
    }

    bool Scenario::is_admissible(const Point2D &p) const
    {
        if (!p_.region.contains(p))
            return false;
        const double r = exclusion_radius();
        for (const auto &t : p_.transmitters)
            if (distance(t.position, p) < r)
                return false;
        return true;
    }

    Scenario Scenario::with_walls(std::vector<WallSegment> walls) const
    {
        ScenarioParams q = p_;
        q.walls = std::move(walls);
        return Scenario(std::move(q));
    }

    std::vector<PathComponent> trace_paths(const Scenario &scenario, const Point2D &tx, const Point2D &rx)
    {
        const double d = distance(tx, rx);
        if (d < 1e-9)
            throw DomainError("receiver coincides with transmitter (near-field singularity)");

        const auto &walls = scenario.walls();
        const double fc = scenario.carrier_hz();
        const int nw = static_cast<int>(walls.size());

        std::vector<PathComponent> out;
        out.push_back({friis_amplitude(d, fc) * leg_gain(walls, tx, rx, -1, -1), d / speed_of_light, 0});

        std::vector<PathComponent> first;
        for (int w = 0; w < nw; ++w)
        {
            const Point2D image = mirror(tx, walls[w]);
            const auto t = crossing(image, rx, walls[w]);
            if (!t)
                continue;
            const Point2D hit = image + (rx - image) * *t;
            const double len = distance(image, rx);
            const double gamma = walls[w].reflection_coefficient(incidence_angle(tx, hit, walls[w]));
            const double gain = leg_gain(walls, tx, hit, w, -1) * leg_gain(walls, hit, rx, w, -1);
            first.push_back({friis_amplitude(len, fc) * gamma * gain, len / speed_of_light, 1});
        }
        keep_strongest(first, max_first_order_paths);

        std::vector<PathComponent> second;
        for (int w1 = 0; w1 < nw; ++w1)
        {
            const Point2D image1 = mirror(tx, walls[w1]);
            for (int w2 = 0; w2 < nw; ++w2)
            {
                if (w1 == w2)
                    continue;
                const Point2D image2 = mirror(image1, walls[w2]);
                const auto t2 = crossing(image2, rx, walls[w2]);
                if (!t2)
                    continue;
                const Point2D hit2 = image2 + (rx - image2) * *t2;
                const auto t1 = crossing(image1, hit2, walls[w1]);
                if (!t1)
                    continue;
                const Point2D hit1 = image1 + (hit2 - image1) * *t1;
                if (distance(hit1, hit2) < 1e-9 || distance(tx, hit1) < 1e-9)
                    continue;
                const double len = distance(image2, rx);
                const double gamma = walls[w1].reflection_coefficient(incidence_angle(tx, hit1, walls[w1])) *
                                     walls[w2].reflection_coefficient(incidence_angle(hit1, hit2, walls[w2]));
                const double gain = leg_gain(walls, tx, hit1, w1, -1) * leg_gain(walls, hit1, hit2, w1, w2) *
                                    leg_gain(walls, hit2, rx, w2, -1);
                second.push_back({friis_amplitude(len, fc) * gamma * gain, len / speed_of_light, 2});
            }
        }
        keep_strongest(second, max_second_order_paths);

        out.insert(out.end(), first.begin(), first.end());
        out.insert(out.end(), second.begin(), second.end());
        return out;
    }

    DiscreteChannel discretize_channel(const std::vector<PathComponent> &paths, const Scenario &scenario)
    {
        const int K = scenario.num_samples();
        const double fc = scenario.carrier_hz();
        const double B = scenario.bandwidth_hz();

        DiscreteChannel ch;
        ch.taps = Eigen::VectorXcd::Zero(K);
        for (const auto &p : paths)
        {
            const double lag = p.delay * B;
            if (lag > K - 1)
                ++ch.delay_overflow;
            // Reduce the carrier phase modulo one cycle before scaling by 2 pi.
            const double cycles = fc * p.delay;
            const cplx phasor = std::polar(p.amplitude, -2.0 * pi * (cycles - std::floor(cycles)));
            for (int k = 0; k < K; ++k)
                ch.taps[k] += phasor * sinc(k - lag);
        }
        if (ch.delay_overflow > 0)
        {
            if (overflow_events.fetch_add(1) == 0)
                spdlog::warn("path delay exceeds the {}-sample window; increase num_samples to capture all multipath",
                             K);
            spdlog::debug("{} path(s) beyond tap {}", ch.delay_overflow, K - 1);
        }
        return ch;
    }

    std::vector<DiscreteChannel> noiseless_channels(const Scenario &scenario, const Point2D &rx)
    {
        std::vector<DiscreteChannel> out;
        out.reserve(scenario.num_transmitters());
        for (const auto &t : scenario.transmitters())
            out.push_back(discretize_channel(trace_paths(scenario, t.position, rx), scenario));
        return out;
    }

    PilotMatrix noiseless_pilot_matrix(const Scenario &scenario, const Point2D &rx)
    {
        const auto L = static_cast<Eigen::Index>(scenario.num_transmitters());
        PilotMatrix y{Eigen::MatrixXcd(L, scenario.num_samples())};
        const auto channels = noiseless_channels(scenario, rx);
        for (Eigen::Index l = 0; l < L; ++l)
            y.samples.row(l) = std::sqrt(scenario.transmitters()[l].power_w) * channels[l].taps.transpose();
        return y;
    }

    void add_pilot_noise(PilotMatrix &pilots, double noise_variance, Rng &rng)
    {
        if (noise_variance <= 0.0)
            return;
        std::normal_distribution<double> gauss(0.0, std::sqrt(noise_variance / 2.0));
        for (Eigen::Index l = 0; l < pilots.samples.rows(); ++l)
            for (Eigen::Index k = 0; k < pilots.samples.cols(); ++k)
            {
                const double re = gauss(rng);
                const double im = gauss(rng);
                pilots.samples(l, k) += cplx(re, im);
            }
    }

    PilotMatrix synthesize_pilot_matrix(const Scenario &scenario, const Point2D &rx, Rng &rng)
    {
        PilotMatrix y = noiseless_pilot_matrix(scenario, rx);
        add_pilot_noise(y, scenario.noise_variance(), rng);
        return y;
    }

    std::vector<double> pilot_powers(const Scenario &scenario, const Point2D &x)
    {
        std::vector<double> out;
        out.reserve(scenario.num_transmitters());
        for (const auto &t : scenario.transmitters())
        {
            double energy = 0.0;
            for (const auto &p : trace_paths(scenario, t.position, x))
                energy += p.amplitude * p.amplitude;
            out.push_back(watts_to_dbw(t.power_w * energy));
        }
        return out;
    }

    double aggregate_power(const std::vector<double> &pilot_powers_dbw)
    {
        double w = 0.0;
        for (double p : pilot_powers_dbw)
            w += dbw_to_watts(p);
        return watts_to_dbw(w);
    }

    double true_power(const Scenario &scenario, const Point2D &x)
    {
        if (!scenario.region().contains(x))
            throw DomainError("query point lies outside the region");
        for (const auto &t : scenario.transmitters())
            if (distance(t.position, x) < scenario.exclusion_radius())
                throw DomainError("query point within 3 wavelengths of a transmitter");
        return aggregate_power(pilot_powers(scenario, x));
    }

    std::vector<Point2D> sample_sensor_locations(const Scenario &scenario, int count, Rng &rng)
    {
        if (count < 1)
            throw ConfigError("number of sensor locations must be at least 1");
        const auto &r = scenario.region();
        std::uniform_real_distribution<double> ux(r.x_min, r.x_max);
        std::uniform_real_distribution<double> uy(r.y_min, r.y_max);
        constexpr int max_attempts = 100000;

        std::vector<Point2D> out;
        out.reserve(count);
        while (static_cast<int>(out.size()) < count)
        {
            int attempts = 0;
            for (;;)
            {
                const Point2D p{ux(rng), uy(rng)};
                if (scenario.is_admissible(p))
                {
                    out.push_back(p);
                    break;
                }
                if (++attempts >= max_attempts)
                    throw ConfigError("transmitter exclusion zones cover the sampling region");
            }
        }
        return out;
    }

    std::vector<Point2D> admissible_grid(const Scenario &scenario, double resolution)
    {
        if (!(resolution > 0.0))
            throw ConfigError("grid resolution must be positive");
        const auto &r = scenario.region();
        const int nx = static_cast<int>(std::floor(r.width() / resolution + 1e-9)) + 1;
        const int ny = static_cast<int>(std::floor(r.height() / resolution + 1e-9)) + 1;
        std::vector<Point2D> out;
        out.reserve(static_cast<std::size_t>(nx) * ny);
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i)
            {
                const Point2D p{r.x_min + i * resolution, r.y_min + j * resolution};
                if (scenario.is_admissible(p))
                    out.push_back(p);
            }
        return out;
    }

    double spatial_average_power(const Scenario &scenario, double resolution)
    {
        const auto grid = admissible_grid(scenario, resolution);
        if (grid.empty())
            throw ConfigError("no admissible grid points");
        double acc = 0.0;
        for (const auto &p : grid)
            acc += true_power(scenario, p);
        return acc / static_cast<double>(grid.size());
    }

    MeasurementNoise MeasurementNoise::calibrate(double spatial_average_dbw, double snr_db)
    {
        return {spatial_average_dbw, std::abs(spatial_average_dbw) * std::pow(10.0, -snr_db / 20.0)};
    }

    MeasurementNoise MeasurementNoise::calibrate(const Scenario &scenario, double snr_db, double resolution)
    {
        return calibrate(spatial_average_power(scenario, resolution), snr_db);
    }

    double measure_power(const Scenario &scenario, const Point2D &x, const MeasurementNoise &noise, Rng &rng)
    {
        const double p = true_power(scenario, x);
        if (noise.sigma_db <= 0.0)
            return p;
        std::normal_distribution<double> gauss(0.0, noise.sigma_db);
        return p + gauss(rng);
    }

} // namespace cartography
