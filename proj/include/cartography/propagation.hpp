// SPDX-License-Identifier: Apache-2.0
#ifndef CARTOGRAPHY_PROPAGATION_HPP
#define CARTOGRAPHY_PROPAGATION_HPP

#include "cartography/common.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace cartography
{
    using Rng = std::mt19937_64;

    struct Region
    {
        double x_min = 0.0;
        double y_min = 0.0;
        double x_max = 0.0;
        double y_max = 0.0;

        bool contains(const Point2D &p) const
        {
            return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max;
        }
        double width() const { return x_max - x_min; }
        double height() const { return y_max - y_min; }
    };

    struct WallSegment
    {
        Point2D a;
        Point2D b;
        double loss_db = 5.0;        // transmission loss per crossing
        double max_reflection = 0.7; // amplitude reflection coefficient at normal incidence

        /// Amplitude reflection coefficient for an incidence angle measured from the wall normal.
        double reflection_coefficient(double incidence_angle) const
        {
            return max_reflection * std::abs(std::cos(incidence_angle));
        }

        double transmission_gain() const { return std::pow(10.0, -loss_db / 20.0); }
        double length() const { return distance(a, b); }
    };

    struct Transmitter
    {
        Point2D position;
        double power_w = 1.0; // pilot power
    };

    struct ScenarioParams
    {
        Region region;
        std::vector<WallSegment> walls;
        std::vector<Transmitter> transmitters;
        double carrier_hz = 800e6;
        double bandwidth_hz = 20e6;
        int num_samples = 10;
        double noise_variance_w = 1e-10; // per complex pilot sample
        std::uint64_t seed = 1;
    };

    /// Immutable simulated world. Construction validates every parameter; the
    /// sample period is always derived from the bandwidth.
    class Scenario
    {
    public:
        explicit Scenario(ScenarioParams params);

        const Region &region() const { return p_.region; }
        const std::vector<WallSegment> &walls() const { return p_.walls; }
        const std::vector<Transmitter> &transmitters() const { return p_.transmitters; }
        std::size_t num_transmitters() const { return p_.transmitters.size(); }
        double carrier_hz() const { return p_.carrier_hz; }
        double bandwidth_hz() const { return p_.bandwidth_hz; }
        double sample_period() const { return 1.0 / p_.bandwidth_hz; }
        int num_samples() const { return p_.num_samples; }
        double noise_variance() const { return p_.noise_variance_w; }
        std::uint64_t seed() const { return p_.seed; }
        double wavelength() const { return speed_of_light / p_.carrier_hz; }

        /// Radius of the near-field exclusion disc around each transmitter (3 wavelengths).
        double exclusion_radius() const { return 3.0 * wavelength(); }

        /// True when p lies in the region and outside every exclusion disc.
        bool is_admissible(const Point2D &p) const;

        const ScenarioParams &params() const { return p_; }

        /// Copy with a different wall set (used by wall-count sweeps).
        Scenario with_walls(std::vector<WallSegment> walls) const;

    private:
        ScenarioParams p_;
    };

    struct PathComponent
    {
        double amplitude = 0.0; // real path gain, excludes transmit power
        double delay = 0.0;     // seconds
        int order = 0;          // 0 direct, 1 or 2 reflections
    };

    struct DiscreteChannel
    {
        Eigen::VectorXcd taps;
        int delay_overflow = 0; // number of paths with delay beyond the last tap
    };

    /// L x K matrix of received pilot samples; row l belongs to transmitter l.
    struct PilotMatrix
    {
        Eigen::MatrixXcd samples;

        Eigen::Index num_transmitters() const { return samples.rows(); }
        Eigen::Index num_samples() const { return samples.cols(); }
    };

    inline constexpr int max_first_order_paths = 5;
    inline constexpr int max_second_order_paths = 5;

    /// Multi-wall ray model: direct path, up to 5 strongest first-order and 5
    /// strongest second-order specular reflections (image method). Amplitudes
    /// combine Friis free-space gain, per-wall transmission loss and
    /// angle-dependent reflection coefficients.
    std::vector<PathComponent> trace_paths(const Scenario &scenario, const Point2D &tx, const Point2D &rx);

    /// h[k] = sum_p a_p exp(-j 2 pi f_c t_p) sinc(k - t_p / T), k = 0..K-1.
    DiscreteChannel discretize_channel(const std::vector<PathComponent> &paths, const Scenario &scenario);

    /// Noiseless per-transmitter channels at rx (rows unscaled by pilot power).
    std::vector<DiscreteChannel> noiseless_channels(const Scenario &scenario, const Point2D &rx);

    /// Noiseless pilot matrix: row l = sqrt(P_l) h_l.
    PilotMatrix noiseless_pilot_matrix(const Scenario &scenario, const Point2D &rx);

    /// Adds circular complex Gaussian noise of variance sigma_w^2 per sample.
    void add_pilot_noise(PilotMatrix &pilots, double noise_variance, Rng &rng);

    PilotMatrix synthesize_pilot_matrix(const Scenario &scenario, const Point2D &rx, Rng &rng);

    /// Noiseless received power of each pilot at x in dBW.
    std::vector<double> pilot_powers(const Scenario &scenario, const Point2D &x);

    /// Aggregate noiseless received power from all transmitters at x in dBW.
    double true_power(const Scenario &scenario, const Point2D &x);

    /// Aggregate power from precomputed per-transmitter pilot powers (dBW).
    double aggregate_power(const std::vector<double> &pilot_powers_dbw);

    std::vector<Point2D> sample_sensor_locations(const Scenario &scenario, int count, Rng &rng);

    /// Admissible points of a rectangular grid over the region, row-major
    /// (y outer, x inner), spacing `resolution` meters.
    std::vector<Point2D> admissible_grid(const Scenario &scenario, double resolution);

    /// Calibrated dB-domain measurement noise: sigma chosen so that
    /// 10 log10(p_bar^2 / sigma^2) equals the requested SNR.
    struct MeasurementNoise
    {
        double spatial_average_dbw = 0.0;
        double sigma_db = 0.0;

        static MeasurementNoise calibrate(double spatial_average_dbw, double snr_db = 40.0);
        static MeasurementNoise calibrate(const Scenario &scenario, double snr_db = 40.0, double resolution = 1.0);
    };

    /// Spatial average of the true map by uniform grid quadrature over admissible points.
    double spatial_average_power(const Scenario &scenario, double resolution = 1.0);

    double measure_power(const Scenario &scenario, const Point2D &x, const MeasurementNoise &noise, Rng &rng);

} // namespace cartography

#endif
