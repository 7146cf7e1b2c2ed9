// SPDX-License-Identifier: Apache-2.0
#ifndef CARTOGRAPHY_EVALUATION_HPP
#define CARTOGRAPHY_EVALUATION_HPP

#include "cartography/completion.hpp"
#include "cartography/features.hpp"
#include "cartography/kernel_regression.hpp"
#include "cartography/locb.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

namespace cartography
{
    /// mean |p - p_hat|^2 / mean |p - p_bar|^2 over the grid (dB values).
    double nmse(const Eigen::VectorXd &truth, const Eigen::VectorXd &prediction, double p_bar);

    /// Marks a feature missing when it is already a sentinel or when one of
    /// its pilots is received below gamma_dbw. Pairwise kinds use the weaker
    /// pilot of each pair. pilot_powers_dbw is L x N.
    IncompleteFeatureMatrix mask_features(const Eigen::MatrixXd &features, const Eigen::MatrixXd &pilot_powers_dbw,
                                          double gamma_dbw, FeatureKind kind);

    /// Masks a single feature vector in place (same rule as mask_features).
    void mask_feature_vector(Eigen::VectorXd &phi, const std::vector<double> &pilot_powers_dbw, double gamma_dbw,
                             FeatureKind kind);

    enum class Estimator
    {
        locf,
        locf_reduced,
        locf_completion,
        locb,
    };

    std::string to_string(Estimator e);
    Estimator estimator_from_string(const std::string &name);

    struct EstimatorSpec
    {
        Estimator kind = Estimator::locf;
        double lambda = 1.9e-4; // lambda' for locb
        double sigma = 37.0;    // sigma' for locb
        RankRule rank = FixedRank{4}; // locf_reduced
        int completion_rank = 4;      // locf_completion
        double mu = 5.42;             // locf_completion
        std::string label;            // defaults to the estimator name

        std::string name() const { return label.empty() ? to_string(kind) : label; }
    };

    struct ExperimentConfig
    {
        Scenario scenario;
        std::vector<EstimatorSpec> estimators;
        int num_measurements = 300;
        int runs = 20;
        std::uint64_t seed = 1;
        double grid_resolution = 1.0;
        double snr_db = 40.0;
        bool query_noise = true;
        bool center_targets = false;
        FeatureKind feature_kind = FeatureKind::com_nosync;
        double toa_threshold = 0.0; // 0 selects default_toa_threshold
        double gamma_dbw = -std::numeric_limits<double>::infinity();
        std::vector<WallSegment> wall_pool; // non-empty: each run draws wall_count walls from it
        int wall_count = 0;
        int feature_subset = 0; // > 0: each run keeps a random subset of this many features
        CompletionConfig svp;
        int jobs = 0; // 0 = hardware concurrency
        bool keep_maps = false; // keep grid predictions and LocB location estimates of run 0
    };

    struct NmseResult
    {
        double mean = 0.0;
        double std = 0.0;
        std::vector<double> per_run; // NaN marks an excluded run
        int excluded = 0;
    };

    struct LocationRecord
    {
        Point2D truth;
        Point2D estimate;
        double residual = 0.0;
        bool available = false;
    };

    struct EstimatorOutcome
    {
        EstimatorSpec spec;
        NmseResult nmse;
        Eigen::VectorXd map; // run 0 grid predictions (keep_maps)
    };

    struct ExperimentResult
    {
        std::vector<EstimatorOutcome> outcomes;
        double mean_missing_features = 0.0; // per training location, averaged over runs
        std::vector<Point2D> grid;          // run 0 evaluation grid (keep_maps)
        Eigen::VectorXd truth;              // run 0 true map (keep_maps)
        std::vector<Point2D> sensors;       // run 0 sensor locations (keep_maps)
        std::vector<LocationRecord> locations; // run 0 LocB training localizations (keep_maps)
    };

    /// Monte Carlo evaluation. Run i uses seed + i; all estimators within a run
    /// share sensor locations, walls, pilots and noise.
    ExperimentResult run_experiment(const ExperimentConfig &config);

    /// Sample mean and standard deviation ignoring NaN entries.
    NmseResult summarize(const std::vector<double> &per_run);

    struct GroundTruth
    {
        std::vector<Point2D> points;
        Eigen::VectorXd power_dbw;
    };

    GroundTruth ground_truth(const Scenario &scenario, double resolution);

    /// Feature matrix (M x n) of noiseless pilots at the given points.
    Eigen::MatrixXd noiseless_feature_map(const Scenario &scenario, const std::vector<Point2D> &points,
                                          FeatureKind kind, double toa_threshold = 0.0);

    void write_truth_csv(std::ostream &out, const GroundTruth &truth);
    void write_map_csv(std::ostream &out, const std::vector<Point2D> &points, const Eigen::VectorXd &truth,
                       const Eigen::VectorXd &prediction);
    void write_feature_csv(std::ostream &out, const std::vector<Point2D> &points, const Eigen::MatrixXd &features);
    void write_results_csv(std::ostream &out, const ExperimentResult &result, int num_measurements,
                           bool header = true);
    void write_locations_csv(std::ostream &out, const std::vector<LocationRecord> &records);

    /// 8-bit grayscale raster over the region; row 0 is the top (largest y).
    /// Values are scaled linearly between their min and max; pixels without a
    /// value are black.
    void write_pgm(const std::filesystem::path &path, const Region &region, double resolution,
                   const std::vector<Point2D> &points, const Eigen::VectorXd &values);

    nlohmann::json summary_json(const ExperimentResult &result, int num_measurements);

} // namespace cartography

#endif
