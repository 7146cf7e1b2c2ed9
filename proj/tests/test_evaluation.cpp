// SPDX-License-Identifier: Apache-2.0
#include "catch_amalgamated.hpp"

#include "cartography/evaluation.hpp"
#include "cartography/scenario_io.hpp"
#include "test_helpers.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace cartography;
using namespace cartography::testing;
using Catch::Approx;

namespace
{
    ExperimentConfig small_config(const std::string &preset, Estimator kind, int N, int runs)
    {
        ExperimentConfig cfg{scenario_preset(preset)};
        EstimatorSpec spec;
        spec.kind = kind;
        if (kind == Estimator::locb)
        {
            spec.lambda = 3.3e-3;
            spec.sigma = 0.5;
        }
        cfg.estimators = {spec};
        cfg.num_measurements = N;
        cfg.runs = runs;
        cfg.seed = 42;
        cfg.grid_resolution = 2.0;
        cfg.jobs = 1;
        return cfg;
    }
} // namespace

TEST_CASE("NMSE examples")
{
    const Eigen::Vector4d p(-60, -55, -70, -65);
    const double pbar = p.mean();
    CHECK(nmse(p, p, pbar) == 0.0);
    CHECK(nmse(p, Eigen::Vector4d::Constant(pbar), pbar) == Approx(1.0));

    std::mt19937_64 rng(1);
    const Eigen::VectorXd t = random_matrix(rng, 50, 1) * 5.0;
    const Eigen::VectorXd q = random_matrix(rng, 50, 1) * 5.0;
    double num = 0.0, den = 0.0;
    for (int i = 0; i < 50; ++i)
    {
        num += (t[i] - q[i]) * (t[i] - q[i]);
        den += (t[i] - 0.3) * (t[i] - 0.3);
    }
    CHECK(nmse(t, q, 0.3) == Approx(num / den).epsilon(1e-12));

    CHECK_THROWS_AS(nmse(Eigen::Vector3d::Constant(-60), Eigen::Vector3d::Zero(), -60.0), DomainError);
    CHECK_THROWS_AS(nmse(p, Eigen::Vector3d::Zero(), pbar), InputError);
}

TEST_CASE("summaries ignore excluded runs")
{
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const auto s = summarize({1.0, nan, 3.0, 2.0});
    CHECK(s.excluded == 1);
    CHECK(s.mean == Approx(2.0));
    CHECK(s.std == Approx(1.0)); // sample standard deviation of {1, 2, 3}
    CHECK(s.per_run.size() == 4);
    CHECK(std::isnan(summarize({nan, nan}).mean));
}

TEST_CASE("masking thresholds")
{
    const auto s = scenario_preset("indoor-fig4");
    Rng rng(3);
    const auto pts = sample_sensor_locations(s, 80, rng);
    const Eigen::MatrixXd f = noiseless_feature_map(s, pts, FeatureKind::com_nosync);
    Eigen::MatrixXd powers(5, 80);
    for (int n = 0; n < 80; ++n)
    {
        const auto pp = pilot_powers(s, pts[n]);
        for (int l = 0; l < 5; ++l)
            powers(l, n) = pp[l];
    }
    const double inf = std::numeric_limits<double>::infinity();
    CHECK(mask_features(f, powers, -inf, FeatureKind::com_nosync).missing_count() == 0);
    CHECK(mask_features(f, powers, inf, FeatureKind::com_nosync).observed_count() == 0);

    Eigen::Index prev = 0;
    for (double gamma = -90.0; gamma <= -50.0; gamma += 2.5)
    {
        const auto inc = mask_features(f, powers, gamma, FeatureKind::com_nosync);
        CHECK(inc.missing_count() >= prev);
        prev = inc.missing_count();
        // a pair is missing exactly when its weaker pilot is below gamma
        int m = 0;
        for (const auto &[a, b] : transmitter_pairs(5))
        {
            for (int n = 0; n < 80; ++n)
                CHECK(inc.mask(m, n) == (std::min(powers(a, n), powers(b, n)) >= gamma));
            ++m;
        }
    }
    CHECK(prev > 0);

    // per-pilot kinds mask their own pilot only
    Eigen::VectorXd phi = Eigen::VectorXd::Ones(3);
    mask_feature_vector(phi, {-50.0, -80.0, -60.0}, -70.0, FeatureKind::toa);
    CHECK(phi[0] == 1.0);
    CHECK(is_missing(phi[1]));
    CHECK(phi[2] == 1.0);
    CHECK_THROWS_AS(mask_feature_vector(phi, {-50.0, -80.0}, -70.0, FeatureKind::toa), InputError);
}

TEST_CASE("noiseless feature map matches per-point extraction")
{
    const auto s = scenario_preset("indoor-fig4");
    const std::vector<Point2D> pts = {{10.2, 12.3}, {30.1, 20.4}, {45.5, 8.8}};
    for (auto kind : {FeatureKind::com_nosync, FeatureKind::com_sync, FeatureKind::tdoa})
    {
        const Eigen::MatrixXd f = noiseless_feature_map(s, pts, kind);
        for (std::size_t i = 0; i < pts.size(); ++i)
        {
            const auto ref = extract_features(kind, noiseless_pilot_matrix(s, pts[i]), s, 0.0);
            CHECK((f.col(static_cast<Eigen::Index>(i)) - ref.values).norm() <= 1e-12);
        }
    }
}

TEST_CASE("ground truth covers the admissible grid")
{
    const auto s = scenario_preset("indoor-fig4");
    const auto g = ground_truth(s, 2.0);
    const auto grid = admissible_grid(s, 2.0);
    REQUIRE(g.points.size() == grid.size());
    CHECK(static_cast<std::size_t>(g.power_dbw.size()) == grid.size());
    for (std::size_t i = 0; i < grid.size(); i += 37)
        CHECK(g.power_dbw[static_cast<Eigen::Index>(i)] == Approx(true_power(s, grid[i])));
}

TEST_CASE("LocB in an easy free-space regime")
{
    // One dominant source gives a smooth radial field; the weak pilots
    // still provide the anchors (noiseless TDoA does not depend on power).
    ScenarioParams p;
    p.region = {0.0, 0.0, 60.0, 40.0};
    p.transmitters = {{{1, 1}, 1.0}, {{59, 1}, 1e-4}, {{59, 39}, 1e-4}, {{1, 39}, 1e-4}};
    p.bandwidth_hz = 200e6;
    p.num_samples = 100;
    p.noise_variance_w = 0.0;
    ExperimentConfig cfg = small_config("freespace", Estimator::locb, 200, 1);
    cfg.scenario = Scenario(p);
    cfg.snr_db = std::numeric_limits<double>::infinity();
    cfg.center_targets = true;
    cfg.estimators[0].lambda = 1e-4;
    cfg.estimators[0].sigma = 8.0;
    const auto res = run_experiment(cfg);
    CHECK(res.outcomes.at(0).nmse.mean < 0.05);
}

TEST_CASE("experiments are deterministic for a fixed seed")
{
    auto cfg = small_config("indoor-fig4", Estimator::locf, 60, 2);
    cfg.center_targets = true;
    EstimatorSpec locb;
    locb.kind = Estimator::locb;
    locb.lambda = 3.3e-3;
    locb.sigma = 0.5;
    cfg.estimators.push_back(locb);
    const auto a = run_experiment(cfg);
    cfg.jobs = 2;
    const auto b = run_experiment(cfg);
    REQUIRE(a.outcomes.size() == 2);
    for (std::size_t e = 0; e < 2; ++e)
        CHECK(a.outcomes[e].nmse.per_run == b.outcomes[e].nmse.per_run);

    cfg.seed = 43;
    const auto c = run_experiment(cfg);
    CHECK(c.outcomes[0].nmse.per_run != a.outcomes[0].nmse.per_run);
}

TEST_CASE("a map predicting the spatial average scores one")
{
    // With huge lambda and centering, KRR collapses to the training mean;
    // a dense training set makes that mean close to the spatial average.
    auto cfg = small_config("indoor-fig4", Estimator::locf, 400, 1);
    cfg.center_targets = true;
    cfg.snr_db = std::numeric_limits<double>::infinity();
    cfg.estimators[0].lambda = 1e12;
    const auto res = run_experiment(cfg);
    CHECK(res.outcomes[0].nmse.mean == Approx(1.0).margin(0.05));
}

TEST_CASE("more measurements reduce LocF error")
{
    auto cfg = small_config("indoor-fig4", Estimator::locf, 50, 4);
    cfg.center_targets = true;
    const double few = run_experiment(cfg).outcomes[0].nmse.mean;
    cfg.num_measurements = 300;
    const double many = run_experiment(cfg).outcomes[0].nmse.mean;
    CHECK(many < few);
}

TEST_CASE("artifact writers")
{
    auto cfg = small_config("indoor-fig4", Estimator::locb, 40, 1);
    cfg.keep_maps = true;
    const auto res = run_experiment(cfg);
    REQUIRE_FALSE(res.grid.empty());
    CHECK(res.outcomes[0].map.size() == static_cast<Eigen::Index>(res.grid.size()));
    CHECK(res.sensors.size() == 40);

    std::ostringstream results;
    write_results_csv(results, res, 40);
    CHECK(results.str().rfind("estimator,", 0) == 0);

    const auto summary = summary_json(res, 40);
    CHECK(summary.dump().find("locb") != std::string::npos);

    const auto dir = std::filesystem::temp_directory_path();
    const auto pgm = dir / "cartography_eval_test.pgm";
    write_pgm(pgm, cfg.scenario.region(), cfg.grid_resolution, res.grid, res.truth);
    std::ifstream in(pgm, std::ios::binary);
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    in >> magic >> w >> h >> maxval;
    std::filesystem::remove(pgm);
    CHECK(magic == "P5");
    CHECK(w > 0);
    CHECK(h > 0);
    CHECK(maxval == 255);
}
