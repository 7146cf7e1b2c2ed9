// SPDX-License-Identifier: Apache-2.0
#include "cartography/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <memory>
#include <mutex>
#include <numeric>
#include <ostream>
#include <thread>

#include <spdlog/spdlog.h>

namespace cartography
{
    double nmse(const Eigen::VectorXd &truth, const Eigen::VectorXd &prediction, double p_bar)
    {
        if (truth.size() != prediction.size() || truth.size() == 0)
            throw InputError("truth and prediction grids must be aligned and non-empty");
        const double den = (truth.array() - p_bar).square().mean();
        if (!(den > 0.0))
            throw DomainError("constant true map: NMSE denominator is zero");
        return (truth - prediction).squaredNorm() / static_cast<double>(truth.size()) / den;
    }

    namespace
    {
        bool is_pairwise(FeatureKind kind) { return kind == FeatureKind::tdoa || kind == FeatureKind::com_nosync; }

        // Pilot indices feeding each feature entry.
        std::vector<std::pair<int, int>> feature_sources(FeatureKind kind, int num_transmitters)
        {
            if (is_pairwise(kind))
                return transmitter_pairs(num_transmitters);
            std::vector<std::pair<int, int>> out;
            for (int l = 0; l < num_transmitters; ++l)
                out.emplace_back(l, l);
            return out;
        }
    } // namespace

    void mask_feature_vector(Eigen::VectorXd &phi, const std::vector<double> &pilot_powers_dbw, double gamma_dbw,
                             FeatureKind kind)
    {
        const auto sources = feature_sources(kind, static_cast<int>(pilot_powers_dbw.size()));
        if (static_cast<Eigen::Index>(sources.size()) != phi.size())
            throw InputError("feature length does not match the number of pilots");
        for (std::size_t m = 0; m < sources.size(); ++m)
        {
            const double weakest = std::min(pilot_powers_dbw[sources[m].first], pilot_powers_dbw[sources[m].second]);
            if (weakest < gamma_dbw)
                phi[static_cast<Eigen::Index>(m)] = missing_value;
        }
    }

    IncompleteFeatureMatrix mask_features(const Eigen::MatrixXd &features, const Eigen::MatrixXd &pilot_powers_dbw,
                                          double gamma_dbw, FeatureKind kind)
    {
        if (features.cols() != pilot_powers_dbw.cols())
            throw InputError("pilot powers need one column per feature column");
        Eigen::MatrixXd values = features;
        std::vector<double> powers(pilot_powers_dbw.rows());
        for (Eigen::Index n = 0; n < values.cols(); ++n)
        {
            for (Eigen::Index l = 0; l < pilot_powers_dbw.rows(); ++l)
                powers[l] = pilot_powers_dbw(l, n);
            Eigen::VectorXd col = values.col(n);
            mask_feature_vector(col, powers, gamma_dbw, kind);
            values.col(n) = col;
        }
        return IncompleteFeatureMatrix::from_sentinels(values);
    }

    std::string to_string(Estimator e)
    {
        switch (e)
        {
        case Estimator::locf: return "locf";
        case Estimator::locf_reduced: return "locf_reduced";
        case Estimator::locf_completion: return "locf_completion";
        case Estimator::locb: return "locb";
        }
        return "unknown";
    }

    Estimator estimator_from_string(const std::string &name)
    {
        for (auto e : {Estimator::locf, Estimator::locf_reduced, Estimator::locf_completion, Estimator::locb})
            if (to_string(e) == name)
                return e;
        throw ConfigError("unknown estimator '" + name + "' (expected locf, locf_reduced, locf_completion or locb)");
    }

    NmseResult summarize(const std::vector<double> &per_run)
    {
        NmseResult out;
        out.per_run = per_run;
        std::vector<double> ok;
        for (double v : per_run)
        {
            if (std::isnan(v))
                ++out.excluded;
            else
                ok.push_back(v);
        }
        if (ok.empty())
        {
            out.mean = out.std = std::numeric_limits<double>::quiet_NaN();
            return out;
        }
        out.mean = std::accumulate(ok.begin(), ok.end(), 0.0) / static_cast<double>(ok.size());
        double ss = 0.0;
        for (double v : ok)
            ss += (v - out.mean) * (v - out.mean);
        out.std = ok.size() > 1 ? std::sqrt(ss / static_cast<double>(ok.size() - 1)) : 0.0;
        return out;
    }

    GroundTruth ground_truth(const Scenario &scenario, double resolution)
    {
        GroundTruth out;
        out.points = admissible_grid(scenario, resolution);
        out.power_dbw.resize(static_cast<Eigen::Index>(out.points.size()));
        for (std::size_t i = 0; i < out.points.size(); ++i)
            out.power_dbw[static_cast<Eigen::Index>(i)] = aggregate_power(pilot_powers(scenario, out.points[i]));
        return out;
    }

    namespace
    {
        double toa_gamma(const Scenario &scenario, double requested)
        {
            if (requested > 0.0)
                return requested;
            // A noiseless scenario has no natural threshold; keep it strictly positive.
            return std::max(default_toa_threshold(scenario), 1e-12);
        }
    } // namespace

    Eigen::MatrixXd noiseless_feature_map(const Scenario &scenario, const std::vector<Point2D> &points,
                                          FeatureKind kind, double toa_threshold)
    {
        const double gamma = toa_gamma(scenario, toa_threshold);
        const int L = static_cast<int>(scenario.num_transmitters());
        const int M = is_pairwise(kind) ? num_pairs(L) : L;
        Eigen::MatrixXd out(M, static_cast<Eigen::Index>(points.size()));
        for (std::size_t i = 0; i < points.size(); ++i)
            out.col(static_cast<Eigen::Index>(i)) =
                extract_features(kind, noiseless_pilot_matrix(scenario, points[i]), scenario, gamma).values;
        return out;
    }

    namespace
    {
        Rng stream(std::uint64_t run_seed, std::uint64_t id)
        {
            std::seed_seq seq{static_cast<std::uint32_t>(run_seed), static_cast<std::uint32_t>(run_seed >> 32),
                              static_cast<std::uint32_t>(id)};
            return Rng(seq);
        }

        enum StreamId : std::uint64_t
        {
            stream_walls = 1,
            stream_subset = 2,
            stream_sensors = 3,
            stream_training_noise = 4,
            stream_query_noise = 5,
        };

        // Noiseless per-point quantities on the evaluation grid.
        struct GridCache
        {
            std::vector<Point2D> points;
            Eigen::VectorXd truth;
            std::vector<PilotMatrix> pilots;
            std::vector<std::vector<double>> powers;
            double p_bar = 0.0;
        };

        GridCache build_grid(const Scenario &scenario, double resolution)
        {
            GridCache g;
            g.points = admissible_grid(scenario, resolution);
            if (g.points.empty())
                throw ConfigError("evaluation grid has no admissible points");
            g.truth.resize(static_cast<Eigen::Index>(g.points.size()));
            g.pilots.reserve(g.points.size());
            g.powers.reserve(g.points.size());
            for (std::size_t i = 0; i < g.points.size(); ++i)
            {
                g.pilots.push_back(noiseless_pilot_matrix(scenario, g.points[i]));
                g.powers.push_back(pilot_powers(scenario, g.points[i]));
                g.truth[static_cast<Eigen::Index>(i)] = aggregate_power(g.powers.back());
            }
            g.p_bar = g.truth.mean();
            return g;
        }

        struct Sample
        {
            Eigen::VectorXd phi; // selected features, NaN = missing
            PilotMatrix pilot;   // noisy pilot matrix
            std::vector<double> powers;
        };

        // Everything an estimator needs at query time.
        class FittedEstimator
        {
        public:
            virtual ~FittedEstimator() = default;
            virtual double predict(const Sample &s) const = 0;
        };

        class LocfEstimator final : public FittedEstimator
        {
        public:
            LocfEstimator(FittedMap map, double fallback) : map_(std::move(map)), fallback_(fallback) {}
            double predict(const Sample &s) const override
            {
                if (!s.phi.allFinite())
                    return fallback_;
                return cartography::predict(map_, s.phi);
            }

        private:
            FittedMap map_;
            double fallback_;
        };

        class CompletionEstimator final : public FittedEstimator
        {
        public:
            CompletionEstimator(FittedMap map, QueryRecoveryContext ctx, double fallback)
                : map_(std::move(map)), ctx_(std::move(ctx)), fallback_(fallback)
            {
            }
            double predict(const Sample &s) const override
            {
                const auto rec = rls_recover_query(ctx_, s.phi);
                if (rec.status == RecoveryStatus::fallback)
                    return fallback_;
                return map_.evaluate(rec.reduced);
            }

        private:
            FittedMap map_;
            QueryRecoveryContext ctx_;
            double fallback_;
        };

        class LocbEstimator final : public FittedEstimator
        {
        public:
            explicit LocbEstimator(LocbModel model) : model_(std::move(model)) {}
            double predict(const Sample &s) const override { return locb_predict(model_, s.pilot); }
            const LocbModel &model() const { return model_; }

        private:
            LocbModel model_;
        };

        struct RunOutput
        {
            std::vector<double> nmse;            // per estimator, NaN when excluded
            std::vector<Eigen::VectorXd> maps;   // per estimator (run 0 only)
            double mean_missing = 0.0;
            std::vector<Point2D> grid;
            Eigen::VectorXd truth;
            std::vector<Point2D> sensors;
            std::vector<LocationRecord> locations;
        };

        std::unique_ptr<FittedEstimator> fit_estimator(const EstimatorSpec &spec, const ExperimentConfig &cfg,
                                                       const Scenario &scenario, const std::vector<Sample> &train,
                                                       const Eigen::VectorXd &targets)
        {
            const FitOptions options{cfg.center_targets};
            const double fallback = targets.mean();
            const Eigen::Index N = targets.size();
            const Eigen::Index M = train.front().phi.size();

            if (spec.kind == Estimator::locb)
            {
                std::vector<PilotMatrix> pilots;
                pilots.reserve(train.size());
                for (const auto &s : train)
                    pilots.push_back(s.pilot);
                LocbParams params;
                params.sigma = spec.sigma;
                params.lambda = spec.lambda;
                params.fit = options;
                return std::make_unique<LocbEstimator>(locb_fit(scenario, pilots, targets, params));
            }

            Eigen::MatrixXd phi(M, N);
            for (Eigen::Index n = 0; n < N; ++n)
                phi.col(n) = train[static_cast<std::size_t>(n)].phi;

            if (spec.kind == Estimator::locf_completion)
            {
                const auto incomplete = IncompleteFeatureMatrix::from_sentinels(phi);
                CompletionConfig svp = cfg.svp;
                svp.target_rank = spec.completion_rank;
                const auto completed = svp_complete(incomplete, svp);
                const Eigen::MatrixXd basis = gram_schmidt_basis(completed.completed, spec.completion_rank);
                const Eigen::MatrixXd reduced = basis.transpose() * completed.completed;
                FittedMap map = fit({reduced, targets}, GaussianKernel(spec.sigma), spec.lambda, options);
                auto ctx = build_recovery_context(basis, reduced, spec.mu);
                return std::make_unique<CompletionEstimator>(std::move(map), std::move(ctx), fallback);
            }

            // Plain and reduced LocF train on complete columns only.
            std::vector<Eigen::Index> keep;
            for (Eigen::Index n = 0; n < N; ++n)
                if (phi.col(n).allFinite())
                    keep.push_back(n);
            if (keep.empty())
                throw NumericalError("no training location has a complete feature vector");
            Eigen::MatrixXd x(M, static_cast<Eigen::Index>(keep.size()));
            Eigen::VectorXd p(static_cast<Eigen::Index>(keep.size()));
            for (std::size_t i = 0; i < keep.size(); ++i)
            {
                x.col(static_cast<Eigen::Index>(i)) = phi.col(keep[i]);
                p[static_cast<Eigen::Index>(i)] = targets[keep[i]];
            }

            if (spec.kind == Estimator::locf_reduced)
            {
                auto red = reduce(x, spec.rank);
                FittedMap map = fit({red.reduced, p}, GaussianKernel(spec.sigma), spec.lambda, options);
                return std::make_unique<LocfEstimator>(map.with_basis(std::move(red.basis)), fallback);
            }
            return std::make_unique<LocfEstimator>(fit({x, p}, GaussianKernel(spec.sigma), spec.lambda, options),
                                                   fallback);
        }

        RunOutput run_once(const ExperimentConfig &cfg, const GridCache *shared_grid, int run_index)
        {
            const std::uint64_t run_seed = cfg.seed + static_cast<std::uint64_t>(run_index);
            RunOutput out;

            // World for this run.
            Scenario scenario = cfg.scenario;
            if (!cfg.wall_pool.empty())
            {
                Rng rng = stream(run_seed, stream_walls);
                std::vector<WallSegment> walls;
                std::sample(cfg.wall_pool.begin(), cfg.wall_pool.end(), std::back_inserter(walls), cfg.wall_count,
                            rng);
                scenario = scenario.with_walls(std::move(walls));
            }
            GridCache local;
            if (!shared_grid)
                local = build_grid(scenario, cfg.grid_resolution);
            const GridCache &grid = shared_grid ? *shared_grid : local;

            const int L = static_cast<int>(scenario.num_transmitters());
            const int full_m = is_pairwise(cfg.feature_kind) ? num_pairs(L) : L;
            std::vector<int> selected(full_m);
            std::iota(selected.begin(), selected.end(), 0);
            if (cfg.feature_subset > 0 && cfg.feature_subset < full_m)
            {
                Rng rng = stream(run_seed, stream_subset);
                std::vector<int> pick;
                std::sample(selected.begin(), selected.end(), std::back_inserter(pick), cfg.feature_subset, rng);
                selected = std::move(pick);
            }

            const double gamma_toa = toa_gamma(scenario, cfg.toa_threshold);
            const auto make_sample = [&](PilotMatrix pilot, std::vector<double> powers) {
                const auto fv = extract_features(cfg.feature_kind, pilot, scenario, gamma_toa);
                Eigen::VectorXd phi = fv.values;
                mask_feature_vector(phi, powers, cfg.gamma_dbw, cfg.feature_kind);
                Eigen::VectorXd sel(static_cast<Eigen::Index>(selected.size()));
                for (std::size_t i = 0; i < selected.size(); ++i)
                    sel[static_cast<Eigen::Index>(i)] = phi[selected[i]];
                return Sample{std::move(sel), std::move(pilot), std::move(powers)};
            };

            // Training data.
            Rng sensor_rng = stream(run_seed, stream_sensors);
            const auto sensors = sample_sensor_locations(scenario, cfg.num_measurements, sensor_rng);
            const auto noise = MeasurementNoise::calibrate(grid.p_bar, cfg.snr_db);
            Rng train_rng = stream(run_seed, stream_training_noise);
            std::normal_distribution<double> meas(0.0, noise.sigma_db);
            std::vector<Sample> train;
            Eigen::VectorXd targets(cfg.num_measurements);
            double missing = 0.0;
            for (int n = 0; n < cfg.num_measurements; ++n)
            {
                PilotMatrix pilot = noiseless_pilot_matrix(scenario, sensors[n]);
                add_pilot_noise(pilot, scenario.noise_variance(), train_rng);
                auto powers = pilot_powers(scenario, sensors[n]);
                targets[n] = aggregate_power(powers) + meas(train_rng);
                train.push_back(make_sample(std::move(pilot), std::move(powers)));
                missing += static_cast<double>((train.back().phi.array() != train.back().phi.array()).count());
            }
            out.mean_missing = missing / cfg.num_measurements;

            std::vector<std::unique_ptr<FittedEstimator>> fitted;
            for (const auto &spec : cfg.estimators)
            {
                try
                {
                    fitted.push_back(fit_estimator(spec, cfg, scenario, train, targets));
                }
                catch (const std::runtime_error &e)
                {
                    spdlog::warn("run {}: {} excluded: {}", run_index, spec.name(), e.what());
                    fitted.push_back(nullptr);
                }
            }

            // Grid queries.
            const Eigen::Index G = static_cast<Eigen::Index>(grid.points.size());
            std::vector<Eigen::VectorXd> preds(cfg.estimators.size(), Eigen::VectorXd(G));
            std::vector<bool> failed(cfg.estimators.size(), false);
            Rng query_rng = stream(run_seed, stream_query_noise);
            for (Eigen::Index g = 0; g < G; ++g)
            {
                PilotMatrix pilot = grid.pilots[static_cast<std::size_t>(g)];
                if (cfg.query_noise)
                    add_pilot_noise(pilot, scenario.noise_variance(), query_rng);
                const Sample q = make_sample(std::move(pilot), grid.powers[static_cast<std::size_t>(g)]);
                for (std::size_t e = 0; e < fitted.size(); ++e)
                {
                    if (!fitted[e] || failed[e])
                        continue;
                    try
                    {
                        preds[e][g] = fitted[e]->predict(q);
                    }
                    catch (const std::runtime_error &ex)
                    {
                        spdlog::warn("run {}: {} excluded at query time: {}", run_index, cfg.estimators[e].name(),
                                     ex.what());
                        failed[e] = true;
                    }
                }
            }

            for (std::size_t e = 0; e < fitted.size(); ++e)
            {
                const bool ok = fitted[e] && !failed[e] && preds[e].allFinite();
                out.nmse.push_back(ok ? nmse(grid.truth, preds[e], grid.p_bar)
                                      : std::numeric_limits<double>::quiet_NaN());
            }

            if (cfg.keep_maps && run_index == 0)
            {
                out.maps = preds;
                out.grid = grid.points;
                out.truth = grid.truth;
                out.sensors = sensors;
                for (std::size_t e = 0; e < fitted.size(); ++e)
                {
                    const auto *lb = dynamic_cast<const LocbEstimator *>(fitted[e].get());
                    if (!lb)
                        continue;
                    for (std::size_t n = 0; n < train.size(); ++n)
                    {
                        LocationRecord rec;
                        rec.truth = sensors[n];
                        if (const auto est = locb_localize(lb->model(), train[n].pilot))
                        {
                            rec.estimate = est->xy;
                            rec.residual = est->residual;
                            rec.available = true;
                        }
                        out.locations.push_back(rec);
                    }
                    break;
                }
            }
            return out;
        }
    } // namespace

    ExperimentResult run_experiment(const ExperimentConfig &cfg)
    {
        if (cfg.runs < 1)
            throw ConfigError("runs must be at least 1");
        if (cfg.num_measurements < 2)
            throw ConfigError("at least two measurements are required");
        if (cfg.estimators.empty())
            throw ConfigError("no estimator configured");
        if (!(cfg.grid_resolution > 0.0))
            throw ConfigError("grid resolution must be positive");
        if (!cfg.wall_pool.empty() && (cfg.wall_count < 0 || cfg.wall_count > static_cast<int>(cfg.wall_pool.size())))
            throw ConfigError("wall count must lie between 0 and the wall pool size");

        std::optional<GridCache> shared;
        if (cfg.wall_pool.empty())
            shared = build_grid(cfg.scenario, cfg.grid_resolution);

        std::vector<RunOutput> outputs(static_cast<std::size_t>(cfg.runs));
        std::vector<std::exception_ptr> errors(static_cast<std::size_t>(cfg.runs));
        std::atomic<int> next{0};
        const auto worker = [&] {
            for (int r = next++; r < cfg.runs; r = next++)
            {
                try
                {
                    outputs[static_cast<std::size_t>(r)] = run_once(cfg, shared ? &*shared : nullptr, r);
                    spdlog::debug("run {} done", r);
                }
                catch (...)
                {
                    errors[static_cast<std::size_t>(r)] = std::current_exception();
                }
            }
        };
        int jobs = cfg.jobs > 0 ? cfg.jobs : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
        jobs = std::min(jobs, cfg.runs);
        if (jobs <= 1)
            worker();
        else
        {
            std::vector<std::jthread> pool;
            for (int j = 0; j < jobs; ++j)
                pool.emplace_back(worker);
        }
        for (const auto &e : errors)
            if (e)
                std::rethrow_exception(e);

        ExperimentResult result;
        for (std::size_t e = 0; e < cfg.estimators.size(); ++e)
        {
            std::vector<double> per_run;
            for (const auto &o : outputs)
                per_run.push_back(o.nmse[e]);
            EstimatorOutcome outcome{cfg.estimators[e], summarize(per_run), {}};
            if (cfg.keep_maps)
                outcome.map = outputs.front().maps[e];
            if (outcome.nmse.excluded > 0)
                spdlog::info("{}: {} of {} runs excluded", outcome.spec.name(), outcome.nmse.excluded, cfg.runs);
            result.outcomes.push_back(std::move(outcome));
        }
        for (const auto &o : outputs)
            result.mean_missing_features += o.mean_missing / cfg.runs;
        if (cfg.keep_maps)
        {
            result.grid = outputs.front().grid;
            result.truth = outputs.front().truth;
            result.sensors = outputs.front().sensors;
            result.locations = outputs.front().locations;
        }
        return result;
    }

    void write_truth_csv(std::ostream &out, const GroundTruth &truth)
    {
        out << "x,y,power_dbw\n";
        out.precision(10);
        for (std::size_t i = 0; i < truth.points.size(); ++i)
            out << truth.points[i].x << ',' << truth.points[i].y << ',' << truth.power_dbw[static_cast<Eigen::Index>(i)]
                << '\n';
    }

    void write_map_csv(std::ostream &out, const std::vector<Point2D> &points, const Eigen::VectorXd &truth,
                       const Eigen::VectorXd &prediction)
    {
        out << "x,y,true_dbw,pred_dbw\n";
        out.precision(10);
        for (std::size_t i = 0; i < points.size(); ++i)
        {
            const auto k = static_cast<Eigen::Index>(i);
            out << points[i].x << ',' << points[i].y << ',' << truth[k] << ',' << prediction[k] << '\n';
        }
    }

    void write_feature_csv(std::ostream &out, const std::vector<Point2D> &points, const Eigen::MatrixXd &features)
    {
        out << "x,y";
        for (Eigen::Index m = 0; m < features.rows(); ++m)
            out << ",f" << (m + 1);
        out << '\n';
        out.precision(10);
        for (std::size_t i = 0; i < points.size(); ++i)
        {
            out << points[i].x << ',' << points[i].y;
            for (Eigen::Index m = 0; m < features.rows(); ++m)
            {
                out << ',';
                const double v = features(m, static_cast<Eigen::Index>(i));
                if (!is_missing(v))
                    out << v;
            }
            out << '\n';
        }
    }

    void write_results_csv(std::ostream &out, const ExperimentResult &result, int num_measurements, bool header)
    {
        if (header)
            out << "estimator,N,run,nmse\n";
        out.precision(10);
        for (const auto &o : result.outcomes)
            for (std::size_t r = 0; r < o.nmse.per_run.size(); ++r)
                if (!std::isnan(o.nmse.per_run[r]))
                    out << o.spec.name() << ',' << num_measurements << ',' << r << ',' << o.nmse.per_run[r] << '\n';
    }

    void write_locations_csv(std::ostream &out, const std::vector<LocationRecord> &records)
    {
        out << "x_true,y_true,x_est,y_est,residual\n";
        out.precision(10);
        for (const auto &r : records)
        {
            out << r.truth.x << ',' << r.truth.y << ',';
            if (r.available)
                out << r.estimate.x << ',' << r.estimate.y << ',' << r.residual;
            else
                out << ",,";
            out << '\n';
        }
    }

    void write_pgm(const std::filesystem::path &path, const Region &region, double resolution,
                   const std::vector<Point2D> &points, const Eigen::VectorXd &values)
    {
        if (static_cast<Eigen::Index>(points.size()) != values.size())
            throw InputError("one value per grid point is required");
        const int width = static_cast<int>(std::floor(region.width() / resolution + 1e-9)) + 1;
        const int height = static_cast<int>(std::floor(region.height() / resolution + 1e-9)) + 1;
        std::vector<unsigned char> pixels(static_cast<std::size_t>(width) * height, 0);

        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (Eigen::Index i = 0; i < values.size(); ++i)
            if (std::isfinite(values[i]))
            {
                lo = std::min(lo, values[i]);
                hi = std::max(hi, values[i]);
            }
        const double span = hi > lo ? hi - lo : 1.0;
        for (std::size_t i = 0; i < points.size(); ++i)
        {
            const double v = values[static_cast<Eigen::Index>(i)];
            if (!std::isfinite(v))
                continue;
            const int col = static_cast<int>(std::lround((points[i].x - region.x_min) / resolution));
            const int row = height - 1 - static_cast<int>(std::lround((points[i].y - region.y_min) / resolution));
            if (col < 0 || col >= width || row < 0 || row >= height)
                continue;
            pixels[static_cast<std::size_t>(row) * width + col] =
                static_cast<unsigned char>(1 + std::lround(254.0 * (v - lo) / span));
        }
        std::ofstream out(path, std::ios::binary);
        if (!out)
            throw ConfigError("cannot write " + path.string());
        out << "P5\n" << width << ' ' << height << "\n255\n";
        out.write(reinterpret_cast<const char *>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
    }

    nlohmann::json summary_json(const ExperimentResult &result, int num_measurements)
    {
        nlohmann::json doc;
        doc["N"] = num_measurements;
        doc["mean_missing_features"] = result.mean_missing_features;
        nlohmann::json list = nlohmann::json::array();
        for (const auto &o : result.outcomes)
        {
            list.push_back({{"estimator", o.spec.name()},
                            {"kind", to_string(o.spec.kind)},
                            {"lambda", o.spec.lambda},
                            {"sigma", o.spec.sigma},
                            {"nmse_mean", o.nmse.mean},
                            {"nmse_std", o.nmse.std},
                            {"runs", o.nmse.per_run.size()},
                            {"excluded", o.nmse.excluded}});
        }
        doc["estimators"] = list;
        return doc;
    }

} // namespace cartography
