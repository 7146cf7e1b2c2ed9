// SPDX-License-Identifier: Apache-2.0
#include "cartography/evaluation.hpp"
#include "cartography/scenario_io.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace
{
    using json = nlohmann::json;
    using namespace cartography;
    namespace fs = std::filesystem;

    struct Globals
    {
        std::string config;
        std::string out = "out";
        std::optional<std::uint64_t> seed;
        int jobs = 0;
        bool verbose = false;
        std::vector<std::string> sets;
    };

    // ---- configuration documents ------------------------------------------------

    json read_json(const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
            throw ConfigError("cannot open config file " + path);
        try
        {
            return json::parse(in);
        }
        catch (const json::parse_error &e)
        {
            throw ConfigError(path + ": " + e.what());
        }
    }

    // key.sub=value; value is parsed as JSON when possible, otherwise kept as a string.
    void apply_overrides(json &doc, const std::vector<std::string> &sets)
    {
        for (const auto &s : sets)
        {
            const auto eq = s.find('=');
            if (eq == std::string::npos || eq == 0)
                throw ConfigError("override '" + s + "' is not of the form key=value");
            std::string pointer = "/" + s.substr(0, eq);
            std::replace(pointer.begin(), pointer.end(), '.', '/');
            const std::string raw = s.substr(eq + 1);
            json value;
            try
            {
                value = json::parse(raw);
            }
            catch (const json::parse_error &)
            {
                value = raw;
            }
            doc[json::json_pointer(pointer)] = value;
        }
    }

    template <typename T>
    T field(const json &doc, const std::string &key, const std::string &ctx)
    {
        if (!doc.contains(key))
            throw ConfigError(ctx + ": missing field '" + key + "'");
        try
        {
            return doc.at(key).get<T>();
        }
        catch (const json::exception &)
        {
            throw ConfigError(ctx + ": field '" + key + "' has the wrong type");
        }
    }

    template <typename T>
    T field_or(const json &doc, const std::string &key, T fallback, const std::string &ctx)
    {
        return doc.contains(key) && !doc.at(key).is_null() ? field<T>(doc, key, ctx) : fallback;
    }

    IndoorLayout layout_from(const json &spec)
    {
        IndoorLayout l;
        if (!spec.is_object())
            return l;
        l.num_transmitters = field_or(spec, "num_transmitters", l.num_transmitters, "scenario");
        l.bandwidth_hz = field_or(spec, "bandwidth_hz", l.bandwidth_hz, "scenario");
        l.num_samples = field_or(spec, "num_samples", l.num_samples, "scenario");
        l.wall_loss_db = field_or(spec, "wall_loss_db", l.wall_loss_db, "scenario");
        l.max_reflection = field_or(spec, "max_reflection", l.max_reflection, "scenario");
        return l;
    }

    // A preset name, a scenario file path, a full scenario document, or
    // {"preset": name, <layout overrides>} / {"file": path}.
    Scenario build_scenario(const json &spec)
    {
        if (spec.is_string())
        {
            const auto s = spec.get<std::string>();
            if (fs::exists(s))
                return load_scenario(s);
            return scenario_preset(s);
        }
        if (!spec.is_object())
            throw ConfigError("scenario must be a preset name, a file path or an object");
        if (spec.contains("region"))
            return scenario_from_json(spec);
        if (spec.contains("file"))
            return load_scenario(field<std::string>(spec, "file", "scenario"));
        return scenario_preset(field<std::string>(spec, "preset", "scenario"), layout_from(spec));
    }

    EstimatorSpec estimator_from_json(const json &j)
    {
        const std::string ctx = "estimator";
        EstimatorSpec e;
        e.kind = estimator_from_string(field<std::string>(j, "kind", ctx));
        e.lambda = field_or(j, "lambda", e.lambda, ctx);
        e.sigma = field_or(j, "sigma", e.sigma, ctx);
        if (j.contains("eta"))
            e.rank = EnergyFraction{field<double>(j, "eta", ctx)};
        else if (j.contains("rank"))
            e.rank = FixedRank{field<int>(j, "rank", ctx)};
        e.completion_rank = field_or(j, "completion_rank", e.completion_rank, ctx);
        e.mu = field_or(j, "mu", e.mu, ctx);
        e.label = field_or(j, "label", std::string{}, ctx);
        return e;
    }

    std::vector<int> int_list(const json &doc, const std::string &key, int fallback)
    {
        if (!doc.contains(key))
            return {fallback};
        if (doc.at(key).is_array())
            return doc.at(key).get<std::vector<int>>();
        return {field<int>(doc, key, "experiment")};
    }

    ExperimentConfig experiment_from_json(const json &d, const Globals &g, int num_measurements)
    {
        const std::string ctx = "experiment";
        if (!d.contains("scenario"))
            throw ConfigError(ctx + ": missing field 'scenario'");
        const json &sspec = d.at("scenario");
        ExperimentConfig cfg{build_scenario(sspec)};

        if (!d.contains("estimators") || !d.at("estimators").is_array() || d.at("estimators").empty())
            throw ConfigError(ctx + ": missing field 'estimators'");
        for (const auto &e : d.at("estimators"))
            cfg.estimators.push_back(estimator_from_json(e));

        cfg.num_measurements = num_measurements;
        cfg.runs = field_or(d, "runs", cfg.runs, ctx);
        cfg.seed = g.seed ? *g.seed : field_or<std::uint64_t>(d, "seed", cfg.seed, ctx);
        cfg.grid_resolution = field_or(d, "grid_resolution", cfg.grid_resolution, ctx);
        cfg.snr_db = field_or(d, "snr_db", cfg.snr_db, ctx);
        cfg.query_noise = field_or(d, "query_noise", cfg.query_noise, ctx);
        cfg.center_targets = field_or(d, "center_targets", cfg.center_targets, ctx);
        cfg.feature_kind = feature_kind_from_string(field_or(d, "feature_kind", to_string(cfg.feature_kind), ctx));
        cfg.toa_threshold = field_or(d, "toa_threshold", cfg.toa_threshold, ctx);
        if (d.contains("gamma_dbw") && !d.at("gamma_dbw").is_null())
            cfg.gamma_dbw = field<double>(d, "gamma_dbw", ctx);
        cfg.feature_subset = field_or(d, "feature_subset", cfg.feature_subset, ctx);
        cfg.keep_maps = field_or(d, "keep_maps", cfg.keep_maps, ctx);
        cfg.jobs = g.jobs > 0 ? g.jobs : field_or(d, "jobs", cfg.jobs, ctx);
        if (d.contains("svp"))
        {
            const auto &s = d.at("svp");
            cfg.svp.step_size = field_or(s, "step_size", cfg.svp.step_size, "svp");
            cfg.svp.max_iters = field_or(s, "max_iters", cfg.svp.max_iters, "svp");
            cfg.svp.tol = field_or(s, "tol", cfg.svp.tol, "svp");
        }
        if (d.contains("wall_count"))
        {
            // Walls are drawn per run from the building's candidate positions.
            cfg.wall_pool = indoor_wall_pool(layout_from(sspec));
            cfg.wall_count = field<int>(d, "wall_count", ctx);
            cfg.scenario = cfg.scenario.with_walls({});
        }
        return cfg;
    }

    // ---- experiment presets ------------------------------------------------------

    json est(const std::string &kind, double lambda, double sigma, const std::string &label = {})
    {
        json j{{"kind", kind}, {"lambda", lambda}, {"sigma", sigma}};
        if (!label.empty())
            j["label"] = label;
        return j;
    }

    const std::vector<std::string> &experiment_preset_names()
    {
        static const std::vector<std::string> names = {"fig4-maps",          "fig5-featuremaps", "fig6-nmse-vs-N",
                                                       "fig7-nmse-vs-walls", "fig8-nmse-vs-M",   "fig10-reduced",
                                                       "fig11-missing"};
        return names;
    }

    // From no missing features to nearly all missing in the indoor presets.
    // The leading null entry means no threshold.
    json gamma_variants()
    {
        json variants = json::array({{{"tag", "gamma=-inf"}, {"gamma_dbw", nullptr}}});
        for (double gm = -80.0; gm <= -60.0; gm += 2.5)
        {
            std::ostringstream tag;
            tag << "gamma=" << gm;
            variants.push_back({{"tag", tag.str()}, {"gamma_dbw", gm}});
        }
        return variants;
    }

    json preset_body(const std::string &name, bool gamma_sweep)
    {
        const json locf4 = est("locf", 1.9e-4, 37.0);
        const json locb4 = est("locb", 3.3e-3, 0.5);
        if (name == "fig4-maps")
            return {{"scenario", "indoor-fig4"}, {"N", 300},      {"runs", 1},
                    {"keep_maps", true},        {"estimators", {locf4, locb4}}};
        if (name == "fig5-featuremaps")
            return {{"type", "featuremaps"}, {"scenario", "indoor-fig4"}, {"feature_kind", "com_nosync"}};
        if (name == "fig6-nmse-vs-N")
            return {{"scenario", "indoor-fig4"},
                    {"N", {100, 150, 200, 300}},
                    {"runs", 20},
                    {"estimators", {locf4, locb4}}};
        if (name == "fig7-nmse-vs-walls")
        {
            struct Row
            {
                double b;
                int k;
                double sb, lb, sf, lf;
            };
            const std::vector<Row> table = {{50e6, 25, 10.1, 1.8e-3, 27, 3.81e-4},
                                            {100e6, 50, 8.9, 9.1e-4, 41, 6.1e-5},
                                            {200e6, 100, 9.0, 7.1e-4, 53, 1.1e-5}};
            json variants = json::array();
            for (const auto &r : table)
                for (int w = 0; w <= 5; ++w)
                {
                    std::ostringstream tag;
                    tag << "B=" << r.b / 1e6 << "MHz,walls=" << w;
                    variants.push_back({{"tag", tag.str()},
                                        {"scenario", {{"preset", "freespace"}, {"bandwidth_hz", r.b},
                                                      {"num_samples", r.k}}},
                                        {"wall_count", w},
                                        {"estimators", {est("locf", r.lf, r.sf), est("locb", r.lb, r.sb)}}});
                }
            return {{"scenario", "freespace"}, {"N", 300}, {"runs", 20}, {"estimators", {locf4}},
                    {"variants", variants}};
        }
        if (name == "fig8-nmse-vs-M")
        {
            json variants = json::array();
            for (int m = 4; m <= 10; ++m)
                variants.push_back({{"tag", "M=" + std::to_string(m)}, {"feature_subset", m}});
            return {{"scenario", "indoor-fig4"}, {"N", {150, 300}},     {"runs", 20},
                    {"estimators", {locf4}},     {"variants", variants}};
        }
        if (name == "fig10-reduced")
        {
            json ests = {est("locf", 1.6e-3, 25.0, "locf_M10")};
            for (int r = 2; r <= 4; ++r)
            {
                json e = est("locf_reduced", 1.6e-3, 25.0, "locf_r" + std::to_string(r));
                e["rank"] = r;
                ests.push_back(e);
            }
            return {{"scenario", "indoor-fig10"}, {"N", 300}, {"runs", 20}, {"estimators", ests}};
        }
        if (name == "fig11-missing")
        {
            json e = est("locf_completion", 1.9e-4, 37.0);
            e["completion_rank"] = 4;
            e["mu"] = 5.42;
            json doc = {{"scenario", "indoor-fig4"}, {"N", 300}, {"runs", 20}, {"gamma_dbw", -75.0},
                        {"estimators", {e}}};
            if (gamma_sweep)
                doc["variants"] = gamma_variants();
            return doc;
        }
        std::string list;
        for (const auto &n : experiment_preset_names())
            list += "\n  " + n;
        throw ConfigError("unknown experiment preset '" + name + "'; available presets:" + list);
    }

    // Figure presets regress mean-removed targets so results do not hinge on
    // the simulator's absolute power level.
    json experiment_preset(const std::string &name, bool gamma_sweep)
    {
        json doc = preset_body(name, gamma_sweep);
        if (doc.value("type", std::string{}) != "featuremaps")
            doc["center_targets"] = true;
        return doc;
    }

    // ---- output helpers ----------------------------------------------------------

    std::ofstream open_out(const fs::path &path)
    {
        std::ofstream out(path);
        if (!out)
            throw ConfigError("cannot write " + path.string());
        return out;
    }

    fs::path out_dir(const Globals &g)
    {
        fs::path dir(g.out);
        fs::create_directories(dir);
        return dir;
    }

    std::string sanitize(std::string s)
    {
        for (auto &c : s)
            if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' && c != '.')
                c = '_';
        return s;
    }

    json load_document(const Globals &g)
    {
        json doc = g.config.empty() ? json::object() : read_json(g.config);
        apply_overrides(doc, g.sets);
        return doc;
    }

    // ---- subcommands -------------------------------------------------------------

    int cmd_scenario(const Globals &g, const std::string &preset, double resolution)
    {
        json doc = load_document(g);
        json spec = !preset.empty() ? json(preset) : doc.contains("scenario") ? doc.at("scenario") : doc;
        if (spec.is_object() && spec.empty())
            throw ConfigError("scenario: give --preset or a --config document");
        const Scenario scenario = build_scenario(spec);
        const auto dir = out_dir(g);
        open_out(dir / "scenario.json") << scenario_to_json(scenario).dump(2) << '\n';
        const auto truth = ground_truth(scenario, resolution);
        auto csv = open_out(dir / "truth.csv");
        write_truth_csv(csv, truth);
        write_pgm(dir / "truth.pgm", scenario.region(), resolution, truth.points, truth.power_dbw);
        spdlog::info("scenario: {} walls, {} transmitters, {} grid points written to {}", scenario.walls().size(),
                     scenario.num_transmitters(), truth.points.size(), dir.string());
        return 0;
    }

    int write_feature_maps(const Globals &g, const json &doc, int reduce_rank, bool pgm)
    {
        const Scenario scenario = build_scenario(doc.contains("scenario") ? doc.at("scenario") : json("indoor-fig4"));
        const auto kind = feature_kind_from_string(field_or(doc, "feature_kind", std::string("com_nosync"), "features"));
        const double res = field_or(doc, "grid_resolution", 1.0, "features");
        const auto points = admissible_grid(scenario, res);
        const Eigen::MatrixXd phi = noiseless_feature_map(scenario, points, kind,
                                                          field_or(doc, "toa_threshold", 0.0, "features"));
        const auto dir = out_dir(g);
        {
            auto out = open_out(dir / "features.csv");
            write_feature_csv(out, points, phi);
        }
        if (pgm)
            for (Eigen::Index m = 0; m < phi.rows(); ++m)
                write_pgm(dir / ("feature_f" + std::to_string(m + 1) + ".pgm"), scenario.region(), res, points,
                          phi.row(m).transpose());
        if (reduce_rank > 0)
        {
            if (!phi.allFinite())
                throw InputError("feature map has missing entries; cannot reduce");
            const auto red = reduce(phi, FixedRank{reduce_rank});
            auto out = open_out(dir / "reduced_features.csv");
            write_feature_csv(out, points, red.reduced);
            if (pgm)
                for (Eigen::Index m = 0; m < red.reduced.rows(); ++m)
                    write_pgm(dir / ("reduced_f" + std::to_string(m + 1) + ".pgm"), scenario.region(), res, points,
                              red.reduced.row(m).transpose());
            const auto sv = red.basis.singular_values;
            json energy = json::array();
            double total = sv.squaredNorm(), acc = 0.0;
            for (Eigen::Index i = 0; i < sv.size(); ++i)
                energy.push_back(total > 0 ? (acc += sv[i] * sv[i]) / total : 0.0);
            open_out(dir / "reduction.json") << json{{"singular_values", std::vector<double>(sv.data(), sv.data() + sv.size())},
                                                     {"cumulative_energy", energy}}
                                                    .dump(2)
                                             << '\n';
        }
        spdlog::info("features: {} x {} map written to {}", phi.rows(), phi.cols(), dir.string());
        return 0;
    }

    int cmd_features(const Globals &g, const std::string &preset, const std::string &kind, int reduce_rank, bool pgm)
    {
        json doc = load_document(g);
        if (!preset.empty())
            doc["scenario"] = preset;
        if (!kind.empty())
            doc["feature_kind"] = kind;
        return write_feature_maps(g, doc, reduce_rank, pgm);
    }

    struct TrainingData
    {
        std::vector<Point2D> sensors;
        Eigen::MatrixXd features;
        Eigen::VectorXd targets;
    };

    TrainingData simulate_training(const Scenario &scenario, int n, std::uint64_t seed, double snr_db,
                                   FeatureKind kind, double toa_threshold)
    {
        Rng rng(seed);
        TrainingData t;
        t.sensors = sample_sensor_locations(scenario, n, rng);
        const auto noise = MeasurementNoise::calibrate(scenario, snr_db);
        const double gamma = toa_threshold > 0 ? toa_threshold : std::max(default_toa_threshold(scenario), 1e-12);
        for (int i = 0; i < n; ++i)
        {
            const auto fv = extract_features(kind, synthesize_pilot_matrix(scenario, t.sensors[i], rng), scenario, gamma);
            if (i == 0)
                t.features.resize(fv.size(), n);
            t.features.col(i) = fv.values;
        }
        t.targets.resize(n);
        for (int i = 0; i < n; ++i)
            t.targets[i] = measure_power(scenario, t.sensors[i], noise, rng);
        return t;
    }

    int cmd_fit(const Globals &g)
    {
        json doc = load_document(g);
        const std::string ctx = "fit";
        if (!doc.contains("scenario"))
            throw ConfigError(ctx + ": missing field 'scenario'");
        const Scenario scenario = build_scenario(doc.at("scenario"));
        json ej;
        if (doc.contains("estimator"))
            ej = doc.at("estimator");
        else if (doc.contains("estimators") && doc.at("estimators").is_array() && !doc.at("estimators").empty())
            ej = doc.at("estimators").front();
        else
            throw ConfigError(ctx + ": missing field 'estimator'");
        const EstimatorSpec spec = estimator_from_json(ej);
        if (spec.kind != Estimator::locf && spec.kind != Estimator::locf_reduced)
            throw ConfigError(ctx + ": only locf and locf_reduced models can be persisted");

        const int n = field<int>(doc, "N", ctx);
        const std::uint64_t seed = g.seed ? *g.seed : field_or<std::uint64_t>(doc, "seed", 1, ctx);
        const auto kind = feature_kind_from_string(field_or(doc, "feature_kind", std::string("com_nosync"), ctx));
        const auto data = simulate_training(scenario, n, seed, field_or(doc, "snr_db", 40.0, ctx), kind,
                                            field_or(doc, "toa_threshold", 0.0, ctx));
        if (!data.features.allFinite())
            throw NumericalError("training features contain missing entries; use the experiment command with completion");

        const FitOptions options{field_or(doc, "center_targets", false, ctx)};
        const GaussianKernel kernel(spec.sigma);
        std::optional<FittedMap> map;
        if (spec.kind == Estimator::locf_reduced)
        {
            auto red = reduce(data.features, spec.rank);
            map = fit({red.reduced, data.targets}, kernel, spec.lambda, options).with_basis(std::move(red.basis));
        }
        else
            map = fit({data.features, data.targets}, kernel, spec.lambda, options);

        const auto dir = out_dir(g);
        json model = model_to_json(*map);
        model["scenario"] = scenario_to_json(scenario);
        model["feature_kind"] = to_string(kind);
        open_out(dir / "model.json") << model.dump(1) << '\n';
        {
            auto out = open_out(dir / "training_features.csv");
            write_feature_csv(out, data.sensors, data.features);
        }
        {
            auto out = open_out(dir / "training_targets.csv");
            write_truth_csv(out, GroundTruth{data.sensors, data.targets});
        }
        spdlog::info("fit: {} on N={} ({} features) written to {}", spec.name(), n, data.features.rows(), dir.string());
        return 0;
    }

    std::vector<std::vector<std::string>> read_csv(const std::string &path, std::vector<std::string> &header)
    {
        std::ifstream in(path);
        if (!in)
            throw ConfigError("cannot open " + path);
        std::vector<std::vector<std::string>> rows;
        std::string line;
        bool first = true;
        while (std::getline(in, line))
        {
            if (!line.empty() && line.back() == '\r')
                line.pop_back();
            if (line.empty())
                continue;
            std::vector<std::string> cells;
            std::stringstream ss(line);
            std::string cell;
            while (std::getline(ss, cell, ','))
                cells.push_back(cell);
            if (line.back() == ',')
                cells.emplace_back();
            if (first)
            {
                header = cells;
                first = false;
            }
            else
                rows.push_back(cells);
        }
        return rows;
    }

    double parse_cell(const std::string &s, const std::string &path)
    {
        if (s.empty())
            return missing_value;
        try
        {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used != s.size())
                throw std::invalid_argument(s);
            return v;
        }
        catch (const std::exception &)
        {
            throw InputError(path + ": cannot parse number '" + s + "'");
        }
    }

    int cmd_predict(const Globals &g, const std::string &model_path, const std::string &features_path,
                    const std::string &points_path, bool noisy)
    {
        const json doc = read_json(model_path);
        const FittedMap map = model_from_json(doc);
        // Written only once every row has been evaluated.
        std::ostringstream out;
        out << "x,y,pred_dbw\n";
        out.precision(17);
        const auto flush = [&] {
            open_out(out_dir(g) / "predictions.csv") << out.str();
            return 0;
        };

        std::vector<std::string> header;
        if (!features_path.empty())
        {
            const auto rows = read_csv(features_path, header);
            const auto m = static_cast<Eigen::Index>(header.size()) - 2;
            if (m != map.input_dim())
                throw InputError("feature file has " + std::to_string(m) + " feature columns; model expects " +
                                 std::to_string(map.input_dim()));
            for (const auto &r : rows)
            {
                if (static_cast<Eigen::Index>(r.size()) != m + 2)
                    throw InputError(features_path + ": ragged row");
                Eigen::VectorXd phi(m);
                for (Eigen::Index i = 0; i < m; ++i)
                    phi[i] = parse_cell(r[i + 2], features_path);
                out << r[0] << ',' << r[1] << ',' << predict(map, phi) << '\n';
            }
            return flush();
        }
        if (points_path.empty())
            throw ConfigError("predict: give --features or --points");
        if (!doc.contains("scenario"))
            throw ConfigError("predict --points needs a model written by 'fit' (embedded scenario)");
        const Scenario scenario = scenario_from_json(doc.at("scenario"));
        const auto kind = feature_kind_from_string(doc.value("feature_kind", std::string("com_nosync")));
        const double gamma = std::max(default_toa_threshold(scenario), 1e-12);
        Rng rng(g.seed.value_or(1));
        for (const auto &r : read_csv(points_path, header))
        {
            if (r.size() < 2)
                throw InputError(points_path + ": expected x,y columns");
            const Point2D p{parse_cell(r[0], points_path), parse_cell(r[1], points_path)};
            if (!scenario.is_admissible(p))
                throw DomainError("query point (" + r[0] + ", " + r[1] + ") is outside the admissible region");
            const PilotMatrix y = noisy ? synthesize_pilot_matrix(scenario, p, rng) : noiseless_pilot_matrix(scenario, p);
            const auto fv = extract_features(kind, y, scenario, gamma);
            out << r[0] << ',' << r[1] << ',' << predict(map, fv.values) << '\n';
        }
        return flush();
    }

    std::vector<json> expand_variants(const json &doc)
    {
        if (!doc.contains("variants"))
            return {doc};
        std::vector<json> out;
        int i = 0;
        for (const auto &v : doc.at("variants"))
        {
            json merged = doc;
            merged.erase("variants");
            merged.merge_patch(v);
            if (!merged.contains("tag"))
                merged["tag"] = "variant" + std::to_string(i);
            out.push_back(std::move(merged));
            ++i;
        }
        return out;
    }

    int cmd_experiment(const Globals &g, const std::string &preset, std::optional<int> runs, bool gamma_sweep,
                       bool maps)
    {
        json doc;
        if (!preset.empty())
        {
            doc = experiment_preset(preset, gamma_sweep);
            if (!g.config.empty())
                doc.merge_patch(read_json(g.config));
        }
        else if (!g.config.empty())
            doc = read_json(g.config);
        else
            throw ConfigError("experiment: give a preset name or --config");
        if (gamma_sweep && preset.empty() && !doc.contains("variants"))
            doc["variants"] = gamma_variants();
        if (runs)
            doc["runs"] = *runs;
        if (maps)
            doc["keep_maps"] = true;
        apply_overrides(doc, g.sets);

        if (doc.value("type", std::string{}) == "featuremaps")
            return write_feature_maps(g, doc, field_or(doc, "reduce_rank", 4, "experiment"), maps);

        // Validate every variant before any computation starts.
        struct Job
        {
            std::string tag;
            ExperimentConfig cfg;
        };
        std::vector<Job> jobs;
        for (const auto &v : expand_variants(doc))
            for (int n : int_list(v, "N", 300))
                jobs.push_back({v.value("tag", std::string{}), experiment_from_json(v, g, n)});

        const auto dir = out_dir(g);
        auto results = open_out(dir / "results.csv");
        results << "estimator,N,run,nmse\n";
        json summary = {{"experiment", preset.empty() ? g.config : preset}, {"points", json::array()}};
        for (const auto &job : jobs)
        {
            spdlog::info("running {}{}N={} ({} runs)", job.tag, job.tag.empty() ? "" : " ", job.cfg.num_measurements,
                         job.cfg.runs);
            ExperimentResult res = run_experiment(job.cfg);
            if (!job.tag.empty())
                for (auto &o : res.outcomes)
                    o.spec.label = o.spec.name() + "@" + job.tag;
            write_results_csv(results, res, job.cfg.num_measurements, false);
            json point = summary_json(res, job.cfg.num_measurements);
            point["tag"] = job.tag;
            summary["points"].push_back(point);
            for (const auto &o : res.outcomes)
                spdlog::info("  {:<28} NMSE {:.4f} +- {:.4f} (excluded {})", o.spec.name(), o.nmse.mean, o.nmse.std,
                             o.nmse.excluded);

            if (job.cfg.keep_maps)
            {
                const std::string suffix = sanitize(job.tag.empty() ? "" : "_" + job.tag) +
                                           (jobs.size() > 1 ? "_N" + std::to_string(job.cfg.num_measurements) : "");
                const Region region = job.cfg.scenario.region();
                const double r = job.cfg.grid_resolution;
                {
                    auto out = open_out(dir / ("truth" + suffix + ".csv"));
                    write_truth_csv(out, GroundTruth{res.grid, res.truth});
                }
                write_pgm(dir / ("truth" + suffix + ".pgm"), region, r, res.grid, res.truth);
                for (const auto &o : res.outcomes)
                {
                    const std::string stem = "map_" + sanitize(to_string(o.spec.kind) +
                                                               (o.spec.label.empty() ? "" : "_" + o.spec.label)) ;
                    auto out = open_out(dir / (stem + ".csv"));
                    write_map_csv(out, res.grid, res.truth, o.map);
                    write_pgm(dir / (stem + ".pgm"), region, r, res.grid, o.map);
                }
                {
                    auto out = open_out(dir / ("sensors" + suffix + ".csv"));
                    out << "x,y\n";
                    for (const auto &p : res.sensors)
                        out << p.x << ',' << p.y << '\n';
                }
                if (!res.locations.empty())
                {
                    auto out = open_out(dir / ("locations" + suffix + ".csv"));
                    write_locations_csv(out, res.locations);
                }
            }
        }
        open_out(dir / "summary.json") << summary.dump(2) << '\n';
        return 0;
    }

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Location-free spectrum cartography"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config, "JSON configuration file");
    app.add_option("--out", g.out, "Output directory")->capture_default_str();
    app.add_option("--seed", g.seed, "Base random seed (overrides the config)");
    app.add_option("--jobs", g.jobs, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
    app.add_flag("--verbose", g.verbose, "Debug logging");
    app.add_option("--set", g.sets, "Config override key=value (repeatable)");

    std::string preset;
    double resolution = 1.0;
    auto *scenario = app.add_subcommand("scenario", "Write a scenario document and its true power map");
    scenario->add_option("--preset", preset, "Built-in scenario preset");
    scenario->add_option("--resolution", resolution, "Grid spacing in meters")->check(CLI::PositiveNumber);

    auto *fit_cmd = app.add_subcommand("fit", "Simulate measurements and fit a location-free map");

    std::string model, features, points;
    bool noisy = false;
    auto *predict_cmd = app.add_subcommand("predict", "Evaluate a saved model");
    predict_cmd->add_option("--model", model, "model.json written by fit")->required();
    predict_cmd->add_option("--features", features, "CSV x,y,f1..fM");
    predict_cmd->add_option("--points", points, "CSV x,y (features are simulated)");
    predict_cmd->add_flag("--noisy", noisy, "Add pilot noise when simulating query features");

    std::string exp_name;
    std::optional<int> runs;
    bool gamma_sweep = false, maps = false;
    auto *experiment = app.add_subcommand("experiment", "Run a Monte Carlo experiment");
    experiment->add_option("name", exp_name, "Preset name");
    experiment->add_option("--runs", runs, "Monte Carlo runs")->check(CLI::PositiveNumber);
    experiment->add_flag("--gamma-sweep", gamma_sweep, "Sweep the sensitivity threshold");
    experiment->add_flag("--maps", maps, "Write run-0 maps (CSV and PGM)");

    std::string feat_preset, feat_kind;
    int reduce_rank = 0;
    bool pgm = false;
    auto *features_cmd = app.add_subcommand("features", "Write noiseless feature maps over the grid");
    features_cmd->add_option("--preset", feat_preset, "Scenario preset");
    features_cmd->add_option("--kind", feat_kind, "toa | com_sync | tdoa | com_nosync");
    features_cmd->add_option("--reduce", reduce_rank, "Also write r reduced features");
    features_cmd->add_flag("--pgm", pgm, "Write one PGM per feature");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp &e)
    {
        return app.exit(e);
    }
    catch (const CLI::ParseError &e)
    {
        app.exit(e);
        return 2;
    }

    spdlog::set_level(g.verbose ? spdlog::level::debug : spdlog::level::info);
    try
    {
        if (*scenario)
            return cmd_scenario(g, preset, resolution);
        if (*fit_cmd)
            return cmd_fit(g);
        if (*predict_cmd)
            return cmd_predict(g, model, features, points, noisy);
        if (*experiment)
            return cmd_experiment(g, exp_name, runs, gamma_sweep, maps);
        if (*features_cmd)
            return cmd_features(g, feat_preset, feat_kind, reduce_rank, pgm);
    }
    catch (const NumericalError &e)
    {
        spdlog::error("{}", e.what());
        return 3;
    }
    catch (const ConfigError &e)
    {
        spdlog::error("{}", e.what());
        return 2;
    }
    catch (const InputError &e)
    {
        spdlog::error("{}", e.what());
        return 2;
    }
    catch (const DomainError &e)
    {
        spdlog::error("{}", e.what());
        return 2;
    }
    catch (const nlohmann::json::exception &e)
    {
        spdlog::error("configuration: {}", e.what());
        return 2;
    }
    catch (const std::exception &e)
    {
        spdlog::error("{}", e.what());
        return 1;
    }
    return 0;
}
