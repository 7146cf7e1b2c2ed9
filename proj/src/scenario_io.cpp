// SPDX-License-Identifier: Apache-2.0
#include "cartography/scenario_io.hpp"

#include <fstream>

namespace cartography
{
    namespace
    {
        using nlohmann::json;

        template <typename T>
        T required(const json &doc, const char *key, const std::string &where)
        {
            if (!doc.is_object() || !doc.contains(key))
                throw ConfigError("missing field '" + std::string(key) + "' in " + where);
            try
            {
                return doc.at(key).get<T>();
            }
            catch (const json::exception &e)
            {
                throw ConfigError("field '" + std::string(key) + "' in " + where + ": " + e.what());
            }
        }

        template <typename T>
        T optional_field(const json &doc, const char *key, T fallback)
        {
            if (!doc.contains(key))
                return fallback;
            try
            {
                return doc.at(key).get<T>();
            }
            catch (const json::exception &e)
            {
                throw ConfigError("field '" + std::string(key) + "': " + e.what());
            }
        }

        constexpr Region indoor_region{0.0, 0.0, 60.0, 40.0};
        constexpr double building_y0 = 6.5;
        constexpr double building_y1 = 33.5;

        WallSegment vertical_wall(double x, const IndoorLayout &layout)
        {
            return {{x, building_y0}, {x, building_y1}, layout.wall_loss_db, layout.max_reflection};
        }
    } // namespace

    Scenario scenario_from_json(const json &doc)
    {
        if (!doc.is_object())
            throw ConfigError("scenario document must be a JSON object");
        ScenarioParams p;
        const json region = required<json>(doc, "region", "scenario");
        p.region = {required<double>(region, "x_min", "region"), required<double>(region, "y_min", "region"),
                    required<double>(region, "x_max", "region"), required<double>(region, "y_max", "region")};

        for (const auto &w : optional_field<json>(doc, "walls", json::array()))
        {
            WallSegment seg;
            seg.a = {required<double>(w, "x1", "wall"), required<double>(w, "y1", "wall")};
            seg.b = {required<double>(w, "x2", "wall"), required<double>(w, "y2", "wall")};
            seg.loss_db = optional_field<double>(w, "loss_db", seg.loss_db);
            seg.max_reflection = optional_field<double>(w, "max_reflection", seg.max_reflection);
            p.walls.push_back(seg);
        }
        for (const auto &t : required<json>(doc, "transmitters", "scenario"))
        {
            Transmitter tx;
            tx.position = {required<double>(t, "x", "transmitter"), required<double>(t, "y", "transmitter")};
            tx.power_w = optional_field<double>(t, "power_w", tx.power_w);
            p.transmitters.push_back(tx);
        }
        p.carrier_hz = required<double>(doc, "carrier_hz", "scenario");
        p.bandwidth_hz = required<double>(doc, "bandwidth_hz", "scenario");
        p.num_samples = required<int>(doc, "num_samples", "scenario");
        // A null noise level (serialized -inf dBm) means noiseless pilots.
        if (doc.contains("noise_dbm") && doc.at("noise_dbm").is_null())
            p.noise_variance_w = 0.0;
        else
            p.noise_variance_w = dbm_to_watts(required<double>(doc, "noise_dbm", "scenario"));
        p.seed = optional_field<std::uint64_t>(doc, "seed", p.seed);
        return Scenario(std::move(p));
    }

    json scenario_to_json(const Scenario &s)
    {
        json doc;
        const auto &r = s.region();
        doc["region"] = {{"x_min", r.x_min}, {"y_min", r.y_min}, {"x_max", r.x_max}, {"y_max", r.y_max}};
        doc["walls"] = json::array();
        for (const auto &w : s.walls())
            doc["walls"].push_back({{"x1", w.a.x},
                                    {"y1", w.a.y},
                                    {"x2", w.b.x},
                                    {"y2", w.b.y},
                                    {"loss_db", w.loss_db},
                                    {"max_reflection", w.max_reflection}});
        doc["transmitters"] = json::array();
        for (const auto &t : s.transmitters())
            doc["transmitters"].push_back({{"x", t.position.x}, {"y", t.position.y}, {"power_w", t.power_w}});
        doc["carrier_hz"] = s.carrier_hz();
        doc["bandwidth_hz"] = s.bandwidth_hz();
        doc["num_samples"] = s.num_samples();
        if (s.noise_variance() > 0.0)
            doc["noise_dbm"] = 10.0 * std::log10(s.noise_variance()) + 30.0;
        else
            doc["noise_dbm"] = nullptr;
        doc["seed"] = s.seed();
        return doc;
    }

    Scenario load_scenario(const std::filesystem::path &path)
    {
        std::ifstream in(path);
        if (!in)
            throw ConfigError("cannot open scenario file " + path.string());
        json doc;
        try
        {
            doc = json::parse(in);
        }
        catch (const json::parse_error &e)
        {
            throw ConfigError(path.string() + ": " + e.what());
        }
        return scenario_from_json(doc);
    }

    std::vector<WallSegment> indoor_wall_pool(const IndoorLayout &layout)
    {
        return {vertical_wall(9.5, layout), vertical_wall(23.5, layout), vertical_wall(37.5, layout),
                vertical_wall(51.5, layout), vertical_wall(30.5, layout)};
    }

    std::vector<WallSegment> indoor_extra_walls(const IndoorLayout &layout)
    {
        return {vertical_wall(16.5, layout), vertical_wall(44.5, layout)};
    }

    std::vector<Transmitter> indoor_transmitters(int count)
    {
        static const std::vector<Point2D> sites = {{1.0, 39.0}, {59.0, 1.0}, {1.0, 1.0}, {59.0, 39.0},
                                                   {30.0, 20.0}, {30.0, 39.0}, {30.0, 1.0}};
        if (count < 1 || count > static_cast<int>(sites.size()))
            throw ConfigError("built-in layouts support 1 to 7 transmitters");
        std::vector<Transmitter> out;
        for (int i = 0; i < count; ++i)
            out.push_back({sites[i], 1.0});
        return out;
    }

    Scenario make_indoor_scenario(const IndoorLayout &layout, std::vector<WallSegment> walls)
    {
        ScenarioParams p;
        p.region = indoor_region;
        p.walls = std::move(walls);
        p.transmitters = indoor_transmitters(layout.num_transmitters);
        p.carrier_hz = 800e6;
        p.bandwidth_hz = layout.bandwidth_hz;
        p.num_samples = layout.num_samples;
        p.noise_variance_w = dbm_to_watts(-70.0);
        p.seed = 1;
        return Scenario(std::move(p));
    }

    std::vector<std::string> scenario_preset_names() { return {"freespace", "indoor-fig4", "indoor-fig10"}; }

    Scenario scenario_preset(const std::string &name, const IndoorLayout &layout)
    {
        if (name == "freespace")
            return make_indoor_scenario(layout, {});
        if (name == "indoor-fig4")
        {
            auto walls = indoor_wall_pool(layout);
            walls.pop_back();
            return make_indoor_scenario(layout, std::move(walls));
        }
        if (name == "indoor-fig10")
        {
            auto walls = indoor_wall_pool(layout);
            for (auto &w : indoor_extra_walls(layout))
                walls.push_back(w);
            return make_indoor_scenario(layout, std::move(walls));
        }
        std::string names;
        for (const auto &n : scenario_preset_names())
            names += (names.empty() ? "" : ", ") + n;
        throw ConfigError("unknown scenario preset '" + name + "' (available: " + names + ")");
    }

} // namespace cartography
