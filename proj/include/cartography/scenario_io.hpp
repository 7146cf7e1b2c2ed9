// SPDX-License-Identifier: Apache-2.0
#ifndef CARTOGRAPHY_SCENARIO_IO_HPP
#define CARTOGRAPHY_SCENARIO_IO_HPP

#include "cartography/propagation.hpp"

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace cartography
{
    // Scenario documents:
    //   { "region": {x_min,y_min,x_max,y_max},
    //     "walls": [{x1,y1,x2,y2,loss_db,max_reflection}],
    //     "transmitters": [{x,y,power_w}],
    //     "carrier_hz", "bandwidth_hz", "num_samples", "noise_dbm", "seed" }

    Scenario scenario_from_json(const nlohmann::json &doc);
    nlohmann::json scenario_to_json(const Scenario &scenario);
    Scenario load_scenario(const std::filesystem::path &path);

    /// Names accepted by scenario_preset().
    std::vector<std::string> scenario_preset_names();

    struct IndoorLayout
    {
        int num_transmitters = 5;
        double bandwidth_hz = 20e6;
        int num_samples = 10;
        double wall_loss_db = 5.0;
        double max_reflection = 0.7;
    };

    /// Built-in scenarios: "freespace", "indoor-fig4" (42 x 27 m building of
    /// parallel walls inside a 60 x 40 m area, L = 5) and "indoor-fig10"
    /// (same building with extra internal walls).
    Scenario scenario_preset(const std::string &name, const IndoorLayout &layout = {});

    /// Candidate wall positions of the indoor building: the four walls of the
    /// base layout followed by the wall splitting the middle room.
    std::vector<WallSegment> indoor_wall_pool(const IndoorLayout &layout = {});

    /// Additional internal walls used by the denser layout.
    std::vector<WallSegment> indoor_extra_walls(const IndoorLayout &layout = {});

    /// First `count` of the seven built-in transmitter sites (count in 1..7).
    std::vector<Transmitter> indoor_transmitters(int count);

    Scenario make_indoor_scenario(const IndoorLayout &layout, std::vector<WallSegment> walls);

} // namespace cartography

#endif
