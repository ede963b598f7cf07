#include "sagin/scenario.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace sagin {
namespace {

// Portable uniform draw on [lo, hi): 53-bit mantissa straight from the
// engine, so generated scenarios are identical across standard libraries.
double uniform(std::mt19937_64& rng, double lo, double hi) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return lo + u * (hi - lo);
}

double straight_line_prop_energy(const Scenario& s, double distance) {
    const int legs = s.num_slots - 1;
    if (legs <= 0) return 0.0;
    const double v = std::max(distance / (legs * s.slot_duration), 0.1);
    return legs * s.slot_duration *
           (s.propulsion_c1 * v * v * v + s.propulsion_c2 / v);
}

}  // namespace

Scenario generate_scenario(int mus, int uavs, int slots, double area,
                           std::uint64_t seed) {
    if (mus < 1 || uavs < 1 || slots < 1)
        throw std::invalid_argument("generate_scenario: counts must be >= 1");
    if (!(area > 0))
        throw std::invalid_argument("generate_scenario: area must be > 0");

    Scenario s;
    s.num_mus = mus;
    s.num_uavs = uavs;
    s.num_slots = slots;
    s.area_side = area;

    // Endpoints on opposite vertical edges, evenly spread so any two UAVs
    // keep the separation minimum on both ends.
    const double reach = (slots - 1) * s.slot_duration * s.max_uav_speed;
    if (area > reach) {
        std::ostringstream msg;
        msg << "generate_scenario: straight-line flight of " << area
            << " m exceeds (N-1)*tau*V_max = " << reach << " m";
        throw std::invalid_argument(msg.str());
    }
    if (uavs > 1 && area / (uavs + 1) < s.min_uav_separation) {
        std::ostringstream msg;
        msg << "generate_scenario: endpoint spacing " << area / (uavs + 1)
            << " m violates min_uav_separation = " << s.min_uav_separation;
        throw std::invalid_argument(msg.str());
    }
    for (int k = 0; k < uavs; ++k) {
        const double y = area * (k + 1) / (uavs + 1);
        s.uav_start.emplace_back(0.0, y);
        s.uav_end.emplace_back(area, y);
    }

    std::mt19937_64 rng(seed);
    for (int m = 0; m < mus; ++m) {
        const double x = uniform(rng, 0.0, area);
        const double y = uniform(rng, 0.0, area);
        s.mu_positions.emplace_back(x, y);
    }
    s.task_bits.assign(mus, std::vector<double>(slots, 0.0));
    s.cycles_per_bit.assign(mus, std::vector<double>(slots, 100.0));
    for (int m = 0; m < mus; ++m)
        for (int n = 0; n < slots; ++n)
            s.task_bits[m][n] = uniform(rng, 5.5e6, 6.5e6);
    for (int m = 0; m < mus; ++m)
        s.leo_gain.push_back(uniform(rng, std::pow(10.0, 0.5), 10.0));

    // Table 1 has no UAV energy budget; allow twice the straight-line
    // propulsion plus a full-rate compute load so baselines stay feasible.
    s.uav_energy_budget =
        2.0 * straight_line_prop_energy(s, area) +
        slots * s.slot_duration * s.uav_energy_coeff * std::pow(s.uav_max_freq, 3);
    return s;
}

std::vector<Violation> validate_scenario(const Scenario& s) {
    std::vector<Violation> out;
    auto bad = [&out](const std::string& field, const std::string& msg) {
        out.push_back({field, msg});
    };
    auto positive = [&](double v, const char* field) {
        if (!(v > 0) || !std::isfinite(v))
            bad(field, "must be strictly positive and finite");
    };

    if (s.num_mus < 1) bad("num_mus", "must be >= 1");
    if (s.num_uavs < 1) bad("num_uavs", "must be >= 1");
    if (s.num_slots < 1) bad("num_slots", "must be >= 1");

    positive(s.slot_duration, "slot_duration");
    positive(s.min_uav_separation, "min_uav_separation");
    positive(s.max_uav_speed, "max_uav_speed");
    positive(s.propulsion_c1, "propulsion_c1");
    positive(s.propulsion_c2, "propulsion_c2");
    positive(s.ref_channel_gain, "ref_channel_gain");
    positive(s.uav_noise_power, "uav_noise_power");
    positive(s.leo_noise_power, "leo_noise_power");
    positive(s.uav_bandwidth, "uav_bandwidth");
    positive(s.leo_bandwidth, "leo_bandwidth");
    positive(s.mu_max_freq, "mu_max_freq");
    positive(s.uav_max_freq, "uav_max_freq");
    positive(s.leo_max_freq, "leo_max_freq");
    positive(s.mu_energy_coeff, "mu_energy_coeff");
    positive(s.uav_energy_coeff, "uav_energy_coeff");
    positive(s.leo_energy_coeff, "leo_energy_coeff");
    positive(s.max_power_uav_link, "max_power_uav_link");
    positive(s.max_power_leo_link, "max_power_leo_link");
    positive(s.uav_energy_budget, "uav_energy_budget");
    positive(s.area_side, "area_side");
    if (s.uav_altitude < 0) bad("uav_altitude", "must be >= 0");

    const std::size_t m_count = static_cast<std::size_t>(std::max(s.num_mus, 0));
    const std::size_t k_count = static_cast<std::size_t>(std::max(s.num_uavs, 0));
    const std::size_t n_count = static_cast<std::size_t>(std::max(s.num_slots, 0));
    if (s.mu_positions.size() != m_count) bad("mu_positions", "size must equal num_mus");
    if (s.leo_gain.size() != m_count) bad("leo_gain", "size must equal num_mus");
    if (s.uav_start.size() != k_count) bad("uav_start", "size must equal num_uavs");
    if (s.uav_end.size() != k_count) bad("uav_end", "size must equal num_uavs");
    auto check_grid = [&](const std::vector<std::vector<double>>& g, const char* field) {
        if (g.size() != m_count) {
            bad(field, "outer size must equal num_mus");
            return;
        }
        for (const auto& row : g)
            if (row.size() != n_count) {
                bad(field, "inner size must equal num_slots");
                return;
            }
    };
    check_grid(s.task_bits, "task_bits");
    check_grid(s.cycles_per_bit, "cycles_per_bit");
    for (std::size_t i = 0; i < s.leo_gain.size(); ++i)
        if (!(s.leo_gain[i] > 0) || !std::isfinite(s.leo_gain[i]))
            bad("leo_gain", "entry " + std::to_string(i) + " must be strictly positive");
    for (const auto& row : s.task_bits)
        for (double d : row)
            if (d < 0 || !std::isfinite(d)) bad("task_bits", "entries must be finite and >= 0");
    for (const auto& row : s.cycles_per_bit)
        for (double c : row)
            if (!(c > 0) || !std::isfinite(c)) bad("cycles_per_bit", "entries must be strictly positive");

    if (s.uav_start.size() == k_count && s.uav_end.size() == k_count) {
        for (int k = 0; k < s.num_uavs; ++k) {
            for (int i = k + 1; i < s.num_uavs; ++i) {
                if ((s.uav_start[k] - s.uav_start[i]).norm() < s.min_uav_separation)
                    bad("min_uav_separation",
                        "start positions of UAVs " + std::to_string(k) + " and " +
                            std::to_string(i) + " are closer than d_min");
                if ((s.uav_end[k] - s.uav_end[i]).norm() < s.min_uav_separation)
                    bad("min_uav_separation",
                        "end positions of UAVs " + std::to_string(k) + " and " +
                            std::to_string(i) + " are closer than d_min");
            }
            const double dist = (s.uav_end[k] - s.uav_start[k]).norm();
            const double reach = (s.num_slots - 1) * s.slot_duration * s.max_uav_speed;
            if (dist > reach + 1e-9)
                bad("max_uav_speed",
                    "UAV " + std::to_string(k) + " endpoint distance " + std::to_string(dist) +
                        " m exceeds (N-1)*tau*V_max = " + std::to_string(reach) + " m");
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON serialization

namespace {

using nlohmann::json;

json vec2_to_json(const Vec2& v) { return json::array({v.x(), v.y()}); }
Vec2 vec2_from_json(const json& j) { return Vec2(j.at(0).get<double>(), j.at(1).get<double>()); }

json settings_to_json(const SolverSettings& t) {
    return json{
        {"ao_tolerance", t.ao_tolerance},
        {"ao_max_iters", t.ao_max_iters},
        {"sca_max_iters", t.sca_max_iters},
        {"sca_tolerance", t.sca_tolerance},
        {"barrier_params",
         {{"initial_weight", t.barrier_params.initial_weight},
          {"multiplier", t.barrier_params.multiplier},
          {"newton_tolerance", t.barrier_params.newton_tolerance},
          {"max_newton_steps", t.barrier_params.max_newton_steps},
          {"gap_tolerance", t.barrier_params.gap_tolerance}}},
        {"lp_tolerance", t.lp_tolerance},
        {"bnb_gap_tolerance", t.bnb_gap_tolerance},
        {"min_speed_floor", t.min_speed_floor},
        {"rng_seed", t.rng_seed},
        {"sp4_distance_mode", t.sp4_distance_mode}};
}

SolverSettings settings_from_json(const json& j) {
    SolverSettings t;
    t.ao_tolerance = j.value("ao_tolerance", t.ao_tolerance);
    t.ao_max_iters = j.value("ao_max_iters", t.ao_max_iters);
    t.sca_max_iters = j.value("sca_max_iters", t.sca_max_iters);
    t.sca_tolerance = j.value("sca_tolerance", t.sca_tolerance);
    if (j.contains("barrier_params")) {
        const json& b = j.at("barrier_params");
        t.barrier_params.initial_weight = b.value("initial_weight", t.barrier_params.initial_weight);
        t.barrier_params.multiplier = b.value("multiplier", t.barrier_params.multiplier);
        t.barrier_params.newton_tolerance = b.value("newton_tolerance", t.barrier_params.newton_tolerance);
        t.barrier_params.max_newton_steps = b.value("max_newton_steps", t.barrier_params.max_newton_steps);
        t.barrier_params.gap_tolerance = b.value("gap_tolerance", t.barrier_params.gap_tolerance);
    }
    t.lp_tolerance = j.value("lp_tolerance", t.lp_tolerance);
    t.bnb_gap_tolerance = j.value("bnb_gap_tolerance", t.bnb_gap_tolerance);
    t.min_speed_floor = j.value("min_speed_floor", t.min_speed_floor);
    t.rng_seed = j.value("rng_seed", t.rng_seed);
    t.sp4_distance_mode = j.value("sp4_distance_mode", t.sp4_distance_mode);
    return t;
}

}  // namespace

std::string scenario_to_json(const Scenario& s, const SolverSettings* settings) {
    json j;
    j["num_mus"] = s.num_mus;
    j["num_uavs"] = s.num_uavs;
    j["num_slots"] = s.num_slots;
    j["slot_duration"] = s.slot_duration;
    j["uav_altitude"] = s.uav_altitude;
    j["min_uav_separation"] = s.min_uav_separation;
    j["max_uav_speed"] = s.max_uav_speed;
    j["propulsion_c1"] = s.propulsion_c1;
    j["propulsion_c2"] = s.propulsion_c2;
    j["ref_channel_gain"] = s.ref_channel_gain;
    j["uav_noise_power"] = s.uav_noise_power;
    j["leo_noise_power"] = s.leo_noise_power;
    j["leo_gain"] = s.leo_gain;
    j["uav_bandwidth"] = s.uav_bandwidth;
    j["leo_bandwidth"] = s.leo_bandwidth;
    j["mu_positions"] = json::array();
    for (const auto& p : s.mu_positions) j["mu_positions"].push_back(vec2_to_json(p));
    j["uav_start"] = json::array();
    for (const auto& p : s.uav_start) j["uav_start"].push_back(vec2_to_json(p));
    j["uav_end"] = json::array();
    for (const auto& p : s.uav_end) j["uav_end"].push_back(vec2_to_json(p));
    j["task_bits"] = s.task_bits;
    j["cycles_per_bit"] = s.cycles_per_bit;
    j["mu_max_freq"] = s.mu_max_freq;
    j["uav_max_freq"] = s.uav_max_freq;
    j["leo_max_freq"] = s.leo_max_freq;
    j["mu_energy_coeff"] = s.mu_energy_coeff;
    j["uav_energy_coeff"] = s.uav_energy_coeff;
    j["leo_energy_coeff"] = s.leo_energy_coeff;
    j["max_power_uav_link"] = s.max_power_uav_link;
    j["max_power_leo_link"] = s.max_power_leo_link;
    j["uav_energy_budget"] = s.uav_energy_budget;
    j["area_side"] = s.area_side;
    if (settings) j["settings"] = settings_to_json(*settings);
    return j.dump(2);
}

Scenario scenario_from_json(const std::string& text, SolverSettings* settings_out) {
    const json j = json::parse(text);
    Scenario s;
    s.num_mus = j.at("num_mus").get<int>();
    s.num_uavs = j.at("num_uavs").get<int>();
    s.num_slots = j.at("num_slots").get<int>();
    s.slot_duration = j.at("slot_duration").get<double>();
    s.uav_altitude = j.at("uav_altitude").get<double>();
    s.min_uav_separation = j.at("min_uav_separation").get<double>();
    s.max_uav_speed = j.at("max_uav_speed").get<double>();
    s.propulsion_c1 = j.at("propulsion_c1").get<double>();
    s.propulsion_c2 = j.at("propulsion_c2").get<double>();
    s.ref_channel_gain = j.at("ref_channel_gain").get<double>();
    s.uav_noise_power = j.at("uav_noise_power").get<double>();
    s.leo_noise_power = j.at("leo_noise_power").get<double>();
    s.leo_gain = j.at("leo_gain").get<std::vector<double>>();
    s.uav_bandwidth = j.at("uav_bandwidth").get<double>();
    s.leo_bandwidth = j.at("leo_bandwidth").get<double>();
    s.mu_positions.clear();
    for (const auto& p : j.at("mu_positions")) s.mu_positions.push_back(vec2_from_json(p));
    s.uav_start.clear();
    for (const auto& p : j.at("uav_start")) s.uav_start.push_back(vec2_from_json(p));
    s.uav_end.clear();
    for (const auto& p : j.at("uav_end")) s.uav_end.push_back(vec2_from_json(p));
    s.task_bits = j.at("task_bits").get<std::vector<std::vector<double>>>();
    s.cycles_per_bit = j.at("cycles_per_bit").get<std::vector<std::vector<double>>>();
    s.mu_max_freq = j.at("mu_max_freq").get<double>();
    s.uav_max_freq = j.at("uav_max_freq").get<double>();
    s.leo_max_freq = j.at("leo_max_freq").get<double>();
    s.mu_energy_coeff = j.at("mu_energy_coeff").get<double>();
    s.uav_energy_coeff = j.at("uav_energy_coeff").get<double>();
    s.leo_energy_coeff = j.at("leo_energy_coeff").get<double>();
    s.max_power_uav_link = j.at("max_power_uav_link").get<double>();
    s.max_power_leo_link = j.at("max_power_leo_link").get<double>();
    s.uav_energy_budget = j.at("uav_energy_budget").get<double>();
    s.area_side = j.at("area_side").get<double>();
    if (settings_out && j.contains("settings"))
        *settings_out = settings_from_json(j.at("settings"));
    return s;
}

void save_scenario(const Scenario& s, const std::string& path,
                   const SolverSettings* settings) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << scenario_to_json(s, settings) << "\n";
}

Scenario load_scenario(const std::string& path, SolverSettings* settings_out) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open scenario file: " + path);
    std::stringstream buf;
    buf << f.rdbuf();
    return scenario_from_json(buf.str(), settings_out);
}

}  // namespace sagin
