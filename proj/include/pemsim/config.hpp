#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "pemsim/pem.hpp"
#include "pemsim/policy.hpp"
#include "pemsim/scenario.hpp"

namespace pemsim {

using nlohmann::json;

// Configuration rejection with the offending document path in the message.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& path, const std::string& what)
        : std::runtime_error(path + ": " + what) {}
};

// One fully concrete cell of the experiment grid.
struct CellSpec {
    std::size_t cell_index = 0;
    std::string cell_id;
    ScenarioId scenario_id = ScenarioId::TC1;
    std::string scenario_name;
    ScenarioParams scenario_params;
    PemConfig pem;
    std::map<std::string, double> param_map;  // dotted sweep keys with values
};

struct ExperimentMatrix {
    std::uint64_t base_seed = 0;
    int runs_per_cell = 30;
    double dt = 0.1;
    PolicyConfig policy;
    std::vector<CellSpec> cells;
    std::vector<std::string> warnings;
};

namespace cfg_detail {

inline void require_keys(const json& obj, const std::string& path,
                         const std::set<std::string>& allowed) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!allowed.count(key)) throw ConfigError(path + "." + key, "unknown field");
    }
}

inline double number_at(const json& obj, const std::string& path, const std::string& key) {
    if (!obj.contains(key)) throw ConfigError(path + "." + key, "missing required field");
    if (!obj[key].is_number()) throw ConfigError(path + "." + key, "expected a number");
    return obj[key].get<double>();
}

// A sweepable leaf: a number or an array of numbers. Values are sorted
// ascending, which together with lexicographic key order fixes the documented
// cell enumeration.
inline std::vector<double> sweep_values(const json& v, const std::string& path) {
    std::vector<double> out;
    if (v.is_number()) {
        out.push_back(v.get<double>());
    } else if (v.is_array()) {
        if (v.empty()) throw ConfigError(path, "empty value list");
        for (const auto& e : v) {
            if (!e.is_number()) throw ConfigError(path, "expected numbers");
            out.push_back(e.get<double>());
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
    } else {
        throw ConfigError(path, "expected a number or an array of numbers");
    }
    return out;
}

struct SweepKey {
    std::string name;  // dotted path used in cell ids and CSV columns
    std::vector<double> values;
};

inline const std::map<std::string, std::vector<std::string>>& generator_fields() {
    static const std::map<std::string, std::vector<std::string>> fields = {
        {"false_negative", {"steady_state_p", "mean_sojourn_s"}},
        {"position_noise", {"sigma_range_pct", "sigma_azimuth_deg"}},
        {"tracking_loss", {"p_tl"}},
        {"misclassification", {"p_vehicle_to_pedestrian", "p_pedestrian_to_vehicle"}},
        {"false_positive", {"rate_per_frame", "p_vehicle"}},
    };
    return fields;
}

// Builds one concrete generator config from resolved (component.field -> value)
// assignments, range-checking against the documented intervals.
inline ErrorGeneratorConfig build_generator(const std::map<std::string, double>& vals,
                                            const std::string& path,
                                            std::vector<std::string>& warnings) {
    ErrorGeneratorConfig g;
    const auto get = [&](const std::string& k) { return vals.at(k); };
    const auto has = [&](const std::string& k) { return vals.count(k) > 0; };

    if (has("false_negative.steady_state_p") || has("false_negative.mean_sojourn_s")) {
        FalseNegativeConfig fn;
        fn.steady_state_p =
            has("false_negative.steady_state_p") ? get("false_negative.steady_state_p") : 1.0;
        fn.mean_sojourn_s =
            has("false_negative.mean_sojourn_s") ? get("false_negative.mean_sojourn_s") : 1.0;
        if (fn.steady_state_p < 0.0 || fn.steady_state_p > 1.0)
            throw ConfigError(path + ".false_negative.steady_state_p", "outside [0.0, 1.0]");
        if (fn.mean_sojourn_s <= 0.0 || fn.mean_sojourn_s > 10.0)
            throw ConfigError(path + ".false_negative.mean_sojourn_s", "outside (0.0s, 10s]");
        g.false_negative = fn;
    }
    if (has("position_noise.sigma_range_pct") || has("position_noise.sigma_azimuth_deg")) {
        PositionNoiseConfig pn;
        const double pct =
            has("position_noise.sigma_range_pct") ? get("position_noise.sigma_range_pct") : 0.0;
        const double deg =
            has("position_noise.sigma_azimuth_deg") ? get("position_noise.sigma_azimuth_deg") : 0.0;
        if (pct < 0.0) throw ConfigError(path + ".position_noise.sigma_range_pct", "negative");
        if (deg < 0.0) throw ConfigError(path + ".position_noise.sigma_azimuth_deg", "negative");
        if (pct > 12.0)
            warnings.push_back(path + ".position_noise.sigma_range_pct: " + std::to_string(pct) +
                               " exceeds the calibrated 12% range");
        if (deg > 1.5)
            warnings.push_back(path + ".position_noise.sigma_azimuth_deg: " + std::to_string(deg) +
                               " exceeds the calibrated 1.5 deg range");
        pn.sigma_range_frac = pct / 100.0;
        pn.sigma_azimuth_rad = deg * kPi / 180.0;
        g.position_noise = pn;
    }
    if (has("tracking_loss.p_tl")) {
        const double p = get("tracking_loss.p_tl");
        if (p < 0.0 || p > 1.0) throw ConfigError(path + ".tracking_loss.p_tl", "outside [0, 1]");
        g.tracking_loss = TrackingLossConfig{p};
    }
    if (has("misclassification.p_vehicle_to_pedestrian") ||
        has("misclassification.p_pedestrian_to_vehicle")) {
        const double v2p = has("misclassification.p_vehicle_to_pedestrian")
                               ? get("misclassification.p_vehicle_to_pedestrian")
                               : 0.0;
        const double p2v = has("misclassification.p_pedestrian_to_vehicle")
                               ? get("misclassification.p_pedestrian_to_vehicle")
                               : 0.0;
        if (v2p < 0.0 || v2p > 1.0)
            throw ConfigError(path + ".misclassification.p_vehicle_to_pedestrian", "outside [0, 1]");
        if (p2v < 0.0 || p2v > 1.0)
            throw ConfigError(path + ".misclassification.p_pedestrian_to_vehicle", "outside [0, 1]");
        MisclassificationConfig mc;
        mc.confusion = {{{1.0 - v2p, v2p}, {p2v, 1.0 - p2v}}};
        g.misclassification = mc;
    }
    if (has("false_positive.rate_per_frame") || has("false_positive.p_vehicle")) {
        FalsePositiveConfig fp;
        fp.rate_per_frame =
            has("false_positive.rate_per_frame") ? get("false_positive.rate_per_frame") : 0.0;
        fp.p_vehicle = has("false_positive.p_vehicle") ? get("false_positive.p_vehicle") : 0.5;
        if (fp.rate_per_frame < 0.0)
            throw ConfigError(path + ".false_positive.rate_per_frame", "negative");
        if (fp.p_vehicle < 0.0 || fp.p_vehicle > 1.0)
            throw ConfigError(path + ".false_positive.p_vehicle", "outside [0, 1]");
        g.false_positive = fp;
    }
    return g;
}

inline Zone parse_zone(const json& jz, const std::string& path) {
    require_keys(jz, path, {"zone_id", "azimuth_min_deg", "azimuth_max_deg", "range_min_m",
                            "range_max_m"});
    Zone z;
    if (!jz.contains("zone_id") || !jz["zone_id"].is_string())
        throw ConfigError(path + ".zone_id", "missing or not a string");
    z.zone_id = jz["zone_id"].get<std::string>();
    z.azimuth_min = number_at(jz, path, "azimuth_min_deg") * kPi / 180.0;
    z.azimuth_max = number_at(jz, path, "azimuth_max_deg") * kPi / 180.0;
    z.range_min = number_at(jz, path, "range_min_m");
    z.range_max = jz.contains("range_max_m") ? number_at(jz, path, "range_max_m")
                                             : std::numeric_limits<double>::infinity();
    z.validate();
    return z;
}

inline std::string format_value(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

}  // namespace cfg_detail

// Parses and validates the experiment configuration document and enumerates
// the full Cartesian grid of cells in the documented deterministic order:
// experiments in listing order, sweep keys sorted lexicographically with the
// first key varying slowest, values ascending.
inline ExperimentMatrix parse_experiment_config(const json& doc) {
    using namespace cfg_detail;
    ExperimentMatrix matrix;

    if (!doc.is_object()) throw ConfigError("$", "top level must be an object");
    require_keys(doc, "$",
                 {"schema", "base_seed", "runs_per_cell", "dt", "policy", "scenarios", "pems",
                  "experiments"});
    if (!doc.contains("schema") || !doc["schema"].is_number_integer() ||
        doc["schema"].get<int>() != 1)
        throw ConfigError("$.schema", "must be the integer 1");

    matrix.base_seed = doc.contains("base_seed") ? doc["base_seed"].get<std::uint64_t>() : 0;
    matrix.runs_per_cell = doc.contains("runs_per_cell") ? doc["runs_per_cell"].get<int>() : 30;
    if (matrix.runs_per_cell < 1) throw ConfigError("$.runs_per_cell", "must be >= 1");
    if (matrix.runs_per_cell < 30)
        matrix.warnings.push_back("$.runs_per_cell: below 30, per-cell statistics will be noisy");
    matrix.dt = doc.contains("dt") ? doc["dt"].get<double>() : 0.1;
    if (matrix.dt <= 0.0) throw ConfigError("$.dt", "must be > 0");

    if (doc.contains("policy")) {
        const json& jp = doc["policy"];
        require_keys(jp, "$.policy",
                     {"cruise_speed", "comfort_decel", "emergency_decel", "max_accel", "horizon_s",
                      "prediction_dt", "corridor_margin", "time_headway_s", "standoff_m",
                      "coast_limit", "history_window", "dedup_radius_m"});
        PolicyConfig& p = matrix.policy;
        if (jp.contains("cruise_speed")) p.cruise_speed = jp["cruise_speed"].get<double>();
        if (jp.contains("comfort_decel")) p.comfort_decel = jp["comfort_decel"].get<double>();
        if (jp.contains("emergency_decel")) p.emergency_decel = jp["emergency_decel"].get<double>();
        if (jp.contains("max_accel")) p.max_accel = jp["max_accel"].get<double>();
        if (jp.contains("horizon_s")) p.horizon_s = jp["horizon_s"].get<double>();
        if (jp.contains("prediction_dt")) p.prediction_dt = jp["prediction_dt"].get<double>();
        if (jp.contains("corridor_margin")) p.corridor_margin = jp["corridor_margin"].get<double>();
        if (jp.contains("time_headway_s")) p.time_headway_s = jp["time_headway_s"].get<double>();
        if (jp.contains("standoff_m")) p.standoff_m = jp["standoff_m"].get<double>();
        if (jp.contains("coast_limit")) p.coast_limit = jp["coast_limit"].get<int>();
        if (jp.contains("history_window")) p.history_window = jp["history_window"].get<int>();
        if (jp.contains("dedup_radius_m")) p.dedup_radius_m = jp["dedup_radius_m"].get<double>();
        try {
            p.validate();
        } catch (const std::exception& e) {
            throw ConfigError("$.policy", e.what());
        }
    }

    // Scenario catalog.
    struct ScenarioEntry {
        std::string name;
        ScenarioId id;
        std::vector<SweepKey> sweeps;
    };
    std::map<std::string, ScenarioEntry> scenarios;
    if (!doc.contains("scenarios") || !doc["scenarios"].is_array() || doc["scenarios"].empty())
        throw ConfigError("$.scenarios", "must be a non-empty array");
    for (std::size_t i = 0; i < doc["scenarios"].size(); ++i) {
        const json& js = doc["scenarios"][i];
        const std::string path = "$.scenarios[" + std::to_string(i) + "]";
        require_keys(js, path, {"name", "id", "params"});
        ScenarioEntry entry;
        if (!js.contains("name") || !js["name"].is_string())
            throw ConfigError(path + ".name", "missing or not a string");
        entry.name = js["name"].get<std::string>();
        if (!js.contains("id") || !js["id"].is_string())
            throw ConfigError(path + ".id", "missing or not a string");
        const auto sid = scenario_from_string(js["id"].get<std::string>());
        if (!sid) throw ConfigError(path + ".id", "unknown scenario id");
        entry.id = *sid;
        if (js.contains("params")) {
            for (const auto& [key, value] : js["params"].items())
                entry.sweeps.push_back({key, sweep_values(value, path + ".params." + key)});
        }
        if (scenarios.count(entry.name)) throw ConfigError(path + ".name", "duplicate name");
        scenarios[entry.name] = std::move(entry);
    }

    // PEM catalog. "generators" is shorthand for a single "default" condition
    // table; alternative environmental conditions carry their own static
    // tables and "active_condition" selects which one an experiment runs.
    // Only the active condition's parameters may be swept.
    struct PemEntry {
        std::string name;
        std::vector<Zone> zones;
        std::string active_condition = "default";
        std::map<std::string, ErrorGeneratorConfig> static_tables;  // non-active conditions
        std::vector<SweepKey> sweeps;  // active-condition generator leaves, dotted
    };

    const auto parse_generator_leaves = [](const json& jg, const std::string& path,
                                           bool allow_sweep) {
        std::vector<SweepKey> leaves;
        if (!jg.is_object()) throw ConfigError(path, "must be an object");
        for (const auto& [comp, fields] : jg.items()) {
            const auto& known = generator_fields();
            const auto cit = known.find(comp);
            if (cit == known.end()) throw ConfigError(path + "." + comp, "unknown error generator");
            if (!fields.is_object()) throw ConfigError(path + "." + comp, "must be an object");
            for (const auto& [field, value] : fields.items()) {
                const std::string leaf_path = path + "." + comp + "." + field;
                if (std::find(cit->second.begin(), cit->second.end(), field) == cit->second.end())
                    throw ConfigError(leaf_path, "unknown field");
                auto values = sweep_values(value, leaf_path);
                if (!allow_sweep && values.size() > 1)
                    throw ConfigError(leaf_path, "sweeps are only allowed in the active condition");
                leaves.push_back({comp + "." + field, std::move(values)});
            }
        }
        return leaves;
    };

    std::map<std::string, PemEntry> pems;
    if (!doc.contains("pems") || !doc["pems"].is_array() || doc["pems"].empty())
        throw ConfigError("$.pems", "must be a non-empty array");
    for (std::size_t i = 0; i < doc["pems"].size(); ++i) {
        const json& jp = doc["pems"][i];
        const std::string path = "$.pems[" + std::to_string(i) + "]";
        require_keys(jp, path, {"name", "zones", "generators", "conditions", "active_condition"});
        PemEntry entry;
        if (!jp.contains("name") || !jp["name"].is_string())
            throw ConfigError(path + ".name", "missing or not a string");
        entry.name = jp["name"].get<std::string>();
        if (jp.contains("zones")) {
            if (!jp["zones"].is_array() || jp["zones"].empty())
                throw ConfigError(path + ".zones", "must be a non-empty array");
            for (std::size_t zi = 0; zi < jp["zones"].size(); ++zi)
                entry.zones.push_back(
                    parse_zone(jp["zones"][zi], path + ".zones[" + std::to_string(zi) + "]"));
        } else {
            entry.zones = {full_coverage_zone()};
        }
        if (jp.contains("generators") && jp.contains("conditions"))
            throw ConfigError(path, "use either 'generators' or 'conditions', not both");
        if (jp.contains("active_condition"))
            entry.active_condition = jp["active_condition"].get<std::string>();
        if (jp.contains("conditions")) {
            const json& jc = jp["conditions"];
            if (!jc.is_object() || jc.empty())
                throw ConfigError(path + ".conditions", "must be a non-empty object");
            if (!jc.contains(entry.active_condition))
                throw ConfigError(path + ".active_condition",
                                  "'" + entry.active_condition + "' is not a declared condition");
            for (const auto& [cond, jg] : jc.items()) {
                const bool active = cond == entry.active_condition;
                auto leaves = parse_generator_leaves(jg, path + ".conditions." + cond, active);
                if (active) {
                    entry.sweeps = std::move(leaves);
                } else {
                    std::map<std::string, double> vals;
                    for (const auto& leaf : leaves) vals[leaf.name] = leaf.values.front();
                    entry.static_tables[cond] =
                        build_generator(vals, path + ".conditions." + cond, matrix.warnings);
                }
            }
        } else if (jp.contains("generators")) {
            entry.sweeps = parse_generator_leaves(jp["generators"], path + ".generators", true);
        }
        if (pems.count(entry.name)) throw ConfigError(path + ".name", "duplicate name");
        pems[entry.name] = std::move(entry);
    }

    // Experiments: scenario x PEM pairings, each expanded over both grids.
    if (!doc.contains("experiments") || !doc["experiments"].is_array() ||
        doc["experiments"].empty())
        throw ConfigError("$.experiments", "must be a non-empty array");
    for (std::size_t i = 0; i < doc["experiments"].size(); ++i) {
        const json& je = doc["experiments"][i];
        const std::string path = "$.experiments[" + std::to_string(i) + "]";
        require_keys(je, path, {"scenario", "pem"});
        if (!je.contains("scenario") || !je["scenario"].is_string())
            throw ConfigError(path + ".scenario", "missing or not a string");
        if (!je.contains("pem") || !je["pem"].is_string())
            throw ConfigError(path + ".pem", "missing or not a string");
        const auto sit = scenarios.find(je["scenario"].get<std::string>());
        if (sit == scenarios.end()) throw ConfigError(path + ".scenario", "not a declared scenario");
        const auto pit = pems.find(je["pem"].get<std::string>());
        if (pit == pems.end()) throw ConfigError(path + ".pem", "not a declared PEM");
        const ScenarioEntry& sc = sit->second;
        const PemEntry& pe = pit->second;

        // Combined sweep keys: scenario.* and pem.* sorted lexicographically.
        std::vector<SweepKey> keys;
        for (const SweepKey& k : sc.sweeps) keys.push_back({"scenario." + k.name, k.values});
        for (const SweepKey& k : pe.sweeps) keys.push_back({"pem." + k.name, k.values});
        std::sort(keys.begin(), keys.end(),
                  [](const SweepKey& a, const SweepKey& b) { return a.name < b.name; });

        std::vector<std::size_t> idx(keys.size(), 0);
        bool done = false;
        while (!done) {
            std::map<std::string, double> assignment;
            for (std::size_t k = 0; k < keys.size(); ++k)
                assignment[keys[k].name] = keys[k].values[idx[k]];

            CellSpec cell;
            cell.scenario_id = sc.id;
            cell.scenario_name = sc.name;
            cell.param_map = assignment;
            for (const auto& [key, value] : assignment)
                if (key.rfind("scenario.", 0) == 0)
                    cell.scenario_params[key.substr(9)] = value;

            std::map<std::string, double> gen_vals;
            for (const auto& [key, value] : assignment)
                if (key.rfind("pem.", 0) == 0) gen_vals[key.substr(4)] = value;

            cell.pem.name = pe.name;
            cell.pem.zones = pe.zones;
            ErrorGeneratorConfig gen =
                build_generator(gen_vals, "$.pems(" + pe.name + ")", matrix.warnings);
            cell.pem.condition_tables[pe.active_condition] =
                std::vector<ErrorGeneratorConfig>(pe.zones.size(), gen);
            for (const auto& [cond, static_gen] : pe.static_tables)
                cell.pem.condition_tables[cond] =
                    std::vector<ErrorGeneratorConfig>(pe.zones.size(), static_gen);
            cell.pem.active_condition = pe.active_condition;
            try {
                cell.pem.validate();
                build_scenario(cell.scenario_id, cell.scenario_params);
            } catch (const std::exception& e) {
                throw ConfigError(path, e.what());
            }

            std::string id = sc.name + "+" + pe.name;
            for (const auto& [key, value] : assignment)
                id += "|" + key + "=" + format_value(value);
            cell.cell_id = id;
            cell.cell_index = matrix.cells.size();
            matrix.cells.push_back(std::move(cell));

            done = true;
            for (std::size_t k = keys.size(); k-- > 0;) {
                if (++idx[k] < keys[k].values.size()) {
                    done = false;
                    break;
                }
                idx[k] = 0;
            }
            if (keys.empty()) done = true;
        }
    }
    return matrix;
}

inline ExperimentMatrix parse_experiment_config_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const std::exception& e) {
        throw ConfigError("$", std::string("not valid JSON: ") + e.what());
    }
    return parse_experiment_config(doc);
}

}  // namespace pemsim
