#pragma once

#include <atomic>
#include <cstdio>
#include <functional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "pemsim/config.hpp"
#include "pemsim/metrics.hpp"
#include "pemsim/rng.hpp"
#include "pemsim/sim.hpp"

namespace pemsim {

// One CSV row: a single seeded episode within a grid cell.
struct RunRecord {
    std::string cell_id;
    std::size_t cell_index = 0;
    int run_index = 0;
    std::uint64_t seed = 0;
    std::string scenario;
    std::map<std::string, double> params;
    EpisodeMetrics metrics;
    bool anomaly = false;
    std::string anomaly_message;
};

struct ExperimentResult {
    std::vector<RunRecord> records;             // ordered by (cell_index, run_index)
    std::vector<ExperimentSummary> summaries;   // one per cell
};

using EpisodeRunner =
    std::function<EpisodeMetrics(const CellSpec&, int run_index, std::uint64_t seed)>;

// Default runner: build the scenario, run the closed loop, score the log.
inline EpisodeRunner make_default_runner(const ExperimentMatrix& matrix) {
    return [&matrix](const CellSpec& cell, int, std::uint64_t seed) {
        const ScenarioDefinition scenario = build_scenario(cell.scenario_id, cell.scenario_params);
        const EpisodeLog log = run_episode(scenario, cell.pem, matrix.policy, seed, matrix.dt);
        return compute_metrics(log);
    };
}

// Runs every (cell, run) episode of the matrix on `parallelism` workers.
// Results are written into preassigned slots so output is independent of
// scheduling; seeds come from the documented derive_seed mixing, so they are
// independent of parallelism and execution order as well. A throwing episode
// is recorded as an anomaly row and does not abort the batch.
inline ExperimentResult run_experiment(const ExperimentMatrix& matrix, int parallelism,
                                       const EpisodeRunner& runner) {
    if (parallelism < 1) parallelism = 1;
    ExperimentResult result;
    const std::size_t total = matrix.cells.size() * static_cast<std::size_t>(matrix.runs_per_cell);
    result.records.resize(total);

    std::atomic<std::size_t> cursor{0};
    const auto worker = [&]() {
        while (true) {
            const std::size_t flat = cursor.fetch_add(1);
            if (flat >= total) return;
            const std::size_t ci = flat / static_cast<std::size_t>(matrix.runs_per_cell);
            const int run = static_cast<int>(flat % static_cast<std::size_t>(matrix.runs_per_cell));
            const CellSpec& cell = matrix.cells[ci];

            RunRecord rec;
            rec.cell_id = cell.cell_id;
            rec.cell_index = cell.cell_index;
            rec.run_index = run;
            rec.seed = derive_seed(matrix.base_seed, cell.cell_index,
                                   static_cast<std::uint64_t>(run));
            rec.scenario = to_string(cell.scenario_id);
            rec.params = cell.param_map;
            try {
                rec.metrics = runner(cell, run, rec.seed);
            } catch (const std::exception& e) {
                rec.anomaly = true;
                rec.anomaly_message = e.what();
            } catch (...) {
                rec.anomaly = true;
                rec.anomaly_message = "unknown error";
            }
            result.records[flat] = std::move(rec);
        }
    };

    if (parallelism == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(static_cast<std::size_t>(parallelism));
        for (int i = 0; i < parallelism; ++i) threads.emplace_back(worker);
        for (std::thread& t : threads) t.join();
    }

    for (const CellSpec& cell : matrix.cells) {
        std::vector<EpisodeMetrics> runs;
        runs.reserve(static_cast<std::size_t>(matrix.runs_per_cell));
        for (int r = 0; r < matrix.runs_per_cell; ++r) {
            const RunRecord& rec =
                result.records[cell.cell_index * static_cast<std::size_t>(matrix.runs_per_cell) +
                               static_cast<std::size_t>(r)];
            if (!rec.anomaly) runs.push_back(rec.metrics);
        }
        if (!runs.empty()) result.summaries.push_back(aggregate(runs, cell.cell_id, cell.param_map));
    }
    return result;
}

inline ExperimentResult run_experiment(const ExperimentMatrix& matrix, int parallelism) {
    return run_experiment(matrix, parallelism, make_default_runner(matrix));
}

// --- CSV -------------------------------------------------------------------

namespace csv_detail {

inline std::string escape(const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

}  // namespace csv_detail

// Records to CSV text. Columns: cell_id, run_index, seed, scenario, the union
// of sweep-parameter keys in lexicographic order, then the metric columns.
// Rows follow (cell_index, run_index) order; floats carry 6 significant
// digits.
inline std::string emit_csv(const std::vector<RunRecord>& records) {
    if (records.empty()) throw std::invalid_argument("emit_csv: no records");
    std::set<std::string> param_keys;
    for (const RunRecord& r : records)
        for (const auto& [key, value] : r.params) {
            (void)value;
            param_keys.insert(key);
        }

    std::string out = "cell_id,run_index,seed,scenario";
    for (const std::string& k : param_keys) out += "," + csv_detail::escape(k);
    out += ",min_spatial_m,min_temporal_s,min_ttc_s,collided,detection_freq,max_nondetect_s,"
           "outcome,anomaly\n";

    for (const RunRecord& r : records) {
        out += csv_detail::escape(r.cell_id);
        out += "," + std::to_string(r.run_index);
        out += "," + std::to_string(r.seed);
        out += "," + csv_detail::escape(r.scenario);
        for (const std::string& k : param_keys) {
            const auto it = r.params.find(k);
            out += ",";
            if (it != r.params.end()) out += csv_detail::fmt(it->second);
        }
        const EpisodeMetrics& m = r.metrics;
        out += "," + csv_detail::fmt(m.min_spatial_m);
        out += "," + csv_detail::fmt(m.min_temporal_s);
        out += "," + csv_detail::fmt(m.min_ttc_s);
        out += std::string(",") + (m.collided ? "1" : "0");
        out += ",";
        if (m.detection_frequency) out += csv_detail::fmt(*m.detection_frequency);
        out += "," + csv_detail::fmt(m.max_nondetection_s);
        out += std::string(",") + (r.anomaly ? "anomaly" : to_string(m.outcome));
        out += std::string(",") + (r.anomaly ? "1" : "0");
        out += "\n";
    }
    return out;
}

// Minimal CSV reader for round-trips and plotting: handles quoting as written
// by emit_csv.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::optional<std::size_t> column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        return std::nullopt;
    }
};

inline CsvTable parse_csv(const std::string& text) {
    CsvTable table;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool any = false;
    const auto end_field = [&]() {
        row.push_back(field);
        field.clear();
    };
    const auto end_row = [&]() {
        end_field();
        if (!any) table.header = row;
        else table.rows.push_back(row);
        any = true;
        row.clear();
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\n') {
            end_row();
        } else if (c != '\r') {
            field += c;
        }
    }
    if (!field.empty() || !row.empty()) end_row();
    return table;
}

// Per-cell summaries as a JSON document.
inline json summaries_to_json(const std::vector<ExperimentSummary>& summaries) {
    json out = json::array();
    for (const ExperimentSummary& s : summaries) {
        json cell;
        cell["cell_id"] = s.cell_id;
        cell["params"] = s.cell_params;
        cell["run_count"] = s.run_count;
        cell["success_rate"] = s.success_rate;
        const auto dist = [](const DistributionSummary& d) {
            return json{{"min", d.min}, {"q1", d.q1}, {"median", d.median}, {"q3", d.q3},
                        {"max", d.max}};
        };
        cell["min_spatial_m"] = dist(s.min_spatial_m);
        cell["min_temporal_s"] = dist(s.min_temporal_s);
        cell["detection_frequency"] = dist(s.detection_frequency);
        cell["max_nondetection_s"] = dist(s.max_nondetection_s);
        out.push_back(cell);
    }
    return out;
}

}  // namespace pemsim
