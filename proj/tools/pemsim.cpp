// Command-line front end: validates experiment configurations, runs seeded
// Monte Carlo batches, and renders density scatter plots from result CSVs.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "pemsim/harness.hpp"
#include "pemsim/svg.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitIo = 2;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::ios_base::failure("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// A config file that cannot be read is a configuration error (exit 1), not
// an I/O failure of the run itself.
std::string read_config_file(const std::string& path) {
    try {
        return read_file(path);
    } catch (const std::ios_base::failure&) {
        throw pemsim::ConfigError(path, "cannot open configuration file");
    }
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::ios_base::failure("cannot write " + path);
    out << content;
    if (!out) throw std::ios_base::failure("write failed for " + path);
}

int default_parallelism() {
    if (const char* env = std::getenv("PEMSIM_PARALLEL")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

int cmd_validate(const std::string& config_path) {
    const pemsim::ExperimentMatrix matrix =
        pemsim::parse_experiment_config_text(read_config_file(config_path));
    for (const std::string& w : matrix.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "config ok: " << matrix.cells.size() << " cells x " << matrix.runs_per_cell
              << " runs = " << matrix.cells.size() * matrix.runs_per_cell << " episodes\n";
    return kExitOk;
}

int cmd_run(const std::string& config_path, const std::string& out_dir, int parallel,
            std::optional<std::uint64_t> seed_override, const std::string& dump_logs_dir) {
    pemsim::ExperimentMatrix matrix = pemsim::parse_experiment_config_text(read_config_file(config_path));
    for (const std::string& w : matrix.warnings) std::cerr << "warning: " << w << "\n";
    if (seed_override) matrix.base_seed = *seed_override;

    std::filesystem::create_directories(out_dir);
    if (!dump_logs_dir.empty()) std::filesystem::create_directories(dump_logs_dir);

    pemsim::EpisodeRunner runner = [&](const pemsim::CellSpec& cell, int run,
                                       std::uint64_t seed) {
        const auto scenario = pemsim::build_scenario(cell.scenario_id, cell.scenario_params);
        const auto log = pemsim::run_episode(scenario, cell.pem, matrix.policy, seed, matrix.dt);
        if (!dump_logs_dir.empty()) {
            std::ostringstream name;
            name << dump_logs_dir << "/cell" << cell.cell_index << "_run" << run << ".log";
            write_file(name.str(), pemsim::to_log_lines(log));
        }
        return pemsim::compute_metrics(log);
    };

    const auto result = pemsim::run_experiment(matrix, parallel, runner);
    std::vector<std::string> written;
    try {
        write_file(out_dir + "/records.csv", pemsim::emit_csv(result.records));
        written.push_back("records.csv");
        write_file(out_dir + "/summary.json",
                   pemsim::summaries_to_json(result.summaries).dump(2) + "\n");
        written.push_back("summary.json");
    } catch (const std::ios_base::failure&) {
        // Leave a manifest of what did land before aborting.
        std::string manifest = "status: aborted on i/o failure\ncompleted:\n";
        for (const std::string& w : written) manifest += "  " + w + "\n";
        try {
            write_file(out_dir + "/manifest.txt", manifest);
        } catch (...) {
        }
        throw;
    }

    std::size_t anomalies = 0;
    for (const auto& r : result.records)
        if (r.anomaly) ++anomalies;
    for (const auto& s : result.summaries)
        std::cout << s.cell_id << ": success_rate=" << s.success_rate
                  << " median_min_spatial_m=" << s.min_spatial_m.median << "\n";
    std::cout << result.records.size() << " episodes, " << anomalies << " anomalies -> " << out_dir
              << "/records.csv\n";
    return kExitOk;
}

int cmd_plot(const std::string& in_csv, const std::string& x_stat, const std::string& y_stat,
             const std::string& out_svg) {
    const pemsim::CsvTable table = pemsim::parse_csv(read_file(in_csv));
    const auto xcol = table.column(x_stat);
    const auto ycol = table.column(y_stat);
    if (!xcol) throw pemsim::ConfigError("--x", "no column named '" + x_stat + "'");
    if (!ycol) throw pemsim::ConfigError("--y", "no column named '" + y_stat + "'");
    std::vector<double> xs, ys;
    for (const auto& row : table.rows) {
        if (row.size() <= std::max(*xcol, *ycol)) continue;
        const std::string& xf = row[*xcol];
        const std::string& yf = row[*ycol];
        if (xf.empty() || yf.empty()) continue;
        try {
            const double x = std::stod(xf);
            const double y = std::stod(yf);
            xs.push_back(x);
            ys.push_back(y);
        } catch (...) {
            throw pemsim::ConfigError(in_csv, "non-numeric value in column '" + x_stat + "'/'" +
                                                  y_stat + "'");
        }
    }
    if (xs.empty()) throw pemsim::ConfigError(in_csv, "no plottable rows for the chosen stats");
    write_file(out_svg, pemsim::scatter_svg(xs, ys, x_stat, y_stat));
    std::cout << "wrote " << out_svg << " (" << xs.size() << " points)\n";
    return kExitOk;
}

int cmd_list_scenarios() {
    std::cout << "TC1  straight road, follow a traffic vehicle to a red light"
                 "  (lead_speed in {7, 10, 15} m/s)\n"
              << "TC2  alias of the follow-vehicle family (lead_speed in {7, 10, 15} m/s)\n"
              << "TC3  alias of the follow-vehicle family (lead_speed in {7, 10, 15} m/s)\n"
              << "TC4  pedestrian standing in the road  (lateral_offset in [-3.5, 3.5] m)\n"
              << "TC5  jaywalking pedestrian  (walk_speed (0, 3] m/s, trigger_gap [10, 100] m, "
                 "start_lateral [-8, -2.5] m)\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Perception-error-model driving simulator and experiment harness"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", in_csv, x_stat, y_stat, out_svg, dump_logs;
    int parallel = default_parallelism();
    std::uint64_t seed = 0;
    bool seed_set = false;

    auto* run = app.add_subcommand("run", "Run an experiment matrix");
    run->add_option("--config", config_path, "Experiment configuration (JSON)")->required();
    run->add_option("--out", out_dir, "Output directory");
    run->add_option("--parallel", parallel, "Worker count");
    run->add_option("--seed", seed, "Override base_seed")->each([&](const std::string&) {
        seed_set = true;
    });
    run->add_option("--dump-logs", dump_logs, "Write per-episode frame logs to this directory");

    auto* plot = app.add_subcommand("plot", "Density scatter plot from a records CSV");
    plot->add_option("--in", in_csv, "Input records.csv")->required();
    plot->add_option("--x", x_stat, "X statistic (CSV column)")->required();
    plot->add_option("--y", y_stat, "Y statistic (CSV column)")->required();
    plot->add_option("--out", out_svg, "Output SVG path")->required();

    auto* validate = app.add_subcommand("validate", "Parse and validate a configuration");
    validate->add_option("--config", config_path, "Experiment configuration (JSON)")->required();

    app.add_subcommand("list-scenarios", "List the scenario catalog");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (app.got_subcommand("validate")) return cmd_validate(config_path);
        if (app.got_subcommand("run"))
            return cmd_run(config_path, out_dir, parallel,
                           seed_set ? std::optional<std::uint64_t>(seed) : std::nullopt, dump_logs);
        if (app.got_subcommand("plot")) return cmd_plot(in_csv, x_stat, y_stat, out_svg);
        if (app.got_subcommand("list-scenarios")) return cmd_list_scenarios();
    } catch (const pemsim::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::ios_base::failure& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitConfig;
}
