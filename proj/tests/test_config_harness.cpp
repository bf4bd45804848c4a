#include <catch2/catch.hpp>

#include "pemsim/harness.hpp"
#include "pemsim/svg.hpp"

using namespace pemsim;

namespace {

const char* kMinimalConfig = R"({
  "schema": 1,
  "base_seed": 7,
  "runs_per_cell": 1,
  "scenarios": [{"name": "follow", "id": "TC1", "params": {"lead_speed": 10}}],
  "pems": [{"name": "perfect", "generators": {}}],
  "experiments": [{"scenario": "follow", "pem": "perfect"}]
})";

const char* kGridConfig = R"({
  "schema": 1,
  "base_seed": 20240101,
  "runs_per_cell": 30,
  "scenarios": [{"name": "follow", "id": "TC1", "params": {"lead_speed": [7, 10, 15]}}],
  "pems": [{"name": "markov", "generators": {
    "false_negative": {"steady_state_p": [0.25, 0.5, 0.75, 0.9, 1.0],
                        "mean_sojourn_s": [0.2, 0.5, 1, 2, 5]}}}],
  "experiments": [{"scenario": "follow", "pem": "markov"}]
})";

}  // namespace

TEST_CASE("minimal config: one cell") {
    const auto matrix = parse_experiment_config_text(kMinimalConfig);
    CHECK(matrix.cells.size() == 1);
    CHECK(matrix.runs_per_cell == 1);
    CHECK(matrix.cells[0].scenario_id == ScenarioId::TC1);
    CHECK(matrix.cells[0].pem.zones.size() == 1);
}

TEST_CASE("follow-vehicle grid: 3 speeds x 5 p x 5 sojourn = 75 cells, 2250 episodes") {
    const auto matrix = parse_experiment_config_text(kGridConfig);
    CHECK(matrix.cells.size() == 75);
    CHECK(matrix.cells.size() * matrix.runs_per_cell == 2250);

    // Documented enumeration order: keys sorted lexicographically, first key
    // slowest, values ascending. Here the key order is
    // pem.false_negative.mean_sojourn_s, pem.false_negative.steady_state_p,
    // scenario.lead_speed.
    CHECK(matrix.cells[0].param_map.at("pem.false_negative.mean_sojourn_s") == 0.2);
    CHECK(matrix.cells[0].param_map.at("pem.false_negative.steady_state_p") == 0.25);
    CHECK(matrix.cells[0].param_map.at("scenario.lead_speed") == 7.0);
    CHECK(matrix.cells[1].param_map.at("scenario.lead_speed") == 10.0);
    CHECK(matrix.cells[3].param_map.at("pem.false_negative.steady_state_p") == 0.5);
    CHECK(matrix.cells[15].param_map.at("pem.false_negative.mean_sojourn_s") == 0.5);

    // Cell ids are unique.
    std::set<std::string> ids;
    for (const auto& c : matrix.cells) REQUIRE(ids.insert(c.cell_id).second);
}

TEST_CASE("config validation errors carry the offending path") {
    SECTION("zero sojourn is outside (0, 10]") {
        const char* bad = R"({
          "schema": 1,
          "scenarios": [{"name": "s", "id": "TC1", "params": {}}],
          "pems": [{"name": "m", "generators": {"false_negative":
            {"steady_state_p": 0.5, "mean_sojourn_s": 0.0}}}],
          "experiments": [{"scenario": "s", "pem": "m"}]
        })";
        try {
            parse_experiment_config_text(bad);
            FAIL("expected rejection");
        } catch (const ConfigError& e) {
            const std::string msg = e.what();
            CHECK(msg.find("mean_sojourn_s") != std::string::npos);
            CHECK(msg.find("(0.0s, 10s]") != std::string::npos);
        }
    }
    SECTION("sigma above the calibrated range warns but does not reject") {
        const char* wide = R"({
          "schema": 1,
          "scenarios": [{"name": "s", "id": "TC4", "params": {}}],
          "pems": [{"name": "n", "generators": {"position_noise":
            {"sigma_range_pct": 20, "sigma_azimuth_deg": 0}}}],
          "experiments": [{"scenario": "s", "pem": "n"}]
        })";
        const auto matrix = parse_experiment_config_text(wide);
        REQUIRE_FALSE(matrix.warnings.empty());
        CHECK(matrix.warnings[0].find("sigma_range_pct") != std::string::npos);
    }
    SECTION("unknown fields are rejected by path") {
        const char* unknown = R"({
          "schema": 1,
          "scenarios": [{"name": "s", "id": "TC1", "params": {}}],
          "pems": [{"name": "m", "generators": {"teleportation": {"p": 1}}}],
          "experiments": [{"scenario": "s", "pem": "m"}]
        })";
        CHECK_THROWS_AS(parse_experiment_config_text(unknown), ConfigError);
        const char* unknown_scenario = R"({
          "schema": 1,
          "scenarios": [{"name": "s", "id": "TC9", "params": {}}],
          "pems": [{"name": "m", "generators": {}}],
          "experiments": [{"scenario": "s", "pem": "m"}]
        })";
        CHECK_THROWS_AS(parse_experiment_config_text(unknown_scenario), ConfigError);
    }
    SECTION("schema field is mandatory") {
        CHECK_THROWS_AS(parse_experiment_config_text(R"({"scenarios": []})"), ConfigError);
    }
    SECTION("scenario parameters outside the family range are rejected") {
        const char* bad_speed = R"({
          "schema": 1,
          "scenarios": [{"name": "s", "id": "TC1", "params": {"lead_speed": 12}}],
          "pems": [{"name": "m", "generators": {}}],
          "experiments": [{"scenario": "s", "pem": "m"}]
        })";
        CHECK_THROWS_AS(parse_experiment_config_text(bad_speed), ConfigError);
    }
}

TEST_CASE("condition tables parse and select") {
    const char* conditioned = R"({
      "schema": 1,
      "runs_per_cell": 1,
      "scenarios": [{"name": "s", "id": "TC1", "params": {"lead_speed": 10}}],
      "pems": [{"name": "c", "active_condition": "night", "conditions": {
        "daylight": {},
        "night": {"false_negative": {"steady_state_p": 0.5, "mean_sojourn_s": 1.0}}
      }}],
      "experiments": [{"scenario": "s", "pem": "c"}]
    })";
    const auto matrix = parse_experiment_config_text(conditioned);
    REQUIRE(matrix.cells.size() == 1);
    const PemConfig& pem = matrix.cells[0].pem;
    CHECK(pem.active_condition == "night");
    REQUIRE(pem.condition_tables.count("daylight"));
    REQUIRE(pem.condition_tables.count("night"));
    CHECK(pem.active_table()[0].false_negative.has_value());
    CHECK_FALSE(pem.condition_tables.at("daylight")[0].false_negative.has_value());
}

TEST_CASE("run_experiment: parallelism does not change a single byte") {
    auto matrix = parse_experiment_config_text(kGridConfig);
    matrix.runs_per_cell = 2;  // keep the unit test quick
    const auto r1 = run_experiment(matrix, 1);
    const auto r8 = run_experiment(matrix, 8);
    REQUIRE(r1.records.size() == r8.records.size());
    CHECK(emit_csv(r1.records) == emit_csv(r8.records));
}

TEST_CASE("run_experiment: perfect-PEM cell is a clean baseline") {
    auto matrix = parse_experiment_config_text(kMinimalConfig);
    matrix.runs_per_cell = 5;
    const auto result = run_experiment(matrix, 2);
    REQUIRE(result.summaries.size() == 1);
    CHECK(result.summaries[0].success_rate == 1.0);
    for (const auto& rec : result.records) {
        CHECK_FALSE(rec.anomaly);
        CHECK(rec.metrics.outcome == EpisodeOutcome::GoalReached);
    }
}

TEST_CASE("a throwing episode becomes an anomaly row without aborting the batch") {
    auto matrix = parse_experiment_config_text(kMinimalConfig);
    matrix.runs_per_cell = 4;
    const auto runner = [&](const CellSpec& cell, int run, std::uint64_t seed) {
        if (run == 2) throw std::runtime_error("injected failure");
        return make_default_runner(matrix)(cell, run, seed);
    };
    const auto result = run_experiment(matrix, 3, runner);
    REQUIRE(result.records.size() == 4);
    CHECK(result.records[2].anomaly);
    CHECK(result.records[2].anomaly_message == "injected failure");
    CHECK_FALSE(result.records[1].anomaly);
    const std::string csv = emit_csv(result.records);
    CHECK(csv.find("anomaly") != std::string::npos);
}

TEST_CASE("csv emission and round trip") {
    RunRecord rec;
    rec.cell_id = "c0";
    rec.cell_index = 0;
    rec.run_index = 0;
    rec.seed = 123;
    rec.scenario = "TC1";
    rec.params = {{"scenario.lead_speed", 10.0}};
    rec.metrics.min_spatial_m = 3.25;
    rec.metrics.min_temporal_s = 1.5;
    rec.metrics.min_ttc_s = 2.0;
    rec.metrics.detection_frequency = 0.75;
    rec.metrics.max_nondetection_s = 0.4;
    rec.metrics.outcome = EpisodeOutcome::GoalReached;

    SECTION("one record gives a two-line file") {
        const std::string csv = emit_csv({rec});
        CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
        const CsvTable table = parse_csv(csv);
        REQUIRE(table.rows.size() == 1);
        CHECK(table.header.front() == "cell_id");
        const auto col = table.column("detection_freq");
        REQUIRE(col.has_value());
        CHECK(table.rows[0][*col] == "0.75");
        CHECK(table.rows[0][*table.column("outcome")] == "goal_reached");
    }
    SECTION("empty record set is rejected") {
        CHECK_THROWS_AS(emit_csv({}), std::invalid_argument);
    }
    SECTION("hostile strings survive quoting") {
        RngStream rng(15);
        const std::string alphabet = "ab,\"\n\r;|=x ";
        std::vector<RunRecord> recs;
        for (int i = 0; i < 40; ++i) {
            RunRecord r = rec;
            r.run_index = i;
            std::string name;
            const int len = 1 + static_cast<int>(rng.uniform() * 12);
            for (int k = 0; k < len; ++k)
                name += alphabet[static_cast<std::size_t>(rng.uniform() * alphabet.size())];
            r.cell_id = name;
            r.scenario = name + "!";
            recs.push_back(r);
        }
        const CsvTable table = parse_csv(emit_csv(recs));
        REQUIRE(table.rows.size() == recs.size());
        for (std::size_t i = 0; i < recs.size(); ++i) {
            CHECK(table.rows[i][0] == recs[i].cell_id);
            CHECK(table.rows[i][3] == recs[i].scenario);
        }
    }
}

TEST_CASE("scatter svg") {
    SECTION("single point lands in the expected bin") {
        const std::string svg = scatter_svg({2.0}, {5.0}, "detection_freq", "min_spatial_m");
        CHECK(svg.rfind("<svg", 0) == 0);
        CHECK(svg.find("</svg>") != std::string::npos);
        // Degenerate extent pads to [1.5, 2.5] x [4.5, 5.5]; the point sits in
        // the middle bin (index 25 of 50). Plot area: x in [70, 620],
        // y in [20, 425]; bin w = 11, h = 8.1.
        const std::size_t pos = svg.find("class=\"bin\"");
        REQUIRE(pos != std::string::npos);
        CHECK(svg.find("class=\"bin\"", pos + 1) == std::string::npos);  // exactly one bin
        CHECK(svg.find("<rect class=\"bin\" x=\"345.000\" y=\"214.400\"") != std::string::npos);
        // axis labels carry stat names and units
        CHECK(svg.find("detection_freq</text>") != std::string::npos);
        CHECK(svg.find("min_spatial_m (m)</text>") != std::string::npos);
    }
    SECTION("two identical points share one max-density bin") {
        const std::string svg = scatter_svg({1.0, 1.0}, {2.0, 2.0}, "a", "b");
        const std::size_t pos = svg.find("class=\"bin\"");
        REQUIRE(pos != std::string::npos);
        CHECK(svg.find("class=\"bin\"", pos + 1) == std::string::npos);
        CHECK(svg.find("#fade38") != std::string::npos);  // the yellow end of the ramp
    }
    SECTION("deterministic output") {
        std::vector<double> xs, ys;
        RngStream rng(8);
        for (int i = 0; i < 500; ++i) {
            xs.push_back(rng.uniform());
            ys.push_back(rng.gaussian());
        }
        CHECK(scatter_svg(xs, ys, "x", "y") == scatter_svg(xs, ys, "x", "y"));
    }
    SECTION("empty selection rejected") {
        CHECK_THROWS_AS(scatter_svg({}, {}, "x", "y"), std::invalid_argument);
    }
}

TEST_CASE("summaries serialize to json") {
    auto matrix = parse_experiment_config_text(kMinimalConfig);
    matrix.runs_per_cell = 3;
    const auto result = run_experiment(matrix, 1);
    const json doc = summaries_to_json(result.summaries);
    REQUIRE(doc.is_array());
    REQUIRE(doc.size() == 1);
    CHECK(doc[0]["success_rate"] == 1.0);
    CHECK(doc[0]["run_count"] == 3);
    CHECK(doc[0].contains("min_spatial_m"));
}
