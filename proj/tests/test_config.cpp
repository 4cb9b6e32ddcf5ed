#include "iqsense/config.hpp"

#include <doctest.h>

using namespace iqsense;

namespace {

std::string error_of(const std::string &text) {
    try {
        (void)parse_config(text);
    } catch (const ConfigError &e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST_CASE("defaults") {
    const ExperimentConfig cfg = parse_config("{}");
    CHECK(cfg.psk_order == 16);
    CHECK(cfg.snr2_db == -10.0);
    CHECK(cfg.trials == 1'000'000);
    CHECK(cfg.mode == DetectorMode::four_level());
    const SensingScenario sc = cfg.scenario();
    CHECK(to_db(image_rejection_ratio(sc.tx())) == doctest::Approx(-15.0));
    CHECK(!sc.joint());
}

TEST_CASE("full config parses") {
    const std::string text = R"({
  "psk_order": 8,
  "snr1_db": 5,
  "snr2_db": -12.5,
  "n_packets": 4,
  "tx_mismatch": {"epsilon": 0.1, "theta": 0.05},
  "rx_mismatch": {"irr_db": -20},
  "mode": "two-cfar",
  "cfar_pfa": 0.05,
  "block_fading": true,
  "trials": 1000,
  "seed": 77,
  "variance_samples": 20000,
  "sweep": {"axis": "snr1_db", "grid": [-4, 0, 4], "modes": ["four", "two-bayes"], "lock_delta_snr_db": 10},
  "outage": {"p_mk": 5, "sec_mismatch": "ideal", "irr_grid": [-30, -20, "-inf"]},
  "frame": {"subcarriers": 64, "users": 4, "pattern": "list", "active": [-3, 5, 32]},
  "figure": {"irr_grid": [-20, -10]},
  "output": {"path": "out.csv", "format": "json"}
})";
    const ExperimentConfig cfg = parse_config(text);
    CHECK(cfg.psk_order == 8);
    CHECK(cfg.n_packets == 4);
    CHECK(cfg.mode.kind() == DetectorMode::Kind::TwoLevelCfar);
    CHECK(cfg.mode.target_pfa() == 0.05);
    REQUIRE(cfg.rx_mismatch);
    CHECK(std::holds_alternative<MismatchSpec::Irr>(cfg.rx_mismatch->form));
    REQUIRE(cfg.sweep);
    CHECK(cfg.sweep->axis == SweepAxis::Snr1Db);
    CHECK(cfg.sweep->modes.size() == 2);
    CHECK(*cfg.sweep->lock_delta_snr_db == 10.0);
    REQUIRE(cfg.outage);
    CHECK(std::isinf(cfg.outage->irr_grid.back()));
    CHECK(cfg.outage->scenario().beta_sq_sec == 0.0);
    REQUIRE(cfg.frame);
    CHECK(cfg.frame->active == std::vector<int>{-3, 5, 32});
    CHECK(cfg.output_format == OutputFormat::Json);
    CHECK(*cfg.output_path == "out.csv");
    CHECK(cfg.scenario().joint());
}

TEST_CASE("round trip is the identity") {
    const std::string text = R"({"snr1_db": 3, "tx_mismatch": {"epsilon": 0.2, "theta": -0.1},
      "sweep": {"grid": [-30, -5]}, "frame": {"pattern": "fig2"},
      "outage": {"irr_grid": ["-inf", -10]}, "figure": {"delta_snr_db": [-10, 0]}})";
    const ExperimentConfig a = parse_config(text);
    const std::string once = serialize_config(a);
    const ExperimentConfig b = parse_config(once);
    CHECK(a == b);
    CHECK(serialize_config(b) == once);
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a).size() == 16);

    ExperimentConfig c = a;
    c.seed += 1;
    CHECK(config_hash(c) != config_hash(a));
    ExperimentConfig d = a;
    d.output_path = "elsewhere.csv";
    CHECK(config_hash(d) == config_hash(a));

    const ExperimentConfig defaults = parse_config("{}");
    CHECK(parse_config(serialize_config(defaults)) == defaults);
}

TEST_CASE("unknown keys are rejected with a location") {
    const std::string msg = error_of("{\n  \"snr1_db\": 1,\n  \"snr_db\": 2\n}");
    CHECK(msg.find("config:3:") == 0);
    CHECK(msg.find("/snr_db") != std::string::npos);
    CHECK(msg.find("unknown key") != std::string::npos);

    const std::string nested = error_of("{\n\"sweep\": {\n  \"grid\": [1],\n  \"axes\": \"irr_db\"\n}}");
    CHECK(nested.find("config:4:") == 0);
    CHECK(nested.find("/sweep/axes") != std::string::npos);
}

TEST_CASE("schema violations") {
    CHECK(error_of("{\"n_packets\": 0}").find("/n_packets") != std::string::npos);
    CHECK(error_of("{\"n_packets\": 1.5}").find("integer") != std::string::npos);
    CHECK(error_of("{\"mode\": \"three\"}").find("/mode") != std::string::npos);
    CHECK(error_of("{\"tx_mismatch\": {\"irr_db\": 3}}").find("/tx_mismatch/irr_db") != std::string::npos);
    CHECK(error_of("{\"tx_mismatch\": {\"epsilon\": 1.5}}").find("/tx_mismatch") != std::string::npos);
    CHECK(error_of("{\"psk_order\": 12}").find("power of two") != std::string::npos);
    CHECK(error_of("{\"trials\": 0}").find("/trials") != std::string::npos);
    CHECK(error_of("{\"trials\": -5}").find("/trials") != std::string::npos);
    CHECK(error_of("{\"cfar_pfa\": 0}").find("/cfar_pfa") != std::string::npos);
    CHECK(error_of("{\"sweep\": {\"grid\": []}}").find("/sweep/grid") != std::string::npos);
    CHECK(error_of("{\"sweep\": {\"grid\": [1], \"axis\": \"time\"}}").find("/sweep/axis") != std::string::npos);
    CHECK(error_of("{\"frame\": {\"active\": [0]}}").find("DC") != std::string::npos);
    CHECK(error_of("{\"frame\": {\"subcarriers\": 64, \"active\": [40]}}").find("/frame/active") != std::string::npos);
    CHECK(error_of("{\"frame\": {\"subcarriers\": 63}}").find("/frame/subcarriers") != std::string::npos);
    CHECK(error_of("{\"frame\": {\"pattern\": \"list\"}}").find("active") != std::string::npos);
    CHECK(error_of("{\"output\": {\"format\": \"xml\"}}").find("/output/format") != std::string::npos);
    CHECK(error_of("{\"variance_samples\": 10}").find("/variance_samples") != std::string::npos);
    CHECK(error_of("[1, 2]").find("expected an object") != std::string::npos);
}

TEST_CASE("malformed JSON reports a line") {
    const std::string msg = error_of("{\n  \"snr1_db\": 1,\n  \"snr2_db\": ,\n}");
    CHECK(msg.find("config:3:") == 0);
    CHECK(msg.find("malformed JSON") != std::string::npos);
    CHECK_THROWS_AS(load_config("/nonexistent/iqsense.json"), ConfigError);
}

TEST_CASE("parse_mode") {
    CHECK(parse_mode("four") == DetectorMode::four_level());
    CHECK(parse_mode("two-bayes") == DetectorMode::two_level_bayes());
    CHECK(parse_mode("two-cfar", 0.2).target_pfa() == 0.2);
    CHECK_THROWS_AS(parse_mode("two"), std::invalid_argument);
}
