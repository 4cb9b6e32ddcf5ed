#include "iqsense/experiments.hpp"

#include <doctest.h>

#include <sstream>

using namespace iqsense;

namespace {

ExperimentConfig small(std::uint64_t trials = 20'000) {
    ExperimentConfig cfg = parse_config("{}");
    cfg.trials = trials;
    cfg.variance_samples = 20'000;
    return cfg;
}

Cell lookup(const Table &t, const std::string &key) {
    const std::size_t name_col = t.columns.size() == 3 ? 1 : 0;
    for (const auto &row : t.rows) {
        if (std::get<std::string>(row[name_col]) == key) {
            return row.back();
        }
    }
    throw std::out_of_range(key);
}

std::string render(const Report &r, OutputFormat f = OutputFormat::Csv) {
    std::ostringstream out;
    write_report(out, r, f);
    return out.str();
}

} // namespace

TEST_CASE("csv formatting") {
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(-0.0) == "0");
    CHECK(format_number(1e-300) == "1e-300");
    CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(csv_escape("plain") == "plain");
    CHECK(csv_escape("a,b") == "\"a,b\"");
    CHECK(csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");

    Report r;
    r.command = "x";
    r.provenance = {{"tool", "iqsense"}};
    Table t{"t", {"a", "b"}, {}};
    t.add({1.5, std::string("q,r")});
    CHECK_THROWS_AS(t.add({1.0}), std::invalid_argument);
    r.tables.push_back(t);
    CHECK(render(r) == "# tool: iqsense\n# table: t\na,b\n1.5,\"q,r\"\n\n");
    CHECK(render(r, OutputFormat::Json).find("\"rows\"") != std::string::npos);
}

TEST_CASE("analytic report") {
    const ExperimentConfig cfg = parse_config(R"({"snr2_db": 0})");
    const Report r = cmd_analytic(cfg);
    const Table &t = r.table("analytic");
    CHECK(std::get<double>(lookup(t, "sigma2_H1")) == doctest::Approx(0.515811).epsilon(1e-6));
    CHECK(std::get<double>(lookup(t, "sigma2_H3")) == doctest::Approx(1.015811).epsilon(1e-6));
    CHECK(std::get<double>(lookup(t, "s01")) < std::get<double>(lookup(t, "s12")));
    CHECK(std::get<double>(lookup(t, "s12")) < std::get<double>(lookup(t, "s23")));
    CHECK(std::get<std::string>(lookup(t, "H0-H1")) == "no");
    CHECK(std::get<double>(lookup(t, "p_fa_paper_sum")) ==
          doctest::Approx(std::get<double>(lookup(t, "p_fa"))));
    CHECK(r.provenance.size() == 8);
    CHECK(r.provenance[3].first == "config_hash");

    const Report ideal = cmd_analytic(parse_config(R"({"tx_mismatch": "ideal"})"));
    const Table &ti = ideal.table("analytic");
    CHECK(std::get<std::string>(lookup(ti, "H0-H1")) == "yes");
    CHECK(std::get<std::string>(lookup(ti, "H2-H3")) == "yes");
    CHECK(std::get<std::string>(lookup(ti, "binary_detector")) == "yes");
    CHECK(!ideal.notes.empty());

    const Report with_outage = cmd_analytic(parse_config(R"({"outage": {}})"));
    CHECK(std::get<double>(lookup(with_outage.table("analytic"), "gamma_th")) == 1.0);
}

TEST_CASE("sense report and determinism") {
    ExperimentConfig cfg = small();
    CommandOptions one;
    one.run.workers = 1;
    CommandOptions four;
    four.run.workers = 4;
    const std::string a = render(cmd_sense(cfg, one));
    const std::string b = render(cmd_sense(cfg, four));
    CHECK(a == b);
    CHECK(a.find("# config_hash: " + config_hash(cfg)) != std::string::npos);
    CHECK(a.find("# table: cells") != std::string::npos);

    const Report r = cmd_sense(cfg, one);
    CHECK(r.table("cells").rows.size() == 16);
    CHECK(r.table("metrics").rows.size() == 4);

    cfg.trials = 0;
    CHECK_THROWS_AS(cmd_sense(cfg, one), std::invalid_argument);
}

TEST_CASE("figure ids") {
    CHECK_THROWS_AS(cmd_figure(small(), 2, {}), std::invalid_argument);
    CHECK_THROWS_AS(cmd_figure(small(), 7, {}), std::invalid_argument);
}

TEST_CASE("figure 3 and 5 tables") {
    ExperimentConfig cfg = small(50'000);
    cfg.figure = FigureConfig{{-25.0, -15.0}, {}, {}};
    const Report f3 = cmd_figure(cfg, 3, {});
    const Table &t = f3.table("fig3");
    CHECK(t.rows.size() == 4);
    const auto mode = t.column("mode");
    const auto pfa = t.column("pfa_analytic");
    for (std::size_t i = 0; i < t.rows.size(); i += 2) {
        CHECK(std::get<std::string>(t.rows[i][mode]) == "four");
        CHECK(std::get<std::string>(t.rows[i + 1][mode]) == "two-bayes");
        CHECK(std::get<double>(t.rows[i][pfa]) < std::get<double>(t.rows[i + 1][pfa]));
    }

    const Report f5 = cmd_figure(cfg, 5, {});
    const Table &t5 = f5.table("fig5");
    CHECK(t5.rows.size() == 6);
    CHECK(std::get<std::string>(t5.rows[4][t5.column("series")]) == "joint-rx-ideal");
}

TEST_CASE("figure 4 and 6 tables") {
    ExperimentConfig cfg = small(20'000);
    cfg.figure = FigureConfig{{}, {0.0, 10.0}, {-10.0, 0.0}};
    const Table f4 = cmd_figure(cfg, 4, {}).table("fig4");
    CHECK(f4.rows.size() == 6);
    CHECK(std::get<double>(f4.rows[0][f4.column("snr2_db")]) == 10.0);

    cfg.outage = OutageConfig{};
    cfg.outage->irr_grid = {-30.0, -15.0, -5.0};
    const Report f6 = cmd_figure(cfg, 6, {});
    const Table &t = f6.table("fig6");
    CHECK(t.rows.size() == 3);
    const auto analytic = t.column("analytic");
    CHECK(std::get<double>(t.rows[0][analytic]) <= std::get<double>(t.rows[2][analytic]));
    for (const auto &row : t.rows) {
        CHECK(std::get<double>(row[t.column("baseline_analytic")]) ==
              doctest::Approx(std::get<double>(row[t.column("baseline_closed_form")])).epsilon(1e-12));
    }
}

TEST_CASE("occupancy map") {
    OccupancyMap map(8);
    CHECK(map.indices() == std::vector<int>{-4, -3, -2, -1, 1, 2, 3, 4});
    CHECK_THROWS_AS(map.set(0, true), std::out_of_range);
    CHECK_THROWS_AS(map.set(5, true), std::out_of_range);
    CHECK_THROWS_AS(OccupancyMap(7), std::invalid_argument);
    map.set(-2, true);
    CHECK(map.truth(2) == Hypothesis::H1);
    CHECK(map.truth(-2) == Hypothesis::H2);
    map.set(2, true);
    CHECK(map.truth(2) == Hypothesis::H3);
    CHECK(map.truth(1) == Hypothesis::H0);
    CHECK(map.user_of(-4, 4) == 0);
    CHECK(map.user_of(-1, 4) == 1);
    CHECK(map.user_of(1, 4) == 2);
    CHECK(map.user_of(4, 4) == 3);

    RandomStream rng(1);
    FrameConfig fig2;
    fig2.subcarriers = 16;
    fig2.pattern = "fig2";
    const OccupancyMap m2 = OccupancyMap::from_config(fig2, rng);
    CHECK(m2.truth(3) == Hypothesis::H1);
    CHECK(m2.truth(-3) == Hypothesis::H2);
}

TEST_CASE("frame detection") {
    ExperimentConfig cfg = small();
    cfg.frame = FrameConfig{};
    cfg.frame->pattern = "all-idle";
    const Report idle = cmd_frame(cfg, {});
    const Table &per = idle.table("subcarriers");
    CHECK(per.rows.size() == 512);
    const Table &summary = idle.table("summary");
    const double emp = std::get<double>(lookup(summary, "four_level_empirical"));
    const double ana = std::get<double>(lookup(summary, "four_level_analytic"));
    CHECK(std::abs(emp - ana) <= 3.0 * std::sqrt(ana * (1 - ana) / 512.0) + 1e-12);
    std::size_t h0 = 0;
    for (const auto &row : per.rows) {
        h0 += std::get<std::string>(row[per.column("four_level")]) == "H0" ? 1 : 0;
    }
    CHECK(h0 > 400);

    cfg.frame->pattern = "fig2";
    const Report f2 = cmd_frame(cfg, {});
    const Table &p2 = f2.table("subcarriers");
    std::size_t flagged = 0;
    std::size_t vacant = 0;
    for (const auto &row : p2.rows) {
        if (std::get<std::string>(row[p2.column("truth")]) == "H1") {
            ++vacant;
            flagged += std::get<std::string>(row[p2.column("four_level")]) == "H1" ? 1 : 0;
        }
    }
    CHECK(vacant == 256);
    CHECK(flagged > 0);
    CHECK(std::get<std::int64_t>(lookup(f2.table("summary"), "vacant_but_mirror_active_warnings")) > 0);
}

TEST_CASE("outage command") {
    ExperimentConfig cfg = small(100'000);
    cfg.outage = OutageConfig{};
    const Report single = cmd_outage(cfg, {});
    CHECK(single.table("outage").rows.size() == 1);
    cfg.outage->irr_grid = {-20.0, -10.0};
    const Report grid = cmd_outage(cfg, {});
    CHECK(grid.table("outage").rows.size() == 2);
    CHECK(grid.verified);
}

TEST_CASE("sweep command needs a sweep section") {
    CHECK_THROWS_AS(cmd_sweep(small(), {}), std::invalid_argument);
    ExperimentConfig cfg = small(5'000);
    cfg.sweep = SweepConfig{SweepAxis::DeltaSnrDb, {0.0, 10.0}, {DetectorMode::four_level()}, false, {}};
    CHECK(cmd_sweep(cfg, {}).table("sweep").rows.size() == 2);
}
