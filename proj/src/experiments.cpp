#include "iqsense/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#ifndef IQSENSE_VERSION
#define IQSENSE_VERSION "unknown"
#endif

namespace iqsense {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kClosureSigmas = 3.0;

enum FrameStream : std::uint64_t {
    kFrameMap = 0x6d6170,   // "map"
    kFramePair = 0x70616972, // "pair"
};

using Row = std::vector<Cell>;

Cell count_cell(std::uint64_t v) { return static_cast<std::int64_t>(v); }

std::string yes_no(bool b) { return b ? "yes" : "no"; }

Report start_report(const std::string &command, const ExperimentConfig &cfg,
                    const RunOptions &run, std::optional<std::uint64_t> trials) {
    Report r;
    r.command = command;
    r.provenance = {
        {"tool", "iqsense"},
        {"version", IQSENSE_VERSION},
        {"command", command},
        {"config_hash", config_hash(cfg)},
        {"seed", std::to_string(cfg.seed)},
        {"trials_per_hypothesis", trials ? std::to_string(*trials) : "0"},
        {"chunk_size", std::to_string(run.chunk_size)},
        {"variance_samples", std::to_string(run.variance_samples)},
    };
    return r;
}

RunOptions effective(const ExperimentConfig &cfg, RunOptions run) {
    run.variance_samples = cfg.variance_samples;
    return run;
}

double irr_db_of(const MismatchCoefficients &c) {
    return std::norm(c.beta) == 0.0 ? -kInf : to_db(image_rejection_ratio(c));
}

/// Standardized distance of an observed count from its analytic probability.
double closure_z(std::uint64_t count, std::uint64_t n, double p) {
    const double emp = static_cast<double>(count) / static_cast<double>(n);
    const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
    if (se == 0.0) {
        return emp == p ? 0.0 : kInf;
    }
    return (emp - p) / se;
}

double max_closure_z(const TallyMatrix &t, const HypothesisVariances &v, const DecisionRule &rule) {
    const ProbabilityMatrix p = conditional_matrix(v, rule);
    double worst = 0.0;
    for (Hypothesis truth : kHypotheses) {
        for (Hypothesis decided : kHypotheses) {
            const double z = closure_z(t.count(truth, decided), t.trials(truth),
                                       p[index_of(truth)][index_of(decided)]);
            worst = std::max(worst, std::abs(z));
        }
    }
    return worst;
}

std::vector<double> arange(double lo, double hi, double step) {
    std::vector<double> out;
    const auto n = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
    for (int i = 0; i <= n; ++i) {
        out.push_back(lo + step * i);
    }
    return out;
}

const std::vector<std::string> kSweepColumns = {
    "figure",          "series",          "axis",
    "axis_value",      "mode",            "snr1_db",
    "snr2_db",         "irr_db",          "s01",
    "s12",             "s23",             "pfa_analytic",
    "pfa_empirical",   "pfa_half_width",  "pd_analytic",
    "pd_empirical",    "pd_half_width",   "pfa_paper_analytic",
    "pfa_paper_empirical", "pfa_paper_half_width", "pd_paper_analytic",
    "pd_paper_empirical",  "pd_paper_half_width",  "max_abs_z",
    "trials"};

void append_sweep_rows(Table &table, const std::string &figure, const std::string &series,
                       const SweepSpec &spec, const std::vector<SweepRow> &rows,
                       std::uint64_t trials) {
    for (const SweepRow &r : rows) {
        table.add({figure,
                   series,
                   std::string(axis_name(spec.axis)),
                   r.axis_value,
                   std::string(r.mode.tag()),
                   r.snr1_db,
                   r.snr2_db,
                   r.irr_db,
                   r.rule.s01(),
                   r.rule.s12(),
                   r.rule.s23(),
                   r.analytic_pfa_weighted,
                   r.empirical_weighted.p_fa.value,
                   r.empirical_weighted.p_fa.half_width,
                   r.analytic_pd_weighted,
                   r.empirical_weighted.p_d.value,
                   r.empirical_weighted.p_d.half_width,
                   r.analytic_pfa_paper,
                   r.empirical_paper.p_fa.value,
                   r.empirical_paper.p_fa.half_width,
                   r.analytic_pd_paper,
                   r.empirical_paper.p_d.value,
                   r.empirical_paper.p_d.half_width,
                   max_closure_z(r.tally, r.variances, r.rule),
                   count_cell(trials)});
    }
}

void note_closure(Report &report, const Table &table) {
    const std::size_t col = table.column("max_abs_z");
    double worst = 0.0;
    for (const auto &row : table.rows) {
        worst = std::max(worst, std::get<double>(row[col]));
    }
    report.notes.push_back("largest |empirical - analytic| over all cells: " + format_number(worst) +
                           " standard errors (policy: " + format_number(kClosureSigmas) + ")");
    report.verified = worst <= kClosureSigmas;
}

SeedSpec master(const ExperimentConfig &cfg) { return SeedSpec{cfg.seed, 0}; }

} // namespace

// ---------------------------------------------------------------------------
// OccupancyMap

OccupancyMap::OccupancyMap(int subcarriers) : k_(subcarriers) {
    if (subcarriers < 2 || subcarriers % 2 != 0) {
        throw std::invalid_argument("frame: subcarrier count must be even and >= 2");
    }
    active_.assign(static_cast<std::size_t>(subcarriers), false);
}

std::size_t OccupancyMap::slot(int k) const {
    if (k == 0) {
        throw std::out_of_range("frame: the DC subcarrier carries no data");
    }
    if (std::abs(k) > k_ / 2) {
        throw std::out_of_range("frame: subcarrier " + std::to_string(k) + " outside [-K/2, K/2]");
    }
    return static_cast<std::size_t>(k < 0 ? k + k_ / 2 : k + k_ / 2 - 1);
}

bool OccupancyMap::active(int k) const { return active_[slot(k)]; }

void OccupancyMap::set(int k, bool on) { active_[slot(k)] = on; }

Hypothesis OccupancyMap::truth(int k) const {
    const bool on_k = active(k);
    const bool on_mirror = active(-k);
    if (on_k) {
        return on_mirror ? Hypothesis::H3 : Hypothesis::H2;
    }
    return on_mirror ? Hypothesis::H1 : Hypothesis::H0;
}

std::vector<int> OccupancyMap::indices() const {
    std::vector<int> out;
    out.reserve(active_.size());
    for (int k = -k_ / 2; k <= k_ / 2; ++k) {
        if (k != 0) {
            out.push_back(k);
        }
    }
    return out;
}

int OccupancyMap::user_of(int k, int users) const {
    if (users < 1 || k_ % users != 0) {
        throw std::invalid_argument("frame: user count must divide the subcarrier count");
    }
    return static_cast<int>(slot(k)) / (k_ / users);
}

OccupancyMap OccupancyMap::from_config(const FrameConfig &frame, RandomStream &rng) {
    OccupancyMap map(frame.subcarriers);
    const auto all = map.indices();
    if (frame.pattern == "all-busy") {
        for (int k : all) {
            map.set(k, true);
        }
    } else if (frame.pattern == "fig2") {
        // Users on the negative half transmit, their mirror users stay silent.
        for (int k : all) {
            map.set(k, k < 0);
        }
    } else if (frame.pattern == "random") {
        std::bernoulli_distribution on(frame.activity);
        std::vector<bool> user_on(static_cast<std::size_t>(frame.users));
        for (std::size_t u = 0; u < user_on.size(); ++u) {
            user_on[u] = on(rng);
        }
        for (int k : all) {
            map.set(k, user_on[static_cast<std::size_t>(map.user_of(k, frame.users))]);
        }
    } else if (frame.pattern == "list") {
        for (int k : frame.active) {
            map.set(k, true);
        }
    } else if (frame.pattern != "all-idle") {
        throw std::invalid_argument("frame: unknown pattern '" + frame.pattern + "'");
    }
    return map;
}

// ---------------------------------------------------------------------------
// analytic

Report cmd_analytic(const ExperimentConfig &cfg) {
    const SensingScenario sc = cfg.scenario();
    const RunOptions run = effective(cfg, RunOptions{});
    Report report = start_report("analytic", cfg, run, std::nullopt);

    const HypothesisVariances v = model_variances(sc, master(cfg), run);
    const DecisionRule rule = make_rule(v, sc.n_packets, sc.mode, sc.merge_tol);

    Table t{"analytic", {"section", "name", "value"}, {}};
    auto put = [&](const std::string &section, const std::string &key, Cell value) {
        t.add({section, key, std::move(value)});
    };

    put("scenario", "mode", std::string(sc.mode.tag()));
    put("scenario", "snr1_db", sc.snr1_db);
    put("scenario", "snr2_db", sc.snr2_db);
    put("scenario", "delta_snr_db", sc.delta_snr_db());
    put("scenario", "tx_irr_db", irr_db_of(sc.tx()));
    put("scenario", "rx_irr_db",
        sc.rx_mismatch ? Cell{irr_db_of(mismatch_coefficients(*sc.rx_mismatch))} : Cell{std::string("none")});
    put("scenario", "n_packets", sc.n_packets.value());
    put("scenario", "psk_order", std::int64_t{sc.pair.psk_order});
    put("scenario", "variance_source", std::string(sc.joint() ? "estimated" : "closed-form"));

    for (Hypothesis h : kHypotheses) {
        put("variances", "sigma2_" + std::string(name(h)), v[h]);
    }
    put("thresholds", "s01", rule.s01());
    put("thresholds", "s12", rule.s12());
    put("thresholds", "s23", rule.s23());
    static constexpr const char *kPairs[] = {"H0-H1", "H1-H2", "H2-H3"};
    for (std::size_t i = 0; i < 3; ++i) {
        put("merged", kPairs[i], yes_no(rule.merged()[i]));
    }

    const ProbabilityMatrix p = conditional_matrix(v, rule);
    for (Hypothesis truth : kHypotheses) {
        for (Hypothesis decided : kHypotheses) {
            put("conditional",
                "P(" + std::string(name(decided)) + "|" + std::string(name(truth)) + ")",
                p[index_of(truth)][index_of(decided)]);
        }
    }

    put("metrics", "p_fa_paper_sum", analytic_false_alarm(v, rule, MetricConvention::PaperSum));
    put("metrics", "p_fa_paper_sum_long_form", analytic_false_alarm_long_form(v, rule));
    put("metrics", "p_fa_prior_weighted",
        analytic_false_alarm(v, rule, MetricConvention::PriorWeighted));
    put("metrics", "p_d_paper_sum", analytic_detection(v, rule, MetricConvention::PaperSum));
    put("metrics", "p_d_prior_weighted",
        analytic_detection(v, rule, MetricConvention::PriorWeighted));

    if (const auto verbatim = paper_verbatim(v, sc.n_packets, sc.merge_tol)) {
        put("paper_verbatim", "S01", verbatim->thresholds[0]);
        put("paper_verbatim", "S12", verbatim->thresholds[1]);
        put("paper_verbatim", "S23", verbatim->thresholds[2]);
        put("paper_verbatim", "p_fa", verbatim->false_alarm);
        put("paper_verbatim", "p_d", verbatim->detection);
    } else {
        put("paper_verbatim", "status", std::string("undefined: degenerate hypothesis pair"));
    }

    if (rule.any_merged() && !sc.mode.is_two_level()) {
        const bool binary = rule.merged()[0] && rule.merged()[2] && !rule.merged()[1];
        put("reduction", "binary_detector", yes_no(binary));
        if (binary) {
            put("reduction", "threshold", rule.s12());
            report.notes.push_back("mirror leakage vanishes: H0/H1 and H2/H3 are merged and the "
                                   "rule reduces to a binary test at s12");
        } else {
            report.notes.push_back("some adjacent hypotheses are merged; see the merged section");
        }
    }

    if (cfg.outage) {
        const OutageScenario o = cfg.outage->scenario();
        put("outage", "gamma_th", o.gamma_th());
        put("outage", "beta_sq", o.beta_sq_sec);
        put("outage", "analytic", analytic_outage(o));
        put("outage", "paper_verbatim", paper_verbatim_outage(o));
        put("outage", "no_leakage_baseline", -std::expm1(-o.gamma_th() / o.mean_signal()));
    }

    report.tables.push_back(std::move(t));
    return report;
}

// ---------------------------------------------------------------------------
// sense

Report cmd_sense(const ExperimentConfig &cfg, const CommandOptions &opts) {
    if (cfg.trials == 0) {
        throw std::invalid_argument("trial budget must be >= 1");
    }
    const SensingScenario sc = cfg.scenario();
    const RunOptions run = effective(cfg, opts.run);
    Report report = start_report("sense", cfg, run, cfg.trials);

    const SeedSpec seed = master(cfg);
    const HypothesisVariances v = model_variances(sc, seed, run);
    const DecisionRule rule = make_rule(v, sc.n_packets, sc.mode, sc.merge_tol);
    const TallyMatrix tally = run_trials_multi(sc, std::span(&rule, 1), cfg.trials, seed, run).per_rule[0];
    const ProbabilityMatrix p = conditional_matrix(v, rule);

    Table rule_table{"rule", {"name", "value"}, {}};
    rule_table.add({std::string("mode"), std::string(sc.mode.tag())});
    for (Hypothesis h : kHypotheses) {
        rule_table.add({"sigma2_" + std::string(name(h)), v[h]});
    }
    rule_table.add({std::string("s01"), rule.s01()});
    rule_table.add({std::string("s12"), rule.s12()});
    rule_table.add({std::string("s23"), rule.s23()});

    Table cells{"cells",
                {"truth", "decided", "count", "trials", "empirical", "analytic", "std_error",
                 "ci_lo", "ci_hi", "z", "ok"},
                {}};
    bool all_ok = true;
    double worst = 0.0;
    for (Hypothesis truth : kHypotheses) {
        const std::uint64_t n = tally.trials(truth);
        for (Hypothesis decided : kHypotheses) {
            const std::uint64_t c = tally.count(truth, decided);
            const double pa = p[index_of(truth)][index_of(decided)];
            const double z = closure_z(c, n, pa);
            const bool ok = std::abs(z) <= kClosureSigmas;
            all_ok = all_ok && ok;
            worst = std::max(worst, std::abs(z));
            const Interval ci = wilson_interval(c, n);
            cells.add({std::string(name(truth)), std::string(name(decided)), count_cell(c),
                       count_cell(n), tally.frequency(truth, decided), pa,
                       std::sqrt(pa * (1.0 - pa) / static_cast<double>(n)), ci.lo, ci.hi, z,
                       yes_no(ok)});
        }
    }

    Table metrics{"metrics", {"convention", "metric", "empirical", "half_width", "analytic"}, {}};
    for (const auto &[label, convention] :
         {std::pair{"paper_sum", MetricConvention::PaperSum},
          std::pair{"prior_weighted", MetricConvention::PriorWeighted}}) {
        const EmpiricalMetrics m = empirical_metrics(tally, convention);
        metrics.add({std::string(label), std::string("p_fa"), m.p_fa.value, m.p_fa.half_width,
                     analytic_false_alarm(v, rule, convention)});
        metrics.add({std::string(label), std::string("p_d"), m.p_d.value, m.p_d.half_width,
                     analytic_detection(v, rule, convention)});
    }

    report.notes.push_back("closure check (every cell within " + format_number(kClosureSigmas) +
                           " binomial standard errors): " + (all_ok ? "pass" : "fail") +
                           ", largest |z| = " + format_number(worst));
    report.verified = all_ok;
    report.tables.push_back(std::move(rule_table));
    report.tables.push_back(std::move(cells));
    report.tables.push_back(std::move(metrics));
    return report;
}

// ---------------------------------------------------------------------------
// sweep and figures

std::vector<double> default_irr_grid() { return arange(-30.0, -5.0, 2.5); }
std::vector<double> default_snr1_grid() { return arange(-20.0, 20.0, 2.0); }
std::vector<double> default_delta_snr_grid() { return {-10.0, -5.0, 0.0, 5.0, 10.0}; }

Report cmd_sweep(const ExperimentConfig &cfg, const CommandOptions &opts) {
    if (!cfg.sweep) {
        throw std::invalid_argument("config has no 'sweep' section");
    }
    if (cfg.trials == 0) {
        throw std::invalid_argument("trial budget must be >= 1");
    }
    const RunOptions run = effective(cfg, opts.run);
    Report report = start_report("sweep", cfg, run, cfg.trials);
    const SweepSpec spec{cfg.sweep->axis, cfg.sweep->grid, cfg.sweep->modes,
                         cfg.sweep->rx_follows_tx, cfg.sweep->lock_delta_snr_db};
    Table t{"sweep", kSweepColumns, {}};
    append_sweep_rows(t, "sweep", "config", spec,
                      sweep(cfg.scenario(), spec, cfg.trials, master(cfg), run), cfg.trials);
    note_closure(report, t);
    report.tables.push_back(std::move(t));
    return report;
}

namespace {

Report figure_outage(const ExperimentConfig &cfg, const RunOptions &run, Report report) {
    const OutageConfig oc = cfg.outage.value_or(OutageConfig{});
    std::vector<double> grid = oc.irr_grid;
    if (grid.empty()) {
        grid = cfg.figure && !cfg.figure->irr_grid.empty() ? cfg.figure->irr_grid
                                                           : default_irr_grid();
    }
    Table t{"fig6",
            {"figure", "irr_db", "beta_sq", "gamma_th", "analytic", "paper_verbatim", "mc",
             "mc_std_error", "mc_ci_lo", "mc_ci_hi", "z", "baseline_analytic",
             "baseline_closed_form", "trials"},
            {}};
    bool ok = true;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const OutageScenario sc = oc.scenario_at_irr(grid[j]);
        OutageScenario base = sc;
        base.beta_sq_sec = 0.0;
        const double a = analytic_outage(sc);
        const OutageEstimate mc = mc_outage(sc, cfg.trials, master(cfg).child(j), run);
        const double se = std::sqrt(a * (1.0 - a) / static_cast<double>(mc.trials));
        const double z = se > 0.0 ? (mc.probability - a) / se : (mc.probability == a ? 0.0 : kInf);
        ok = ok && std::abs(z) <= kClosureSigmas;
        t.add({std::string("6"), grid[j], sc.beta_sq_sec, sc.gamma_th(), a,
               paper_verbatim_outage(sc), mc.probability, mc.standard_error, mc.ci.lo, mc.ci.hi,
               z, analytic_outage(base), -std::expm1(-sc.gamma_th() / sc.mean_signal()),
               count_cell(mc.trials)});
    }
    report.verified = ok;
    report.tables.push_back(std::move(t));
    return report;
}

} // namespace

Report cmd_figure(const ExperimentConfig &cfg, int id, const CommandOptions &opts) {
    if (id < 3 || id > 6) {
        throw std::invalid_argument("unknown figure id " + std::to_string(id) + " (3, 4, 5 or 6)");
    }
    if (cfg.trials == 0) {
        throw std::invalid_argument("trial budget must be >= 1");
    }
    const RunOptions run = effective(cfg, opts.run);
    Report report = start_report("figure " + std::to_string(id), cfg, run, cfg.trials);
    if (id == 6) {
        return figure_outage(cfg, run, std::move(report));
    }

    const FigureConfig fig = cfg.figure.value_or(FigureConfig{});
    const std::vector<double> irr_grid = fig.irr_grid.empty() ? default_irr_grid() : fig.irr_grid;
    const std::vector<double> snr1_grid =
        fig.snr1_grid.empty() ? default_snr1_grid() : fig.snr1_grid;
    const std::vector<double> deltas =
        fig.delta_snr_db.empty() ? default_delta_snr_grid() : fig.delta_snr_db;

    const SensingScenario tmpl = cfg.scenario();
    const std::string fig_name = std::to_string(id);
    Table t{"fig" + fig_name, kSweepColumns, {}};
    std::uint64_t series_index = 0;
    auto run_series = [&](const std::string &label, const SensingScenario &base,
                          const SweepSpec &spec) {
        const auto rows = sweep(base, spec, cfg.trials, master(cfg).child(series_index++), run);
        append_sweep_rows(t, fig_name, label, spec, rows, cfg.trials);
    };

    if (id == 3) {
        SweepSpec spec{SweepAxis::IrrDb, irr_grid,
                       {DetectorMode::four_level(), DetectorMode::two_level_bayes()}, false, {}};
        if (cfg.mode.kind() == DetectorMode::Kind::TwoLevelCfar) {
            spec.modes.push_back(cfg.mode);
        }
        SensingScenario base = tmpl;
        base.rx_mismatch.reset();
        run_series("by-mode", base, spec);
    } else if (id == 4) {
        for (double d : deltas) {
            const SweepSpec spec{SweepAxis::Snr1Db, snr1_grid, {DetectorMode::four_level()}, false, d};
            run_series("dsnr=" + format_number(d), tmpl, spec);
        }
        // Without mismatch the false-alarm curve depends on SNR1 alone.
        SensingScenario ideal = tmpl;
        ideal.tx_mismatch = IqMismatch::ideal();
        ideal.rx_mismatch.reset();
        const SweepSpec spec{SweepAxis::Snr1Db, snr1_grid, {DetectorMode::four_level()}, false,
                             deltas.front()};
        run_series("ideal", ideal, spec);
    } else {
        SensingScenario tx_only = tmpl;
        tx_only.rx_mismatch.reset();
        run_series("tx-only", tx_only,
                   SweepSpec{SweepAxis::IrrDb, irr_grid, {DetectorMode::four_level()}, false, {}});
        run_series("joint", tx_only,
                   SweepSpec{SweepAxis::IrrDb, irr_grid, {DetectorMode::four_level()}, true, {}});
        SensingScenario rx_ideal = tmpl;
        rx_ideal.rx_mismatch = IqMismatch::ideal();
        run_series("joint-rx-ideal", rx_ideal,
                   SweepSpec{SweepAxis::IrrDb, irr_grid, {DetectorMode::four_level()}, false, {}});
    }
    note_closure(report, t);
    report.tables.push_back(std::move(t));
    return report;
}

// ---------------------------------------------------------------------------
// frame

Report cmd_frame(const ExperimentConfig &cfg, const CommandOptions &opts) {
    const FrameConfig frame = cfg.frame.value_or(FrameConfig{});
    const RunOptions run = effective(cfg, opts.run);
    Report report = start_report("frame", cfg, run, std::nullopt);

    SensingScenario sc = cfg.scenario();
    sc.snr1_db = frame.snr_db;
    sc.snr2_db = frame.snr_db;
    sc.apply_snr();
    SensingScenario sc_mirror = sc;
    sc_mirror.pair = sc.pair.mirrored();

    const SeedSpec seed = master(cfg);
    const DetectorMode two = sc.mode.is_two_level() ? sc.mode : DetectorMode::two_level_bayes();
    struct Side {
        HypothesisVariances v;
        DecisionRule four;
        DecisionRule two;
    };
    auto side = [&](const SensingScenario &s, std::uint64_t k) {
        const HypothesisVariances v = model_variances(s, seed.child(k), run);
        return Side{v, make_rule(v, s.n_packets, DetectorMode::four_level(), s.merge_tol),
                    make_rule(v, s.n_packets, two, s.merge_tol)};
    };
    const Side pos = side(sc, 0);
    const Side neg = side(sc_mirror, 1);

    RandomStream map_rng = make_stream(seed, {kFrameMap});
    const OccupancyMap map = OccupancyMap::from_config(frame, map_rng);

    Table per{"subcarriers",
              {"k", "user", "active", "mirror_active", "truth", "z", "four_level", "two_level_busy",
               "warning"},
              {}};
    TallyMatrix four_conf;
    std::array<std::array<std::uint64_t, 2>, 4> two_busy{};
    std::uint64_t warnings = 0;
    std::uint64_t risk_two = 0;
    std::uint64_t risk_four = 0;

    PairSampler sampler(sc);
    const std::int64_t n = sc.n_packets.value();
    std::vector<std::pair<int, double>> stats;
    for (int k = 1; k <= frame.subcarriers / 2; ++k) {
        RandomStream rng = make_stream(seed, {kFramePair, static_cast<std::uint64_t>(k)});
        const bool on_k = map.active(k);
        const bool on_mk = map.active(-k);
        auto channels = sampler.draw_channels(rng);
        double e_k = 0.0;
        double e_mk = 0.0;
        for (std::int64_t i = 0; i < n; ++i) {
            if (i > 0 && !sc.block_fading) {
                channels = sampler.draw_channels(rng);
            }
            const auto [r_k, r_mk] = sampler.packet(on_k, on_mk, channels, rng);
            e_k += std::norm(r_k);
            e_mk += std::norm(r_mk);
        }
        stats.emplace_back(k, e_k / static_cast<double>(n));
        stats.emplace_back(-k, e_mk / static_cast<double>(n));
    }
    std::sort(stats.begin(), stats.end());

    for (const auto &[k, z] : stats) {
        const Side &s = k > 0 ? pos : neg;
        const Hypothesis truth = map.truth(k);
        const Hypothesis four = s.four.classify(z);
        const bool busy_two = carries_k(s.two.classify(z));
        four_conf.add(truth, four);
        ++two_busy[index_of(truth)][busy_two ? 1 : 0];
        const bool warn = four == Hypothesis::H1;
        warnings += warn ? 1 : 0;
        if (truth == Hypothesis::H1) {
            risk_two += busy_two ? 0 : 1;
            risk_four += carries_k(four) || four == Hypothesis::H1 ? 0 : 1;
        }
        per.add({std::int64_t{k}, std::int64_t{map.user_of(k, frame.users)}, yes_no(map.active(k)),
                 yes_no(map.active(-k)), std::string(name(truth)), z, std::string(name(four)),
                 yes_no(busy_two), std::string(warn ? "vacant but mirror-active" : "")});
    }

    Table summary{"summary", {"section", "name", "value"}, {}};
    summary.add({std::string("frame"), std::string("subcarriers"), std::int64_t{frame.subcarriers}});
    summary.add({std::string("frame"), std::string("users"), std::int64_t{frame.users}});
    summary.add({std::string("frame"), std::string("pattern"), frame.pattern});
    summary.add({std::string("frame"), std::string("snr_db"), frame.snr_db});
    summary.add({std::string("frame"), std::string("two_level_mode"), std::string(two.tag())});
    for (Hypothesis truth : kHypotheses) {
        for (Hypothesis decided : kHypotheses) {
            summary.add({std::string("four_level_confusion"),
                         std::string(name(truth)) + "->" + std::string(name(decided)),
                         count_cell(four_conf.count(truth, decided))});
        }
        summary.add({std::string("two_level_confusion"), std::string(name(truth)) + "->idle",
                     count_cell(two_busy[index_of(truth)][0])});
        summary.add({std::string("two_level_confusion"), std::string(name(truth)) + "->busy",
                     count_cell(two_busy[index_of(truth)][1])});
    }
    summary.add({std::string("interference"), std::string("vacant_but_mirror_active_warnings"),
                 count_cell(warnings)});
    summary.add({std::string("interference"), std::string("two_level_idle_with_active_mirror"),
                 count_cell(risk_two)});
    summary.add({std::string("interference"), std::string("four_level_h0_with_active_mirror"),
                 count_cell(risk_four)});

    const std::uint64_t idle = four_conf.trials(Hypothesis::H0);
    if (idle > 0) {
        const std::uint64_t false_busy = four_conf.busy(Hypothesis::H0);
        summary.add({std::string("false_busy"), std::string("four_level_empirical"),
                     static_cast<double>(false_busy) / static_cast<double>(idle)});
        summary.add({std::string("false_busy"), std::string("four_level_analytic"),
                     conditional_probability(pos.v, pos.four, Hypothesis::H0, Hypothesis::H2) +
                         conditional_probability(pos.v, pos.four, Hypothesis::H0, Hypothesis::H3)});
        summary.add({std::string("false_busy"), std::string("two_level_empirical"),
                     static_cast<double>(two_busy[0][1]) / static_cast<double>(idle)});
        summary.add({std::string("false_busy"), std::string("two_level_analytic"),
                     conditional_probability(pos.v, pos.two, Hypothesis::H0, Hypothesis::H2) +
                         conditional_probability(pos.v, pos.two, Hypothesis::H0, Hypothesis::H3)});
        summary.add({std::string("false_busy"), std::string("idle_subcarriers"), count_cell(idle)});
    }

    report.tables.push_back(std::move(per));
    report.tables.push_back(std::move(summary));
    return report;
}

// ---------------------------------------------------------------------------
// outage

Report cmd_outage(const ExperimentConfig &cfg, const CommandOptions &opts) {
    if (cfg.trials == 0) {
        throw std::invalid_argument("trial budget must be >= 1");
    }
    const OutageConfig oc = cfg.outage.value_or(OutageConfig{});
    const RunOptions run = effective(cfg, opts.run);
    Report report = start_report("outage", cfg, run, cfg.trials);

    std::vector<std::pair<std::string, OutageScenario>> points;
    if (oc.irr_grid.empty()) {
        points.emplace_back("config", oc.scenario());
    } else {
        for (double irr : oc.irr_grid) {
            points.emplace_back(format_number(irr), oc.scenario_at_irr(irr));
        }
    }

    Table t{"outage",
            {"irr_db", "beta_sq", "gamma_th", "mean_signal", "mean_interference", "analytic",
             "paper_verbatim", "no_leakage_baseline", "mc", "mc_std_error", "mc_ci_lo",
             "mc_ci_hi", "z", "mc_sample_level", "sample_level_z", "trials"},
            {}};
    bool ok = true;
    for (std::size_t j = 0; j < points.size(); ++j) {
        const OutageScenario &sc = points[j].second;
        const double a = analytic_outage(sc);
        const SeedSpec s = master(cfg).child(j);
        const OutageEstimate mc = mc_outage(sc, cfg.trials, s, run);
        const OutageEstimate sl = mc_outage_sample_level(sc, cfg.trials, s, run);
        const double z = closure_z(mc.outages, mc.trials, a);
        const double zs = closure_z(sl.outages, sl.trials, a);
        ok = ok && std::abs(z) <= kClosureSigmas && std::abs(zs) <= kClosureSigmas;
        t.add({points[j].first, sc.beta_sq_sec, sc.gamma_th(), sc.mean_signal(),
               sc.mean_interference(), a, paper_verbatim_outage(sc),
               -std::expm1(-sc.gamma_th() / sc.mean_signal()), mc.probability, mc.standard_error,
               mc.ci.lo, mc.ci.hi, z, sl.probability, zs, count_cell(cfg.trials)});
    }
    report.verified = ok;
    report.tables.push_back(std::move(t));
    return report;
}

void write_report(std::ostream &out, const Report &report, OutputFormat format) {
    if (format == OutputFormat::Json) {
        write_json(out, report);
    } else {
        write_csv(out, report);
    }
}

} // namespace iqsense
