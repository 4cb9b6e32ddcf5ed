#include "iqsense/montecarlo.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <chrono>
#include <set>

using namespace iqsense;
using enum Hypothesis;

namespace {

SensingScenario scenario(double irr_db, double snr1, double snr2, std::int64_t n = 1) {
    SensingScenario sc;
    sc.tx_mismatch = irr_to_mismatch(irr_db);
    sc.snr1_db = snr1;
    sc.snr2_db = snr2;
    sc.n_packets = GammaShape(n);
    sc.apply_snr();
    return sc;
}

double standard_error(double p, std::uint64_t n) {
    return std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

void check_rows_close(const TallyMatrix &t, const HypothesisVariances &v, const DecisionRule &rule,
                      std::initializer_list<Hypothesis> rows) {
    const ProbabilityMatrix p = conditional_matrix(v, rule);
    for (Hypothesis truth : rows) {
        for (Hypothesis decided : kHypotheses) {
            const double pa = p[index_of(truth)][index_of(decided)];
            INFO(name(truth) << " -> " << name(decided));
            CHECK(std::abs(t.frequency(truth, decided) - pa) <= 3.0 * standard_error(pa, t.trials(truth)));
        }
    }
}

} // namespace

TEST_CASE("seed streams") {
    const SeedSpec s{42, 0};
    std::set<std::uint64_t> children;
    for (std::uint64_t k = 0; k < 1000; ++k) {
        children.insert(s.child(k).stream_index);
        CHECK(s.child(k).master_seed == 42);
    }
    CHECK(children.size() == 1000);
    CHECK(s.child(3) == s.child(3));

    RandomStream a = make_stream(s, {1, 2});
    RandomStream b = make_stream(s, {1, 2});
    RandomStream c = make_stream(s, {1, 3});
    RandomStream d = make_stream(SeedSpec{43, 0}, {1, 2});
    const auto first = a();
    CHECK(first == b());
    CHECK(first != c());
    CHECK(first != d());
}

TEST_CASE("run_chunked folds in chunk order") {
    // Floating-point sums are order dependent, so bitwise equality across
    // worker counts shows the fold order is fixed.
    auto chunk = [](std::uint64_t c, std::uint64_t first, std::uint64_t count) {
        RandomStream rng = make_stream(SeedSpec{7, 0}, {c});
        std::uniform_real_distribution<double> u(0.0, 1e6);
        double s = 0.0;
        for (std::uint64_t i = 0; i < count; ++i) {
            s += u(rng) / static_cast<double>(first + i + 1);
        }
        return s;
    };
    RunOptions one{1, 1000};
    const double base = run_chunked(123'457, one, 0.0, chunk);
    for (unsigned w : {2u, 3u, 4u, 8u}) {
        RunOptions opts{w, 1000};
        CHECK(run_chunked(123'457, opts, 0.0, chunk) == base);
    }
    CHECK(run_chunked(0, one, 5.0, chunk) == 5.0);
}

TEST_CASE("wilson interval") {
    const Interval a = wilson_interval(5, 10);
    CHECK(a.lo == doctest::Approx(0.2366).epsilon(1e-3));
    CHECK(a.hi == doctest::Approx(0.7634).epsilon(1e-3));
    const Interval z = wilson_interval(0, 10);
    CHECK(z.lo == 0.0);
    CHECK(z.hi == doctest::Approx(0.2775).epsilon(1e-3));
    const Interval f = wilson_interval(10, 10);
    CHECK(f.hi == 1.0);
    CHECK_THROWS_AS(wilson_interval(0, 0), std::domain_error);
}

TEST_CASE("tally matrix") {
    TallyMatrix t;
    t.add(H0, H0, 3);
    t.add(H0, H2);
    t.add(H1, H3, 2);
    CHECK(t.trials(H0) == 4);
    CHECK(t.busy(H0) == 1);
    CHECK(t.busy(H1) == 2);
    CHECK(t.frequency(H0, H0) == 0.75);
    CHECK_THROWS_AS(t.frequency(H2, H2), std::domain_error);
    TallyMatrix u = t;
    u += t;
    CHECK(u.count(H0, H0) == 6);
    CHECK(u.trials(H1) == 4);
    CHECK(!(u == t));
}

TEST_CASE("empirical metrics") {
    TallyMatrix diag;
    for (Hypothesis h : kHypotheses) {
        diag.add(h, h, 100);
    }
    const auto paper = empirical_metrics(diag, MetricConvention::PaperSum);
    const auto weighted = empirical_metrics(diag, MetricConvention::PriorWeighted);
    CHECK(paper.p_fa.value == 0.0);
    CHECK(paper.p_d.value == 2.0);
    CHECK(weighted.p_d.value == 1.0);
    CHECK(weighted.p_fa.value == 0.0);
    CHECK(paper.terms.size() == 6);
    CHECK(weighted.terms.size() == 4);

    TallyMatrix uniform;
    for (Hypothesis t : kHypotheses) {
        for (Hypothesis d : kHypotheses) {
            uniform.add(t, d, 250);
        }
    }
    const auto u = empirical_metrics(uniform, MetricConvention::PaperSum);
    CHECK(u.p_fa.value == doctest::Approx(1.0));
    for (const auto &term : u.terms) {
        CHECK(term.frequency == doctest::Approx(0.25));
        CHECK(term.wilson.lo < 0.25);
        CHECK(term.wilson.hi > 0.25);
    }

    TallyMatrix partial;
    partial.add(H0, H0);
    CHECK_THROWS_AS(empirical_metrics(partial, MetricConvention::PaperSum), std::domain_error);
}

TEST_CASE("scenario SNR consistency") {
    SensingScenario sc = scenario(-15.0, 0.0, -10.0);
    CHECK(sc.pair.power_k == doctest::Approx(1.0));
    CHECK(sc.pair.power_mk == doctest::Approx(0.1));
    CHECK(sc.delta_snr_db() == 10.0);
    sc.pair.power_k = 2.0;
    CHECK_THROWS_AS(sc.validate(), std::invalid_argument);
    CHECK_THROWS_AS(run_trials(sc, 10, SeedSpec{}), std::invalid_argument);
    CHECK_THROWS_AS(run_trials(scenario(-15.0, 0.0, -10.0), 0, SeedSpec{}), std::invalid_argument);
}

TEST_CASE("ideal mismatch at high SNR detects reliably") {
    // At 20 dB with N = 1 the Rayleigh miss rate alone is about 4.5 %, so
    // reliability needs either more packets or more SNR.
    for (const auto &[snr, n] : {std::pair{30.0, std::int64_t{1}}, std::pair{20.0, std::int64_t{4}}}) {
        SensingScenario sc = scenario(-15.0, snr, snr, n);
        sc.tx_mismatch = IqMismatch::ideal();
        const TallyMatrix t = run_trials(sc, 200'000, SeedSpec{3, 0}, RunOptions{1});
        const HypothesisVariances v = model_variances(sc, SeedSpec{3, 0});
        const DecisionRule rule = decision_rule(v, sc.n_packets);
        const double pa = conditional_probability(v, rule, H2, H2);
        CHECK(t.frequency(H2, H2) > 0.99);
        CHECK(std::abs(t.frequency(H2, H2) - pa) <= 3.0 * standard_error(pa, 200'000));
    }
}

TEST_CASE("noise-only scenario stays in H0") {
    SensingScenario sc = scenario(-15.0, -std::numeric_limits<double>::infinity(),
                                  -std::numeric_limits<double>::infinity());
    const TallyMatrix t = run_trials(sc, 50'000, SeedSpec{4, 0}, RunOptions{1});
    const HypothesisVariances v = model_variances(sc, SeedSpec{});
    const DecisionRule rule = decision_rule(v, sc.n_packets);
    for (Hypothesis h : kHypotheses) {
        CHECK(t.count(h, H0) == t.trials(h));
        CHECK(conditional_probability(v, rule, h, H0) == 1.0);
    }
}

TEST_CASE("equal seeds give identical tallies at any worker count") {
    const SensingScenario sc = scenario(-15.0, 0.0, -10.0, 2);
    const TallyMatrix a = run_trials(sc, 150'000, SeedSpec{11, 0}, RunOptions{1});
    const TallyMatrix b = run_trials(sc, 150'000, SeedSpec{11, 0}, RunOptions{4});
    const TallyMatrix c = run_trials(sc, 150'000, SeedSpec{12, 0}, RunOptions{1});
    CHECK(a == b);
    CHECK(!(a == c));
    for (Hypothesis h : kHypotheses) {
        CHECK(a.trials(h) == 150'000);
    }
}

TEST_CASE("closure at the default operating point") {
    const SensingScenario sc = scenario(-15.0, 0.0, -10.0);
    const HypothesisVariances v = model_variances(sc, SeedSpec{});
    const DecisionRule rule = decision_rule(v, sc.n_packets);
    const TallyMatrix t = run_trials(sc, 1'000'000, SeedSpec{21, 0});
    check_rows_close(t, v, rule, {H0, H1, H2, H3});

    const auto paper = empirical_metrics(t, MetricConvention::PaperSum);
    CHECK(std::abs(paper.p_fa.value - analytic_false_alarm(v, rule, MetricConvention::PaperSum)) <=
          paper.p_fa.half_width * 3.0 / kZ95);
}

TEST_CASE("closure at the example variance point") {
    // P_k = P_-k = 1, IRR -15 dB: variances (0.5, 0.5158, 1.0, 1.0158).
    const SensingScenario sc = scenario(-15.0, 0.0, 0.0);
    const HypothesisVariances v = model_variances(sc, SeedSpec{});
    CHECK(v[H1] == doctest::Approx(0.515811).epsilon(1e-6));
    CHECK(v[H3] == doctest::Approx(1.015811).epsilon(1e-6));
    const DecisionRule rule = decision_rule(v, sc.n_packets);
    const TallyMatrix t = run_trials(sc, 1'000'000, SeedSpec{22, 0});

    // H0..H2 follow the Gamma laws exactly.
    check_rows_close(t, v, rule, {H0, H1, H2});

    // Under H3 the statistic is a mixture over the phase of s_k s_-k; the
    // exact mixture law is the reference for that row.
    const double eps = sc.tx_mismatch.epsilon();
    for (Hypothesis decided : kHypotheses) {
        const auto [lo, hi] = rule.region(decided);
        const double exact = oracle::h3_mixture_probability(eps, 1.0, 1.0, 1.0, 1.0, 16, lo, hi);
        INFO("H3 -> " << name(decided));
        CHECK(std::abs(t.frequency(H3, decided) - exact) <= 3.0 * standard_error(exact, t.trials(H3)));
    }

    // The averaged-variance law the detector is built on is measurably off
    // for the H3 row at this point.
    const double averaged = conditional_probability(v, rule, H3, H0);
    const double exact = oracle::h3_mixture_probability(eps, 1.0, 1.0, 1.0, 1.0, 16, 0.0, rule.s01());
    CHECK(std::abs(exact - averaged) > 5.0 * standard_error(averaged, 1'000'000));
}

TEST_CASE("component variance estimates") {
    const SensingScenario sc = scenario(-15.0, 0.0, 0.0);
    const HypothesisVariances closed = hypothesis_variances(sc.pair, sc.tx());
    const HypothesisVariances est = estimate_component_variances(sc, 1'000'000, SeedSpec{5, 0});
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(std::abs(est[i] / closed[i] - 1.0) < 0.01);
    }

    SensingScenario rx_ideal = sc;
    rx_ideal.rx_mismatch = IqMismatch::ideal();
    const HypothesisVariances joint = estimate_component_variances(rx_ideal, 1'000'000, SeedSpec{5, 0});
    for (std::size_t i = 0; i < 4; ++i) {
        // Relative standard error of a variance estimate is about sqrt(2 / n).
        CHECK(std::abs(joint[i] / est[i] - 1.0) < 4.0 * std::sqrt(2.0 / 1e6) * 2.0);
    }

    SensingScenario quiet = scenario(-15.0, -std::numeric_limits<double>::infinity(),
                                     -std::numeric_limits<double>::infinity());
    const HypothesisVariances q = estimate_component_variances(quiet, 200'000, SeedSpec{6, 0});
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(q[i] == doctest::Approx(0.5).epsilon(0.01));
    }
    CHECK(q.is_ordered(0.0));
    CHECK_THROWS_AS(estimate_component_variances(sc, 9'999, SeedSpec{}), std::invalid_argument);

    // Joint model variances are used for joint scenarios.
    SensingScenario joint_sc = sc;
    joint_sc.rx_mismatch = irr_to_mismatch(-15.0);
    const RunOptions opts{1, 1u << 16, 20'000};
    const HypothesisVariances mv = model_variances(joint_sc, SeedSpec{8, 0}, opts);
    CHECK(mv.values() == estimate_component_variances(joint_sc, 20'000, SeedSpec{8, 0}, opts).values());
}

TEST_CASE("sweeps") {
    const SensingScenario tmpl = scenario(-15.0, 0.0, -10.0);
    SweepSpec one{SweepAxis::IrrDb, {-20.0}, {DetectorMode::four_level()}, false, {}};
    CHECK(sweep(tmpl, one, 1000, SeedSpec{}).size() == 1);
    CHECK_THROWS_AS(sweep(tmpl, SweepSpec{SweepAxis::IrrDb, {}, {DetectorMode::four_level()}, false, {}}, 10, SeedSpec{}),
                    std::invalid_argument);

    SweepSpec fig3{SweepAxis::IrrDb, {-30, -25, -20, -15, -10, -5}, {DetectorMode::two_level_bayes()}, false, {}};
    const auto rows = sweep(tmpl, fig3, 100'000, SeedSpec{9, 0});
    REQUIRE(rows.size() == 6);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i].analytic_pfa_weighted >= rows[i - 1].analytic_pfa_weighted);
    }
    for (const auto &r : rows) {
        CHECK(std::abs(r.empirical_weighted.p_fa.value - r.analytic_pfa_weighted) <=
              r.empirical_weighted.p_fa.half_width * 3.0 / kZ95);
    }

    const SweepSpec fig5{SweepAxis::IrrDb, {-15.0}, {DetectorMode::four_level()}, true, {}};
    const SensingScenario p5 = sweep_point(tmpl, fig5, -15.0);
    REQUIRE(p5.rx_mismatch);
    CHECK(*p5.rx_mismatch == p5.tx_mismatch);

    const SweepSpec locked{SweepAxis::Snr1Db, {5.0}, {DetectorMode::four_level()}, false, -10.0};
    const SensingScenario p4 = sweep_point(tmpl, locked, 5.0);
    CHECK(p4.snr1_db == 5.0);
    CHECK(p4.snr2_db == 15.0);
    CHECK(p4.pair.power_mk == doctest::Approx(std::pow(10.0, 1.5)));

    const SweepSpec delta{SweepAxis::DeltaSnrDb, {3.0}, {DetectorMode::four_level()}, false, {}};
    CHECK(sweep_point(tmpl, delta, 3.0).snr2_db == -3.0);
}

TEST_CASE("paired false-alarm difference") {
    const SensingScenario sc = scenario(-15.0, 0.0, -10.0);
    const HypothesisVariances v = model_variances(sc, SeedSpec{});
    const std::array rules{decision_rule(v, sc.n_packets), two_level_rule(v, sc.n_packets, DetectorMode::two_level_bayes())};
    const MultiTally t = run_trials_multi(sc, rules, 200'000, SeedSpec{10, 0});
    const Estimate same = paired_false_alarm_difference(t, 0, 0);
    CHECK(same.value == 0.0);
    CHECK(same.half_width == 0.0);
    const Estimate d = paired_false_alarm_difference(t, 0, 1);
    const double direct = empirical_metrics(t.per_rule[0], MetricConvention::PriorWeighted).p_fa.value -
                          empirical_metrics(t.per_rule[1], MetricConvention::PriorWeighted).p_fa.value;
    CHECK(d.value == doctest::Approx(direct).epsilon(1e-12));
    CHECK(d.half_width > 0.0);
}

TEST_CASE("throughput") {
    const SensingScenario sc = scenario(-15.0, 0.0, -10.0);
    const auto start = std::chrono::steady_clock::now();
    const TallyMatrix t = run_trials(sc, 500'000, SeedSpec{1, 0}, RunOptions{1});
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const double rate = 4 * 500'000 / seconds;
    MESSAGE("single-core throughput: " << rate << " trials/s");
    CHECK(t.trials(H0) == 500'000);
}
