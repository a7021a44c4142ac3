#include <doctest.h>

#include <cmath>
#include <sstream>

#include "demuq/lifetable.hpp"
#include "demuq/simulate.hpp"
#include "demuq/uncertainty.hpp"
#include "support/oracles.hpp"

using namespace demuq;

namespace {

NoiseConfig appendix_config() {
    NoiseConfig cfg;
    cfg.variance = 2.0;
    cfg.max_deviation = 5;
    cfg.small_count_threshold = 2;
    return cfg;
}

} // namespace

TEST_CASE("degenerate and invalid replicate setups") {
    const MortalitySchedule s = test_support::synthetic_schedule();
    NoiseConfig cfg = appendix_config();
    cfg.variance = 0.0;
    CHECK_THROWS_AS(validate_life_expectancy_uncertainty(s, cfg, 361, 1), ReplicateDegenerate);
    CHECK_THROWS_AS(validate_life_expectancy_uncertainty(s, appendix_config(), 1, 1),
                    ValidationError);
}

TEST_CASE("closed form tracks the sampled spread on a dense schedule") {
    const MortalitySchedule s = test_support::synthetic_schedule();
    const SimulationReport report =
        validate_life_expectancy_uncertainty(s, appendix_config(), 361, 31);

    REQUIRE(report.ages.size() == s.deaths.size());
    int within_five = 0;
    for (const auto &row : report.ages) {
        CHECK(std::isfinite(row.rel_diff));
        CHECK(std::abs(row.rel_diff) < 0.10);
        if (std::abs(row.rel_diff) < 0.05) ++within_five;
        // pooling the original barely moves the estimate at this sample size
        CHECK(row.sampled_sd_with_original ==
              doctest::Approx(row.sampled_sd).epsilon(0.02));
    }
    CHECK(within_five >= static_cast<int>(0.8 * report.ages.size()));
    CHECK(report.clamped_replicates == 0);
}

TEST_CASE("without the zero fix the formula overestimates on sparse data") {
    const MortalitySchedule s = test_support::sparse_schedule();
    const LifeTable table = build_life_table(s);
    const NoiseConfig cfg = appendix_config();

    const PerturbationTable ptable = build_perturbation_table(cfg);
    const ReplicateSample sample = sample_life_expectancies(s, ptable, 2000, 7);
    const auto plain = life_expectancy_uncertainty(s, table, cfg, RateMode::approximate, false);
    const auto fixed = life_expectancy_uncertainty(s, table, cfg, RateMode::approximate, true);

    std::vector<double> values(sample.life_expectancy.size());
    double worst_plain = 0.0;
    for (int age = 0; age < 35; ++age) {
        for (std::size_t rep = 0; rep < values.size(); ++rep) {
            values[rep] = sample.life_expectancy[rep][static_cast<std::size_t>(age)];
        }
        const double sd = test_support::sd_of(values);
        const double ratio_plain = plain[static_cast<std::size_t>(age)].noise_abs / sd;
        const double ratio_fixed = fixed[static_cast<std::size_t>(age)].noise_abs / sd;
        CHECK(ratio_plain < 2.0);            // overestimates by less than a factor of two
        CHECK(ratio_plain > ratio_fixed);    // and the fix brings it down
        CHECK(std::abs(ratio_fixed - 1.0) < 0.15);
        worst_plain = std::max(worst_plain, ratio_plain);
    }
    CHECK(worst_plain > 1.05);   // the overestimate is real, not noise
}

TEST_CASE("reports are byte identical for identical inputs") {
    const MortalitySchedule s = test_support::synthetic_schedule();
    const auto a = validate_life_expectancy_uncertainty(s, appendix_config(), 50, 9);
    const auto b = validate_life_expectancy_uncertainty(s, appendix_config(), 50, 9);

    std::ostringstream csv_a, csv_b, json_a, json_b;
    a.write_csv(csv_a);
    b.write_csv(csv_b);
    a.write_json(json_a);
    b.write_json(json_b);
    CHECK(csv_a.str() == csv_b.str());
    CHECK(json_a.str() == json_b.str());
    CHECK(csv_a.str().find("# region=SYNTH") != std::string::npos);
    CHECK(csv_a.str().find("seed=9") != std::string::npos);
}

TEST_CASE("splitting replicates across seeds pools to the same spread") {
    const MortalitySchedule s = test_support::synthetic_schedule();
    const PerturbationTable table = build_perturbation_table(appendix_config());

    const auto single = sample_life_expectancies(s, table, 800, 1);
    const auto part_a = sample_life_expectancies(s, table, 400, 2);
    const auto part_b = sample_life_expectancies(s, table, 400, 3);

    std::vector<double> pooled, whole;
    for (const auto &e : part_a.life_expectancy) pooled.push_back(e[0]);
    for (const auto &e : part_b.life_expectancy) pooled.push_back(e[0]);
    for (const auto &e : single.life_expectancy) whole.push_back(e[0]);

    const double sd_pooled = test_support::sd_of(pooled);
    const double sd_whole = test_support::sd_of(whole);
    CHECK(std::abs(sd_pooled / sd_whole - 1.0) < 0.15);
}

TEST_CASE("tiny terminal counts are clamped and counted") {
    MortalitySchedule s;
    s.region = "TINY";
    s.deaths = {5, 5, 2};
    s.avg_population = {400.0, 400.0, 50.0};
    const SimulationReport report =
        validate_life_expectancy_uncertainty(s, appendix_config(), 500, 4);
    CHECK(report.clamped_replicates > 0);
    CHECK(report.clamped_replicates < 500);
}

TEST_CASE("poisson diagnostic on constant and synthetic series") {
    SUBCASE("constant series has ratio zero") {
        std::map<int, std::vector<double>> by_year;
        for (int year = 2000; year < 2004; ++year) by_year[year] = {5.0};
        const QuartileSummary summary = poisson_diagnostic(by_year);
        CHECK(summary.median == 0.0);
        CHECK(summary.cells_used == 1);
    }
    SUBCASE("too few years") {
        std::map<int, std::vector<double>> by_year;
        by_year[2000] = {5.0};
        by_year[2001] = {5.0};
        CHECK_THROWS_AS(poisson_diagnostic(by_year), InsufficientYears);
    }
    SUBCASE("ragged arrays are rejected") {
        std::map<int, std::vector<double>> by_year;
        by_year[2000] = {5.0, 6.0};
        by_year[2001] = {5.0};
        by_year[2002] = {5.0, 6.0};
        CHECK_THROWS_AS(poisson_diagnostic(by_year), ValidationError);
    }
    SUBCASE("zero-mean cells are skipped, not fatal") {
        std::vector<std::vector<double>> series = {{0.0, 0.0, 0.0}, {4.0, 5.0, 6.0}};
        const QuartileSummary summary = poisson_diagnostic(series);
        CHECK(summary.cells_used == 1);
        CHECK(summary.cells_skipped == 1);
    }
    SUBCASE("poisson counts give a ratio near one") {
        SplitMix rng(271828);
        std::vector<std::vector<double>> series(1000);
        for (auto &cell : series) {
            cell.reserve(30);
            for (int year = 0; year < 30; ++year) {
                cell.push_back(static_cast<double>(test_support::poisson_draw(rng, 25.0)));
            }
        }
        const QuartileSummary summary = poisson_diagnostic(series);
        CHECK(summary.median > 0.9);
        CHECK(summary.median < 1.1);
        CHECK(summary.lower_quartile < summary.median);
        CHECK(summary.median < summary.upper_quartile);
    }
}
