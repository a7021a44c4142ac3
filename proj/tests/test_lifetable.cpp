#include <doctest.h>

#include <cmath>

#include "demuq/lifetable.hpp"
#include "support/oracles.hpp"

using namespace demuq;

namespace {

MortalitySchedule three_age_schedule() {
    MortalitySchedule s;
    s.region = "TOY";
    s.sex = Sex::total;
    s.year = 2023;
    s.deaths = {0, 0, 100};
    s.avg_population = {1000.0, 1000.0, 100.0};
    return s;
}

} // namespace

TEST_CASE("mortality rates are element-wise count over population") {
    const auto rates = mortality_rates(three_age_schedule());
    CHECK(rates[0] == 0.0);
    CHECK(rates[1] == 0.0);
    CHECK(rates[2] == 1.0);

    MortalitySchedule s;
    s.deaths = {1, 1, 1};
    s.avg_population = {1000.0, 1000.0, 1000.0};
    const auto r2 = mortality_rates(s);
    CHECK(r2[0] == doctest::Approx(0.001).epsilon(1e-15));
}

TEST_CASE("schedule validation rejects malformed inputs") {
    MortalitySchedule s = three_age_schedule();
    s.avg_population[1] = 0.0;
    CHECK_THROWS_AS(s.validate(), ValidationError);

    s = three_age_schedule();
    s.deaths[0] = -1;
    CHECK_THROWS_AS(s.validate(), ValidationError);

    s = three_age_schedule();
    s.deaths[2] = 101;   // rate above one death per person-year
    CHECK_THROWS_AS(s.validate(), ValidationError);

    s = three_age_schedule();
    s.deaths.pop_back();
    CHECK_THROWS_AS(s.validate(), ValidationError);

    s = three_age_schedule();
    s.deaths = {100};
    s.avg_population = {100.0};
    CHECK_THROWS_AS(s.validate(), ValidationError);   // needs a terminal class above age 0
}

TEST_CASE("life table for flat survivorship") {
    const LifeTable table = build_life_table(three_age_schedule());
    CHECK(table.survivorship[0] == 100000.0);
    CHECK(table.survivorship[1] == 100000.0);
    CHECK(table.survivorship[2] == 100000.0);
    CHECK(table.person_years[0] == 100000.0);
    CHECK(table.person_years[2] == 100000.0);
    CHECK(table.life_expectancy[0] == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(table.life_expectancy[1] == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(table.life_expectancy[2] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("terminal class without deaths is rejected with context") {
    MortalitySchedule s = three_age_schedule();
    s.deaths[2] = 0;
    try {
        build_life_table(s);
        FAIL("expected TerminalRateZero");
    } catch (const TerminalRateZero &e) {
        const std::string message = e.what();
        CHECK(message.find("TOY") != std::string::npos);
        CHECK(message.find("T") != std::string::npos);
    }

    // single zero rate: the division guard fires before any length check
    CHECK_THROWS_AS(life_expectancy_from_rates(std::vector<double>{0.0}), TerminalRateZero);
}

TEST_CASE("closed form matches hand expansion for unit exponentials") {
    const std::vector<double> rates = {0.0, 0.0, 1.0};
    const auto e = life_expectancy_from_rates(rates);
    CHECK(e[0] == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(e[1] == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(e[2] == doctest::Approx(1.0).epsilon(1e-14));

    const auto oracle = test_support::oracle_life_expectancy(rates);
    for (std::size_t x = 0; x < e.size(); ++x) {
        CHECK(e[x] == doctest::Approx(oracle[x]).epsilon(1e-13));
    }
}

TEST_CASE("frozen oracle value for the constant-rate schedule") {
    // M_x = 0.01 for x in 0..84, terminal rate 0.5; expectation at birth
    // evaluated independently term by term.
    std::vector<double> rates(86, 0.01);
    rates[85] = 0.5;
    const double frozen_e0 = 58.113813822453039;

    const auto oracle = test_support::oracle_life_expectancy(rates);
    CHECK(oracle[0] == doctest::Approx(frozen_e0).epsilon(1e-12));

    MortalitySchedule s;
    s.region = "CONST";
    for (std::size_t x = 0; x < rates.size(); ++x) {
        s.avg_population.push_back(100000.0);
        s.deaths.push_back(std::llround(rates[x] * 100000.0));
    }
    const LifeTable table = build_life_table(s);
    CHECK(table.life_expectancy[0] == doctest::Approx(frozen_e0).epsilon(1e-12));

    const auto closed = life_expectancy_from_rates(rates);
    CHECK(closed[0] == doctest::Approx(frozen_e0).epsilon(1e-12));
}

TEST_CASE("recursive builder and closed form agree on random schedules") {
    SplitMix rng(2024);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto rates = test_support::random_rates(rng, 86);
        const LifeTable table = build_life_table_from_rates(rates);
        const auto closed = life_expectancy_from_rates(rates);
        for (std::size_t x = 0; x < rates.size(); ++x) {
            const double rel = std::abs(closed[x] / table.life_expectancy[x] - 1.0);
            worst = std::max(worst, rel);
        }
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("life table invariants on random schedules") {
    SplitMix rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        const auto rates = test_support::random_rates(rng, 40);
        const LifeTable table = build_life_table_from_rates(rates);
        CHECK(table.survivorship[0] == 100000.0);
        for (std::size_t x = 0; x + 1 < rates.size(); ++x) {
            CHECK(table.survivorship[x + 1] > 0.0);
            CHECK(table.survivorship[x + 1] <= table.survivorship[x]);
            // recursion reproducible to machine precision
            CHECK(table.survivorship[x + 1] == table.survivorship[x] * std::exp(-rates[x]));
            CHECK(table.life_expectancy[x] >= 0.5);
        }
        // T_x really is the tail sum of L_x
        double tail = 0.0;
        for (std::size_t x = rates.size(); x-- > 0;) {
            tail += table.person_years[x];
            CHECK(table.cumulative_person_years[x] == doctest::Approx(tail).epsilon(1e-12));
        }
    }
}

TEST_CASE("survivorship ratio identity across random age spans") {
    SplitMix rng(31);
    const auto rates = test_support::random_rates(rng, 86);
    const LifeTable table = build_life_table_from_rates(rates);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t x = static_cast<std::size_t>(rng.uniform() * 85.0);
        const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * (85.0 - x));
        double sum = 0.0;
        for (std::size_t k = x; k < x + n; ++k) sum += rates[k];
        const double ratio = table.survivorship[x + n] / table.survivorship[x];
        CHECK(ratio == doctest::Approx(std::exp(-sum)).epsilon(1e-12));
    }
}

TEST_CASE("raising any rate lowers every expectancy at or below it") {
    SplitMix rng(55);
    for (int trial = 0; trial < 50; ++trial) {
        auto rates = test_support::random_rates(rng, 30);
        const auto base = life_expectancy_from_rates(rates);
        const std::size_t z = static_cast<std::size_t>(rng.uniform() * 30.0);
        rates[z] += 0.01;
        const auto bumped = life_expectancy_from_rates(rates);
        for (std::size_t x = 0; x <= z; ++x) CHECK(bumped[x] < base[x]);
    }
}

TEST_CASE("exponential survivorship agrees with the rational variant to cubic order") {
    for (double m = 0.005; m <= 0.5; m += 0.005) {
        const double exponential = std::exp(-m);
        const double rational = 1.0 - m / (1.0 + m / 2.0);
        CHECK(std::abs(exponential - rational) <= 0.1 * m * m * m);
    }
}
