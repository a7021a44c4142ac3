#include "demuq/lifetable.hpp"

#include <cmath>

namespace demuq {

namespace {

void check_rates(std::span<const double> rates) {
    if (rates.empty()) throw ValidationError("rate array is empty");
    for (std::size_t x = 0; x < rates.size(); ++x) {
        if (!std::isfinite(rates[x]) || rates[x] < 0.0) {
            throw ValidationError("mortality rate must be finite and >= 0 at age " +
                                  std::to_string(x));
        }
    }
    if (!(rates.back() > 0.0)) {
        throw TerminalRateZero("terminal mortality rate is zero; the open age class needs deaths");
    }
}

} // namespace

std::vector<double> mortality_rates(const MortalitySchedule &schedule) {
    schedule.validate();
    std::vector<double> rates(schedule.deaths.size());
    for (std::size_t x = 0; x < rates.size(); ++x) {
        rates[x] = static_cast<double>(schedule.deaths[x]) / schedule.avg_population[x];
    }
    return rates;
}

LifeTable build_life_table(const MortalitySchedule &schedule) {
    if (!schedule.deaths.empty() && schedule.deaths.back() == 0) {
        throw TerminalRateZero("no deaths in the terminal age class for region " +
                               schedule.region + ", sex " + std::string(1, sex_code(schedule.sex)));
    }
    return build_life_table_from_rates(mortality_rates(schedule));
}

LifeTable build_life_table_from_rates(std::vector<double> rates) {
    check_rates(rates);
    const std::size_t n = rates.size();
    const std::size_t xbar = n - 1;

    LifeTable table;
    table.mortality_rate = std::move(rates);
    table.survivorship.resize(n);
    table.person_years.resize(n);
    table.cumulative_person_years.resize(n);
    table.life_expectancy.resize(n);

    table.survivorship[0] = kLifeTableRadix;
    for (std::size_t x = 0; x < xbar; ++x) {
        table.survivorship[x + 1] = table.survivorship[x] * std::exp(-table.mortality_rate[x]);
    }
    for (std::size_t x = 0; x < xbar; ++x) {
        table.person_years[x] = 0.5 * (table.survivorship[x] + table.survivorship[x + 1]);
    }
    table.person_years[xbar] = table.survivorship[xbar] / table.mortality_rate[xbar];

    table.cumulative_person_years[xbar] = table.person_years[xbar];
    for (std::size_t x = xbar; x-- > 0;) {
        table.cumulative_person_years[x] =
            table.cumulative_person_years[x + 1] + table.person_years[x];
    }
    for (std::size_t x = 0; x < n; ++x) {
        table.life_expectancy[x] = table.cumulative_person_years[x] / table.survivorship[x];
    }
    return table;
}

std::vector<double> life_expectancy_from_rates(std::span<const double> rates) {
    check_rates(rates);
    const std::size_t n = rates.size();
    const std::size_t xbar = n - 1;

    std::vector<double> expectancy(n);
    for (std::size_t x = 0; x < n; ++x) {
        if (x == xbar) {
            expectancy[x] = 1.0 / rates[xbar];
            continue;
        }
        // E_x = 1/2 + sum of survivorship ratios + the terminal class term,
        // every ratio evaluated as an exponential of a running rate sum.
        double rate_sum = 0.0;
        double value = 0.5;
        for (std::size_t k = x + 1; k < xbar; ++k) {
            rate_sum += rates[k - 1];
            value += std::exp(-rate_sum);
        }
        rate_sum += rates[xbar - 1];
        value += (0.5 + 1.0 / rates[xbar]) * std::exp(-rate_sum);
        expectancy[x] = value;
    }
    return expectancy;
}

} // namespace demuq
