#pragma once

#include <span>
#include <vector>

#include "demuq/types.hpp"

namespace demuq {

/// Survivorship radix: hypothetical cohort size at exact age 0.
inline constexpr double kLifeTableRadix = 100000.0;

/// Single-year life table with an open-ended terminal class.  Survivorship
/// follows the exponential model l_{x+1} = l_x * exp(-M_x); the terminal
/// person-years are L = l / M.
struct LifeTable {
    std::vector<double> mortality_rate;           // M_x, per person-year
    std::vector<double> survivorship;             // l_x, persons from radix 100000
    std::vector<double> person_years;             // L_x
    std::vector<double> cumulative_person_years;  // T_x
    std::vector<double> life_expectancy;          // E_x, years

    int terminal_age() const { return static_cast<int>(mortality_rate.size()) - 1; }
};

/// Crude age-specific mortality rates M_x = D_x / B_x.
std::vector<double> mortality_rates(const MortalitySchedule &schedule);

/// Builds the full life table through the survivorship recursion.
/// Throws TerminalRateZero when the terminal class has no deaths.
LifeTable build_life_table(const MortalitySchedule &schedule);

/// Same, starting from rates directly (no count/population sanity checks;
/// used for perturbed replicates where rates may exceed 1).
LifeTable build_life_table_from_rates(std::vector<double> rates);

/// Evaluates the exponential-sum closed form of E_x age by age, without the
/// survivorship recursion.  Serves as the independent cross-check path for
/// build_life_table.
std::vector<double> life_expectancy_from_rates(std::span<const double> rates);

} // namespace demuq
