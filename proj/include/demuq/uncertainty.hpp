#pragma once

#include <span>
#include <vector>

#include "demuq/lifetable.hpp"
#include "demuq/types.hpp"

namespace demuq {

/// Crude-rate uncertainty mode.  The approximate mode drops the noise on the
/// population denominator (count << stock); the exact mode keeps it.
enum class RateMode { approximate, exact };

/// Per-indicator uncertainty triple: fixed-variance noise only, intrinsic
/// Poisson fluctuation, and the two combined in quadrature.  Relative values
/// are NaN when the indicator value is zero (undefined, not infinite).
struct UncertaintyBreakdown {
    double indicator_value = 0.0;
    double noise_abs = 0.0;
    double noise_rel = 0.0;
    double stat_abs = 0.0;
    double stat_rel = 0.0;
    double combined_abs = 0.0;
    double combined_rel = 0.0;
    double admixture = 0.0;   // combined_abs / stat_abs - 1

    bool relative_defined() const;
};

/// Throws ZeroCount when the breakdown's relative quantities are undefined.
const UncertaintyBreakdown &require_relative(const UncertaintyBreakdown &breakdown);

/// Linear error propagation: sqrt(sum (df/dx_i)^2 sigma_i^2).
double propagate_linear(std::span<const double> gradient, std::span<const double> sigmas);

/// Product/ratio propagation: relative uncertainties add in quadrature.
double propagate_product(std::span<const double> rel_uncertainties);

/// Uncertainty triple of a bare event count under noise of standard deviation
/// delta: noise delta/c, Poisson 1/sqrt(c), combined sqrt(delta^2+c)/c.
/// Used directly for the parametric figure grids.
UncertaintyBreakdown crude_count_uncertainty(double count, double delta);

/// Age-specific fertility rate f_x = b_x / w_x.
UncertaintyBreakdown fertility_rate_uncertainty(const FertilityInput &input, int age,
                                                const NoiseConfig &cfg,
                                                RateMode mode = RateMode::approximate);

/// Total fertility rate f = sum_x b_x / w_x.
UncertaintyBreakdown total_fertility_rate_uncertainty(const FertilityInput &input,
                                                      const NoiseConfig &cfg,
                                                      RateMode mode = RateMode::approximate);

/// Age-specific mortality rate M_x = D_x / B_x.
UncertaintyBreakdown mortality_rate_uncertainty(std::int64_t deaths, double avg_population,
                                                const NoiseConfig &cfg,
                                                RateMode mode = RateMode::approximate);

/// Closed-form life-expectancy uncertainties for every age of the table.
/// zero_fix excludes non-terminal ages with zero deaths from the noise sum,
/// mirroring perturbation schemes that never touch original zeros.
std::vector<UncertaintyBreakdown> life_expectancy_uncertainty(const MortalitySchedule &schedule,
                                                              const LifeTable &table,
                                                              const NoiseConfig &cfg,
                                                              RateMode mode = RateMode::approximate,
                                                              bool zero_fix = false);

/// Analytic gradient of E_x with respect to the mortality rates M_z for
/// z = x..terminal; component [z - x] is dE_x/dM_z.
std::vector<double> life_expectancy_gradient(const LifeTable &table, int age);

/// Relative admixture of noise over pure Poisson uncertainty for a crude
/// count: sqrt(1 + V/count) - 1.  Throws ZeroCount for counts < 1.
double admixture(double count, const NoiseConfig &cfg);

/// Leading-order expansion V / (2 count) of the above.
double admixture_linear(double count, const NoiseConfig &cfg);

/// Generic admixture of an already-computed breakdown.
double admixture(const UncertaintyBreakdown &breakdown);

} // namespace demuq
