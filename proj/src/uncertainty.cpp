#include "demuq/uncertainty.hpp"

#include <cmath>
#include <limits>

namespace demuq {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Assembles the triple from the squared noise response factor S_n (the
// data-dependent factor multiplying the noise variance) and the squared
// statistical uncertainty S_s.  Computing all three absolutes through the
// same expressions makes the reduction identities hold bitwise: V = 0 gives
// combined == stat, and S_s = 0 gives combined == noise.
UncertaintyBreakdown assemble(double value, double noise_factor_sq, double stat_sq, double delta) {
    UncertaintyBreakdown b;
    b.indicator_value = value;
    const double noise_var = delta * delta * noise_factor_sq;
    b.noise_abs = std::sqrt(noise_var);
    b.stat_abs = std::sqrt(stat_sq);
    b.combined_abs = std::sqrt(noise_var + stat_sq);
    if (value != 0.0) {
        b.noise_rel = b.noise_abs / value;
        b.stat_rel = b.stat_abs / value;
        b.combined_rel = b.combined_abs / value;
    } else {
        b.noise_rel = b.stat_rel = b.combined_rel = kNaN;
    }
    if (b.stat_abs > 0.0) {
        b.admixture = b.combined_abs / b.stat_abs - 1.0;
    } else {
        b.admixture = b.combined_abs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    }
    return b;
}

} // namespace

bool UncertaintyBreakdown::relative_defined() const { return !std::isnan(combined_rel); }

const UncertaintyBreakdown &require_relative(const UncertaintyBreakdown &breakdown) {
    if (!breakdown.relative_defined()) {
        throw ZeroCount("relative uncertainty undefined: indicator value is zero (zero count)");
    }
    return breakdown;
}

double propagate_linear(std::span<const double> gradient, std::span<const double> sigmas) {
    if (gradient.size() != sigmas.size()) {
        throw ValidationError("propagate_linear: gradient and sigma lengths differ (" +
                              std::to_string(gradient.size()) + " vs " +
                              std::to_string(sigmas.size()) + ")");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < gradient.size(); ++i) {
        sum += gradient[i] * gradient[i] * sigmas[i] * sigmas[i];
    }
    return std::sqrt(sum);
}

double propagate_product(std::span<const double> rel_uncertainties) {
    double sum = 0.0;
    for (double r : rel_uncertainties) {
        if (r < 0.0 || !std::isfinite(r)) {
            throw ValidationError("propagate_product: relative uncertainties must be finite and >= 0");
        }
        sum += r * r;
    }
    return std::sqrt(sum);
}

UncertaintyBreakdown crude_count_uncertainty(double count, double delta) {
    if (!(count >= 0.0)) throw ValidationError("crude count must be >= 0");
    // Indicator is the count itself; S_n = 1, S_s = count.
    return assemble(count, 1.0, count, delta);
}

UncertaintyBreakdown fertility_rate_uncertainty(const FertilityInput &input, int age,
                                                const NoiseConfig &cfg, RateMode mode) {
    input.validate();
    const int idx = age - input.first_age;
    if (idx < 0 || idx >= static_cast<int>(input.births.size())) {
        throw ValidationError("age " + std::to_string(age) + " outside fertile range " +
                              std::to_string(input.first_age) + ".." +
                              std::to_string(input.last_age()));
    }
    const double b = static_cast<double>(input.births[idx]);
    const double w = input.female_stock[idx];
    const double noise_factor = 1.0 / (w * w) +
                                (mode == RateMode::exact ? (b * b) / (w * w * w * w) : 0.0);
    return assemble(b / w, noise_factor, b / (w * w), cfg.delta());
}

UncertaintyBreakdown total_fertility_rate_uncertainty(const FertilityInput &input,
                                                      const NoiseConfig &cfg, RateMode mode) {
    if (input.births.empty()) throw EmptyRange("total fertility rate needs a non-empty age range");
    input.validate();
    double value = 0.0;
    double noise_factor = 0.0;
    double stat_sq = 0.0;
    for (std::size_t i = 0; i < input.births.size(); ++i) {
        const double b = static_cast<double>(input.births[i]);
        const double w = input.female_stock[i];
        value += b / w;
        noise_factor += 1.0 / (w * w) +
                        (mode == RateMode::exact ? (b * b) / (w * w * w * w) : 0.0);
        stat_sq += b / (w * w);
    }
    return assemble(value, noise_factor, stat_sq, cfg.delta());
}

UncertaintyBreakdown mortality_rate_uncertainty(std::int64_t deaths, double avg_population,
                                                const NoiseConfig &cfg, RateMode mode) {
    if (deaths < 0) throw ValidationError("death count must be >= 0");
    if (!(avg_population > 0.0)) throw ValidationError("average population must be positive");
    const double d = static_cast<double>(deaths);
    const double b = avg_population;
    const double noise_factor = 1.0 / (b * b) +
                                (mode == RateMode::exact ? (d * d) / (b * b * b * b) : 0.0);
    return assemble(d / b, noise_factor, d / (b * b), cfg.delta());
}

std::vector<UncertaintyBreakdown> life_expectancy_uncertainty(const MortalitySchedule &schedule,
                                                              const LifeTable &table,
                                                              const NoiseConfig &cfg, RateMode mode,
                                                              bool zero_fix) {
    const std::size_t n = schedule.deaths.size();
    if (table.mortality_rate.size() != n) {
        throw ValidationError("life table and schedule cover different age ranges");
    }
    if (n < 1 || schedule.deaths.back() < 1) {
        throw TerminalRateZero("life-expectancy uncertainty needs deaths in the terminal class "
                               "(region " + schedule.region + ", sex " +
                               std::string(1, sex_code(schedule.sex)) + ")");
    }
    const std::size_t xbar = n - 1;
    const double delta = cfg.delta();

    std::vector<UncertaintyBreakdown> out(n);
    for (std::size_t x = 0; x < n; ++x) {
        const double lx = table.survivorship[x];
        double noise_factor = 0.0;
        double stat_sq = 0.0;
        for (std::size_t z = x; z < xbar; ++z) {
            const double bz = schedule.avg_population[z];
            const double lratio = table.survivorship[z + 1] / lx;
            const double response = lratio * (0.5 + table.life_expectancy[z + 1]);
            const double term = (response * response) / (bz * bz);
            const double dz = static_cast<double>(schedule.deaths[z]);
            if (!(zero_fix && schedule.deaths[z] == 0)) {
                const double mz = table.mortality_rate[z];
                noise_factor += term * (mode == RateMode::exact ? 1.0 + mz * mz : 1.0);
            }
            stat_sq += dz * term;
        }
        // terminal class: response is l_xbar / (l_x * M_xbar^2), i.e. B^2 / D^4
        const double bt = schedule.avg_population[xbar];
        const double dt = static_cast<double>(schedule.deaths[xbar]);
        const double lratio = table.survivorship[xbar] / lx;
        const double term = (bt * bt) / (dt * dt * dt * dt) * lratio * lratio;
        const double mt = table.mortality_rate[xbar];
        noise_factor += term * (mode == RateMode::exact ? 1.0 + mt * mt : 1.0);
        stat_sq += dt * term;

        out[x] = assemble(table.life_expectancy[x], noise_factor, stat_sq, delta);
    }
    return out;
}

std::vector<double> life_expectancy_gradient(const LifeTable &table, int age) {
    const int xbar = table.terminal_age();
    if (age < 0 || age > xbar) {
        throw ValidationError("age " + std::to_string(age) + " outside table range 0.." +
                              std::to_string(xbar));
    }
    const double lx = table.survivorship[age];
    std::vector<double> gradient(static_cast<std::size_t>(xbar - age) + 1);
    for (int z = age; z < xbar; ++z) {
        gradient[z - age] = -(table.survivorship[z + 1] / lx) *
                            (0.5 + table.life_expectancy[z + 1]);
    }
    const double mt = table.mortality_rate[xbar];
    gradient[xbar - age] = -(table.survivorship[xbar] / lx) / (mt * mt);
    return gradient;
}

double admixture(double count, const NoiseConfig &cfg) {
    if (!(count >= 1.0)) {
        throw ZeroCount("admixture needs an underlying count >= 1, got " + std::to_string(count));
    }
    const double u = cfg.variance / count;
    // sqrt(1+u) - 1 written in the cancellation-free form
    return u / (std::sqrt(1.0 + u) + 1.0);
}

double admixture_linear(double count, const NoiseConfig &cfg) {
    if (!(count >= 1.0)) {
        throw ZeroCount("admixture needs an underlying count >= 1, got " + std::to_string(count));
    }
    return cfg.variance / (2.0 * count);
}

double admixture(const UncertaintyBreakdown &breakdown) { return breakdown.admixture; }

} // namespace demuq
