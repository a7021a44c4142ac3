#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <vector>

#include "demuq/ckm.hpp"
#include "demuq/types.hpp"

namespace demuq {

/// Per-age comparison of the closed-form noise uncertainty against the
/// sampled standard deviation across perturbed replicates.
struct SimulationAgeRow {
    int age = 0;
    double analytic_delta = 0.0;      // closed-form noise-only uncertainty on E_x
    double sampled_sd = 0.0;          // Bessel-corrected s.d. over the replicates
    double rel_diff = 0.0;            // analytic / sampled - 1 (NaN when sampled == 0)
    double sampled_sd_with_original = 0.0;  // same, pooling in the unperturbed value
};

struct SimulationReport {
    std::string region;
    Sex sex = Sex::total;
    int year = 0;
    int replicates = 0;
    std::uint64_t seed = 0;
    NoiseConfig config;
    bool zero_fix = true;
    int clamped_replicates = 0;       // replicates whose terminal deaths hit zero and were reset to 1
    std::vector<SimulationAgeRow> ages;

    void write_csv(std::ostream &out) const;
    void write_json(std::ostream &out) const;
};

/// Life expectancies for `replicates` perturbed versions of the schedule's
/// death counts (replicate-major).  Each cell's noise depends only on
/// (seed, replicate, age), so results are order- and parallelism-independent.
struct ReplicateSample {
    std::vector<std::vector<double>> life_expectancy;
    int clamped_replicates = 0;
};
ReplicateSample sample_life_expectancies(const MortalitySchedule &schedule,
                                         const PerturbationTable &table, int replicates,
                                         std::uint64_t seed);

/// Monte-Carlo validation of the closed-form life-expectancy uncertainty:
/// perturbs death counts, rebuilds the life table per replicate and compares
/// the sampled spread of E_x against the analytic formula (zero_fix on, since
/// the sampler never perturbs zeros).
SimulationReport validate_life_expectancy_uncertainty(const MortalitySchedule &schedule,
                                                      const NoiseConfig &cfg, int replicates,
                                                      std::uint64_t seed);

struct QuartileSummary {
    double lower_quartile = 0.0;
    double median = 0.0;
    double upper_quartile = 0.0;
    std::size_t cells_used = 0;
    std::size_t cells_skipped = 0;   // cells whose mean count is zero
};

/// Ratio of the empirical time-series standard deviation to the square-root
/// (Poisson) estimator, summarised over cells.  Every series needs >= 3 points.
QuartileSummary poisson_diagnostic(const std::vector<std::vector<double>> &cell_series);

/// Convenience adapter for aligned per-year count arrays.
QuartileSummary poisson_diagnostic(const std::map<int, std::vector<double>> &counts_by_year);

} // namespace demuq
