#include "demuq/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <json.hpp>

#include "demuq/lifetable.hpp"
#include "demuq/uncertainty.hpp"

namespace demuq {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t replicate_cell_id(int replicate, int age) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(replicate)) << 32) |
           static_cast<std::uint32_t>(age);
}

double sample_sd(const std::vector<double> &values) {
    const std::size_t n = values.size();
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(n - 1));
}

double quantile(std::vector<double> sorted, double p) {
    const double h = p * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(h);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

} // namespace

ReplicateSample sample_life_expectancies(const MortalitySchedule &schedule,
                                         const PerturbationTable &table, int replicates,
                                         std::uint64_t seed) {
    if (replicates < 1) throw ValidationError("replicates must be >= 1");
    schedule.validate();
    const std::size_t n = schedule.deaths.size();

    std::vector<std::uint64_t> cell_ids(n);
    ReplicateSample sample;
    sample.life_expectancy.reserve(static_cast<std::size_t>(replicates));
    for (int rep = 0; rep < replicates; ++rep) {
        for (std::size_t age = 0; age < n; ++age) {
            cell_ids[age] = replicate_cell_id(rep, static_cast<int>(age));
        }
        std::vector<std::int64_t> deaths = perturb(schedule.deaths, table, seed, cell_ids);
        if (deaths.back() < 1) {
            deaths.back() = 1;   // keep the terminal rate positive
            ++sample.clamped_replicates;
        }
        std::vector<double> rates(n);
        for (std::size_t age = 0; age < n; ++age) {
            rates[age] = static_cast<double>(deaths[age]) / schedule.avg_population[age];
        }
        sample.life_expectancy.push_back(
            build_life_table_from_rates(std::move(rates)).life_expectancy);
    }
    return sample;
}

SimulationReport validate_life_expectancy_uncertainty(const MortalitySchedule &schedule,
                                                      const NoiseConfig &cfg, int replicates,
                                                      std::uint64_t seed) {
    if (replicates < 2) throw ValidationError("replicates must be >= 2 for a spread estimate");
    const PerturbationTable table = build_perturbation_table(cfg);
    const LifeTable original = build_life_table(schedule);
    const ReplicateSample sample = sample_life_expectancies(schedule, table, replicates, seed);

    const bool all_identical =
        std::all_of(sample.life_expectancy.begin(), sample.life_expectancy.end(),
                    [&](const std::vector<double> &e) { return e == sample.life_expectancy.front(); });
    if (all_identical) {
        throw ReplicateDegenerate("all replicates produced identical life expectancies "
                                  "(noise variance is zero?)");
    }

    const std::vector<UncertaintyBreakdown> analytic = life_expectancy_uncertainty(
        schedule, original, cfg, RateMode::approximate, /*zero_fix=*/true);

    SimulationReport report;
    report.region = schedule.region;
    report.sex = schedule.sex;
    report.year = schedule.year;
    report.replicates = replicates;
    report.seed = seed;
    report.config = cfg;
    report.zero_fix = true;
    report.clamped_replicates = sample.clamped_replicates;

    const std::size_t n = schedule.deaths.size();
    std::vector<double> values(static_cast<std::size_t>(replicates));
    for (std::size_t age = 0; age < n; ++age) {
        for (int rep = 0; rep < replicates; ++rep) {
            values[static_cast<std::size_t>(rep)] =
                sample.life_expectancy[static_cast<std::size_t>(rep)][age];
        }
        SimulationAgeRow row;
        row.age = static_cast<int>(age);
        row.analytic_delta = analytic[age].noise_abs;
        row.sampled_sd = sample_sd(values);
        row.rel_diff = row.sampled_sd > 0.0 ? row.analytic_delta / row.sampled_sd - 1.0 : kNaN;
        std::vector<double> pooled = values;
        pooled.push_back(original.life_expectancy[age]);
        row.sampled_sd_with_original = sample_sd(pooled);
        report.ages.push_back(row);
    }
    return report;
}

void SimulationReport::write_csv(std::ostream &out) const {
    char buf[64];
    out << "# demuq simulation report\n";
    std::snprintf(buf, sizeof buf, "%.17g", config.variance);
    out << "# region=" << region << " sex=" << sex_code(sex) << " year=" << year
        << " replicates=" << replicates << " seed=" << seed << " variance=" << buf
        << " max_deviation=" << config.max_deviation
        << " small_count_threshold=" << config.small_count_threshold
        << " zero_fix=" << (zero_fix ? 1 : 0) << " clamped_replicates=" << clamped_replicates
        << "\n";
    out << "age,analytic_delta,sampled_sd,rel_diff,sampled_sd_with_original\n";
    for (const auto &row : ages) {
        out << row.age;
        for (double v : {row.analytic_delta, row.sampled_sd, row.rel_diff,
                         row.sampled_sd_with_original}) {
            if (std::isnan(v)) {
                out << ',';
            } else {
                std::snprintf(buf, sizeof buf, "%.6g", v);
                out << ',' << buf;
            }
        }
        out << '\n';
    }
}

void SimulationReport::write_json(std::ostream &out) const {
    nlohmann::json j;
    j["region"] = region;
    j["sex"] = std::string(1, sex_code(sex));
    j["year"] = year;
    j["replicates"] = replicates;
    j["seed"] = seed;
    j["config"] = {{"variance", config.variance},
                   {"max_deviation", config.max_deviation},
                   {"small_count_threshold", config.small_count_threshold},
                   {"preserve_zeros", config.preserve_zeros}};
    j["zero_fix"] = zero_fix;
    j["clamped_replicates"] = clamped_replicates;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto &row : ages) {
        nlohmann::json r;
        r["age"] = row.age;
        r["analytic_delta"] = row.analytic_delta;
        r["sampled_sd"] = row.sampled_sd;
        if (std::isnan(row.rel_diff)) r["rel_diff"] = nullptr;
        else r["rel_diff"] = row.rel_diff;
        r["sampled_sd_with_original"] = row.sampled_sd_with_original;
        rows.push_back(std::move(r));
    }
    j["ages"] = std::move(rows);
    out << j.dump(2) << '\n';
}

QuartileSummary poisson_diagnostic(const std::vector<std::vector<double>> &cell_series) {
    QuartileSummary summary;
    std::vector<double> ratios;
    for (const auto &series : cell_series) {
        if (series.size() < 3) {
            throw InsufficientYears("poisson diagnostic needs >= 3 observations per cell, got " +
                                    std::to_string(series.size()));
        }
        double mean = 0.0;
        for (double v : series) mean += v;
        mean /= static_cast<double>(series.size());
        if (!(mean > 0.0)) {
            ++summary.cells_skipped;
            continue;
        }
        ratios.push_back(sample_sd(series) / std::sqrt(mean));
    }
    if (ratios.empty()) {
        throw ValidationError("poisson diagnostic: no cell with a positive mean count");
    }
    std::sort(ratios.begin(), ratios.end());
    summary.cells_used = ratios.size();
    summary.lower_quartile = quantile(ratios, 0.25);
    summary.median = quantile(ratios, 0.50);
    summary.upper_quartile = quantile(ratios, 0.75);
    return summary;
}

QuartileSummary poisson_diagnostic(const std::map<int, std::vector<double>> &counts_by_year) {
    if (counts_by_year.size() < 3) {
        throw InsufficientYears("poisson diagnostic needs >= 3 years, got " +
                                std::to_string(counts_by_year.size()));
    }
    const std::size_t cells = counts_by_year.begin()->second.size();
    for (const auto &[year, counts] : counts_by_year) {
        if (counts.size() != cells) {
            throw ValidationError("poisson diagnostic: count arrays differ in length across years");
        }
    }
    std::vector<std::vector<double>> series(cells);
    for (auto &s : series) s.reserve(counts_by_year.size());
    for (const auto &[year, counts] : counts_by_year) {
        for (std::size_t j = 0; j < cells; ++j) series[j].push_back(counts[j]);
    }
    return poisson_diagnostic(series);
}

} // namespace demuq
