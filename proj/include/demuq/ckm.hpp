#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "demuq/types.hpp"

namespace demuq {

/// Discrete noise distribution applied to one class of original counts.
/// Support holds the admissible noise values in ascending order.
struct PerturbationRow {
    std::vector<int> noise;
    std::vector<double> probability;

    double mean() const;
    double variance() const;
};

/// Noise distributions per original-count class: one row for each count in
/// 0..D+js plus a shared interior row for all larger counts.  Every row has
/// mean zero; the interior row has variance V exactly.  Rows close to zero
/// may be unable to reach V (their achieved variance is whatever the
/// constraints admit and can be read back through row_for).
class PerturbationTable {
  public:
    const NoiseConfig &config() const { return cfg_; }

    /// Number of explicit small-count rows (D + js + 1); counts at or beyond
    /// this fall into the interior row.
    int small_row_count() const { return static_cast<int>(small_rows_.size()); }

    const PerturbationRow &row_for(std::int64_t count) const;
    const PerturbationRow &interior_row() const { return interior_; }

    /// Deterministic draw of a noise value for one cell: a pure function of
    /// (count class, seed, cell_id), independent of call order.
    int draw(std::int64_t count, std::uint64_t seed, std::uint64_t cell_id) const;

    void write_csv(std::ostream &out) const;
    static PerturbationTable read_csv(std::istream &in);

    friend PerturbationTable build_perturbation_table(const NoiseConfig &cfg);

  private:
    PerturbationTable() = default;
    void rebuild_cdfs();
    void check_invariants() const;

    NoiseConfig cfg_;
    std::vector<PerturbationRow> small_rows_;   // index == original count
    PerturbationRow interior_;
    std::vector<std::vector<double>> cdfs_;     // small rows then interior
};

/// Constructs the table for the given noise setup.
/// Throws InfeasibleConfig when some row cannot satisfy the constraints.
PerturbationTable build_perturbation_table(const NoiseConfig &cfg);

/// Adds one noise draw to every count; draw i uses (seed, cell_ids[i]).
/// Outputs are always >= 0 and within max_deviation of the input.
std::vector<std::int64_t> perturb(std::span<const std::int64_t> counts,
                                  const PerturbationTable &table, std::uint64_t seed,
                                  std::span<const std::uint64_t> cell_ids);

} // namespace demuq
