#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace demuq {

enum class Sex { total, male, female };

char sex_code(Sex sex);
Sex sex_from_code(std::string_view code);

/// Base class for all library errors; kind() gives a stable machine-readable tag.
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string &message) : std::runtime_error(message) {}
    virtual std::string_view kind() const { return "Error"; }
};

#define DEMUQ_DEFINE_ERROR(NAME)                                                                   \
    class NAME : public Error {                                                                    \
      public:                                                                                      \
        explicit NAME(const std::string &message) : Error(message) {}                              \
        std::string_view kind() const override { return #NAME; }                                   \
    }

DEMUQ_DEFINE_ERROR(ValidationError);
DEMUQ_DEFINE_ERROR(TerminalRateZero);
DEMUQ_DEFINE_ERROR(ZeroCount);
DEMUQ_DEFINE_ERROR(EmptyRange);
DEMUQ_DEFINE_ERROR(InfeasibleConfig);
DEMUQ_DEFINE_ERROR(ReplicateDegenerate);
DEMUQ_DEFINE_ERROR(InsufficientYears);
DEMUQ_DEFINE_ERROR(MalformedHeader);
DEMUQ_DEFINE_ERROR(UnknownAgeCode);
DEMUQ_DEFINE_ERROR(NonNumericValue);
DEMUQ_DEFINE_ERROR(MissingFragment);

#undef DEMUQ_DEFINE_ERROR

/// Single year of age within a schedule; the last class of a schedule is
/// open-ended ("x or over").
struct AgeIndex {
    int value = 0;
    bool terminal = false;

    friend bool operator==(const AgeIndex &, const AgeIndex &) = default;
};

/// Crude death counts and average populations by single year of age for one
/// region, sex and reference year.  Index == age; the last entry is the
/// open-ended terminal class.
struct MortalitySchedule {
    std::string region;
    Sex sex = Sex::total;
    int year = 0;
    std::vector<std::int64_t> deaths;     // D_x
    std::vector<double> avg_population;   // B_x, persons

    int terminal_age() const { return static_cast<int>(deaths.size()) - 1; }

    /// Throws ValidationError unless: arrays aligned, at least two age
    /// classes, B_x > 0, 0 <= D_x <= B_x.
    void validate() const;
};

/// Live births by single year of the mother's age plus the matching average
/// female population stocks.  Index i corresponds to age first_age + i.
struct FertilityInput {
    int first_age = 0;
    std::vector<std::int64_t> births;     // b_x
    std::vector<double> female_stock;     // w_x, persons

    int last_age() const { return first_age + static_cast<int>(births.size()) - 1; }
    void validate() const;
};

/// Fixed-variance noise setup: variance V (so the per-cell standard deviation
/// is sqrt(V)), maximum absolute deviation D, small-count threshold js (no
/// perturbed count may land in 1..js) and zero preservation.
struct NoiseConfig {
    double variance = 1.0;
    int max_deviation = 5;
    int small_count_threshold = 2;
    bool preserve_zeros = true;

    double delta() const { return std::sqrt(variance); }

    /// Throws InfeasibleConfig when the parameters cannot describe a valid
    /// perturbation table (V < 0, D < 1, js < 0, js > D, or D < ceil(sqrt(V))).
    void validate() const;
};

} // namespace demuq
