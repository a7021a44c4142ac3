#include "demuq/types.hpp"

namespace demuq {

char sex_code(Sex sex) {
    switch (sex) {
    case Sex::total: return 'T';
    case Sex::male: return 'M';
    case Sex::female: return 'F';
    }
    return '?';
}

Sex sex_from_code(std::string_view code) {
    if (code == "T" || code == "t") return Sex::total;
    if (code == "M" || code == "m") return Sex::male;
    if (code == "F" || code == "f") return Sex::female;
    throw ValidationError("unknown sex code '" + std::string(code) + "' (expected T, M or F)");
}

void MortalitySchedule::validate() const {
    const std::string where = "schedule " + region + "/" + std::string(1, sex_code(sex));
    if (deaths.size() != avg_population.size()) {
        throw ValidationError(where + ": deaths and avg_population lengths differ (" +
                              std::to_string(deaths.size()) + " vs " +
                              std::to_string(avg_population.size()) + ")");
    }
    if (deaths.size() < 2) {
        throw ValidationError(where + ": needs at least two age classes (0 and the terminal class)");
    }
    for (std::size_t x = 0; x < deaths.size(); ++x) {
        if (!(avg_population[x] > 0.0)) {
            throw ValidationError(where + ": average population must be positive at age " +
                                  std::to_string(x));
        }
        if (deaths[x] < 0) {
            throw ValidationError(where + ": negative death count at age " + std::to_string(x));
        }
        // sanity bound: more than one death per person-year cannot be a crude rate
        if (static_cast<double>(deaths[x]) > avg_population[x]) {
            throw ValidationError(where + ": death count exceeds average population at age " +
                                  std::to_string(x));
        }
    }
}

void FertilityInput::validate() const {
    if (births.size() != female_stock.size()) {
        throw ValidationError("fertility input: births and female_stock lengths differ");
    }
    if (first_age < 0) throw ValidationError("fertility input: negative first age");
    for (std::size_t i = 0; i < births.size(); ++i) {
        if (births[i] < 0) {
            throw ValidationError("fertility input: negative birth count at age " +
                                  std::to_string(first_age + static_cast<int>(i)));
        }
        if (!(female_stock[i] > 0.0)) {
            throw ValidationError("fertility input: female stock must be positive at age " +
                                  std::to_string(first_age + static_cast<int>(i)));
        }
    }
}

void NoiseConfig::validate() const {
    if (!(variance >= 0.0) || !std::isfinite(variance)) {
        throw InfeasibleConfig("noise variance must be finite and >= 0");
    }
    if (max_deviation < 1) throw InfeasibleConfig("max deviation must be >= 1");
    if (small_count_threshold < 0) throw InfeasibleConfig("small-count threshold must be >= 0");
    if (small_count_threshold > max_deviation) {
        throw InfeasibleConfig("small-count threshold exceeds max deviation");
    }
    if (static_cast<double>(max_deviation) * max_deviation < variance) {
        throw InfeasibleConfig("max deviation " + std::to_string(max_deviation) +
                               " cannot reach variance " + std::to_string(variance) +
                               " (requires D >= ceil(sqrt(V)))");
    }
}

} // namespace demuq
