#pragma once

#include <compare>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "demuq/types.hpp"

namespace demuq::ingest {

enum class AgeKind { single, open, total, unknown };

/// Age dimension of a statistical cell: a single year, an open-ended class
/// ("85+"), the TOTAL aggregate or the unknown-age bucket.
struct AgeCode {
    AgeKind kind = AgeKind::single;
    int value = 0;   // age for single, start age for open, unused otherwise

    static AgeCode single(int age) { return {AgeKind::single, age}; }
    static AgeCode open(int start) { return {AgeKind::open, start}; }
    static AgeCode total() { return {AgeKind::total, 0}; }
    static AgeCode unknown() { return {AgeKind::unknown, 0}; }

    std::string str() const;

    friend auto operator<=>(const AgeCode &, const AgeCode &) = default;
};

/// Maps Eurostat bulk-download age codes: Y_LT1 -> 0, Y42 -> 42,
/// Y_GE85 -> open(85), TOTAL, UNK.  Throws UnknownAgeCode otherwise.
AgeCode parse_eurostat_age(std::string_view code);

/// Parses the canonical CSV age column: "42", "85+", "TOTAL", "UNK".
AgeCode parse_canonical_age(std::string_view text);

struct DataKey {
    std::string measure;   // population | deaths | births | life-table indicator code
    std::string region;
    Sex sex = Sex::total;
    int year = 0;
    AgeCode age;

    friend auto operator<=>(const DataKey &, const DataKey &) = default;
};

struct RawValue {
    double value = 0.0;
    std::string flags;   // Eurostat observation flags, verbatim

    friend bool operator==(const RawValue &, const RawValue &) = default;
};

/// Sparse cell store: absent keys are missing observations, which keeps
/// missing distinguishable from zero.
class DataStore {
  public:
    void insert(DataKey key, RawValue value);
    const RawValue *find(const DataKey &key) const;
    const std::map<DataKey, RawValue> &cells() const { return cells_; }

    void merge(const DataStore &other);

    void add_source(std::string source) { sources_.push_back(std::move(source)); }
    const std::vector<std::string> &sources() const { return sources_; }

    std::set<std::string> regions(const std::string &measure) const;
    std::set<int> years(const std::string &measure) const;
    std::set<Sex> sexes(const std::string &measure) const;

  private:
    std::map<DataKey, RawValue> cells_;
    std::vector<std::string> sources_;
};

enum class DatasetKind { population, deaths, births, life_table, canonical };

DatasetKind dataset_kind_from_name(std::string_view name);

/// Parses a Eurostat bulk-download TSV: the first column is a comma-separated
/// dimension tuple ending in the geography, followed by one tab-separated
/// column per year.  Values may carry whitespace-separated flag letters; ":"
/// marks missing observations.
DataStore parse_eurostat_tsv(const std::filesystem::path &path, DatasetKind kind);
DataStore parse_eurostat_tsv(std::istream &in, DatasetKind kind, const std::string &name);

DataStore read_canonical_csv(const std::filesystem::path &path);
DataStore read_canonical_csv(std::istream &in, const std::string &name);
void write_canonical_csv(const DataStore &store, std::ostream &out);

struct AssembleOptions {
    int terminal_age = 85;
};

struct AssembledData {
    MortalitySchedule schedule;
    std::optional<FertilityInput> fertility;
    double population_total = 0.0;          // sum of B_x over all ages
    std::vector<std::string> quality_notes;
    bool missing_data = false;
};

/// Builds a mortality schedule (and fertility input when birth data exist)
/// for one region/sex/year.  Average populations are the mean of the two
/// adjacent 1-January stocks when both are present, else the single stock.
/// Missing death/birth cells count as zero and are flagged; missing stocks
/// raise MissingFragment.
AssembledData assemble(const DataStore &store, const std::string &region, Sex sex, int year,
                       const AssembleOptions &options = {});

/// Checks, for every (measure, region, sex, year) with a TOTAL row and full
/// age coverage, that the age-specific counts sum to TOTAL minus the
/// unknown-age bucket.  Returns human-readable violation descriptions.
std::vector<std::string> aggregation_violations(const DataStore &store);

} // namespace demuq::ingest
