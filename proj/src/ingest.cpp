#include "demuq/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <tuple>

namespace demuq::ingest {

namespace {

std::string trim(std::string_view s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string_view::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(begin, end - begin + 1));
}

std::vector<std::string> split(std::string_view text, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = text.find(sep, start);
        if (pos == std::string_view::npos) {
            parts.emplace_back(text.substr(start));
            return parts;
        }
        parts.emplace_back(text.substr(start, pos - start));
        start = pos + 1;
    }
}

std::optional<int> to_int(std::string_view text) {
    int value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
    return value;
}

std::optional<double> to_double(const std::string &text) {
    if (text.empty()) return std::nullopt;
    char *end = nullptr;
    const double value = std::strtod(text.c_str(), &end);
    if (end != text.c_str() + text.size()) return std::nullopt;
    return value;
}

std::string measure_for(DatasetKind kind) {
    switch (kind) {
    case DatasetKind::population: return "population";
    case DatasetKind::deaths: return "deaths";
    case DatasetKind::births: return "births";
    default: return "";
    }
}

} // namespace

std::string AgeCode::str() const {
    switch (kind) {
    case AgeKind::single: return std::to_string(value);
    case AgeKind::open: return std::to_string(value) + "+";
    case AgeKind::total: return "TOTAL";
    case AgeKind::unknown: return "UNK";
    }
    return "?";
}

AgeCode parse_eurostat_age(std::string_view code) {
    if (code == "TOTAL") return AgeCode::total();
    if (code == "UNK") return AgeCode::unknown();
    if (code == "Y_LT1") return AgeCode::single(0);
    if (code.starts_with("Y_GE")) {
        if (const auto age = to_int(code.substr(4))) return AgeCode::open(*age);
    } else if (code.starts_with("Y_OPEN")) {
        return AgeCode::open(0);
    } else if (code.starts_with("Y")) {
        if (const auto age = to_int(code.substr(1))) return AgeCode::single(*age);
    }
    throw UnknownAgeCode("unknown age code '" + std::string(code) + "'");
}

AgeCode parse_canonical_age(std::string_view text) {
    if (text == "TOTAL") return AgeCode::total();
    if (text == "UNK") return AgeCode::unknown();
    if (text.ends_with("+")) {
        if (const auto age = to_int(text.substr(0, text.size() - 1))) return AgeCode::open(*age);
    } else if (const auto age = to_int(text)) {
        return AgeCode::single(*age);
    }
    throw UnknownAgeCode("unknown age '" + std::string(text) + "' in canonical CSV");
}

void DataStore::insert(DataKey key, RawValue value) {
    cells_[std::move(key)] = std::move(value);
}

const RawValue *DataStore::find(const DataKey &key) const {
    const auto it = cells_.find(key);
    return it == cells_.end() ? nullptr : &it->second;
}

void DataStore::merge(const DataStore &other) {
    for (const auto &[key, value] : other.cells_) cells_[key] = value;
    for (const auto &source : other.sources_) sources_.push_back(source);
}

std::set<std::string> DataStore::regions(const std::string &measure) const {
    std::set<std::string> out;
    for (const auto &[key, value] : cells_) {
        if (key.measure == measure) out.insert(key.region);
    }
    return out;
}

std::set<int> DataStore::years(const std::string &measure) const {
    std::set<int> out;
    for (const auto &[key, value] : cells_) {
        if (key.measure == measure) out.insert(key.year);
    }
    return out;
}

std::set<Sex> DataStore::sexes(const std::string &measure) const {
    std::set<Sex> out;
    for (const auto &[key, value] : cells_) {
        if (key.measure == measure) out.insert(key.sex);
    }
    return out;
}

DatasetKind dataset_kind_from_name(std::string_view name) {
    if (name == "population") return DatasetKind::population;
    if (name == "deaths") return DatasetKind::deaths;
    if (name == "births") return DatasetKind::births;
    if (name == "life-table" || name == "life_table") return DatasetKind::life_table;
    if (name == "canonical") return DatasetKind::canonical;
    throw ValidationError("unknown dataset kind '" + std::string(name) +
                          "' (expected population, deaths, births, life-table or canonical)");
}

DataStore parse_eurostat_tsv(const std::filesystem::path &path, DatasetKind kind) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path.string() + "'");
    return parse_eurostat_tsv(in, kind, path.string());
}

DataStore parse_eurostat_tsv(std::istream &in, DatasetKind kind, const std::string &name) {
    if (kind == DatasetKind::canonical) {
        throw ValidationError("canonical CSV must be read with read_canonical_csv");
    }
    std::string line;
    if (!std::getline(in, line)) throw MalformedHeader(name + ": empty file");

    const std::vector<std::string> header = split(trim(line), '\t');
    const auto backslash = header[0].find('\\');
    if (backslash == std::string::npos || trim(header[0].substr(backslash + 1)) != "TIME_PERIOD") {
        throw MalformedHeader(name + ": first header cell must end in \\TIME_PERIOD, got '" +
                              header[0] + "'");
    }
    const std::vector<std::string> dims = split(header[0].substr(0, backslash), ',');
    int geo_idx = -1, age_idx = -1, sex_idx = -1, indic_idx = -1;
    for (std::size_t i = 0; i < dims.size(); ++i) {
        const std::string dim = trim(dims[i]);
        if (dim == "geo") geo_idx = static_cast<int>(i);
        else if (dim == "age") age_idx = static_cast<int>(i);
        else if (dim == "sex") sex_idx = static_cast<int>(i);
        else if (dim == "indic_de") indic_idx = static_cast<int>(i);
    }
    if (geo_idx < 0 || age_idx < 0) {
        throw MalformedHeader(name + ": header lacks the geo or age dimension");
    }
    if (kind == DatasetKind::life_table && indic_idx < 0) {
        throw MalformedHeader(name + ": life-table file lacks the indic_de dimension");
    }

    std::vector<int> years;
    years.reserve(header.size() - 1);
    for (std::size_t c = 1; c < header.size(); ++c) {
        const auto year = to_int(trim(header[c]));
        if (!year) throw MalformedHeader(name + ": non-year column header '" + header[c] + "'");
        years.push_back(*year);
    }

    DataStore store;
    store.add_source(name);
    const std::string fixed_measure = measure_for(kind);
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const std::vector<std::string> cells = split(line, '\t');
        const std::vector<std::string> tuple = split(trim(cells[0]), ',');
        if (tuple.size() != dims.size()) {
            throw MalformedHeader(name + ": row " + std::to_string(row) + " has " +
                                  std::to_string(tuple.size()) + " dimension values, expected " +
                                  std::to_string(dims.size()));
        }
        DataKey key;
        key.region = trim(tuple[static_cast<std::size_t>(geo_idx)]);
        key.age = parse_eurostat_age(trim(tuple[static_cast<std::size_t>(age_idx)]));
        key.sex = sex_idx >= 0 ? sex_from_code(trim(tuple[static_cast<std::size_t>(sex_idx)]))
                               : Sex::total;
        key.measure = kind == DatasetKind::life_table
                          ? trim(tuple[static_cast<std::size_t>(indic_idx)])
                          : fixed_measure;

        for (std::size_t c = 1; c < cells.size() && c <= years.size(); ++c) {
            const std::string cell = trim(cells[c]);
            if (cell.empty() || cell[0] == ':') continue;   // missing observation
            std::istringstream cs(cell);
            std::string token, flags;
            cs >> token;
            const auto value = to_double(token);
            if (!value) {
                throw NonNumericValue(name + ": non-numeric value '" + cell + "' at row " +
                                      std::to_string(row) + ", column " + std::to_string(c + 1));
            }
            std::string flag;
            while (cs >> flag) {
                if (!flags.empty()) flags += ' ';
                flags += flag;
            }
            key.year = years[c - 1];
            store.insert(key, RawValue{*value, flags});
        }
    }
    return store;
}

DataStore read_canonical_csv(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path.string() + "'");
    return read_canonical_csv(in, path.string());
}

DataStore read_canonical_csv(std::istream &in, const std::string &name) {
    DataStore store;
    store.add_source(name);
    std::string line;
    bool have_header = false;
    int row = 0;
    while (std::getline(in, line)) {
        ++row;
        const std::string text = trim(line);
        if (text.empty() || text[0] == '#') continue;
        if (!have_header) {
            if (text != "region,sex,age,year,measure,value,flags" &&
                text != "region,sex,age,year,measure,value") {
                throw MalformedHeader(name + ": unexpected canonical CSV header '" + text + "'");
            }
            have_header = true;
            continue;
        }
        const std::vector<std::string> cols = split(text, ',');
        if (cols.size() != 6 && cols.size() != 7) {
            throw MalformedHeader(name + ": row " + std::to_string(row) + " has " +
                                  std::to_string(cols.size()) + " columns, expected 6 or 7");
        }
        DataKey key;
        key.region = cols[0];
        key.sex = sex_from_code(cols[1]);
        key.age = parse_canonical_age(cols[2]);
        const auto year = to_int(cols[3]);
        if (!year) {
            throw NonNumericValue(name + ": bad year '" + cols[3] + "' at row " +
                                  std::to_string(row));
        }
        key.year = *year;
        key.measure = cols[4];
        const auto value = to_double(cols[5]);
        if (!value) {
            throw NonNumericValue(name + ": non-numeric value '" + cols[5] + "' at row " +
                                  std::to_string(row) + ", column 6");
        }
        store.insert(key, RawValue{*value, cols.size() == 7 ? cols[6] : ""});
    }
    if (!have_header) throw MalformedHeader(name + ": no canonical CSV header found");
    return store;
}

void write_canonical_csv(const DataStore &store, std::ostream &out) {
    out << "# demuq canonical data v1\n";
    for (const auto &source : store.sources()) out << "# source: " << source << '\n';
    out << "region,sex,age,year,measure,value,flags\n";
    char buf[64];
    for (const auto &[key, value] : store.cells()) {
        if (key.region.find(',') != std::string::npos ||
            value.flags.find(',') != std::string::npos) {
            throw ValidationError("canonical CSV cannot hold commas in region or flags");
        }
        std::snprintf(buf, sizeof buf, "%.17g", value.value);
        out << key.region << ',' << sex_code(key.sex) << ',' << key.age.str() << ',' << key.year
            << ',' << key.measure << ',' << buf << ',' << value.flags << '\n';
    }
}

namespace {

// All cells of one (measure, region, sex, year), folded onto 0..terminal.
struct AgeProfile {
    std::map<int, double> by_age;          // folded ages, terminal inclusive
    std::optional<double> total;           // TOTAL row
    double unknown = 0.0;                  // UNK bucket
    bool any_cell = false;
    bool any_flagged = false;
};

AgeProfile collect_profile(const DataStore &store, const std::string &measure,
                           const std::string &region, Sex sex, int year, int terminal) {
    AgeProfile profile;
    DataKey lo{measure, region, sex, year, AgeCode{AgeKind::single, std::numeric_limits<int>::min()}};
    DataKey hi{measure, region, sex, year, AgeCode{AgeKind::unknown, std::numeric_limits<int>::max()}};
    const auto begin = store.cells().lower_bound(lo);
    const auto end = store.cells().upper_bound(hi);
    for (auto it = begin; it != end; ++it) {
        const AgeCode &age = it->first.age;
        const double value = it->second.value;
        profile.any_cell = true;
        if (!it->second.flags.empty()) profile.any_flagged = true;
        switch (age.kind) {
        case AgeKind::single:
            profile.by_age[std::min(age.value, terminal)] += value;
            break;
        case AgeKind::open:
            if (age.value < terminal) {
                throw ValidationError(measure + " for " + region + "/" +
                                      std::string(1, sex_code(sex)) + "/" + std::to_string(year) +
                                      ": open age class " + age.str() +
                                      " starts below the terminal age " + std::to_string(terminal));
            }
            profile.by_age[terminal] += value;
            break;
        case AgeKind::total:
            profile.total = value;
            break;
        case AgeKind::unknown:
            profile.unknown += value;
            break;
        }
    }
    return profile;
}

// Single-age cells only; open classes, TOTAL and UNK are ignored.  Used for
// mother-age stocks, where folding open classes would be nonsense.
std::map<int, double> collect_singles(const DataStore &store, const std::string &measure,
                                      const std::string &region, Sex sex, int year) {
    std::map<int, double> singles;
    DataKey lo{measure, region, sex, year, AgeCode{AgeKind::single, std::numeric_limits<int>::min()}};
    DataKey hi{measure, region, sex, year, AgeCode{AgeKind::unknown, std::numeric_limits<int>::max()}};
    const auto begin = store.cells().lower_bound(lo);
    const auto end = store.cells().upper_bound(hi);
    for (auto it = begin; it != end; ++it) {
        if (it->first.age.kind == AgeKind::single) singles[it->first.age.value] = it->second.value;
    }
    return singles;
}

std::string join_ages(const std::vector<int> &ages) {
    std::string out;
    for (std::size_t i = 0; i < ages.size() && i < 8; ++i) {
        if (i) out += ' ';
        out += std::to_string(ages[i]);
    }
    if (ages.size() > 8) out += " ...";
    return out;
}

} // namespace

AssembledData assemble(const DataStore &store, const std::string &region, Sex sex, int year,
                       const AssembleOptions &options) {
    const int terminal = options.terminal_age;
    if (terminal < 1) throw ValidationError("terminal age must be >= 1");
    const std::string where = region + "/" + std::string(1, sex_code(sex)) + "/" +
                              std::to_string(year);

    AssembledData out;
    out.schedule.region = region;
    out.schedule.sex = sex;
    out.schedule.year = year;

    const AgeProfile stock_t = collect_profile(store, "population", region, sex, year, terminal);
    const AgeProfile stock_t1 =
        collect_profile(store, "population", region, sex, year + 1, terminal);
    if (!stock_t.any_cell && !stock_t1.any_cell) {
        throw MissingFragment("population absent for " + where + " (years " +
                              std::to_string(year) + " and " + std::to_string(year + 1) + ")");
    }

    std::vector<int> single_stock_ages;
    out.schedule.avg_population.resize(static_cast<std::size_t>(terminal) + 1);
    for (int age = 0; age <= terminal; ++age) {
        const auto a = stock_t.by_age.find(age);
        const auto b = stock_t1.by_age.find(age);
        if (a != stock_t.by_age.end() && b != stock_t1.by_age.end()) {
            out.schedule.avg_population[static_cast<std::size_t>(age)] =
                0.5 * (a->second + b->second);
        } else if (a != stock_t.by_age.end() || b != stock_t1.by_age.end()) {
            out.schedule.avg_population[static_cast<std::size_t>(age)] =
                a != stock_t.by_age.end() ? a->second : b->second;
            single_stock_ages.push_back(age);
        } else {
            throw MissingFragment("population stock missing for " + where + " at age " +
                                  std::to_string(age));
        }
    }
    if (!single_stock_ages.empty()) {
        out.quality_notes.push_back(
            "population " + where + ": single 1-Jan stock (no adjacent-year average) at " +
            std::to_string(single_stock_ages.size()) + " ages: " + join_ages(single_stock_ages));
        out.missing_data = true;
    }
    for (double b : out.schedule.avg_population) out.population_total += b;

    const AgeProfile deaths = collect_profile(store, "deaths", region, sex, year, terminal);
    if (!deaths.any_cell) throw MissingFragment("deaths absent for " + where);
    std::vector<int> missing_death_ages;
    out.schedule.deaths.resize(static_cast<std::size_t>(terminal) + 1, 0);
    for (int age = 0; age <= terminal; ++age) {
        const auto it = deaths.by_age.find(age);
        if (it == deaths.by_age.end()) {
            missing_death_ages.push_back(age);
        } else {
            out.schedule.deaths[static_cast<std::size_t>(age)] = std::llround(it->second);
        }
    }
    if (!missing_death_ages.empty()) {
        out.quality_notes.push_back("deaths " + where + ": " +
                                    std::to_string(missing_death_ages.size()) +
                                    " ages missing, treated as zero: " +
                                    join_ages(missing_death_ages));
        out.missing_data = true;
    }
    if (deaths.unknown > 0.0) {
        out.quality_notes.push_back("deaths " + where + ": " +
                                    std::to_string(std::llround(deaths.unknown)) +
                                    " of unknown age excluded from the age-specific array");
    }
    out.schedule.validate();

    // Fertility block: total births by mother's age over average female stocks.
    const AgeProfile births = collect_profile(store, "births", region, Sex::total, year,
                                              std::numeric_limits<int>::max() / 2);
    if (births.any_cell && !births.by_age.empty()) {
        const int first = births.by_age.begin()->first;
        const int last = births.by_age.rbegin()->first;
        FertilityInput fertility;
        fertility.first_age = first;
        std::vector<int> missing_birth_ages;
        for (int age = first; age <= last; ++age) {
            const auto it = births.by_age.find(age);
            if (it == births.by_age.end()) {
                missing_birth_ages.push_back(age);
                fertility.births.push_back(0);
            } else {
                fertility.births.push_back(std::llround(it->second));
            }
        }
        if (!missing_birth_ages.empty()) {
            out.quality_notes.push_back("births " + region + "/" + std::to_string(year) + ": " +
                                        std::to_string(missing_birth_ages.size()) +
                                        " ages missing, treated as zero: " +
                                        join_ages(missing_birth_ages));
            out.missing_data = true;
        }
        if (births.unknown > 0.0) {
            out.quality_notes.push_back("births " + region + "/" + std::to_string(year) + ": " +
                                        std::to_string(std::llround(births.unknown)) +
                                        " of unknown mother age excluded");
        }

        const std::map<int, double> female_t =
            collect_singles(store, "population", region, Sex::female, year);
        const std::map<int, double> female_t1 =
            collect_singles(store, "population", region, Sex::female, year + 1);
        std::vector<int> single_w_ages;
        for (int age = first; age <= last; ++age) {
            const auto a = female_t.find(age);
            const auto b = female_t1.find(age);
            if (a != female_t.end() && b != female_t1.end()) {
                fertility.female_stock.push_back(0.5 * (a->second + b->second));
            } else if (a != female_t.end() || b != female_t1.end()) {
                fertility.female_stock.push_back(a != female_t.end() ? a->second : b->second);
                single_w_ages.push_back(age);
            } else {
                throw MissingFragment("female population stock missing for " + region + "/F/" +
                                      std::to_string(year) + " at mother age " +
                                      std::to_string(age));
            }
        }
        if (!single_w_ages.empty()) {
            out.quality_notes.push_back("female stocks " + region + "/" + std::to_string(year) +
                                        ": single 1-Jan stock at " +
                                        std::to_string(single_w_ages.size()) +
                                        " ages: " + join_ages(single_w_ages));
            out.missing_data = true;
        }
        fertility.validate();
        out.fertility = std::move(fertility);
    }

    return out;
}

std::vector<std::string> aggregation_violations(const DataStore &store) {
    struct Group {
        double sum = 0.0;
        std::optional<double> total;
        double unknown = 0.0;
    };
    std::map<std::tuple<std::string, std::string, Sex, int>, Group> groups;
    for (const auto &[key, value] : store.cells()) {
        Group &g = groups[{key.measure, key.region, key.sex, key.year}];
        switch (key.age.kind) {
        case AgeKind::single:
        case AgeKind::open: g.sum += value.value; break;
        case AgeKind::total: g.total = value.value; break;
        case AgeKind::unknown: g.unknown += value.value; break;
        }
    }
    std::vector<std::string> violations;
    for (const auto &[key, g] : groups) {
        if (!g.total) continue;
        const long long lhs = std::llround(g.sum);
        const long long rhs = std::llround(*g.total - g.unknown);
        if (lhs != rhs) {
            const auto &[measure, region, sex, year] = key;
            violations.push_back(measure + " " + region + "/" + std::string(1, sex_code(sex)) +
                                 "/" + std::to_string(year) + ": age-specific sum " +
                                 std::to_string(lhs) + " != TOTAL - UNK = " + std::to_string(rhs));
        }
    }
    return violations;
}

} // namespace demuq::ingest
