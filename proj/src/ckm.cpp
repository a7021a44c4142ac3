#include "demuq/ckm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include "demuq/random.hpp"

namespace demuq {

double PerturbationRow::mean() const {
    double m = 0.0;
    for (std::size_t i = 0; i < noise.size(); ++i) m += noise[i] * probability[i];
    return m;
}

double PerturbationRow::variance() const {
    const double m = mean();
    double v = 0.0;
    for (std::size_t i = 0; i < noise.size(); ++i) {
        const double d = noise[i] - m;
        v += d * d * probability[i];
    }
    return v;
}

namespace {

// Admissible noise values for an original count: the perturbed count must
// stay >= 0 and may not land in the forbidden band 1..js.
std::vector<int> allowed_moves(std::int64_t count, const NoiseConfig &cfg) {
    std::vector<int> moves;
    for (int v = -cfg.max_deviation; v <= cfg.max_deviation; ++v) {
        const std::int64_t target = count + v;
        if (target < 0) continue;
        if (target == 0 || target > cfg.small_count_threshold) moves.push_back(v);
    }
    return moves;
}

PerturbationRow point_mass_at_zero() {
    PerturbationRow row;
    row.noise = {0};
    row.probability = {1.0};
    return row;
}

// Distribution on the given support proportional to
//   exp(-v^2 / (2 V) + alpha v + beta v^2),
// evaluated in log space so extreme tilts stay finite.
std::vector<double> tilted(const std::vector<int> &support, double base_inv_2v, double alpha,
                           double beta) {
    std::vector<double> logw(support.size());
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < support.size(); ++i) {
        const double v = support[i];
        logw[i] = -v * v * base_inv_2v + alpha * v + beta * v * v;
        top = std::max(top, logw[i]);
    }
    std::vector<double> p(support.size());
    double norm = 0.0;
    for (std::size_t i = 0; i < support.size(); ++i) {
        p[i] = std::exp(logw[i] - top);
        norm += p[i];
    }
    for (double &pi : p) pi /= norm;
    return p;
}

double dist_mean(const std::vector<int> &support, const std::vector<double> &p) {
    double m = 0.0;
    for (std::size_t i = 0; i < support.size(); ++i) m += support[i] * p[i];
    return m;
}

double dist_variance(const std::vector<int> &support, const std::vector<double> &p) {
    const double m = dist_mean(support, p);
    double v = 0.0;
    for (std::size_t i = 0; i < support.size(); ++i) {
        const double d = support[i] - m;
        v += d * d * p[i];
    }
    return v;
}

// Solves for the tilt making the given discretised bell curve unbiased with
// variance as close to the target as the support admits.  The mean is
// strictly increasing in alpha and, along the zero-mean manifold, the
// variance is non-decreasing in beta, so two nested bisections suffice.
PerturbationRow solve_row(std::vector<int> support, double target_variance) {
    std::sort(support.begin(), support.end());

    const bool has_neg = support.front() < 0;
    const bool has_pos = support.back() > 0;
    const bool has_zero = std::find(support.begin(), support.end(), 0) != support.end();

    if (!has_neg || !has_pos) {
        // One-sided support: the only unbiased distribution is the point mass
        // at zero (variance target unreachable).
        if (!has_zero) {
            throw InfeasibleConfig("no zero-mean noise distribution exists on a one-sided support");
        }
        return point_mass_at_zero();
    }

    const double base = target_variance > 0.0 ? 1.0 / (2.0 * target_variance) : 0.0;
    const int dmax = std::max(std::abs(support.front()), std::abs(support.back()));
    const double beta_cap = 60.0;
    const double alpha_cap = 100.0 + 2.0 * beta_cap * dmax;
    constexpr int kIters = 110;

    auto alpha_for_zero_mean = [&](double beta) {
        double lo = -alpha_cap, hi = alpha_cap;
        for (int it = 0; it < kIters; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (dist_mean(support, tilted(support, base, mid, beta)) < 0.0) lo = mid;
            else hi = mid;
        }
        return 0.5 * (lo + hi);
    };
    auto variance_at = [&](double beta) {
        return dist_variance(support, tilted(support, base, alpha_for_zero_mean(beta), beta));
    };

    double beta;
    if (variance_at(beta_cap) <= target_variance) {
        beta = beta_cap;      // target above what the support can reach
    } else if (variance_at(-beta_cap) >= target_variance) {
        beta = -beta_cap;     // target below the minimum unbiased variance
    } else {
        double lo = -beta_cap, hi = beta_cap;
        for (int it = 0; it < kIters; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (variance_at(mid) < target_variance) lo = mid;
            else hi = mid;
        }
        beta = 0.5 * (lo + hi);
    }

    PerturbationRow row;
    row.noise = support;
    row.probability = tilted(support, base, alpha_for_zero_mean(beta), beta);
    return row;
}

std::string trim(const std::string &s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

} // namespace

const PerturbationRow &PerturbationTable::row_for(std::int64_t count) const {
    if (count < 0) throw ValidationError("perturbation input counts must be >= 0");
    if (count < static_cast<std::int64_t>(small_rows_.size())) {
        return small_rows_[static_cast<std::size_t>(count)];
    }
    return interior_;
}

int PerturbationTable::draw(std::int64_t count, std::uint64_t seed, std::uint64_t cell_id) const {
    const std::size_t row_idx = count < static_cast<std::int64_t>(small_rows_.size())
                                    ? static_cast<std::size_t>(count)
                                    : small_rows_.size();
    const PerturbationRow &row = row_idx < small_rows_.size() ? small_rows_[row_idx] : interior_;
    const std::vector<double> &cdf = cdfs_[row_idx];
    const double u = unit_double(mix64(seed, cell_id));
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    const std::size_t k = std::min(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
    return row.noise[k];
}

void PerturbationTable::rebuild_cdfs() {
    cdfs_.clear();
    auto push = [&](const PerturbationRow &row) {
        std::vector<double> cdf(row.probability.size());
        double acc = 0.0;
        for (std::size_t i = 0; i < cdf.size(); ++i) {
            acc += row.probability[i];
            cdf[i] = acc;
        }
        cdf.back() = 1.0;
        cdfs_.push_back(std::move(cdf));
    };
    for (const auto &row : small_rows_) push(row);
    push(interior_);
}

void PerturbationTable::check_invariants() const {
    auto check_row = [&](const PerturbationRow &row, std::int64_t cls, bool interior) {
        const std::string label = interior ? "interior row" : "row " + std::to_string(cls);
        if (row.noise.empty() || row.noise.size() != row.probability.size()) {
            throw InfeasibleConfig(label + ": malformed distribution");
        }
        double sum = 0.0;
        for (std::size_t i = 0; i < row.noise.size(); ++i) {
            const double p = row.probability[i];
            if (!(p >= 0.0) || p > 1.0 + 1e-12) {
                throw InfeasibleConfig(label + ": probability out of range");
            }
            sum += p;
            if (std::abs(row.noise[i]) > cfg_.max_deviation) {
                throw InfeasibleConfig(label + ": noise value exceeds max deviation");
            }
            if (p > 0.0 && !interior && cfg_.variance > 0.0) {
                const std::int64_t target = cls + row.noise[i];
                if (target < 0 || (target > 0 && target <= cfg_.small_count_threshold)) {
                    throw InfeasibleConfig(label + ": perturbed count " + std::to_string(target) +
                                           " lands in the forbidden band");
                }
            }
        }
        if (std::abs(sum - 1.0) > 1e-12) {
            throw InfeasibleConfig(label + ": probabilities sum to " + std::to_string(sum));
        }
        if (std::abs(row.mean()) > 1e-9) {
            throw InfeasibleConfig(label + ": mean " + std::to_string(row.mean()) + " not zero");
        }
    };
    for (std::size_t i = 0; i < small_rows_.size(); ++i) {
        check_row(small_rows_[i], static_cast<std::int64_t>(i), false);
    }
    check_row(interior_, -1, true);
    if (cfg_.variance > 0.0 && std::abs(interior_.variance() - cfg_.variance) > 1e-9) {
        throw InfeasibleConfig("interior row variance " + std::to_string(interior_.variance()) +
                               " misses target " + std::to_string(cfg_.variance));
    }
    if (cfg_.preserve_zeros &&
        (small_rows_.empty() || small_rows_[0].noise != std::vector<int>{0})) {
        throw InfeasibleConfig("zero row must be a point mass at zero");
    }
}

PerturbationTable build_perturbation_table(const NoiseConfig &cfg) {
    cfg.validate();
    PerturbationTable table;
    table.cfg_ = cfg;

    const int small_rows = cfg.max_deviation + cfg.small_count_threshold + 1;
    table.small_rows_.reserve(static_cast<std::size_t>(small_rows));

    if (cfg.variance == 0.0) {
        // Degenerate setup: nothing is perturbed, so the forbidden band
        // cannot be honoured for counts already inside it.
        for (int i = 0; i < small_rows; ++i) table.small_rows_.push_back(point_mass_at_zero());
        table.interior_ = point_mass_at_zero();
        table.rebuild_cdfs();
        return table;
    }

    for (int i = 0; i < small_rows; ++i) {
        if (i == 0 && cfg.preserve_zeros) {
            table.small_rows_.push_back(point_mass_at_zero());
            continue;
        }
        std::vector<int> moves = allowed_moves(i, cfg);
        if (moves.empty()) {
            throw InfeasibleConfig("row " + std::to_string(i) + ": no admissible noise value");
        }
        try {
            table.small_rows_.push_back(solve_row(std::move(moves), cfg.variance));
        } catch (const InfeasibleConfig &e) {
            throw InfeasibleConfig("row " + std::to_string(i) + ": " + e.what());
        }
    }

    std::vector<int> full(2 * cfg.max_deviation + 1);
    for (int v = -cfg.max_deviation; v <= cfg.max_deviation; ++v) full[v + cfg.max_deviation] = v;
    table.interior_ = solve_row(std::move(full), cfg.variance);

    table.check_invariants();
    table.rebuild_cdfs();
    return table;
}

std::vector<std::int64_t> perturb(std::span<const std::int64_t> counts,
                                  const PerturbationTable &table, std::uint64_t seed,
                                  std::span<const std::uint64_t> cell_ids) {
    if (counts.size() != cell_ids.size()) {
        throw ValidationError("perturb: counts and cell_ids lengths differ");
    }
    std::vector<std::int64_t> out(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] < 0) throw ValidationError("perturb: counts must be >= 0");
        out[i] = counts[i] + table.draw(counts[i], seed, cell_ids[i]);
    }
    return out;
}

void PerturbationTable::write_csv(std::ostream &out) const {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", cfg_.variance);
    out << "# ckm perturbation table\n";
    out << "# variance=" << buf << " max_deviation=" << cfg_.max_deviation
        << " small_count_threshold=" << cfg_.small_count_threshold
        << " preserve_zeros=" << (cfg_.preserve_zeros ? 1 : 0) << "\n";
    out << "row_class,noise_value,probability\n";
    auto emit = [&](const std::string &cls, const PerturbationRow &row) {
        for (std::size_t i = 0; i < row.noise.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", row.probability[i]);
            out << cls << ',' << row.noise[i] << ',' << buf << '\n';
        }
    };
    for (std::size_t i = 0; i < small_rows_.size(); ++i) emit(std::to_string(i), small_rows_[i]);
    emit("interior", interior_);
}

PerturbationTable PerturbationTable::read_csv(std::istream &in) {
    PerturbationTable table;
    bool have_config = false;
    bool have_header = false;
    std::map<std::int64_t, PerturbationRow> rows;   // -1 = interior
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream ls(line.substr(1));
            std::string tok;
            while (ls >> tok) {
                const auto eq = tok.find('=');
                if (eq == std::string::npos) continue;
                const std::string key = tok.substr(0, eq);
                const std::string val = tok.substr(eq + 1);
                if (key == "variance") table.cfg_.variance = std::stod(val);
                else if (key == "max_deviation") table.cfg_.max_deviation = std::stoi(val);
                else if (key == "small_count_threshold") table.cfg_.small_count_threshold = std::stoi(val);
                else if (key == "preserve_zeros") table.cfg_.preserve_zeros = std::stoi(val) != 0;
                have_config = true;
            }
            continue;
        }
        if (!have_header) {
            if (line != "row_class,noise_value,probability") {
                throw MalformedHeader("perturbation table CSV: unexpected header '" + line + "'");
            }
            have_header = true;
            continue;
        }
        std::istringstream ls(line);
        std::string cls, noise, prob;
        if (!std::getline(ls, cls, ',') || !std::getline(ls, noise, ',') ||
            !std::getline(ls, prob, ',')) {
            throw NonNumericValue("perturbation table CSV: bad row '" + line + "'");
        }
        const std::int64_t key = cls == "interior" ? -1 : std::stoll(cls);
        try {
            rows[key].noise.push_back(std::stoi(noise));
            rows[key].probability.push_back(std::stod(prob));
        } catch (const std::exception &) {
            throw NonNumericValue("perturbation table CSV: bad row '" + line + "'");
        }
    }
    if (!have_config || !have_header) {
        throw MalformedHeader("perturbation table CSV: missing config comment or header");
    }
    const auto interior = rows.find(-1);
    if (interior == rows.end()) throw MalformedHeader("perturbation table CSV: no interior row");
    table.interior_ = interior->second;
    rows.erase(interior);
    for (auto &[cls, row] : rows) {
        if (cls != static_cast<std::int64_t>(table.small_rows_.size())) {
            throw MalformedHeader("perturbation table CSV: row classes not contiguous from 0");
        }
        table.small_rows_.push_back(std::move(row));
    }
    table.check_invariants();
    table.rebuild_cdfs();
    return table;
}

} // namespace demuq
