#pragma once

// Expression tables, the pooled context dataset, and the k-fold protocol.
//
// Table file format (tab separated, UTF-8, LF line endings):
//   sample_id <TAB> intervention <TAB> gene_1 <TAB> ... <TAB> gene_p
//   <id> <TAB> (- | target gene) <TAB> value_1 ... value_p
// Values are written in shortest round-trip form.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lcdb/indep_tests.hpp"
#include "lcdb/random.hpp"
#include "lcdb/stats.hpp"

namespace lcdb {

inline constexpr std::string_view kObservationalMark = "-";

struct ExpressionTable {
    std::vector<std::string> sample_ids;
    std::vector<std::string> gene_names;
    Matrix values;  // samples x genes
    /// Knockout target per row; nullopt marks an observational row.
    std::vector<std::optional<std::string>> intervention;

    std::size_t num_samples() const { return sample_ids.size(); }
    std::size_t num_genes() const { return gene_names.size(); }
    bool is_observational(std::size_t row) const { return !intervention[row].has_value(); }

    std::optional<std::size_t> gene_index(std::string_view name) const {
        const auto it = std::find(gene_names.begin(), gene_names.end(), name);
        if (it == gene_names.end()) return std::nullopt;
        return static_cast<std::size_t>(it - gene_names.begin());
    }

    std::vector<std::size_t> observational_rows() const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < num_samples(); ++i)
            if (is_observational(i)) out.push_back(i);
        return out;
    }

    std::vector<std::size_t> interventional_rows() const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < num_samples(); ++i)
            if (!is_observational(i)) out.push_back(i);
        return out;
    }
};

struct TableChecks {
    /// Reject tables with two interventional rows on the same target.
    /// Simulated context regimes (fixtures) relax this.
    bool unique_targets = true;
};

inline void validate_table(const ExpressionTable& t, TableChecks checks = {}) {
    const auto n = t.sample_ids.size();
    if (static_cast<std::size_t>(t.values.rows()) != n || t.intervention.size() != n ||
        static_cast<std::size_t>(t.values.cols()) != t.gene_names.size()) {
        throw DataError("table dimensions are inconsistent");
    }
    std::set<std::string_view> seen;
    for (const auto& g : t.gene_names) {
        if (!seen.insert(g).second) throw DataError("duplicate gene name '" + g + "'");
    }
    if (checks.unique_targets) {
        std::set<std::string_view> targets;
        for (const auto& iv : t.intervention) {
            if (iv && !targets.insert(*iv).second) throw DataError("duplicate intervention target '" + *iv + "'");
        }
    }
    if (!t.values.allFinite()) throw DataError("table contains non-finite values");
}

namespace detail {

inline std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find('\t', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace detail

inline ExpressionTable parse_table(std::istream& in, TableChecks checks = {}) {
    ExpressionTable t;
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw ParseError("missing header", 1);
    ++lineno;
    {
        const auto fields = detail::split_tabs(line);
        if (fields.size() < 3 || fields[0] != "sample_id" || fields[1] != "intervention") {
            throw ParseError("header must start with 'sample_id<TAB>intervention' followed by gene names", lineno);
        }
        std::set<std::string_view> seen;
        for (std::size_t i = 2; i < fields.size(); ++i) {
            if (fields[i].empty()) throw ParseError("empty gene name", lineno);
            if (!seen.insert(fields[i]).second) {
                throw ParseError("duplicate gene name '" + std::string(fields[i]) + "'", lineno);
            }
            t.gene_names.emplace_back(fields[i]);
        }
    }
    const std::size_t p = t.gene_names.size();
    std::vector<double> cells;
    std::set<std::string> targets;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = detail::split_tabs(line);
        if (fields.size() != p + 2) {
            throw ParseError("expected " + std::to_string(p + 2) + " fields, found " + std::to_string(fields.size()),
                             lineno);
        }
        t.sample_ids.emplace_back(fields[0]);
        if (fields[1] == kObservationalMark) {
            t.intervention.emplace_back(std::nullopt);
        } else {
            if (fields[1].empty()) throw ParseError("empty intervention field", lineno);
            std::string target(fields[1]);
            if (checks.unique_targets && !targets.insert(target).second) {
                throw ParseError("duplicate intervention target '" + target + "'", lineno);
            }
            t.intervention.emplace_back(std::move(target));
        }
        for (std::size_t j = 0; j < p; ++j) {
            const auto f = fields[j + 2];
            double v = 0.0;
            const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
            if (res.ec != std::errc() || res.ptr != f.data() + f.size() || !std::isfinite(v)) {
                throw ParseError("non-numeric cell '" + std::string(f) + "' in column " + t.gene_names[j], lineno);
            }
            cells.push_back(v);
        }
    }
    const auto n = static_cast<Eigen::Index>(t.sample_ids.size());
    t.values = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        cells.data(), n, static_cast<Eigen::Index>(p));
    validate_table(t, checks);
    return t;
}

inline ExpressionTable load_table(const std::string& path, TableChecks checks = {}) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open table '" + path + "'");
    return parse_table(in, checks);
}

inline void write_table(std::ostream& out, const ExpressionTable& t) {
    out << "sample_id\tintervention";
    for (const auto& g : t.gene_names) out << '\t' << g;
    out << '\n';
    for (std::size_t i = 0; i < t.num_samples(); ++i) {
        out << t.sample_ids[i] << '\t' << (t.intervention[i] ? *t.intervention[i] : std::string(kObservationalMark));
        for (Eigen::Index j = 0; j < t.values.cols(); ++j) {
            out << '\t' << detail::format_double(t.values(static_cast<Eigen::Index>(i), j));
        }
        out << '\n';
    }
}

inline void save_table(const std::string& path, const ExpressionTable& t) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write table '" + path + "'");
    write_table(out, t);
    if (!out) throw DataError("write failed for '" + path + "'");
}

/// Pooled system variables with a binary context column: 0 observational,
/// 1 interventional.
class JciDataset {
public:
    JciDataset(Matrix system, std::vector<int> context, std::vector<std::string> gene_names)
        : system_(std::move(system)), context_(std::move(context)), gene_names_(std::move(gene_names)) {
        if (static_cast<std::size_t>(system_.rows()) != context_.labels().size()) {
            throw DomainError("JciDataset: context length does not match row count");
        }
        if (static_cast<std::size_t>(system_.cols()) != gene_names_.size()) {
            throw DomainError("JciDataset: gene name count does not match column count");
        }
        for (int c : context_.labels()) {
            if (c != 0 && c != 1) throw DomainError("JciDataset: context must be 0 or 1");
        }
        context_numeric_ = context_.as_numeric();
    }

    const Matrix& system() const noexcept { return system_; }
    const ContextVector& context() const noexcept { return context_; }
    /// Context as a 0/1 numeric column.
    const Vector& context_column() const noexcept { return context_numeric_; }
    const std::vector<std::string>& gene_names() const noexcept { return gene_names_; }
    std::size_t num_samples() const noexcept { return static_cast<std::size_t>(system_.rows()); }
    std::size_t num_vars() const noexcept { return static_cast<std::size_t>(system_.cols()); }

    /// Dataset restricted to the given rows, in the given order.
    JciDataset subset(const std::vector<std::size_t>& rows) const {
        Matrix sys(static_cast<Eigen::Index>(rows.size()), system_.cols());
        std::vector<int> ctx;
        ctx.reserve(rows.size());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            sys.row(static_cast<Eigen::Index>(r)) = system_.row(static_cast<Eigen::Index>(rows[r]));
            ctx.push_back(context_.labels()[rows[r]]);
        }
        return JciDataset(std::move(sys), std::move(ctx), gene_names_);
    }

private:
    Matrix system_;
    ContextVector context_;
    std::vector<std::string> gene_names_;
    Vector context_numeric_;
};

inline JciDataset pool_rows(const ExpressionTable& table, const std::vector<std::size_t>& rows) {
    Matrix sys(static_cast<Eigen::Index>(rows.size()), table.values.cols());
    std::vector<int> ctx;
    ctx.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        sys.row(static_cast<Eigen::Index>(r)) = table.values.row(static_cast<Eigen::Index>(rows[r]));
        ctx.push_back(table.is_observational(rows[r]) ? 0 : 1);
    }
    return JciDataset(std::move(sys), std::move(ctx), table.gene_names);
}

/// Every row of the table as one pooled dataset.
inline JciDataset to_jci(const ExpressionTable& table) {
    std::vector<std::size_t> rows(table.num_samples());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    return pool_rows(table, rows);
}

struct FoldSplit {
    std::size_t k = 0;
    std::uint64_t seed = 0;
    std::vector<std::vector<std::size_t>> observational;   // per fold, table row indices
    std::vector<std::vector<std::size_t>> interventional;  // per fold

    std::vector<std::size_t> test_rows(std::size_t fold) const {
        std::vector<std::size_t> rows = observational.at(fold);
        rows.insert(rows.end(), interventional.at(fold).begin(), interventional.at(fold).end());
        std::sort(rows.begin(), rows.end());
        return rows;
    }
};

/// Shuffle each row class with a seeded generator, then deal rows to the k
/// folds round-robin.
inline FoldSplit make_folds(const ExpressionTable& table, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw DomainError("make_folds: need at least 2 folds");
    auto obs = table.observational_rows();
    auto iv = table.interventional_rows();
    if (obs.size() < k || iv.size() < k) {
        throw InsufficientSamples("make_folds: each row class needs at least k = " + std::to_string(k) + " rows");
    }
    FoldSplit split;
    split.k = k;
    split.seed = seed;
    split.observational.resize(k);
    split.interventional.resize(k);
    auto deal = [k](std::vector<std::size_t>& rows, Rng rng, std::vector<std::vector<std::size_t>>& folds) {
        std::shuffle(rows.begin(), rows.end(), rng);
        for (std::size_t i = 0; i < rows.size(); ++i) folds[i % k].push_back(rows[i]);
        for (auto& f : folds) std::sort(f.begin(), f.end());
    };
    deal(obs, make_rng(seed, 0), split.observational);
    deal(iv, make_rng(seed, 1), split.interventional);
    return split;
}

/// Training dataset: all folds except test_fold, in table row order.
inline JciDataset pool_training(const ExpressionTable& table, const FoldSplit& split, std::size_t test_fold) {
    if (test_fold >= split.k) throw DomainError("pool_training: fold index out of range");
    std::vector<std::size_t> rows;
    for (std::size_t f = 0; f < split.k; ++f) {
        if (f == test_fold) continue;
        rows.insert(rows.end(), split.observational[f].begin(), split.observational[f].end());
        rows.insert(rows.end(), split.interventional[f].begin(), split.interventional[f].end());
    }
    std::sort(rows.begin(), rows.end());
    return pool_rows(table, rows);
}

}  // namespace lcdb
