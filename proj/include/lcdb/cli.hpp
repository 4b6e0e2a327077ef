#pragma once

// The four driver commands (simulate, run, evaluate, oracle) on plain option
// structs. Argument parsing lives in tools/lcdb.cpp.
//
// Prediction file:
//   # key=value      run configuration, one per line
//   cause <TAB> effect <TAB> count
//   <gene> <TAB> <gene> <TAB> <int>        count descending, then by names
//
// Graph sidecar:
//   # key=value      simulation parameters
//   node <TAB> <name>                      one line per node, in index order
//   <from> <TAB> -> <TAB> <to>
//   <a> <TAB> <-> <TAB> <b>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lcdb/dataset.hpp"
#include "lcdb/diagnostics.hpp"
#include "lcdb/estimators.hpp"
#include "lcdb/eval.hpp"
#include "lcdb/scm.hpp"
#include "lcdb/stability.hpp"

namespace lcdb::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kData = 3, kRuntime = 4 };

/// Bad command-line values detected after parsing.
class UsageError : public Error {
public:
    using Error::Error;
};

using Metadata = std::vector<std::pair<std::string, std::string>>;

namespace detail {

inline std::string fmt(double v) { return lcdb::detail::format_double(v); }

inline void put_metadata(std::ostream& out, const Metadata& meta) {
    for (const auto& [k, v] : meta) out << "# " << k << '=' << v << '\n';
}

/// Writes every (path, content) pair, or nothing if a target directory is
/// missing.
inline void write_files(const std::vector<std::pair<std::string, std::string>>& files) {
    for (const auto& [path, content] : files) {
        const auto parent = std::filesystem::path(path).parent_path();
        if (!parent.empty() && !std::filesystem::is_directory(parent)) {
            throw DataError("output directory '" + parent.string() + "' does not exist");
        }
    }
    for (const auto& [path, content] : files) {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw DataError("cannot write '" + path + "'");
        out << content;
        if (!out) throw DataError("write failed for '" + path + "'");
    }
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::optional<std::pair<std::string, std::string>> parse_meta_line(const std::string& line) {
    if (line.rfind("# ", 0) != 0) return std::nullopt;
    const auto eq = line.find('=');
    if (eq == std::string::npos) return std::nullopt;
    return std::make_pair(line.substr(2, eq - 2), line.substr(eq + 1));
}

}  // namespace detail

// ------------------------------------------------------------------ graph I/O

inline std::string format_graph(const Dmg& g, const Metadata& meta) {
    std::ostringstream out;
    detail::put_metadata(out, meta);
    for (const auto& n : g.names) out << "node\t" << n << '\n';
    for (const auto& [a, b] : g.directed) out << g.names[a] << "\t->\t" << g.names[b] << '\n';
    for (const auto& [a, b] : g.bidirected) out << g.names[a] << "\t<->\t" << g.names[b] << '\n';
    return out.str();
}

inline Dmg parse_graph(std::istream& in) {
    Dmg g;
    std::string line;
    std::size_t lineno = 0;
    auto node = [&](std::string_view name) {
        const auto i = g.index(name);
        if (!i) throw ParseError("unknown node '" + std::string(name) + "'", lineno);
        return *i;
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        const auto f = lcdb::detail::split_tabs(line);
        if (f.size() == 2 && f[0] == "node") {
            if (f[1].empty() || g.index(f[1])) throw ParseError("empty or duplicate node name", lineno);
            g.add_node(std::string(f[1]));
        } else if (f.size() == 3 && f[1] == "->") {
            g.add_directed(node(f[0]), node(f[2]));
        } else if (f.size() == 3 && f[1] == "<->") {
            g.add_bidirected(node(f[0]), node(f[2]));
        } else {
            throw ParseError("expected 'node<TAB>name' or an edge 'a<TAB>-><TAB>b' / 'a<TAB><-><TAB>b'", lineno);
        }
    }
    std::vector<std::pair<std::size_t, std::size_t>> edges(g.directed.begin(), g.directed.end());
    try {
        topological_order(g.num_nodes(), edges);
    } catch (const DomainError&) {
        throw DataError("graph has a directed cycle");
    }
    return g;
}

inline Dmg load_graph(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open graph '" + path + "'");
    return parse_graph(in);
}

// ------------------------------------------------------------------ simulate

struct SimulateOptions {
    std::optional<std::string> fixture;
    // Random panel defaults: the 200-gene, 100-knockout benchmark design.
    std::size_t p = 200;
    double edge_prob = 0.05;
    double weight_low = 0.5;
    double weight_high = 1.5;
    double noise_low = 0.5;
    double noise_high = 1.0;
    double intercept_low = 5.0;
    double intercept_high = 10.0;
    std::size_t interventions = 100;
    std::optional<std::size_t> n_obs;  // 1000 for fixtures, 400 for panels
    std::size_t n_int = 1000;          // context rows for fixtures
    std::uint64_t seed = 0;
    std::string out;  // prefix: writes <out>.tsv and <out>.graph
};

struct Simulation {
    ExpressionTable table;
    Dmg graph;
    Metadata meta;
};

/// Knockout targets of a random panel: the first `count` genes of a seeded
/// permutation, in ascending index order.
inline std::vector<std::size_t> panel_targets(std::size_t p, std::size_t count, std::uint64_t seed) {
    if (count > p) throw UsageError("--interventions exceeds the number of genes");
    std::vector<std::size_t> genes(p);
    for (std::size_t i = 0; i < p; ++i) genes[i] = i;
    auto rng = make_rng(seed, 0x7a);
    std::shuffle(genes.begin(), genes.end(), rng);
    genes.resize(count);
    std::sort(genes.begin(), genes.end());
    return genes;
}

inline Simulation simulate(const SimulateOptions& o) {
    Simulation s;
    if (o.fixture) {
        const auto known = fixture_names();
        if (std::find(known.begin(), known.end(), *o.fixture) == known.end()) {
            throw UsageError("unknown fixture '" + *o.fixture + "'");
        }
        const std::size_t n_obs = o.n_obs.value_or(1000);
        if (n_obs < 2 || o.n_int < 2) throw UsageError("fixtures need --n-obs and --n-int of at least 2");
        const auto f = fixture(*o.fixture);
        s.table = sample_context_table(f.scm, n_obs, o.n_int, o.seed);
        s.graph = f.dmg;
        s.meta = {{"source", "fixture"},          {"fixture", *o.fixture},
                  {"n_obs", std::to_string(n_obs)},   {"n_int", std::to_string(o.n_int)},
                  {"seed", std::to_string(o.seed)}};
        return s;
    }
    if (o.p < 2) throw UsageError("--p must be at least 2");
    if (!(o.edge_prob >= 0.0 && o.edge_prob <= 1.0)) throw UsageError("--edge-prob must lie in [0, 1]");
    if (!(o.weight_low > 0.0 && o.weight_low <= o.weight_high)) throw UsageError("need 0 < --weight-low <= --weight-high");
    if (!(o.noise_low > 0.0 && o.noise_low <= o.noise_high)) throw UsageError("need 0 < --noise-low <= --noise-high");
    if (o.intercept_low > o.intercept_high) throw UsageError("need --intercept-low <= --intercept-high");
    const std::size_t n_obs = o.n_obs.value_or(400);
    if (n_obs < 2) throw UsageError("--n-obs must be at least 2");
    const auto scm = random_scm(o.p, o.edge_prob, o.weight_low, o.weight_high, o.seed,
                                {o.noise_low, o.noise_high, o.intercept_low, o.intercept_high});
    const auto targets = panel_targets(o.p, o.interventions, o.seed);
    s.table = sample_knockout_panel(scm, n_obs, targets, o.seed);
    s.graph = scm.graph();
    const auto c = *s.graph.index("C");
    for (auto t : targets) s.graph.add_directed(c, t);
    s.meta = {{"source", "random"},
              {"p", std::to_string(o.p)},
              {"edge_prob", detail::fmt(o.edge_prob)},
              {"weight_low", detail::fmt(o.weight_low)},
              {"weight_high", detail::fmt(o.weight_high)},
              {"noise_low", detail::fmt(o.noise_low)},
              {"noise_high", detail::fmt(o.noise_high)},
              {"intercept_low", detail::fmt(o.intercept_low)},
              {"intercept_high", detail::fmt(o.intercept_high)},
              {"interventions", std::to_string(o.interventions)},
              {"n_obs", std::to_string(n_obs)},
              {"seed", std::to_string(o.seed)}};
    return s;
}

inline int cmd_simulate(const SimulateOptions& o) {
    if (o.out.empty()) throw UsageError("--out is required");
    const auto s = simulate(o);
    std::ostringstream table;
    write_table(table, s.table);
    detail::write_files({{o.out + ".tsv", table.str()}, {o.out + ".graph", format_graph(s.graph, s.meta)}});
    return kOk;
}

// ----------------------------------------------------------------------- run

struct RunOptions {
    std::string estimator = "lcd";
    double alpha = 0.01;
    int subsamples = 100;
    double fraction = 0.5;
    std::size_t max_vars = 8;
    int mstop = 100;
    double nu = 0.1;
    bool stop_if_empty = true;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    std::size_t folds = 0;  // 0: train on the whole table
    std::uint64_t fold_seed = 0;
    std::size_t test_fold = 0;
    std::string table;
    std::string out;
};

struct Prediction {
    Metadata meta;
    std::vector<std::string> gene_names;
    PredictionScores scores;
};

inline Metadata run_metadata(const RunOptions& o, const PredictionScores& s, std::size_t diagnostics) {
    // Thread count is left out so that outputs do not depend on it.
    return {{"estimator", o.estimator},
            {"alpha", detail::fmt(o.alpha)},
            {"subsamples", std::to_string(o.subsamples)},
            {"fraction", detail::fmt(o.fraction)},
            {"max_vars", std::to_string(o.max_vars)},
            {"mstop", std::to_string(o.mstop)},
            {"nu", detail::fmt(o.nu)},
            {"stop_if_empty", o.stop_if_empty ? "1" : "0"},
            {"seed", std::to_string(o.seed)},
            {"table", o.table},
            {"folds", std::to_string(o.folds)},
            {"fold_seed", std::to_string(o.fold_seed)},
            {"test_fold", std::to_string(o.test_fold)},
            {"runs", std::to_string(s.runs)},
            {"diagnostics", std::to_string(diagnostics)}};
}

inline void check_run_options(const RunOptions& o) {
    if (!is_estimator_name(o.estimator)) throw UsageError("unknown estimator '" + o.estimator + "'");
    if (!(o.alpha > 0.0 && o.alpha < 1.0)) throw UsageError("--alpha must lie in (0, 1)");
    if (o.subsamples < 1) throw UsageError("--subsamples must be positive");
    if (!(o.fraction > 0.0 && o.fraction <= 1.0)) throw UsageError("--fraction must lie in (0, 1]");
    if (o.max_vars < 1) throw UsageError("--max-vars must be positive");
    if (o.mstop < 1) throw UsageError("--mstop must be positive");
    if (!(o.nu > 0.0 && o.nu <= 1.0)) throw UsageError("--nu must lie in (0, 1]");
    if (o.folds == 1) throw UsageError("--folds must be 0 (no split) or at least 2");
    if (o.folds >= 2 && o.test_fold >= o.folds) throw UsageError("--test-fold must be below --folds");
}

/// Runs the estimator under stability selection on the table (or on the
/// training folds) and returns the prediction with its metadata.
inline Prediction run(const RunOptions& o, const ExpressionTable& table, Diagnostics* diag = nullptr) {
    check_run_options(o);
    std::optional<JciDataset> data;
    if (o.folds >= 2) {
        data.emplace(pool_training(table, make_folds(table, o.folds, o.fold_seed), o.test_fold));
    } else {
        data.emplace(to_jci(table));
    }
    EstimatorConfig config;
    config.name = o.estimator;
    config.alpha = o.alpha;
    config.boost = {o.max_vars, o.mstop, o.nu};
    config.stop_if_empty = o.stop_if_empty;
    Diagnostics local;
    if (diag == nullptr) diag = &local;
    StabilityParams params;
    params.subsamples = o.subsamples;
    params.fraction = o.fraction;
    params.seed = o.seed;
    params.threads = o.threads;
    Prediction p;
    p.scores = stabilized_run(*data, config, params, diag);
    p.gene_names = table.gene_names;
    p.meta = run_metadata(o, p.scores, diag->count());
    return p;
}

inline std::string format_prediction(const Prediction& p) {
    std::vector<std::pair<GenePair, int>> rows(p.scores.counts.begin(), p.scores.counts.end());
    const auto& names = p.gene_names;
    std::sort(rows.begin(), rows.end(), [&names](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        const auto& an = names[a.first.cause];
        const auto& bn = names[b.first.cause];
        if (an != bn) return an < bn;
        return names[a.first.effect] < names[b.first.effect];
    });
    std::ostringstream out;
    detail::put_metadata(out, p.meta);
    out << "cause\teffect\tcount\n";
    for (const auto& [pair, count] : rows) {
        if (count <= 0) continue;
        out << names[pair.cause] << '\t' << names[pair.effect] << '\t' << count << '\n';
    }
    return out.str();
}

/// Reads a prediction file, mapping gene names through `gene_names`.
inline Prediction parse_prediction(std::istream& in, const std::vector<std::string>& gene_names) {
    Prediction p;
    p.gene_names = gene_names;
    std::map<std::string, std::size_t, std::less<>> index;
    for (std::size_t i = 0; i < gene_names.size(); ++i) index.emplace(gene_names[i], i);
    std::string line;
    std::size_t lineno = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!header) {
            if (auto kv = detail::parse_meta_line(line)) {
                p.meta.push_back(std::move(*kv));
                continue;
            }
            if (line != "cause\teffect\tcount") throw ParseError("expected header 'cause<TAB>effect<TAB>count'", lineno);
            header = true;
            continue;
        }
        if (line.empty()) continue;
        const auto f = lcdb::detail::split_tabs(line);
        if (f.size() != 3) throw ParseError("expected 3 fields", lineno);
        const auto c = index.find(f[0]);
        const auto e = index.find(f[1]);
        if (c == index.end() || e == index.end()) {
            throw ParseError("gene '" + std::string(c == index.end() ? f[0] : f[1]) + "' is not in the table", lineno);
        }
        int count = 0;
        const auto res = std::from_chars(f[2].data(), f[2].data() + f[2].size(), count);
        if (res.ec != std::errc() || res.ptr != f[2].data() + f[2].size() || count < 0) {
            throw ParseError("bad count '" + std::string(f[2]) + "'", lineno);
        }
        if (c->second == e->second) throw ParseError("self pair", lineno);
        if (p.scores.contains({c->second, e->second})) throw ParseError("duplicate pair", lineno);
        p.scores.add({c->second, e->second}, count);
    }
    if (!header) throw ParseError("missing header 'cause<TAB>effect<TAB>count'", lineno + 1);
    return p;
}

inline Prediction load_prediction(const std::string& path, const std::vector<std::string>& gene_names) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open prediction file '" + path + "'");
    try {
        return parse_prediction(in, gene_names);
    } catch (const ParseError& e) {
        throw DataError(path + ": " + e.what());
    }
}

inline std::optional<std::string> meta_value(const Metadata& meta, std::string_view key) {
    for (const auto& [k, v] : meta)
        if (k == key) return v;
    return std::nullopt;
}

inline int cmd_run(const RunOptions& o) {
    check_run_options(o);
    if (o.table.empty() || o.out.empty()) throw UsageError("--table and --out are required");
    const auto table = load_table(o.table, {.unique_targets = false});
    const auto p = run(o, table);
    detail::write_files({{o.out, format_prediction(p)}});
    return kOk;
}

// ------------------------------------------------------------------ evaluate

struct EvaluateOptions {
    std::vector<std::string> predictions;  // one file per test fold
    std::string table;
    std::size_t folds = 5;
    std::uint64_t fold_seed = 0;
    std::vector<double> prevalences{0.1, 0.01, 0.001};
    double confidence = 0.99;
    double max_fpr = 0.1;
    std::size_t grid = 1000;
    std::string out;  // prefix
};

struct PrevalenceResult {
    double prevalence = 0.0;
    RocCurve curve;
    std::vector<BandPoint> band;
    double auc = 0.0;
    double pauc = 0.0;       // area over FPR <= max_fpr
    double band_pauc = 0.0;  // same area under the band's upper edge
};

struct Evaluation {
    Metadata meta;
    std::vector<PrevalenceResult> results;
};

/// Merges per-fold predictions and scores them at each prevalence. Each file
/// must come from a run with the same estimator configuration and fold
/// parameters, and each test fold must appear exactly once.
inline Evaluation evaluate(const EvaluateOptions& o, const ExpressionTable& table,
                           const std::vector<Prediction>& per_file, Diagnostics* diag = nullptr) {
    if (o.folds < 2) throw UsageError("--folds must be at least 2");
    if (per_file.size() != o.folds) {
        throw UsageError("need one prediction file per fold (" + std::to_string(o.folds) + "), got " +
                         std::to_string(per_file.size()));
    }
    if (!(o.max_fpr > 0.0 && o.max_fpr <= 1.0)) throw UsageError("--max-fpr must lie in (0, 1]");
    const std::vector<std::string> shared{"estimator", "alpha", "subsamples", "fraction", "max_vars",
                                          "mstop",     "nu",    "stop_if_empty", "seed"};
    std::vector<PredictionScores> by_fold(o.folds);
    std::vector<char> seen(o.folds, 0);
    for (const auto& p : per_file) {
        const auto folds = meta_value(p.meta, "folds");
        const auto fseed = meta_value(p.meta, "fold_seed");
        const auto tf = meta_value(p.meta, "test_fold");
        if (!folds || !fseed || !tf) throw DataError("prediction file lacks fold metadata");
        if (*folds != std::to_string(o.folds) || *fseed != std::to_string(o.fold_seed)) {
            throw DataError("fold parameters in prediction metadata (folds=" + *folds + ", fold_seed=" + *fseed +
                            ") do not match the evaluation (folds=" + std::to_string(o.folds) +
                            ", fold_seed=" + std::to_string(o.fold_seed) + ")");
        }
        for (const auto& key : shared) {
            if (meta_value(p.meta, key) != meta_value(per_file.front().meta, key)) {
                throw DataError("prediction files disagree on '" + key + "'");
            }
        }
        std::size_t f = 0;
        const auto res = std::from_chars(tf->data(), tf->data() + tf->size(), f);
        if (res.ec != std::errc() || f >= o.folds) throw DataError("bad test_fold '" + *tf + "'");
        if (seen[f]) throw DataError("test fold " + *tf + " appears twice");
        seen[f] = 1;
        by_fold[f] = p.scores;
    }
    const auto split = make_folds(table, o.folds, o.fold_seed);
    const auto merged = merge_fold_predictions(table, split, by_fold);
    const auto gt = split_ground_truth(table, split, diag);

    Evaluation ev;
    for (const auto& key : shared) ev.meta.emplace_back(key, meta_value(per_file.front().meta, key).value_or(""));
    ev.meta.emplace_back("table", o.table);
    ev.meta.emplace_back("folds", std::to_string(o.folds));
    ev.meta.emplace_back("fold_seed", std::to_string(o.fold_seed));
    ev.meta.emplace_back("confidence", detail::fmt(o.confidence));
    ev.meta.emplace_back("max_fpr", detail::fmt(o.max_fpr));
    ev.meta.emplace_back("scored_pairs", std::to_string(gt.scores.size()));
    for (double q : o.prevalences) {
        PrevalenceResult r;
        r.prevalence = q;
        const auto labels = threshold_at_prevalence(gt, q);
        r.curve = roc_curve(merged, labels);
        r.band = random_band(r.curve.positives, r.curve.negatives, o.confidence, o.grid);
        r.auc = roc_auc(r.curve);
        r.pauc = partial_auc(r.curve.points, o.max_fpr);
        r.band_pauc = band_upper_partial_auc(r.band, o.max_fpr);
        ev.results.push_back(std::move(r));
    }
    return ev;
}

inline std::vector<std::pair<std::string, std::string>> format_evaluation(const Evaluation& ev,
                                                                         const std::string& prefix) {
    std::vector<std::pair<std::string, std::string>> files;
    std::ostringstream summary;
    detail::put_metadata(summary, ev.meta);
    summary << "prevalence\tpositives\tnegatives\tauc\tpauc\tband_pauc\n";
    for (const auto& r : ev.results) {
        const auto q = detail::fmt(r.prevalence);
        Metadata meta = ev.meta;
        meta.emplace_back("positives", std::to_string(r.curve.positives));
        meta.emplace_back("negatives", std::to_string(r.curve.negatives));
        meta.emplace_back("prevalence", q);
        std::ostringstream roc;
        detail::put_metadata(roc, meta);
        roc << "fpr\ttpr\n";
        for (const auto& pt : r.curve.points) roc << detail::fmt(pt.fpr) << '\t' << detail::fmt(pt.tpr) << '\n';
        std::ostringstream band;
        detail::put_metadata(band, meta);
        band << "fpr\ttpr_low\ttpr_high\n";
        for (const auto& b : r.band) {
            band << detail::fmt(b.fpr) << '\t' << detail::fmt(b.tpr_low) << '\t' << detail::fmt(b.tpr_high) << '\n';
        }
        files.emplace_back(prefix + ".roc_" + q + ".tsv", roc.str());
        files.emplace_back(prefix + ".band_" + q + ".tsv", band.str());
        summary << q << '\t' << r.curve.positives << '\t' << r.curve.negatives << '\t' << detail::fmt(r.auc) << '\t'
                << detail::fmt(r.pauc) << '\t' << detail::fmt(r.band_pauc) << '\n';
    }
    files.emplace_back(prefix + ".summary.tsv", summary.str());
    return files;
}

inline int cmd_evaluate(const EvaluateOptions& o) {
    if (o.table.empty() || o.out.empty() || o.predictions.empty()) {
        throw UsageError("--table, --out and at least one prediction file are required");
    }
    const auto table = load_table(o.table, {.unique_targets = false});
    std::vector<Prediction> preds;
    for (const auto& path : o.predictions) preds.push_back(load_prediction(path, table.gene_names));
    const auto ev = evaluate(o, table, preds);
    detail::write_files(format_evaluation(ev, o.out));
    return kOk;
}

// -------------------------------------------------------------------- oracle

struct OracleOptions {
    std::string graph;
    std::vector<std::string> dsep;   // two node names
    std::vector<std::string> given;  // conditioning set
    std::optional<std::string> ancestors_of;
};

inline std::string oracle_query(const OracleOptions& o, const Dmg& g) {
    auto node = [&g](const std::string& name) {
        const auto i = g.index(name);
        if (!i) throw UsageError("unknown node '" + name + "'");
        return *i;
    };
    if (o.ancestors_of) {
        if (!o.dsep.empty()) throw UsageError("give either --dsep or --ancestors");
        std::string out;
        for (auto a : ancestors(g, node(*o.ancestors_of))) out += g.names[a] + '\n';
        return out;
    }
    if (o.dsep.size() != 2) throw UsageError("--dsep needs exactly two nodes");
    std::vector<std::size_t> z;
    for (const auto& n : o.given) z.push_back(node(n));
    const auto a = node(o.dsep[0]);
    const auto b = node(o.dsep[1]);
    if (a == b) throw UsageError("--dsep needs two distinct nodes");
    for (auto v : z)
        if (v == a || v == b) throw UsageError("--given must not contain the queried nodes");
    return d_separated(g, a, b, z) ? "separated\n" : "connected\n";
}

inline std::string cmd_oracle(const OracleOptions& o) { return oracle_query(o, load_graph(o.graph)); }

}  // namespace lcdb::cli
