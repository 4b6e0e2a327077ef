#pragma once

// Linear structural causal models with a context variable, perfect
// interventions and mean-shift mechanism changes, plus graph utilities
// (ancestors, d-separation) used as ground truth in tests.

#include <algorithm>
#include <array>
#include <deque>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lcdb/dataset.hpp"
#include "lcdb/random.hpp"
#include "lcdb/stats.hpp"

namespace lcdb {

/// Directed mixed graph. Bidirected edges denote latent confounding and are
/// stored with the smaller node index first.
struct Dmg {
    std::vector<std::string> names;
    std::set<std::pair<std::size_t, std::size_t>> directed;
    std::set<std::pair<std::size_t, std::size_t>> bidirected;

    std::size_t num_nodes() const { return names.size(); }

    std::size_t add_node(std::string name) {
        names.push_back(std::move(name));
        return names.size() - 1;
    }

    void add_directed(std::size_t from, std::size_t to) {
        check_pair(from, to);
        directed.emplace(from, to);
    }

    void add_bidirected(std::size_t a, std::size_t b) {
        check_pair(a, b);
        bidirected.emplace(std::min(a, b), std::max(a, b));
    }

    bool has_bidirected(std::size_t a, std::size_t b) const {
        return bidirected.count({std::min(a, b), std::max(a, b)}) != 0;
    }

    std::optional<std::size_t> index(std::string_view name) const {
        const auto it = std::find(names.begin(), names.end(), name);
        if (it == names.end()) return std::nullopt;
        return static_cast<std::size_t>(it - names.begin());
    }

    std::vector<std::vector<std::size_t>> parents() const {
        std::vector<std::vector<std::size_t>> pa(num_nodes());
        for (const auto& [from, to] : directed) pa[to].push_back(from);
        return pa;
    }

    std::vector<std::vector<std::size_t>> children() const {
        std::vector<std::vector<std::size_t>> ch(num_nodes());
        for (const auto& [from, to] : directed) ch[from].push_back(to);
        return ch;
    }

    friend bool operator==(const Dmg&, const Dmg&) = default;

private:
    void check_pair(std::size_t a, std::size_t b) const {
        if (a >= num_nodes() || b >= num_nodes()) throw DomainError("Dmg: node index out of range");
        if (a == b) throw DomainError("Dmg: self-loop on node " + names[a]);
    }
};

/// Ancestors of node over directed edges, excluding the node itself; sorted.
inline std::vector<std::size_t> ancestors(const Dmg& g, std::size_t node) {
    if (node >= g.num_nodes()) throw DomainError("ancestors: unknown node");
    const auto pa = g.parents();
    std::vector<char> seen(g.num_nodes(), 0);
    std::vector<std::size_t> stack{node};
    while (!stack.empty()) {
        const auto v = stack.back();
        stack.pop_back();
        for (auto u : pa[v]) {
            if (!seen[u]) {
                seen[u] = 1;
                stack.push_back(u);
            }
        }
    }
    std::vector<std::size_t> out;
    for (std::size_t v = 0; v < g.num_nodes(); ++v)
        if (seen[v] && v != node) out.push_back(v);
    return out;
}

/// Topological order of the directed part; throws on a directed cycle.
inline std::vector<std::size_t> topological_order(std::size_t num_nodes,
                                                  const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
    std::vector<std::size_t> indegree(num_nodes, 0);
    std::vector<std::vector<std::size_t>> ch(num_nodes);
    for (const auto& [from, to] : edges) {
        ch[from].push_back(to);
        ++indegree[to];
    }
    std::vector<std::size_t> order;
    std::deque<std::size_t> ready;
    for (std::size_t v = 0; v < num_nodes; ++v)
        if (indegree[v] == 0) ready.push_back(v);
    while (!ready.empty()) {
        const auto v = ready.front();
        ready.pop_front();
        order.push_back(v);
        for (auto c : ch[v])
            if (--indegree[c] == 0) ready.push_back(c);
    }
    if (order.size() != num_nodes) throw DomainError("graph contains a directed cycle");
    return order;
}

/// d-separation of a and b given z in an acyclic DMG.
///
/// Bidirected edges are expanded into explicit latent common parents, then
/// the reachability ("Bayes ball") search runs on the resulting DAG.
inline bool d_separated(const Dmg& g, std::size_t a, std::size_t b, const std::vector<std::size_t>& z) {
    const auto n_obs = g.num_nodes();
    if (a >= n_obs || b >= n_obs) throw DomainError("d_separated: unknown node");
    if (a == b) throw DomainError("d_separated: a and b must differ");
    std::vector<char> in_z(n_obs + g.bidirected.size(), 0);
    for (auto v : z) {
        if (v >= n_obs) throw DomainError("d_separated: unknown conditioning node");
        if (v == a || v == b) throw DomainError("d_separated: a and b must not be conditioned on");
        in_z[v] = 1;
    }

    const std::size_t n = n_obs + g.bidirected.size();
    std::vector<std::vector<std::size_t>> pa(n);
    std::vector<std::vector<std::size_t>> ch(n);
    std::vector<std::pair<std::size_t, std::size_t>> edges(g.directed.begin(), g.directed.end());
    std::size_t latent = n_obs;
    for (const auto& [u, v] : g.bidirected) {
        edges.emplace_back(latent, u);
        edges.emplace_back(latent, v);
        ++latent;
    }
    for (const auto& [from, to] : edges) {
        pa[to].push_back(from);
        ch[from].push_back(to);
    }
    topological_order(n, edges);

    // Nodes in z or with a descendant in z: colliders there are open.
    std::vector<char> anc_z(n, 0);
    std::vector<std::size_t> stack;
    for (std::size_t v = 0; v < n; ++v)
        if (in_z[v]) stack.push_back(v);
    while (!stack.empty()) {
        const auto v = stack.back();
        stack.pop_back();
        if (anc_z[v]) continue;
        anc_z[v] = 1;
        for (auto u : pa[v]) stack.push_back(u);
    }

    // States: (node, arrived from a child = going up) / (node, from a parent).
    enum : int { kUp = 0, kDown = 1 };
    std::vector<std::array<char, 2>> visited(n, {0, 0});
    std::deque<std::pair<std::size_t, int>> queue{{a, kUp}};
    while (!queue.empty()) {
        const auto [v, dir] = queue.front();
        queue.pop_front();
        if (visited[v][static_cast<std::size_t>(dir)]) continue;
        visited[v][static_cast<std::size_t>(dir)] = 1;
        if (v == b && !in_z[v]) return false;
        if (dir == kUp) {
            if (in_z[v]) continue;
            for (auto u : pa[v]) queue.emplace_back(u, kUp);
            for (auto c : ch[v]) queue.emplace_back(c, kDown);
        } else {
            if (!in_z[v]) {
                for (auto c : ch[v]) queue.emplace_back(c, kDown);
            }
            if (anc_z[v]) {
                for (auto u : pa[v]) queue.emplace_back(u, kUp);
            }
        }
    }
    return true;
}

struct MechanismChange {
    enum class Kind { kPerfect, kMeanShift };
    Kind kind = Kind::kPerfect;
    /// Fixed value for a perfect intervention, or the additive shift.
    double value = 0.0;
    /// Noise added to a perfect intervention value.
    double noise_std = 0.0;

    static MechanismChange perfect(double value = 0.0, double noise_std = 0.0) {
        return {Kind::kPerfect, value, noise_std};
    }
    static MechanismChange shift(double amount) { return {Kind::kMeanShift, amount, 0.0}; }
};

using InterventionSet = std::vector<std::pair<std::size_t, MechanismChange>>;

/// Linear SCM over observed variables 0..p-1 and latent variables p..p+L-1.
struct LinearScm {
    std::vector<std::string> names;  // observed variables only
    std::size_t num_latent = 0;
    /// weights(i, j): coefficient of variable i in the equation of j.
    Matrix weights;
    Vector noise_std;
    Vector intercept;
    /// Mechanism changes per context class; class 0 is observational.
    std::map<int, InterventionSet> context_targets;
    /// Latent variables that drive the binary context assignment (C <-> child
    /// confounding), with their weights in the assignment score.
    std::vector<std::pair<std::size_t, double>> context_confounders;

    std::size_t num_observed() const { return names.size(); }
    std::size_t num_total() const { return names.size() + num_latent; }

    static LinearScm empty(std::vector<std::string> names, std::size_t num_latent = 0) {
        LinearScm scm;
        scm.num_latent = num_latent;
        const auto total = static_cast<Eigen::Index>(names.size() + num_latent);
        scm.names = std::move(names);
        scm.weights = Matrix::Zero(total, total);
        scm.noise_std = Vector::Ones(total);
        scm.intercept = Vector::Zero(total);
        return scm;
    }

    std::vector<std::pair<std::size_t, std::size_t>> edges() const {
        std::vector<std::pair<std::size_t, std::size_t>> out;
        for (Eigen::Index i = 0; i < weights.rows(); ++i)
            for (Eigen::Index j = 0; j < weights.cols(); ++j)
                if (weights(i, j) != 0.0) out.emplace_back(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
        return out;
    }

    void validate() const {
        const auto total = static_cast<Eigen::Index>(num_total());
        if (weights.rows() != total || weights.cols() != total || noise_std.size() != total || intercept.size() != total) {
            throw DomainError("LinearScm: inconsistent dimensions");
        }
        if ((noise_std.array() <= 0.0).any()) throw DomainError("LinearScm: noise std must be positive");
        topological_order(num_total(), edges());
        for (std::size_t l = num_observed(); l < num_total(); ++l) {
            if (weights.col(static_cast<Eigen::Index>(l)).any()) throw DomainError("LinearScm: latent variables must be exogenous");
        }
        for (const auto& [cls, changes] : context_targets) {
            for (const auto& [v, change] : changes) {
                if (v >= num_observed()) throw DomainError("LinearScm: context targets must be observed variables");
            }
        }
        for (const auto& [l, w] : context_confounders) {
            if (l < num_observed() || l >= num_total()) throw DomainError("LinearScm: context confounder must be latent");
        }
    }

    /// Causal graph over the observed variables plus the context node "C"
    /// (index p). Latent variables become bidirected edges among their
    /// children; context-assignment latents confound C with their children.
    Dmg graph() const {
        Dmg g;
        for (const auto& name : names) g.add_node(name);
        const auto c = g.add_node("C");
        const auto p = num_observed();
        for (const auto& [i, j] : edges()) {
            if (i < p && j < p) g.add_directed(i, j);
        }
        for (const auto& [cls, changes] : context_targets) {
            if (cls == 0) continue;
            for (const auto& [v, change] : changes) g.add_directed(c, v);
        }
        for (std::size_t l = p; l < num_total(); ++l) {
            std::vector<std::size_t> kids;
            for (std::size_t j = 0; j < p; ++j)
                if (weights(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(j)) != 0.0) kids.push_back(j);
            const bool drives_context = std::any_of(context_confounders.begin(), context_confounders.end(),
                                                    [l](const auto& cw) { return cw.first == l; });
            if (drives_context) kids.push_back(c);
            for (std::size_t x = 0; x < kids.size(); ++x)
                for (std::size_t y = x + 1; y < kids.size(); ++y) g.add_bidirected(kids[x], kids[y]);
        }
        return g;
    }
};

namespace detail {

/// One draw of all variables (observed and latent) under `changes`.
inline void draw_row(const LinearScm& scm, const std::vector<std::size_t>& order, const InterventionSet& changes,
                     Rng& rng, Vector& row) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto j : order) {
        const auto jj = static_cast<Eigen::Index>(j);
        const auto it = std::find_if(changes.begin(), changes.end(), [j](const auto& c) { return c.first == j; });
        if (it != changes.end() && it->second.kind == MechanismChange::Kind::kPerfect) {
            row[jj] = it->second.value + it->second.noise_std * normal(rng);
            continue;
        }
        double v = scm.intercept[jj] + scm.noise_std[jj] * normal(rng);
        v += scm.weights.col(jj).dot(row);
        if (it != changes.end()) v += it->second.value;
        row[jj] = v;
    }
}

}  // namespace detail

/// n samples of the observed variables under the given mechanism changes.
/// When the model has context-assignment latents, rows are kept only if the
/// assignment score falls on the side of `context_class` (0 or 1).
inline Matrix sample_with_changes(const LinearScm& scm, const InterventionSet& changes, int context_class,
                                  std::size_t n, Rng& rng) {
    scm.validate();
    const auto order = topological_order(scm.num_total(), scm.edges());
    const auto p = static_cast<Eigen::Index>(scm.num_observed());
    Matrix out(static_cast<Eigen::Index>(n), p);
    Vector row = Vector::Zero(static_cast<Eigen::Index>(scm.num_total()));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t r = 0; r < n;) {
        row.setZero();
        detail::draw_row(scm, order, changes, rng, row);
        if (!scm.context_confounders.empty()) {
            double score = normal(rng);
            for (const auto& [l, w] : scm.context_confounders) score += w * row[static_cast<Eigen::Index>(l)];
            if ((score > 0.0) != (context_class == 1)) continue;
        }
        out.row(static_cast<Eigen::Index>(r)) = row.head(p).transpose();
        ++r;
    }
    return out;
}

/// n samples in context `context_class`; the last column holds the label.
inline Matrix sample(const LinearScm& scm, int context_class, std::size_t n, std::uint64_t seed) {
    InterventionSet changes;
    if (context_class != 0) {
        const auto it = scm.context_targets.find(context_class);
        if (it == scm.context_targets.end()) {
            throw DomainError("sample: unknown context class " + std::to_string(context_class));
        }
        changes = it->second;
    }
    if (!scm.context_confounders.empty() && context_class != 0 && context_class != 1) {
        throw DomainError("sample: confounded context assignment supports classes 0 and 1 only");
    }
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(context_class)));
    const Matrix sys = sample_with_changes(scm, changes, context_class, n, rng);
    Matrix out(sys.rows(), sys.cols() + 1);
    out.leftCols(sys.cols()) = sys;
    out.col(sys.cols()).setConstant(context_class);
    return out;
}

struct RandomScmOptions {
    double noise_low = 0.5;
    double noise_high = 1.5;
    /// Baseline expression level range for each variable's equation.
    double intercept_low = 0.0;
    double intercept_high = 0.0;
};

/// Random DAG over p variables: uniformly random topological order, each
/// forward pair an edge with probability edge_prob, weights uniform on
/// +-[weight_low, weight_high].
inline LinearScm random_scm(std::size_t p, double edge_prob, double weight_low, double weight_high, std::uint64_t seed,
                            const RandomScmOptions& opts = {}) {
    if (p < 2) throw DomainError("random_scm: need at least 2 variables");
    if (!(edge_prob >= 0.0 && edge_prob <= 1.0)) throw DomainError("random_scm: edge_prob outside [0, 1]");
    if (!(weight_low > 0.0 && weight_low <= weight_high)) throw DomainError("random_scm: need 0 < weight_low <= weight_high");
    if (!(opts.noise_low > 0.0 && opts.noise_low <= opts.noise_high)) throw DomainError("random_scm: bad noise range");
    if (opts.intercept_low > opts.intercept_high) throw DomainError("random_scm: bad intercept range");
    Rng rng(derive_seed(seed, 0));
    std::vector<std::string> names;
    for (std::size_t i = 0; i < p; ++i) names.push_back("G" + std::to_string(i + 1));
    LinearScm scm = LinearScm::empty(std::move(names));
    std::vector<std::size_t> order(p);
    for (std::size_t i = 0; i < p; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t a = 0; a < p; ++a) {
        for (std::size_t b = a + 1; b < p; ++b) {
            if (unit(rng) >= edge_prob) continue;
            const double mag = weight_low + (weight_high - weight_low) * unit(rng);
            const double sign = unit(rng) < 0.5 ? -1.0 : 1.0;
            scm.weights(static_cast<Eigen::Index>(order[a]), static_cast<Eigen::Index>(order[b])) = sign * mag;
        }
    }
    for (std::size_t i = 0; i < p; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        scm.noise_std[ii] = opts.noise_low + (opts.noise_high - opts.noise_low) * unit(rng);
        scm.intercept[ii] = opts.intercept_low + (opts.intercept_high - opts.intercept_low) * unit(rng);
    }
    return scm;
}

/// Random acyclic DMG over p system variables plus a context node "C" (last
/// index) that is never caused by system variables.
inline Dmg random_dmg(std::size_t p, double edge_prob, double bidirected_prob, double context_edge_prob,
                      double context_bidirected_prob, std::uint64_t seed) {
    Rng rng(derive_seed(seed, 1));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Dmg g;
    for (std::size_t i = 0; i < p; ++i) g.add_node("X" + std::to_string(i + 1));
    const auto c = g.add_node("C");
    std::vector<std::size_t> order(p);
    for (std::size_t i = 0; i < p; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = a + 1; b < p; ++b)
            if (unit(rng) < edge_prob) g.add_directed(order[a], order[b]);
    for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = a + 1; b < p; ++b)
            if (unit(rng) < bidirected_prob) g.add_bidirected(a, b);
    for (std::size_t x = 0; x < p; ++x) {
        if (unit(rng) < context_edge_prob) g.add_directed(c, x);
        if (unit(rng) < context_bidirected_prob) g.add_bidirected(c, x);
    }
    return g;
}

struct Fixture {
    std::string name;
    LinearScm scm;
    Dmg dmg;
};

inline const std::vector<std::string>& fixture_names() {
    static const std::vector<std::string> names{"lcd-chain", "lcd-chain-confounded", "lcd-instrument-confounded",
                                                "icp-diamond"};
    return names;
}

/// Three-variable LCD patterns and the two-parent ICP pattern. Edge weights
/// and noise scales are 1; C -> X is a unit mean shift in context 1; C <-> X
/// is a standard-normal latent feeding X and the context assignment.
inline Fixture fixture(std::string_view name) {
    Fixture f;
    f.name = std::string(name);
    if (name == "lcd-chain" || name == "lcd-chain-confounded" || name == "lcd-instrument-confounded") {
        const bool confounded = name != "lcd-chain";
        const bool direct = name != "lcd-instrument-confounded";
        f.scm = LinearScm::empty({"X", "Y"}, confounded ? 1 : 0);
        f.scm.weights(0, 1) = 1.0;
        f.scm.context_targets[1] = {};
        if (direct) f.scm.context_targets[1].emplace_back(0, MechanismChange::shift(1.0));
        if (confounded) {
            f.scm.weights(2, 0) = 1.0;
            f.scm.context_confounders.emplace_back(2, 1.0);
        }
    } else if (name == "icp-diamond") {
        f.scm = LinearScm::empty({"X1", "X2", "Y"});
        f.scm.weights(0, 2) = 1.0;
        f.scm.weights(1, 2) = 1.0;
        f.scm.context_targets[1] = {{0, MechanismChange::shift(1.0)}, {1, MechanismChange::shift(1.0)}};
    } else {
        throw DomainError("unknown fixture '" + std::string(name) + "'");
    }
    f.scm.validate();
    f.dmg = f.scm.graph();
    return f;
}

/// Pooled dataset with n_obs context-0 and n_ctx context-1 samples.
inline ExpressionTable sample_context_table(const LinearScm& scm, std::size_t n_obs, std::size_t n_ctx,
                                            std::uint64_t seed, const std::string& context_label = "C") {
    const Matrix obs = sample(scm, 0, n_obs, seed);
    const Matrix ctx = sample(scm, 1, n_ctx, seed);
    const auto p = static_cast<Eigen::Index>(scm.num_observed());
    ExpressionTable t;
    t.gene_names = scm.names;
    t.values.resize(static_cast<Eigen::Index>(n_obs + n_ctx), p);
    t.values.topRows(static_cast<Eigen::Index>(n_obs)) = obs.leftCols(p);
    t.values.bottomRows(static_cast<Eigen::Index>(n_ctx)) = ctx.leftCols(p);
    for (std::size_t i = 0; i < n_obs; ++i) {
        t.sample_ids.push_back("obs" + std::to_string(i + 1));
        t.intervention.emplace_back(std::nullopt);
    }
    for (std::size_t i = 0; i < n_ctx; ++i) {
        t.sample_ids.push_back("ctx" + std::to_string(i + 1));
        t.intervention.emplace_back(context_label);
    }
    return t;
}

inline JciDataset sample_context_dataset(const LinearScm& scm, std::size_t n_obs, std::size_t n_ctx, std::uint64_t seed) {
    return to_jci(sample_context_table(scm, n_obs, n_ctx, seed));
}

/// Knockout panel: n_obs observational rows plus one perfect intervention
/// row per target (value `knockout_value`, no intervention noise).
inline ExpressionTable sample_knockout_panel(const LinearScm& scm, std::size_t n_obs,
                                             const std::vector<std::size_t>& targets, std::uint64_t seed,
                                             double knockout_value = 0.0) {
    const auto p = static_cast<Eigen::Index>(scm.num_observed());
    ExpressionTable t;
    t.gene_names = scm.names;
    t.values.resize(static_cast<Eigen::Index>(n_obs + targets.size()), p);
    Rng rng(derive_seed(seed, 0));
    t.values.topRows(static_cast<Eigen::Index>(n_obs)) = sample_with_changes(scm, {}, 0, n_obs, rng);
    for (std::size_t i = 0; i < n_obs; ++i) {
        t.sample_ids.push_back("obs" + std::to_string(i + 1));
        t.intervention.emplace_back(std::nullopt);
    }
    for (std::size_t k = 0; k < targets.size(); ++k) {
        if (targets[k] >= scm.num_observed()) throw DomainError("sample_knockout_panel: target out of range");
        Rng row_rng(derive_seed(seed, 1 + k));
        const InterventionSet changes{{targets[k], MechanismChange::perfect(knockout_value)}};
        t.values.row(static_cast<Eigen::Index>(n_obs + k)) = sample_with_changes(scm, changes, 0, 1, row_rng);
        t.sample_ids.push_back("ko" + std::to_string(k + 1));
        t.intervention.emplace_back(scm.names[targets[k]]);
    }
    return t;
}

}  // namespace lcdb
