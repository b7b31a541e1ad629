#include "kpc/geom_graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "kpc/error.hpp"
#include "kpc/parallel.hpp"
#include "kpc/rng.hpp"
#include <optional>

#include "kpc/simd/ops.hpp"

namespace kpc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Duplicate grouping: rows with bit-identical coordinates form one group.
// ---------------------------------------------------------------------------

struct GroupIndex {
    PointMatrix distinct;                               // one row per group
    std::vector<std::vector<std::uint32_t>> members;    // rows per group
    std::vector<std::uint32_t> group_of;                // row -> group
    std::vector<std::uint32_t> rank_in_group;           // row -> position in members
};

struct RowHash {
    std::size_t operator()(const std::pair<const double*, std::size_t>& key) const {
        std::size_t h = 1469598103934665603ULL;
        for (std::size_t d = 0; d < key.second; ++d) {
            std::uint64_t bits;
            std::memcpy(&bits, key.first + d, sizeof(bits));
            h ^= bits;
            h *= 1099511628211ULL;
        }
        return h;
    }
};

struct RowEq {
    bool operator()(const std::pair<const double*, std::size_t>& a,
                    const std::pair<const double*, std::size_t>& b) const {
        return std::memcmp(a.first, b.first, a.second * sizeof(double)) == 0;
    }
};

GroupIndex group_rows(const PointMatrix& pts) {
    GroupIndex gi;
    gi.group_of.resize(pts.n);
    gi.rank_in_group.resize(pts.n);
    std::unordered_map<std::pair<const double*, std::size_t>, std::uint32_t, RowHash, RowEq> seen;
    seen.reserve(pts.n * 2);
    for (std::size_t i = 0; i < pts.n; ++i) {
        const double* row = pts.raw() + i * pts.dim;
        auto [it, inserted] =
            seen.try_emplace({row, pts.dim}, static_cast<std::uint32_t>(gi.members.size()));
        if (inserted) {
            gi.members.emplace_back();
            gi.distinct.data.insert(gi.distinct.data.end(), row, row + pts.dim);
        }
        const std::uint32_t g = it->second;
        gi.group_of[i] = g;
        gi.rank_in_group[i] = static_cast<std::uint32_t>(gi.members[g].size());
        gi.members[g].push_back(static_cast<std::uint32_t>(i));
    }
    gi.distinct.n = gi.members.size();
    gi.distinct.dim = pts.dim;
    return gi;
}

// ---------------------------------------------------------------------------
// kd-tree over distinct points (squared Euclidean throughout).
// ---------------------------------------------------------------------------

class KdTree {
  public:
    explicit KdTree(const PointMatrix& pts) : pts_(pts) {
        order_.resize(pts.n);
        for (std::size_t i = 0; i < pts.n; ++i) order_[i] = static_cast<std::uint32_t>(i);
        nodes_.reserve(pts.n / kLeafSize * 2 + 2);
        if (pts.n > 0) build(0, pts.n);
        pack_leaves();
    }

    // Calls visit(group, sqdist) for candidate groups; `bound()` supplies the
    // current pruning radius (squared, inclusive: nodes at exactly the bound
    // are still visited so distance ties survive).
    template <typename Visit, typename Bound>
    void query(std::span<const double> q, Visit&& visit, Bound&& bound) const {
        if (!nodes_.empty()) search(0, q, visit, bound);
    }

  private:
    static constexpr std::size_t kLeafSize = 16;

    struct Node {
        double split = 0.0;
        std::uint32_t axis = 0;
        std::int32_t left = -1;
        std::int32_t right = -1;
        std::uint32_t begin = 0;
        std::uint32_t end = 0;  // leaf if right == -1
    };

    std::int32_t build(std::size_t begin, std::size_t end) {
        const auto id = static_cast<std::int32_t>(nodes_.size());
        nodes_.emplace_back();
        if (end - begin <= kLeafSize) {
            nodes_[id].begin = static_cast<std::uint32_t>(begin);
            nodes_[id].end = static_cast<std::uint32_t>(end);
            return id;
        }
        // Split on the axis of largest spread at its midpoint-by-median.
        std::size_t axis = 0;
        double best_spread = -1.0;
        for (std::size_t d = 0; d < pts_.dim; ++d) {
            double lo = kInf, hi = -kInf;
            for (std::size_t t = begin; t < end; ++t) {
                const double v = coord(order_[t], d);
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            if (hi - lo > best_spread) {
                best_spread = hi - lo;
                axis = d;
            }
        }
        const std::size_t mid = (begin + end) / 2;
        std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                         [&](std::uint32_t a, std::uint32_t b) {
                             return coord(a, axis) < coord(b, axis);
                         });
        const double split = coord(order_[mid], axis);
        Node node;
        node.axis = static_cast<std::uint32_t>(axis);
        node.split = split;
        nodes_[id] = node;
        const std::int32_t left = build(begin, mid);
        const std::int32_t right = build(mid, end);
        nodes_[id].left = left;
        nodes_[id].right = right;
        return id;
    }

    void pack_leaves() {
        // Contiguous leaf coordinates for block distance evaluation.
        packed_.resize(pts_.n * pts_.dim);
        for (std::size_t t = 0; t < order_.size(); ++t) {
            std::memcpy(packed_.data() + t * pts_.dim, pts_.raw() + order_[t] * pts_.dim,
                        pts_.dim * sizeof(double));
        }
    }

    double coord(std::uint32_t point, std::size_t axis) const {
        return pts_.raw()[point * pts_.dim + axis];
    }

    template <typename Visit, typename Bound>
    void search(std::int32_t id, std::span<const double> q, Visit& visit, Bound& bound) const {
        const Node& node = nodes_[id];
        if (node.right < 0) {
            const std::size_t count = node.end - node.begin;
            double dists[kLeafSize];
            simd::sqdist_row(q, packed_.data() + node.begin * pts_.dim, count, pts_.dim, dists);
            for (std::size_t t = 0; t < count; ++t) visit(order_[node.begin + t], dists[t]);
            return;
        }
        const double delta = q[node.axis] - node.split;
        const std::int32_t near = delta < 0.0 ? node.left : node.right;
        const std::int32_t far = delta < 0.0 ? node.right : node.left;
        search(near, q, visit, bound);
        if (delta * delta <= bound()) search(far, q, visit, bound);
    }

    const PointMatrix& pts_;
    std::vector<std::uint32_t> order_;
    std::vector<double> packed_;
    std::vector<Node> nodes_;
};

// ---------------------------------------------------------------------------
// Candidate accumulation with exact tie retention: keeps every group whose
// distance could still fall inside the K-th-smallest cutoff, ties included.
// ---------------------------------------------------------------------------

struct Candidate {
    double d2;
    std::uint32_t group;
    std::uint32_t mult;
};

class CandidateSet {
  public:
    explicit CandidateSet(std::size_t k) : k_(k) {}

    void add(double d2, std::uint32_t group, std::uint32_t mult) {
        if (mult == 0 || d2 > bound_) return;
        items_.push_back({d2, group, mult});
        total_ += mult;
        if (items_.size() > 2 * k_ + 16) compact();
    }

    double bound() const { return bound_; }

    // Sorts by distance and drops groups strictly beyond the cutoff tier.
    void finalize() { compact(); std::sort(items_.begin(), items_.end(), by_distance); }

    const std::vector<Candidate>& items() const { return items_; }

  private:
    static bool by_distance(const Candidate& a, const Candidate& b) { return a.d2 < b.d2; }

    void compact() {
        if (total_ < k_) return;
        std::sort(items_.begin(), items_.end(), by_distance);
        std::size_t covered = 0;
        double cutoff = kInf;
        for (const Candidate& c : items_) {
            covered += c.mult;
            if (covered >= k_) {
                cutoff = c.d2;
                break;
            }
        }
        std::size_t keep = 0;
        total_ = 0;
        for (const Candidate& c : items_) {
            if (c.d2 <= cutoff) {
                items_[keep++] = c;
                total_ += c.mult;
            }
        }
        items_.resize(keep);
        bound_ = cutoff;
    }

    std::size_t k_;
    std::size_t total_ = 0;
    double bound_ = kInf;
    std::vector<Candidate> items_;
};

// Picks the K out-neighbors of row i from the finalized candidate list.
std::vector<std::uint32_t> select_neighbors(const CandidateSet& cands, std::size_t k,
                                            const GroupIndex& gi, std::uint32_t row,
                                            RngStream& rng, bool& tie_broken) {
    std::vector<std::uint32_t> out;
    out.reserve(k);
    const auto& items = cands.items();
    // Cutoff tier = distance at which cumulative multiplicity reaches k.
    std::size_t covered = 0;
    double cutoff = kInf;
    for (const Candidate& c : items) {
        covered += c.mult;
        if (covered >= k) {
            cutoff = c.d2;
            break;
        }
    }
    std::size_t strict = 0;
    for (const Candidate& c : items) {
        if (!(c.d2 < cutoff)) continue;
        strict += c.mult;
        for (std::uint32_t m : gi.members[c.group]) {
            if (m != row) out.push_back(m);
        }
    }
    const std::size_t need = k - strict;
    // Virtual concatenation of tier members (self excluded) for sampling.
    std::vector<std::uint32_t> tier_groups;
    std::vector<std::size_t> prefix;
    std::size_t tier_total = 0;
    for (const Candidate& c : items) {
        if (c.d2 == cutoff) {
            tier_groups.push_back(c.group);
            prefix.push_back(tier_total);
            tier_total += c.mult;
        }
    }
    if (need == tier_total) {
        for (std::uint32_t g : tier_groups) {
            for (std::uint32_t m : gi.members[g]) {
                if (m != row) out.push_back(m);
            }
        }
        return out;
    }
    tie_broken = true;
    const auto picks = rng.sample_without_replacement(tier_total, need);
    const std::uint32_t own = gi.group_of[row];
    for (std::size_t v : picks) {
        const auto gslot =
            static_cast<std::size_t>(std::upper_bound(prefix.begin(), prefix.end(), v) -
                                     prefix.begin()) - 1;
        const std::uint32_t g = tier_groups[gslot];
        std::size_t member = v - prefix[gslot];
        if (g == own && member >= gi.rank_in_group[row]) ++member;  // skip self slot
        out.push_back(gi.members[g][member]);
    }
    return out;
}

GeometricGraph symmetrize(std::vector<std::vector<std::uint32_t>> directed_out) {
    const std::size_t n = directed_out.size();
    std::vector<std::vector<std::uint32_t>> adj(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::uint32_t j : directed_out[i]) {
            adj[i].push_back(j);
            adj[j].push_back(static_cast<std::uint32_t>(i));
        }
    }
    GeometricGraph g;
    g.directed = false;
    g.out_neighbors.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& list = adj[i];
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
        g.out_neighbors[i] = std::move(list);
    }
    return g;
}

}  // namespace

std::string GeometricGraph::to_text() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < out_neighbors.size(); ++i) {
        os << i << ' ' << out_neighbors[i].size();
        for (std::uint32_t j : out_neighbors[i]) os << ' ' << j;
        os << '\n';
    }
    return os.str();
}

GeometricGraph build_knn(const GraphSpec& spec, const PointMatrix& pts) {
    const std::size_t n = pts.n;
    const auto k = static_cast<std::size_t>(spec.k);
    if (spec.k < 1) fail(errc::invalid_argument, "K must be >= 1");
    if (n < k + 1) fail(errc::too_few_points, "K-NN graph needs n >= K+1");

    const GroupIndex gi = group_rows(pts);
    const std::size_t g = gi.distinct.n;
    const bool use_tree = g > 64;
    std::optional<KdTree> tree;
    if (use_tree) tree.emplace(gi.distinct);

    std::vector<std::vector<std::uint32_t>> out(n);
    std::vector<std::uint8_t> tie_flags(n, 0);

    parallel_for(n, [&](std::size_t i) {
        const std::uint32_t own = gi.group_of[i];
        const auto q = pts.row(i);
        CandidateSet cands(k);
        const auto own_mult = static_cast<std::uint32_t>(gi.members[own].size() - 1);
        cands.add(0.0, own, own_mult);
        if (use_tree) {
            auto visit = [&](std::uint32_t group, double d2) {
                if (group != own) cands.add(d2, group, static_cast<std::uint32_t>(gi.members[group].size()));
            };
            auto bound = [&] { return cands.bound(); };
            tree->query(q, visit, bound);
        } else {
            std::vector<double> dists(g);
            simd::sqdist_row(q, gi.distinct.raw(), g, pts.dim, dists.data());
            for (std::uint32_t h = 0; h < g; ++h) {
                if (h != own)
                    cands.add(dists[h], h, static_cast<std::uint32_t>(gi.members[h].size()));
            }
        }
        cands.finalize();
        bool tie = false;
        RngStream rng = RngStream::from(spec.seed, {stream_tag::node, i});
        out[i] = select_neighbors(cands, k, gi, static_cast<std::uint32_t>(i), rng, tie);
        std::sort(out[i].begin(), out[i].end());
        tie_flags[i] = tie ? 1 : 0;
    });

    std::size_t ties = 0;
    for (std::uint8_t f : tie_flags) ties += f;

    if (spec.directed) {
        GeometricGraph graph;
        graph.directed = true;
        graph.out_neighbors = std::move(out);
        graph.ties_broken = ties;
        return graph;
    }
    GeometricGraph graph = symmetrize(std::move(out));
    graph.ties_broken = ties;
    return graph;
}

GeometricGraph build_knn_custom(std::size_t n, int k, bool directed, std::uint64_t seed,
                                const std::function<double(std::size_t, std::size_t)>& sqdist_fn) {
    if (k < 1) fail(errc::invalid_argument, "K must be >= 1");
    const auto kk = static_cast<std::size_t>(k);
    if (n < kk + 1) fail(errc::too_few_points, "K-NN graph needs n >= K+1");

    std::vector<std::vector<std::uint32_t>> out(n);
    std::vector<std::uint8_t> tie_flags(n, 0);
    parallel_for(n, [&](std::size_t i) {
        // Every row is its own group here; ties still pool via equal distances.
        std::vector<Candidate> all;
        all.reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) all.push_back({sqdist_fn(i, j), static_cast<std::uint32_t>(j), 1});
        }
        std::nth_element(all.begin(), all.begin() + (kk - 1), all.end(),
                         [](const Candidate& a, const Candidate& b) { return a.d2 < b.d2; });
        const double cutoff = all[kk - 1].d2;
        std::vector<std::uint32_t> strict;
        std::vector<std::uint32_t> tier;
        for (const Candidate& c : all) {
            if (c.d2 < cutoff) {
                strict.push_back(c.group);
            } else if (c.d2 == cutoff) {
                tier.push_back(c.group);
            }
        }
        std::sort(strict.begin(), strict.end());
        std::sort(tier.begin(), tier.end());
        out[i] = std::move(strict);
        const std::size_t need = kk - out[i].size();
        if (need == tier.size()) {
            out[i].insert(out[i].end(), tier.begin(), tier.end());
        } else {
            tie_flags[i] = 1;
            RngStream rng = RngStream::from(seed, {stream_tag::node, i});
            for (std::size_t v : rng.sample_without_replacement(tier.size(), need))
                out[i].push_back(tier[v]);
        }
        std::sort(out[i].begin(), out[i].end());
    });

    std::size_t ties = 0;
    for (std::uint8_t f : tie_flags) ties += f;
    if (directed) {
        GeometricGraph graph;
        graph.directed = true;
        graph.out_neighbors = std::move(out);
        graph.ties_broken = ties;
        return graph;
    }
    GeometricGraph graph = symmetrize(std::move(out));
    graph.ties_broken = ties;
    return graph;
}

GeometricGraph build_mst(const PointMatrix& pts) {
    const std::size_t n = pts.n;
    if (n < 2) fail(errc::too_few_points, "MST needs n >= 2");

    // Prim on the complete graph, O(n^2) time, O(n) extra memory. Candidate
    // edges compare by (weight, lower index, higher index); squared weights
    // order identically to true weights.
    std::vector<double> best_d2(n, kInf);
    std::vector<std::uint32_t> best_from(n, 0);
    std::vector<std::uint8_t> in_tree(n, 0);
    std::vector<double> dists(n);

    auto edge_less = [](double w_a, std::size_t a_lo, std::size_t a_hi, double w_b,
                        std::size_t b_lo, std::size_t b_hi) {
        if (w_a != w_b) return w_a < w_b;
        if (a_lo != b_lo) return a_lo < b_lo;
        return a_hi < b_hi;
    };

    std::vector<std::vector<std::uint32_t>> adj(n);
    std::size_t current = 0;
    in_tree[0] = 1;
    for (std::size_t added = 1; added < n; ++added) {
        simd::sqdist_row(pts.row(current), pts.raw(), n, pts.dim, dists.data());
        for (std::size_t v = 0; v < n; ++v) {
            if (in_tree[v]) continue;
            const std::size_t lo = std::min(current, v), hi = std::max(current, v);
            const std::size_t blo = std::min<std::size_t>(best_from[v], v);
            const std::size_t bhi = std::max<std::size_t>(best_from[v], v);
            if (edge_less(dists[v], lo, hi, best_d2[v], blo, bhi)) {
                best_d2[v] = dists[v];
                best_from[v] = static_cast<std::uint32_t>(current);
            }
        }
        std::size_t pick = n;
        for (std::size_t v = 0; v < n; ++v) {
            if (in_tree[v]) continue;
            if (pick == n) {
                pick = v;
                continue;
            }
            const std::size_t vlo = std::min<std::size_t>(best_from[v], v);
            const std::size_t vhi = std::max<std::size_t>(best_from[v], v);
            const std::size_t plo = std::min<std::size_t>(best_from[pick], pick);
            const std::size_t phi = std::max<std::size_t>(best_from[pick], pick);
            if (edge_less(best_d2[v], vlo, vhi, best_d2[pick], plo, phi)) pick = v;
        }
        in_tree[pick] = 1;
        adj[pick].push_back(best_from[pick]);
        adj[best_from[pick]].push_back(static_cast<std::uint32_t>(pick));
        current = pick;
    }

    GeometricGraph g;
    g.directed = false;
    g.out_neighbors.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::sort(adj[i].begin(), adj[i].end());
        g.out_neighbors[i] = std::move(adj[i]);
    }
    return g;
}

GeometricGraph build_graph(const GraphSpec& spec, const PointMatrix& pts) {
    return spec.kind == GraphSpec::Kind::mst ? build_mst(pts) : build_knn(spec, pts);
}

GeometricGraph build_graph(const GraphSpec& spec, const Dataset& ds,
                           std::span<const std::size_t> cols, const MetricSpec& metric) {
    return build_graph(spec, embed_points(metric, ds, cols));
}

double mst_total_weight(const GeometricGraph& g, const PointMatrix& pts) {
    double total = 0.0;
    for (std::size_t i = 0; i < g.n(); ++i) {
        for (std::uint32_t j : g.out_neighbors[i]) {
            if (j > i) total += std::sqrt(simd::sqdist(pts.row(i), pts.row(j)));
        }
    }
    return total;
}

}  // namespace kpc
