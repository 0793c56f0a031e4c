#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

#include "luenn/metrics.hpp"

namespace luenn {

namespace {

struct Edge {
    int col;
    double cost;
};

// Sparse successive-shortest-path assignment. Every row owns a private
// "unassigned" column of cost `unassigned`, so each row can always be routed
// and the optimum trades cardinality against cost lexicographically as long as
// `unassigned` exceeds the sum of all real edge costs.
class SparseAssignment {
public:
    SparseAssignment(std::vector<std::vector<Edge>> adjacency, int n_cols, double unassigned)
        : adj_(std::move(adjacency)), n_rows_(static_cast<int>(adj_.size())), n_cols_(n_cols),
          unassigned_(unassigned) {
        const int total_cols = n_cols_ + n_rows_;
        row_potential_.assign(static_cast<std::size_t>(n_rows_), 0.0);
        col_potential_.assign(static_cast<std::size_t>(total_cols), 0.0);
        col_owner_.assign(static_cast<std::size_t>(total_cols), -1);
        row_col_.assign(static_cast<std::size_t>(n_rows_), -1);
    }

    std::vector<int> solve() {
        for (int r = 0; r < n_rows_; ++r) augment(r);
        std::vector<int> out(static_cast<std::size_t>(n_rows_), -1);
        for (int r = 0; r < n_rows_; ++r) {
            const int c = row_col_[static_cast<std::size_t>(r)];
            out[static_cast<std::size_t>(r)] = c < n_cols_ ? c : -1;
        }
        return out;
    }

private:
    template <typename F>
    void for_each_edge(int row, F&& f) const {
        for (const Edge& e : adj_[static_cast<std::size_t>(row)]) f(e.col, e.cost);
        f(n_cols_ + row, unassigned_);
    }

    void augment(int source) {
        constexpr double kInf = std::numeric_limits<double>::infinity();
        const std::size_t total_cols = col_potential_.size();
        std::vector<double> dist(total_cols, kInf);
        std::vector<int> prev_row(total_cols, -1);
        std::vector<char> done(total_cols, 0);
        std::vector<int> finalized;
        std::vector<std::pair<int, double>> visited_rows{{source, 0.0}};

        using Item = std::pair<double, int>;
        std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;

        auto relax = [&](int row, double base) {
            for_each_edge(row, [&](int col, double cost) {
                const auto c = static_cast<std::size_t>(col);
                if (done[c]) return;
                const double reduced = cost - row_potential_[static_cast<std::size_t>(row)] - col_potential_[c];
                const double nd = base + std::max(0.0, reduced);
                if (nd < dist[c]) {
                    dist[c] = nd;
                    prev_row[c] = row;
                    heap.emplace(nd, col);
                }
            });
        };

        relax(source, 0.0);
        int target = -1;
        double target_dist = 0.0;
        while (!heap.empty()) {
            const auto [d, col] = heap.top();
            heap.pop();
            const auto c = static_cast<std::size_t>(col);
            if (done[c] || d > dist[c]) continue;
            done[c] = 1;
            finalized.push_back(col);
            const int owner = col_owner_[c];
            if (owner < 0) {
                target = col;
                target_dist = d;
                break;
            }
            visited_rows.emplace_back(owner, d);
            relax(owner, d);
        }

        for (const auto& [row, d] : visited_rows) {
            row_potential_[static_cast<std::size_t>(row)] += target_dist - d;
        }
        for (int col : finalized) {
            const auto c = static_cast<std::size_t>(col);
            col_potential_[c] -= target_dist - dist[c];
        }

        for (int col = target; col >= 0;) {
            const int row = prev_row[static_cast<std::size_t>(col)];
            const int displaced = row_col_[static_cast<std::size_t>(row)];
            col_owner_[static_cast<std::size_t>(col)] = row;
            row_col_[static_cast<std::size_t>(row)] = col;
            col = row == source ? -1 : displaced;
        }
    }

    std::vector<std::vector<Edge>> adj_;
    int n_rows_;
    int n_cols_;
    double unassigned_;
    std::vector<double> row_potential_;
    std::vector<double> col_potential_;
    std::vector<int> col_owner_;
    std::vector<int> row_col_;
};

std::vector<int> assign(std::vector<std::vector<Edge>> adjacency, int n_cols) {
    double total = 0.0;
    for (const auto& row : adjacency) {
        for (const Edge& e : row) total += e.cost;
    }
    return SparseAssignment(std::move(adjacency), n_cols, 2.0 * total + 1.0).solve();
}

}  // namespace

std::vector<int> solve_assignment(const std::vector<std::vector<std::optional<double>>>& cost) {
    int n_cols = 0;
    std::vector<std::vector<Edge>> adjacency(cost.size());
    for (std::size_t r = 0; r < cost.size(); ++r) {
        n_cols = std::max(n_cols, static_cast<int>(cost[r].size()));
        for (std::size_t c = 0; c < cost[r].size(); ++c) {
            if (cost[r][c]) adjacency[r].push_back({static_cast<int>(c), *cost[r][c]});
        }
    }
    return assign(std::move(adjacency), n_cols);
}

double Matching::total_cost(MatchMode mode) const {
    double total = 0.0;
    for (const MatchedPair& p : pairs) {
        const double lateral2 = p.dx * p.dx + p.dy * p.dy;
        total += std::sqrt(mode == MatchMode::Lateral ? lateral2 : lateral2 + p.dz * p.dz);
    }
    return total;
}

Matching match_localizations(const EmitterSet& gt, std::span<const Seed> pred, const MatchConfig& cfg) {
    Matching m;
    m.tol_lateral = cfg.tol_lateral;
    m.tol_axial = cfg.tol_axial;

    // Predictions sorted by x so each ground truth scans only its x window.
    std::vector<std::size_t> by_x(pred.size());
    std::iota(by_x.begin(), by_x.end(), std::size_t{0});
    std::stable_sort(by_x.begin(), by_x.end(), [&](std::size_t a, std::size_t b) { return pred[a].x < pred[b].x; });

    const double tol_lat2 = cfg.tol_lateral * cfg.tol_lateral;
    std::vector<std::vector<Edge>> adjacency(gt.emitters.size());
    for (std::size_t g = 0; g < gt.emitters.size(); ++g) {
        const Emitter& e = gt.emitters[g];
        auto it = std::lower_bound(by_x.begin(), by_x.end(), e.x - cfg.tol_lateral,
                                   [&](std::size_t idx, double x) { return pred[idx].x < x; });
        for (; it != by_x.end() && pred[*it].x <= e.x + cfg.tol_lateral; ++it) {
            const Seed& s = pred[*it];
            const double dx = s.x - e.x;
            const double dy = s.y - e.y;
            const double dz = s.z - e.z;
            const double lat2 = dx * dx + dy * dy;
            if (lat2 > tol_lat2) continue;
            double cost = 0.0;
            if (cfg.mode == MatchMode::Volumetric) {
                if (std::abs(dz) > cfg.tol_axial) continue;
                cost = std::sqrt(lat2 + dz * dz);
            } else {
                cost = std::sqrt(lat2);
            }
            adjacency[g].push_back({static_cast<int>(*it), cost});
        }
        std::sort(adjacency[g].begin(), adjacency[g].end(), [](const Edge& a, const Edge& b) { return a.col < b.col; });
    }

    const auto rows = assign(std::move(adjacency), static_cast<int>(pred.size()));
    for (std::size_t g = 0; g < rows.size(); ++g) {
        if (rows[g] < 0) continue;
        const auto p = static_cast<std::size_t>(rows[g]);
        const Emitter& e = gt.emitters[g];
        m.pairs.push_back({e.id, p, pred[p].x - e.x, pred[p].y - e.y, pred[p].z - e.z});
    }
    m.n_tp = m.pairs.size();
    m.n_fn = gt.emitters.size() - m.n_tp;
    m.n_fp = pred.size() - m.n_tp;
    return m;
}

}  // namespace luenn
