#include "docgcn/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace docgcn::geometry {

double density_ratio(const corpus::Segment& seg) {
    return static_cast<double>(seg.char_count) / seg.bbox.area();
}

double vertical_gap(const BBox& a, const BBox& b) {
    if (b.y1 >= a.y2) return std::abs(b.y1 - a.y2);  // b below a
    if (b.y2 <= a.y1) return std::abs(b.y2 - a.y1);  // b above a
    return 0.0;
}

double horizontal_gap(const BBox& a, const BBox& b) {
    if (b.x1 >= a.x2) return std::abs(b.x1 - a.x2);  // b right of a
    if (b.x2 <= a.x1) return std::abs(b.x2 - a.x1);  // b left of a
    return 0.0;
}

bool horizontally_aligned(const BBox& a, const BBox& b) {
    return std::min(a.y2, b.y2) - std::max(a.y1, b.y1) > 0.0;
}

std::vector<WeightedEdge> nearest_two_edges(const corpus::Page& page) {
    const std::size_t n = page.size();
    const bool columns = page.column_mode != corpus::ColumnMode::single;
    std::map<std::pair<std::size_t, std::size_t>, double> chosen;

    std::vector<double> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& bi = page.segments[i].bbox;
        for (std::size_t j = 0; j < n; ++j)
            dist[j] = j == i ? std::numeric_limits<double>::infinity() : vertical_gap(bi, page.segments[j].bbox);

        if (columns) {
            std::size_t best = n;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i || !horizontally_aligned(bi, page.segments[j].bbox)) continue;
                if (best == n || dist[j] < dist[best]) best = j;
            }
            if (best != n) dist[best] = std::min(dist[best], horizontal_gap(bi, page.segments[best].bbox));
        }

        // Two smallest by (distance, index).
        std::size_t first = n, second = n;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            if (first == n || dist[j] < dist[first]) {
                second = first;
                first = j;
            } else if (second == n || dist[j] < dist[second]) {
                second = j;
            }
        }
        for (std::size_t j : {first, second}) {
            if (j == n) continue;
            const double w = inverse_distance(dist[j]);
            // Symmetrise; when both endpoints pick each other keep the larger weight.
            for (auto key : {std::pair{i, j}, std::pair{j, i}}) {
                auto [it, inserted] = chosen.emplace(key, w);
                if (!inserted) it->second = std::max(it->second, w);
            }
        }
    }

    std::vector<WeightedEdge> edges;
    edges.reserve(chosen.size());
    for (const auto& [key, w] : chosen) edges.push_back({key.first, key.second, w});
    return edges;
}

}  // namespace docgcn::geometry
