#ifndef DOCGCN_GEOMETRY_HPP
#define DOCGCN_GEOMETRY_HPP

#include "docgcn/corpus.hpp"

#include <vector>

namespace docgcn::geometry {

using corpus::BBox;

struct WeightedEdge {
    std::size_t src = 0;
    std::size_t dst = 0;
    double weight = 0;
    friend bool operator==(const WeightedEdge&, const WeightedEdge&) = default;
};

/// Characters per unit of box area.
double density_ratio(const corpus::Segment& seg);

/// Gap between the vertical extents of two boxes; 0 when they overlap vertically.
double vertical_gap(const BBox& a, const BBox& b);
/// Gap between the horizontal extents of two boxes; 0 when they overlap horizontally.
double horizontal_gap(const BBox& a, const BBox& b);

/// True when the boxes' vertical intervals overlap with positive length.
bool horizontally_aligned(const BBox& a, const BBox& b);

/// Edge weight for a gap distance.
inline double inverse_distance(double d) { return 1.0 / (1.0 + d); }

/// Connects every segment to its two nearest neighbours by box gap and returns
/// the symmetrised edge list, sorted by (src, dst).
///
/// Candidates for node n are the vertical gaps to every other box. With column
/// handling (double or auto), the horizontal gap to the horizontally aligned box
/// with the smallest vertical gap is added as well. A neighbour's distance is the
/// smallest of its candidates; ties go to the lower segment index.
std::vector<WeightedEdge> nearest_two_edges(const corpus::Page& page);

}  // namespace docgcn::geometry

#endif  // DOCGCN_GEOMETRY_HPP
