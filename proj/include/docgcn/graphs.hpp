#ifndef DOCGCN_GRAPHS_HPP
#define DOCGCN_GRAPHS_HPP

#include "docgcn/corpus.hpp"
#include "docgcn/encoding.hpp"
#include "docgcn/geometry.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace docgcn::graphs {

enum class AspectKind { den1, den2, appr, syn1, syn2, semc };

inline constexpr std::array<AspectKind, 6> kAllKinds{AspectKind::den1, AspectKind::den2, AspectKind::appr,
                                                     AspectKind::syn1, AspectKind::syn2, AspectKind::semc};

std::string to_string(AspectKind kind);
AspectKind aspect_kind_from_string(const std::string& s);
bool is_syntactic(AspectKind kind);
/// 1 for syn1, 2 for syn2.
int syntactic_level(AspectKind kind);
/// Input feature width of a kind with default encoders (768, or 2048 for appr).
int default_input_dim(AspectKind kind);

/// One per-page graph. For syntactic kinds `node_features` is left empty and the
/// owning model's Bi-LSTM encodes `symbols` on demand.
struct AspectGraph {
    AspectKind kind = AspectKind::den1;
    Matrix adjacency;       // N x N
    Matrix norm_adjacency;  // N x N
    Matrix node_features;   // N x d0
    std::optional<encoding::SymbolBatch> symbols;

    Eigen::Index size() const { return adjacency.rows(); }
};

/// D^-1/2 (A + I) D^-1/2 with D the degree matrix of A + I.
Matrix normalize_adjacency(const Matrix& adjacency);

/// Dense symmetric adjacency from an edge list.
Matrix adjacency_from_edges(std::size_t n, const std::vector<geometry::WeightedEdge>& edges);

/// Binary undirected parent-child adjacency. `parents[i]` is the parent index of i.
Matrix relation_adjacency(const std::vector<std::optional<std::size_t>>& parents);

struct GraphOptions {
    corpus::FeatureConfig features;
    encoding::SymbolTable symbols;
};

std::pair<AspectGraph, AspectGraph> build_density_graphs(const corpus::Page& page);
AspectGraph build_appearance_graph(const corpus::Page& page, const corpus::FeatureConfig& features);

struct RelationGraphs {
    AspectGraph syn1, syn2, semc;
};

/// Relation graphs from an explicit parent map (child index -> parent index).
RelationGraphs build_relation_graphs(const corpus::Page& page, const std::vector<std::optional<std::size_t>>& parents,
                                     const GraphOptions& opts);

/// Relation graphs using the page's own parent links.
RelationGraphs build_relation_graphs(const corpus::Page& page, const GraphOptions& opts);

/// All six graphs of a page in kAllKinds order.
std::array<AspectGraph, 6> build_all(const corpus::Page& page, const std::vector<std::optional<std::size_t>>& parents,
                                     const GraphOptions& opts);

}  // namespace docgcn::graphs

#endif  // DOCGCN_GRAPHS_HPP
