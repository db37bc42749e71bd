#include "docgcn/graphs.hpp"

#include <cmath>

namespace docgcn::graphs {

std::string to_string(AspectKind kind) {
    switch (kind) {
        case AspectKind::den1: return "den1";
        case AspectKind::den2: return "den2";
        case AspectKind::appr: return "appr";
        case AspectKind::syn1: return "syn1";
        case AspectKind::syn2: return "syn2";
        case AspectKind::semc: return "semc";
    }
    return "?";
}

AspectKind aspect_kind_from_string(const std::string& s) {
    for (auto k : kAllKinds)
        if (to_string(k) == s) return k;
    throw UsageError("unknown aspect '" + s + "' (expected den1, den2, appr, syn1, syn2 or semc)");
}

bool is_syntactic(AspectKind kind) { return kind == AspectKind::syn1 || kind == AspectKind::syn2; }

int syntactic_level(AspectKind kind) { return kind == AspectKind::syn2 ? 2 : 1; }

int default_input_dim(AspectKind kind) {
    return kind == AspectKind::appr ? corpus::kAppearanceDim : encoding::kEmbeddingDim;
}

Matrix normalize_adjacency(const Matrix& adjacency) {
    require(adjacency.rows() == adjacency.cols(), "normalize_adjacency: matrix must be square");
    require(adjacency == adjacency.transpose(),
            "normalize_adjacency: matrix must be symmetric");
    require((adjacency.array() >= 0.0).all(), "normalize_adjacency: entries must be nonnegative");
    require(adjacency.diagonal().isZero(0.0), "normalize_adjacency: diagonal must be zero");
    const auto n = adjacency.rows();
    Matrix tilde = adjacency + Matrix::Identity(n, n);
    const Vector inv_sqrt = tilde.rowwise().sum().cwiseSqrt().cwiseInverse();
    // Scale by the product d_i d_j so entries (i, j) and (j, i) round identically.
    Matrix out(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i) out(i, j) = tilde(i, j) * (inv_sqrt(i) * inv_sqrt(j));
    return out;
}

Matrix adjacency_from_edges(std::size_t n, const std::vector<geometry::WeightedEdge>& edges) {
    Matrix a = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (const auto& e : edges) {
        require(e.src < n && e.dst < n && e.src != e.dst, "adjacency_from_edges: bad edge");
        a(static_cast<Eigen::Index>(e.src), static_cast<Eigen::Index>(e.dst)) = e.weight;
        a(static_cast<Eigen::Index>(e.dst), static_cast<Eigen::Index>(e.src)) = e.weight;
    }
    return a;
}

Matrix relation_adjacency(const std::vector<std::optional<std::size_t>>& parents) {
    const auto n = static_cast<Eigen::Index>(parents.size());
    Matrix a = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& p = parents[static_cast<std::size_t>(i)];
        if (!p) continue;
        const auto j = static_cast<Eigen::Index>(*p);
        if (j >= n || j == i) throw DataError("relation references unknown segment index " + std::to_string(*p));
        a(i, j) = a(j, i) = 1.0;
    }
    return a;
}

namespace {

AspectGraph make_graph(AspectKind kind, Matrix adjacency) {
    AspectGraph g;
    g.kind = kind;
    g.norm_adjacency = normalize_adjacency(adjacency);
    g.adjacency = std::move(adjacency);
    return g;
}

Matrix geometric_adjacency(const corpus::Page& page) {
    return adjacency_from_edges(page.size(), geometry::nearest_two_edges(page));
}

}  // namespace

std::pair<AspectGraph, AspectGraph> build_density_graphs(const corpus::Page& page) {
    const Matrix a = geometric_adjacency(page);
    AspectGraph den1 = make_graph(AspectKind::den1, a);
    AspectGraph den2 = make_graph(AspectKind::den2, a);
    const auto n = static_cast<Eigen::Index>(page.size());
    den1.node_features.resize(n, encoding::kEmbeddingDim);
    den2.node_features.resize(n, encoding::kEmbeddingDim);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& seg = page.segments[static_cast<std::size_t>(i)];
        den1.node_features.row(i) = encoding::encode_density_node(geometry::density_ratio(seg)).transpose();
        den2.node_features.row(i) =
            encoding::encode_density_node(static_cast<double>(seg.char_count)).transpose();
    }
    return {std::move(den1), std::move(den2)};
}

AspectGraph build_appearance_graph(const corpus::Page& page, const corpus::FeatureConfig& features) {
    AspectGraph g = make_graph(AspectKind::appr, geometric_adjacency(page));
    g.node_features.resize(static_cast<Eigen::Index>(page.size()), features.appearance_dim);
    for (std::size_t i = 0; i < page.size(); ++i) {
        const auto v = corpus::appearance_features(page.segments[i], features);
        if (static_cast<int>(v.size()) != features.appearance_dim)
            throw DataError("segment " + page.segments[i].id + ": appearance vector has wrong length");
        g.node_features.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const RowVector>(v.data(), features.appearance_dim);
    }
    return g;
}

RelationGraphs build_relation_graphs(const corpus::Page& page, const std::vector<std::optional<std::size_t>>& parents,
                                     const GraphOptions& opts) {
    if (parents.size() != page.size()) throw DataError("relation map size does not match page " + page.page_id);
    const Matrix a = relation_adjacency(parents);
    RelationGraphs out{make_graph(AspectKind::syn1, a), make_graph(AspectKind::syn2, a),
                       make_graph(AspectKind::semc, a)};
    for (auto* g : {&out.syn1, &out.syn2}) {
        std::vector<std::vector<int>> seqs;
        for (const auto& seg : page.segments)
            seqs.push_back(encoding::symbol_sequence(seg, syntactic_level(g->kind), opts.symbols));
        g->symbols = encoding::SymbolBatch::from(seqs);
    }
    const int dim = opts.features.semantic_dim;
    out.semc.node_features.resize(static_cast<Eigen::Index>(page.size()), dim);
    for (std::size_t i = 0; i < page.size(); ++i) {
        const auto v = corpus::semantic_features(page.segments[i], opts.features);
        if (static_cast<int>(v.size()) != dim)
            throw DataError("segment " + page.segments[i].id + ": semantic vector has wrong length");
        out.semc.node_features.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const RowVector>(v.data(), dim);
    }
    return out;
}

RelationGraphs build_relation_graphs(const corpus::Page& page, const GraphOptions& opts) {
    return build_relation_graphs(page, page.parent_indices(), opts);
}

std::array<AspectGraph, 6> build_all(const corpus::Page& page, const std::vector<std::optional<std::size_t>>& parents,
                                     const GraphOptions& opts) {
    auto [den1, den2] = build_density_graphs(page);
    auto appr = build_appearance_graph(page, opts.features);
    auto rel = build_relation_graphs(page, parents, opts);
    return {std::move(den1), std::move(den2), std::move(appr), std::move(rel.syn1), std::move(rel.syn2),
            std::move(rel.semc)};
}

}  // namespace docgcn::graphs
