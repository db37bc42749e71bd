#include "docgcn/geometry.hpp"
#include "docgcn/graphs.hpp"
#include "support.hpp"

#include <doctest.h>

#include <filesystem>
#include <map>

using namespace docgcn;
using namespace docgcn::corpus;
using namespace testing_support;

namespace {

// Independent nearest-two rule: per node, build a (distance, index) list and
// sort it; symmetric weights keep the larger of the two directions.
std::map<std::pair<std::size_t, std::size_t>, double> oracle_edges(const Page& p) {
    const auto n = p.size();
    auto vgap = [](const BBox& a, const BBox& b) {
        const double top = std::max(a.y1, b.y1), bottom = std::min(a.y2, b.y2);
        return top >= bottom ? top - bottom : 0.0;
    };
    auto hgap = [](const BBox& a, const BBox& b) {
        const double left = std::max(a.x1, b.x1), right = std::min(a.x2, b.x2);
        return left >= right ? left - right : 0.0;
    };
    std::map<std::pair<std::size_t, std::size_t>, double> out;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& a = p.segments[i].bbox;
        std::vector<std::pair<double, std::size_t>> cand;
        std::optional<std::size_t> aligned;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const auto& b = p.segments[j].bbox;
            cand.push_back({vgap(a, b), j});
            const bool overlap = std::min(a.y2, b.y2) > std::max(a.y1, b.y1);
            if (p.column_mode != ColumnMode::single && overlap) {
                if (!aligned || vgap(a, b) < vgap(a, p.segments[*aligned].bbox)) aligned = j;
            }
        }
        if (aligned)
            for (auto& c : cand)
                if (c.second == *aligned) c.first = std::min(c.first, hgap(a, p.segments[*aligned].bbox));
        std::sort(cand.begin(), cand.end());
        for (std::size_t k = 0; k < std::min<std::size_t>(2, cand.size()); ++k) {
            const double w = 1.0 / (1.0 + cand[k].first);
            for (auto key : {std::pair{i, cand[k].second}, std::pair{cand[k].second, i}}) {
                auto it = out.find(key);
                out[key] = it == out.end() ? w : std::max(it->second, w);
            }
        }
    }
    return out;
}

Page stacked() {
    Page p;
    p.page_id = "stack";
    p.width = 100;
    p.height = 100;
    p.column_mode = ColumnMode::single;
    for (auto [id, y1, y2] : {std::tuple{"top", 0.0, 10.0}, {"mid", 12.0, 20.0}, {"bottom", 25.0, 35.0}}) {
        Segment s;
        s.id = id;
        s.bbox = {0, y1, 10, y2};
        p.segments.push_back(s);
    }
    return p;
}

}  // namespace

TEST_CASE("density ratio") {
    Segment s;
    s.bbox = {0, 0, 10, 5};
    s.char_count = 100;
    CHECK(geometry::density_ratio(s) == 2.0);
    s.char_count = 0;
    CHECK(geometry::density_ratio(s) == 0.0);
}

TEST_CASE("stacked boxes: each links to its two nearest by vertical gap") {
    const auto edges = geometry::nearest_two_edges(stacked());
    std::map<std::pair<std::size_t, std::size_t>, double> w;
    for (const auto& e : edges) w[{e.src, e.dst}] = e.weight;
    CHECK(w.size() == 6);  // complete graph on three nodes
    CHECK(w[{0, 1}] == doctest::Approx(1.0 / 3.0));   // gap 2
    CHECK(w[{1, 2}] == doctest::Approx(1.0 / 6.0));   // gap 5
    CHECK(w[{0, 2}] == doctest::Approx(1.0 / 16.0));  // gap 15 across the middle box
}

TEST_CASE("two-segment page has one symmetric edge; single segment none") {
    auto p = stacked();
    p.segments.pop_back();
    const auto edges = geometry::nearest_two_edges(p);
    REQUIRE(edges.size() == 2);
    CHECK(edges[0].weight == edges[1].weight);
    p.segments.pop_back();
    CHECK(geometry::nearest_two_edges(p).empty());
}

TEST_CASE("nearest_two_edges matches brute-force oracle on random pages") {
    Rng rng(11);
    for (int trial = 0; trial < 300; ++trial) {
        const auto mode = static_cast<ColumnMode>(trial % 3);
        const auto page = random_page(rng, 1 + rng.index(9), trial % 2 == 0, mode);
        const auto expect = oracle_edges(page);
        const auto got = geometry::nearest_two_edges(page);
        REQUIRE(got.size() == expect.size());
        for (const auto& e : got) {
            auto it = expect.find({e.src, e.dst});
            REQUIRE(it != expect.end());
            CHECK(e.weight == it->second);
        }
    }
}

TEST_CASE("normalize_adjacency matches entrywise oracle and is symmetric") {
    Rng rng(5);
    for (int trial = 0; trial < 300; ++trial) {
        const auto n = static_cast<Eigen::Index>(1 + rng.index(7));
        Matrix a = Matrix::Zero(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = i + 1; j < n; ++j)
                if (rng.uniform() < 0.5) a(i, j) = a(j, i) = rng.uniform(0.0, 1.0);
        const Matrix got = graphs::normalize_adjacency(a);
        const Matrix expect = ref_normalize(a);
        CHECK((got - expect).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK(got == got.transpose());
    }
}

TEST_CASE("normalize_adjacency examples and contracts") {
    CHECK(graphs::normalize_adjacency(Matrix::Zero(3, 3)) == Matrix::Identity(3, 3));
    Matrix two(2, 2);
    two << 0, 1, 1, 0;
    CHECK((graphs::normalize_adjacency(two).array() - 0.5).abs().maxCoeff() < 1e-15);
    Matrix asym(2, 2);
    asym << 0, 1, 0, 0;
    CHECK_THROWS_AS(graphs::normalize_adjacency(asym), ContractViolation);
    Matrix neg(2, 2);
    neg << 0, -1, -1, 0;
    CHECK_THROWS_AS(graphs::normalize_adjacency(neg), ContractViolation);
}

TEST_CASE("relation adjacency is binary and symmetric") {
    const std::vector<std::optional<std::size_t>> parents{std::nullopt, 0, 0, 2};
    const Matrix a = graphs::relation_adjacency(parents);
    CHECK(a == a.transpose());
    CHECK(a(1, 0) == 1.0);
    CHECK(a(3, 2) == 1.0);
    CHECK(a(1, 2) == 0.0);
    CHECK(a.sum() == 6.0);
    CHECK_THROWS_AS(graphs::relation_adjacency({std::optional<std::size_t>(5)}), DataError);
}

TEST_CASE("build_all yields six symmetric graphs with expected feature widths") {
    Rng rng(3);
    auto page = random_page(rng, 6);
    page.segments[2].parent_id = page.segments[0].id;
    page.segments[0].parse_l1 = "NP";
    page.segments[1].parse_l2 = std::vector<std::string>{"NP", "VP", "BOGUS"};
    graphs::GraphOptions opts;
    const auto all = graphs::build_all(page, page.parent_indices(), opts);
    for (std::size_t k = 0; k < 6; ++k) {
        CHECK(all[k].kind == graphs::kAllKinds[k]);
        CHECK(all[k].adjacency == all[k].adjacency.transpose());
        CHECK(all[k].norm_adjacency == all[k].norm_adjacency.transpose());
    }
    CHECK(all[0].node_features.cols() == encoding::kEmbeddingDim);
    CHECK(all[2].node_features.cols() == kAppearanceDim);
    CHECK(all[5].node_features.cols() == kSemanticDim);
    CHECK(all[3].symbols.has_value());
    CHECK(all[4].symbols->unique.size() <= page.size());
    // Density features are the sinusoidal encodings of ratio and raw count.
    const Vector d0 = encoding::encode_density_node(geometry::density_ratio(page.segments[0]));
    CHECK((all[0].node_features.row(0).transpose() - d0).norm() == 0.0);
    const Vector c0 = encoding::encode_density_node(static_cast<double>(page.segments[0].char_count));
    CHECK((all[1].node_features.row(0).transpose() - c0).norm() == 0.0);
}

TEST_CASE("graph construction is equivariant under segment permutation") {
    Rng rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        // Vertically disjoint boxes with continuous gaps, so no distance ties.
        auto page = random_page(rng, 2 + rng.index(6), false, ColumnMode::single);
        double y = 0;
        for (auto& s : page.segments) {
            const double h = rng.uniform(1, 10);
            y += rng.uniform(0.5, 8);
            s.bbox.y1 = y;
            s.bbox.y2 = y + h;
            y += h;
        }
        page.height = y + 1;
        const auto n = page.size();
        std::vector<std::size_t> perm(n);
        for (std::size_t i = 0; i < n; ++i) perm[i] = i;
        rng.shuffle(perm);
        Page shuffled = page;
        for (std::size_t i = 0; i < n; ++i) shuffled.segments[i] = page.segments[perm[i]];
        const Matrix a = graphs::build_density_graphs(page).first.adjacency;
        const Matrix b = graphs::build_density_graphs(shuffled).first.adjacency;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                CHECK(b(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) ==
                      a(static_cast<Eigen::Index>(perm[i]), static_cast<Eigen::Index>(perm[j])));
    }
}

TEST_CASE("parent-link forests survive a canonical round trip and relation graph construction") {
    Rng rng(11);
    const auto path = std::filesystem::temp_directory_path() / "docgcn-forest-roundtrip.jsonl";
    for (int trial = 0; trial < 50; ++trial) {
        const auto n = 1 + rng.index(12);
        auto page = random_page(rng, n);
        page.page_id = "forest-" + std::to_string(trial);
        const auto forest = random_forest(rng, n);
        for (std::size_t i = 0; i < n; ++i)
            if (forest[i]) page.segments[i].parent_id = page.segments[*forest[i]].id;
        write_canonical(path, {page});
        const auto back = ingest_canonical(path);
        REQUIRE(back.size() == 1);
        const auto parents = back[0].parent_indices();
        CHECK(parents == forest);
        CHECK(is_forest(parents));
        const Matrix a = graphs::relation_adjacency(parents);
        std::size_t links = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (forest[i]) {
                ++links;
                CHECK(a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(*forest[i])) == 1.0);
            }
        CHECK(a.sum() == static_cast<double>(2 * links));
    }
    std::filesystem::remove(path);
}
