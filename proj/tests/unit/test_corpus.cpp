#include "docgcn/corpus.hpp"
#include "support.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace docgcn;
using namespace docgcn::corpus;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("docgcn_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

json segment_json(const std::string& id, std::vector<double> bbox, const char* parent = nullptr) {
    json s = {{"id", id}, {"bbox", bbox}, {"char_count", 10}, {"label", "text"}};
    if (parent) s["parent_id"] = parent;
    return s;
}

json page_json(std::vector<json> segs) {
    return {{"page_id", "p1"}, {"width", 100}, {"height", 100}, {"segments", segs}};
}

fs::path write_lines(const fs::path& dir, const std::vector<json>& rows) {
    const auto path = dir / "pages.jsonl";
    std::ofstream out(path);
    for (const auto& r : rows) out << r.dump() << '\n';
    return path;
}

}  // namespace

TEST_CASE("minimal canonical record ingests to one page") {
    const auto dir = scratch_dir("minimal");
    const auto path = write_lines(dir, {page_json({segment_json("a", {0, 0, 10, 10})})});
    const auto pages = ingest_canonical(path);
    REQUIRE(pages.size() == 1);
    CHECK(pages[0].size() == 1);
    CHECK(pages[0].segments[0].bbox.area() == doctest::Approx(100));
    CHECK(pages[0].column_mode == ColumnMode::automatic);
}

TEST_CASE("inverted bbox is rejected naming the bbox field and line") {
    const auto dir = scratch_dir("inverted");
    const auto path = write_lines(dir, {page_json({segment_json("a", {0, 0, 10, 10})}),
                                        page_json({segment_json("a", {20, 0, 10, 10})})});
    try {
        ingest_canonical(path);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
        CHECK(e.field() == "segments[0].bbox");
        CHECK(e.code() == ExitCode::data);
    }
}

TEST_CASE("parent cycle is a structural error") {
    const auto dir = scratch_dir("cycle");
    const auto path = write_lines(dir, {page_json({segment_json("A", {0, 0, 10, 10}, "B"),
                                                   segment_json("B", {0, 20, 10, 30}, "C"),
                                                   segment_json("C", {0, 40, 10, 50}, "A")})});
    try {
        ingest_canonical(path);
        FAIL("expected StructuralError");
    } catch (const StructuralError& e) {
        CHECK(std::string(e.what()).find("cycle") != std::string::npos);
    }
}

TEST_CASE("other invariant violations") {
    auto bad = [](json page) {
        CHECK_THROWS_AS(page_from_json(page, 1), DataError);
    };
    bad(page_json({segment_json("a", {0, 0, 10, 10}), segment_json("a", {0, 20, 10, 30})}));  // duplicate id
    bad(page_json({segment_json("a", {0, 0, 10, 10}, "a")}));                                 // self parent
    bad(page_json({segment_json("a", {0, 0, 10, 10}, "zz")}));                                // unknown parent
    bad(page_json({segment_json("a", {0, 0, 110, 10})}));                                     // outside page
    bad(page_json({}));                                                                        // no segments
    auto neg = page_json({segment_json("a", {0, 0, 10, 10})});
    neg["segments"][0]["char_count"] = -1;
    bad(neg);
    auto shortvec = page_json({segment_json("a", {0, 0, 10, 10})});
    shortvec["segments"][0]["semantic_vec"] = std::vector<double>(5, 0.0);
    bad(shortvec);
    auto mode = page_json({segment_json("a", {0, 0, 10, 10})});
    mode["column_mode"] = "triple";
    bad(mode);
}

TEST_CASE("canonical write/read round trip, sidecar vectors") {
    const auto dir = scratch_dir("roundtrip");
    std::vector<double> sem(kSemanticDim), appr(kAppearanceDim);
    for (std::size_t i = 0; i < sem.size(); ++i) sem[i] = 0.001 * static_cast<double>(i);
    for (std::size_t i = 0; i < appr.size(); ++i) appr[i] = -0.5 + 1e-4 * static_cast<double>(i);
    {
        std::ofstream side(dir / "vec.bin", std::ios::binary);
        side.write(reinterpret_cast<const char*>(sem.data()), static_cast<std::streamsize>(sem.size() * 8));
        side.write(reinterpret_cast<const char*>(appr.data()), static_cast<std::streamsize>(appr.size() * 8));
    }
    auto page = page_json({segment_json("a", {0, 0, 10, 10}), segment_json("b", {0, 20, 10, 30}, "a")});
    page["segments"][0]["semantic_vec"] = {{"sidecar", "vec.bin"}, {"offset", 0}};
    page["segments"][0]["appearance_vec"] = {{"sidecar", "vec.bin"}, {"offset", kSemanticDim}};
    page["segments"][1]["parse_l1"] = "S";
    page["segments"][1]["parse_l2"] = {"NP", "VP"};
    page["segments"][1]["label"] = nullptr;
    page["segments"][1]["text"] = "hello";
    page["column_mode"] = "double";
    const auto pages = ingest_canonical(write_lines(dir, {page}));
    REQUIRE(pages[0].segments[0].semantic_vec.has_value());
    CHECK(*pages[0].segments[0].semantic_vec == sem);
    CHECK(*pages[0].segments[0].appearance_vec == appr);
    CHECK(pages[0].segments[1].label.empty());
    CHECK(pages[0].column_mode == ColumnMode::two_column);

    write_canonical(dir / "again.jsonl", pages);
    const auto again = ingest_canonical(dir / "again.jsonl");
    CHECK(again == pages);
}

TEST_CASE("duplicate page ids are rejected") {
    const auto dir = scratch_dir("dup_pages");
    const auto p = page_json({segment_json("a", {0, 0, 10, 10})});
    CHECK_THROWS_AS(ingest_canonical(write_lines(dir, {p, p})), DataError);
}

TEST_CASE("label set") {
    CHECK_THROWS_AS(LabelSet({"only"}), DataError);
    CHECK_THROWS_AS(LabelSet({"a", "a"}), DataError);
    const LabelSet ls({"x", "y", "z"});
    CHECK(ls.index("y") == 1);
    try {
        ls.index("w");
        FAIL("expected DataError");
    } catch (const DataError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("x, y, z") != std::string::npos);
    }
    CHECK(LabelSet::funsd().size() == 4);
}

TEST_CASE("hash featurizer is deterministic, unit norm, text keyed") {
    Segment a;
    a.id = "a";
    a.bbox = {0, 0, 1, 1};
    a.text = "hello";
    Segment b = a;
    b.id = "b";
    b.bbox = {5, 5, 9, 9};
    const auto va = hash_featurize(a, 64, 7);
    CHECK(va == hash_featurize(b, 64, 7));  // same text, same vector
    CHECK(va != hash_featurize(a, 64, 8));
    double norm = 0;
    for (double v : va) norm += v * v;
    CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-12));
    b.text.reset();
    Segment c = b;
    CHECK(hash_featurize(b, 64, 7) == hash_featurize(c, 64, 7));
    c.char_count = 3;
    CHECK(hash_featurize(b, 64, 7) != hash_featurize(c, 64, 7));

    FeatureConfig off;
    off.fallback = false;
    CHECK_THROWS_AS(semantic_features(a, off), DataError);
    FeatureConfig on;
    CHECK(semantic_features(a, on).size() == kSemanticDim);
    CHECK(appearance_features(a, on).size() == kAppearanceDim);
    // Appearance draws from a different stream than semantic.
    const auto sem = semantic_features(a, on), app = appearance_features(a, on);
    CHECK(std::vector<double>(sem.begin(), sem.begin() + 8) != std::vector<double>(app.begin(), app.begin() + 8));
}

TEST_CASE("funsd adapter reads annotations and links") {
    const auto dir = scratch_dir("funsd");
    fs::create_directories(dir / "training_data" / "annotations");
    const json form = {
        {"form",
         {{{"id", 0}, {"text", "Name:"}, {"box", {10, 10, 60, 30}}, {"label", "question"},
           {"words", {{{"text", "Name:"}, {"box", {10, 10, 60, 30}}}}}, {"linking", {{0, 1}}}},
          {{"id", 1}, {"text", "John Smith"}, {"box", {70, 10, 160, 30}}, {"label", "answer"},
           {"words", {{{"text", "John"}, {"box", {70, 10, 110, 30}}}, {{"text", "Smith"}, {"box", {115, 10, 160, 30}}}}},
           {"linking", {{0, 1}}}},
          {{"id", 2}, {"text", "FORM"}, {"box", {10, 50, 90, 70}}, {"label", "header"},
           {"words", {{{"text", "FORM"}, {"box", {10, 50, 90, 70}}}}}, {"linking", json::array()}}}}};
    std::ofstream(dir / "training_data" / "annotations" / "0001.json") << form.dump();
    const auto pages = ingest_funsd(dir, FunsdSplit::train);
    REQUIRE(pages.size() == 1);
    const auto& p = pages[0];
    REQUIRE(p.size() == 3);
    CHECK(p.segments[1].parent_id == std::optional<std::string>(p.segments[0].id));
    CHECK_FALSE(p.segments[0].parent_id.has_value());
    CHECK(p.segments[1].char_count == 9);
    CHECK(p.segments[2].label == "header");

    auto bad = form;
    bad["form"][2]["label"] = "signature";
    std::ofstream(dir / "training_data" / "annotations" / "0001.json") << bad.dump();
    try {
        ingest_funsd(dir, FunsdSplit::train);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("question") != std::string::npos);
    }
    CHECK_THROWS_AS(ingest_funsd(dir, FunsdSplit::test), DataError);
}
