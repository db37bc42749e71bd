// FUNSD adapter. Reads the official annotation layout:
//   <root>/training_data/annotations/*.json, <root>/testing_data/annotations/*.json
// with page images (optional, used only for page size) under images/.

#include "docgcn/corpus.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <map>
#include <set>

namespace docgcn::corpus {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Width and height from a PNG IHDR chunk, if the file is a readable PNG.
std::optional<std::pair<double, double>> png_size(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::array<unsigned char, 24> hdr{};
    in.read(reinterpret_cast<char*>(hdr.data()), hdr.size());
    if (!in) return std::nullopt;
    static constexpr std::array<unsigned char, 8> sig{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    if (!std::equal(sig.begin(), sig.end(), hdr.begin())) return std::nullopt;
    auto be32 = [&](std::size_t off) {
        return (std::uint32_t{hdr[off]} << 24) | (std::uint32_t{hdr[off + 1]} << 16) |
               (std::uint32_t{hdr[off + 2]} << 8) | std::uint32_t{hdr[off + 3]};
    };
    return std::pair<double, double>{static_cast<double>(be32(16)), static_cast<double>(be32(20))};
}

std::int64_t non_space_chars(const std::string& s) {
    return static_cast<std::int64_t>(
        std::count_if(s.begin(), s.end(), [](unsigned char c) { return !std::isspace(c); }));
}

Page read_form(const fs::path& file, const fs::path& image_dir, const LabelSet& labels) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot open " + file.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw DataError(file.string() + ": invalid JSON: " + e.what());
    }
    if (!doc.contains("form") || !doc["form"].is_array()) throw DataError(file.string() + ": missing 'form' array");

    Page page;
    page.page_id = file.stem().string();
    page.column_mode = ColumnMode::automatic;

    double max_x = 1, max_y = 1;
    std::map<std::int64_t, std::size_t> by_entity;
    std::vector<std::pair<std::int64_t, std::int64_t>> links;
    for (const auto& ent : doc["form"]) {
        Segment s;
        const auto entity_id = ent.at("id").get<std::int64_t>();
        s.id = std::to_string(entity_id);
        const auto& box = ent.at("box");
        s.bbox = {box.at(0).get<double>(), box.at(1).get<double>(), box.at(2).get<double>(), box.at(3).get<double>()};
        if (s.bbox.x1 > s.bbox.x2) std::swap(s.bbox.x1, s.bbox.x2);
        if (s.bbox.y1 > s.bbox.y2) std::swap(s.bbox.y1, s.bbox.y2);
        // A handful of FUNSD regions are degenerate (zero width or height).
        if (!(s.bbox.x1 < s.bbox.x2)) s.bbox.x2 = s.bbox.x1 + 1;
        if (!(s.bbox.y1 < s.bbox.y2)) s.bbox.y2 = s.bbox.y1 + 1;
        s.bbox.x1 = std::max(0.0, s.bbox.x1);
        s.bbox.y1 = std::max(0.0, s.bbox.y1);

        const auto label = ent.at("label").get<std::string>();
        if (!labels.find(label)) labels.index(label);  // throws with valid label list
        s.label = label;

        std::int64_t chars = 0;
        if (auto w = ent.find("words"); w != ent.end() && w->is_array()) {
            for (const auto& word : *w) chars += non_space_chars(word.value("text", ""));
        }
        s.char_count = chars;
        s.text = ent.value("text", "");
        if (auto l = ent.find("linking"); l != ent.end() && l->is_array()) {
            for (const auto& pair : *l)
                if (pair.is_array() && pair.size() == 2)
                    links.emplace_back(pair[0].get<std::int64_t>(), pair[1].get<std::int64_t>());
        }
        max_x = std::max(max_x, s.bbox.x2);
        max_y = std::max(max_y, s.bbox.y2);
        if (!by_entity.emplace(entity_id, page.segments.size()).second)
            throw DataError(file.string() + ": duplicate entity id " + s.id);
        page.segments.push_back(std::move(s));
    }
    if (page.segments.empty()) throw DataError(file.string() + ": form has no regions");

    if (auto sz = png_size(image_dir / (page.page_id + ".png"))) {
        page.width = std::max(sz->first, max_x);
        page.height = std::max(sz->second, max_y);
    } else {
        page.width = max_x;
        page.height = max_y;
    }

    // Each link appears in both endpoints' lists; the first element is taken as
    // the parent. A child keeps its first parent, and links that would close a
    // cycle are dropped.
    std::sort(links.begin(), links.end());
    links.erase(std::unique(links.begin(), links.end()), links.end());
    for (const auto& [parent, child] : links) {
        auto pi = by_entity.find(parent);
        auto ci = by_entity.find(child);
        if (pi == by_entity.end() || ci == by_entity.end() || parent == child) continue;
        auto& seg = page.segments[ci->second];
        if (seg.parent_id) continue;
        seg.parent_id = page.segments[pi->second].id;
        try {
            check_forest(page);
        } catch (const StructuralError&) {
            spdlog::debug("funsd {}: dropping link {} -> {} (cycle)", page.page_id, parent, child);
            seg.parent_id.reset();
        }
    }
    validate_page(page);
    return page;
}

}  // namespace

std::vector<Page> ingest_funsd(const fs::path& dir, FunsdSplit split) {
    const fs::path split_dir = dir / (split == FunsdSplit::train ? "training_data" : "testing_data");
    const fs::path ann_dir = split_dir / "annotations";
    if (!fs::is_directory(ann_dir)) throw DataError("missing FUNSD annotation directory " + ann_dir.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(ann_dir))
        if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    if (files.empty()) throw DataError("no annotation files in " + ann_dir.string());
    std::sort(files.begin(), files.end());
    const LabelSet labels = LabelSet::funsd();
    std::vector<Page> pages;
    pages.reserve(files.size());
    for (const auto& f : files) pages.push_back(read_form(f, split_dir / "images", labels));
    return pages;
}

}  // namespace docgcn::corpus
