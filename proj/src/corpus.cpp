#include "docgcn/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace docgcn::corpus {

using nlohmann::json;

std::string to_string(ColumnMode mode) {
    switch (mode) {
        case ColumnMode::single: return "single";
        case ColumnMode::two_column: return "double";
        case ColumnMode::automatic: return "auto";
    }
    return "auto";
}

ColumnMode column_mode_from_string(const std::string& s) {
    if (s == "single") return ColumnMode::single;
    if (s == "double") return ColumnMode::two_column;
    if (s == "auto") return ColumnMode::automatic;
    throw DataError("unknown column_mode '" + s + "' (expected single, double or auto)");
}

std::optional<std::size_t> Page::index_of(const std::string& id) const {
    for (std::size_t i = 0; i < segments.size(); ++i)
        if (segments[i].id == id) return i;
    return std::nullopt;
}

std::vector<std::optional<std::size_t>> Page::parent_indices() const {
    std::vector<std::optional<std::size_t>> out(segments.size());
    for (std::size_t i = 0; i < segments.size(); ++i)
        if (segments[i].parent_id) out[i] = index_of(*segments[i].parent_id);
    return out;
}

bool Page::has_parent_links() const {
    return std::any_of(segments.begin(), segments.end(), [](const Segment& s) { return s.parent_id.has_value(); });
}

// ---------------------------------------------------------------------------
// LabelSet

LabelSet::LabelSet(std::vector<std::string> names) : names_(std::move(names)) {
    std::set<std::string> seen;
    for (const auto& n : names_) {
        if (n.empty()) throw DataError("label set: empty label name");
        if (!seen.insert(n).second) throw DataError("label set: duplicate label '" + n + "'");
    }
    if (names_.size() < 2) throw DataError("label set: need at least 2 labels, got " + std::to_string(names_.size()));
}

LabelSet LabelSet::from_pages(const std::vector<Page>& pages) {
    std::set<std::string> names;
    for (const auto& p : pages)
        for (const auto& s : p.segments)
            if (!s.label.empty()) names.insert(s.label);
    return LabelSet(std::vector<std::string>(names.begin(), names.end()));
}

LabelSet LabelSet::funsd() { return LabelSet({"header", "question", "answer", "other"}); }

std::optional<int> LabelSet::find(const std::string& name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) return std::nullopt;
    return static_cast<int>(it - names_.begin());
}

int LabelSet::index(const std::string& name) const {
    if (auto id = find(name)) return *id;
    std::string valid;
    for (const auto& n : names_) valid += (valid.empty() ? "" : ", ") + n;
    throw DataError("unknown label '" + name + "'; valid labels: " + valid);
}

std::vector<int> LabelSet::encode(const Page& page) const {
    std::vector<int> ids;
    ids.reserve(page.size());
    for (const auto& s : page.segments) {
        if (s.label.empty()) throw DataError("page " + page.page_id + ": segment " + s.id + " has no label");
        ids.push_back(index(s.label));
    }
    return ids;
}

// ---------------------------------------------------------------------------
// Validation

namespace {

// Union-find over segment indices.
struct DisjointSets {
    std::vector<std::size_t> parent;
    explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    bool unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        parent[a] = b;
        return true;
    }
};

}  // namespace

void check_forest(const Page& page) {
    DisjointSets sets(page.size());
    const auto parents = page.parent_indices();
    for (std::size_t i = 0; i < parents.size(); ++i) {
        if (!parents[i]) continue;
        if (!sets.unite(i, *parents[i]))
            throw StructuralError("page " + page.page_id + ": cycle in parent links through segment " +
                                  page.segments[i].id);
    }
}

void validate_page(const Page& page, const IngestOptions& opts) {
    const std::string where = "page " + page.page_id;
    if (page.segments.empty()) throw DataError(where + ": no segments");
    if (!(page.width > 0) || !(page.height > 0)) throw DataError(where + ": width and height must be positive");
    std::set<std::string> ids;
    for (const auto& s : page.segments) {
        if (!ids.insert(s.id).second) throw DataError(where + ": duplicate segment id " + s.id);
    }
    for (const auto& s : page.segments) {
        const std::string seg = where + ", segment " + s.id;
        if (!s.bbox.valid()) throw DataError(seg + ": bbox must satisfy x1 < x2 and y1 < y2");
        if (s.bbox.x1 < 0 || s.bbox.y1 < 0 || s.bbox.x2 > page.width || s.bbox.y2 > page.height)
            throw DataError(seg + ": bbox outside page bounds");
        if (s.char_count < 0) throw DataError(seg + ": negative char_count");
        if (s.parent_id) {
            if (*s.parent_id == s.id) throw StructuralError(seg + ": segment is its own parent");
            if (!ids.count(*s.parent_id)) throw StructuralError(seg + ": unknown parent " + *s.parent_id);
        }
        if (s.semantic_vec && static_cast<int>(s.semantic_vec->size()) != opts.semantic_dim)
            throw DataError(seg + ": semantic_vec length " + std::to_string(s.semantic_vec->size()) + " != " +
                            std::to_string(opts.semantic_dim));
        if (s.appearance_vec && static_cast<int>(s.appearance_vec->size()) != opts.appearance_dim)
            throw DataError(seg + ": appearance_vec length " + std::to_string(s.appearance_vec->size()) + " != " +
                            std::to_string(opts.appearance_dim));
    }
    check_forest(page);
}

// ---------------------------------------------------------------------------
// JSON

namespace {

const json& field(const json& obj, const char* name, std::size_t line, const std::string& path) {
    auto it = obj.find(name);
    if (it == obj.end()) throw ParseError(line, path + name, "missing");
    return *it;
}

double number(const json& v, std::size_t line, const std::string& path) {
    if (!v.is_number()) throw ParseError(line, path, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ParseError(line, path, "non-finite number");
    return d;
}

std::string string_value(const json& v, std::size_t line, const std::string& path) {
    if (!v.is_string()) throw ParseError(line, path, "expected a string");
    return v.get<std::string>();
}

std::optional<std::vector<double>> read_vector(const json& v, std::size_t line, const std::string& path,
                                               const std::filesystem::path& base_dir, int expected_dim) {
    if (v.is_null()) return std::nullopt;
    std::vector<double> out;
    if (v.is_array()) {
        out.reserve(v.size());
        for (std::size_t k = 0; k < v.size(); ++k) out.push_back(number(v[k], line, path + "[" + std::to_string(k) + "]"));
    } else if (v.is_object()) {
        // Sidecar reference: raw little-endian float64 array, offset in elements.
        const auto file = string_value(field(v, "sidecar", line, path + "."), line, path + ".sidecar");
        const auto& off_json = field(v, "offset", line, path + ".");
        if (!off_json.is_number_unsigned() && !off_json.is_number_integer())
            throw ParseError(line, path + ".offset", "expected a nonnegative integer");
        const auto offset = off_json.get<std::int64_t>();
        if (offset < 0) throw ParseError(line, path + ".offset", "expected a nonnegative integer");
        std::ifstream in(base_dir / file, std::ios::binary);
        if (!in) throw ParseError(line, path + ".sidecar", "cannot open " + (base_dir / file).string());
        out.resize(static_cast<std::size_t>(expected_dim));
        in.seekg(offset * static_cast<std::int64_t>(sizeof(double)));
        in.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(out.size() * sizeof(double)));
        if (!in) throw ParseError(line, path + ".sidecar", "sidecar too short for offset " + std::to_string(offset));
        for (double d : out)
            if (!std::isfinite(d)) throw ParseError(line, path, "non-finite value in sidecar");
    } else {
        throw ParseError(line, path, "expected an array, a sidecar reference or null");
    }
    if (static_cast<int>(out.size()) != expected_dim)
        throw ParseError(line, path, "expected length " + std::to_string(expected_dim) + ", got " +
                                         std::to_string(out.size()));
    return out;
}

Segment segment_from_json(const json& j, std::size_t line, const std::string& path,
                          const std::filesystem::path& base_dir, const IngestOptions& opts) {
    if (!j.is_object()) throw ParseError(line, path, "expected an object");
    Segment s;
    s.id = string_value(field(j, "id", line, path + "."), line, path + ".id");

    const auto& bb = field(j, "bbox", line, path + ".");
    const std::string bpath = path + ".bbox";
    if (!bb.is_array() || bb.size() != 4) throw ParseError(line, bpath, "expected [x1, y1, x2, y2]");
    s.bbox = {number(bb[0], line, bpath), number(bb[1], line, bpath), number(bb[2], line, bpath),
              number(bb[3], line, bpath)};
    if (!(s.bbox.x1 < s.bbox.x2)) throw ParseError(line, bpath, "x1 must be < x2");
    if (!(s.bbox.y1 < s.bbox.y2)) throw ParseError(line, bpath, "y1 must be < y2");

    const auto& cc = field(j, "char_count", line, path + ".");
    if (!cc.is_number_integer() || cc.get<std::int64_t>() < 0)
        throw ParseError(line, path + ".char_count", "expected a nonnegative integer");
    s.char_count = cc.get<std::int64_t>();

    const auto& lab = field(j, "label", line, path + ".");
    if (!lab.is_null()) {
        s.label = string_value(lab, line, path + ".label");
        if (s.label.empty()) throw ParseError(line, path + ".label", "empty label (use null for unlabeled)");
    }

    if (auto it = j.find("parse_l1"); it != j.end() && !it->is_null())
        s.parse_l1 = string_value(*it, line, path + ".parse_l1");
    if (auto it = j.find("parse_l2"); it != j.end() && !it->is_null()) {
        if (!it->is_array()) throw ParseError(line, path + ".parse_l2", "expected an array of strings or null");
        std::vector<std::string> syms;
        for (const auto& e : *it) syms.push_back(string_value(e, line, path + ".parse_l2"));
        s.parse_l2 = std::move(syms);
    }
    if (auto it = j.find("parent_id"); it != j.end() && !it->is_null())
        s.parent_id = string_value(*it, line, path + ".parent_id");
    if (auto it = j.find("semantic_vec"); it != j.end())
        s.semantic_vec = read_vector(*it, line, path + ".semantic_vec", base_dir, opts.semantic_dim);
    if (auto it = j.find("appearance_vec"); it != j.end())
        s.appearance_vec = read_vector(*it, line, path + ".appearance_vec", base_dir, opts.appearance_dim);
    if (auto it = j.find("text"); it != j.end() && !it->is_null()) s.text = string_value(*it, line, path + ".text");
    return s;
}

}  // namespace

Page page_from_json(const json& j, std::size_t line, const std::filesystem::path& base_dir,
                    const IngestOptions& opts) {
    if (!j.is_object()) throw ParseError(line, "<record>", "expected a JSON object");
    Page p;
    p.page_id = string_value(field(j, "page_id", line, ""), line, "page_id");
    p.width = number(field(j, "width", line, ""), line, "width");
    p.height = number(field(j, "height", line, ""), line, "height");
    if (auto it = j.find("column_mode"); it != j.end() && !it->is_null()) {
        try {
            p.column_mode = column_mode_from_string(string_value(*it, line, "column_mode"));
        } catch (const ParseError&) {
            throw;
        } catch (const DataError& e) {
            throw ParseError(line, "column_mode", e.what());
        }
    }
    const auto& segs = field(j, "segments", line, "");
    if (!segs.is_array()) throw ParseError(line, "segments", "expected an array");
    for (std::size_t k = 0; k < segs.size(); ++k)
        p.segments.push_back(segment_from_json(segs[k], line, "segments[" + std::to_string(k) + "]", base_dir, opts));
    try {
        validate_page(p, opts);
    } catch (const StructuralError& e) {
        throw StructuralError("line " + std::to_string(line) + ": " + e.what());
    } catch (const DataError& e) {
        throw ParseError(line, "segments", e.what());
    }
    return p;
}

json page_to_json(const Page& page) {
    json segs = json::array();
    for (const auto& s : page.segments) {
        json o;
        o["id"] = s.id;
        o["bbox"] = {s.bbox.x1, s.bbox.y1, s.bbox.x2, s.bbox.y2};
        o["char_count"] = s.char_count;
        o["label"] = s.label.empty() ? json(nullptr) : json(s.label);
        o["parse_l1"] = s.parse_l1 ? json(*s.parse_l1) : json(nullptr);
        o["parse_l2"] = s.parse_l2 ? json(*s.parse_l2) : json(nullptr);
        o["parent_id"] = s.parent_id ? json(*s.parent_id) : json(nullptr);
        o["semantic_vec"] = s.semantic_vec ? json(*s.semantic_vec) : json(nullptr);
        o["appearance_vec"] = s.appearance_vec ? json(*s.appearance_vec) : json(nullptr);
        if (s.text) o["text"] = *s.text;
        segs.push_back(std::move(o));
    }
    return json{{"page_id", page.page_id},
                {"width", page.width},
                {"height", page.height},
                {"column_mode", to_string(page.column_mode)},
                {"segments", std::move(segs)}};
}

std::vector<Page> ingest_canonical(const std::filesystem::path& path, const IngestOptions& opts) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::vector<Page> pages;
    std::set<std::string> page_ids;
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
        ++line;
        if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(text);
        } catch (const json::parse_error& e) {
            throw ParseError(line, "<record>", std::string("invalid JSON: ") + e.what());
        }
        Page p = page_from_json(j, line, path.parent_path(), opts);
        if (!page_ids.insert(p.page_id).second)
            throw ParseError(line, "page_id", "duplicate page id " + p.page_id);
        pages.push_back(std::move(p));
    }
    return pages;
}

void write_canonical(const std::filesystem::path& path, const std::vector<Page>& pages) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    for (const auto& p : pages) out << page_to_json(p).dump() << '\n';
    if (!out) throw DataError("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// Fallback featurizer

std::vector<double> hash_featurize(const Segment& seg, int dim, std::uint64_t seed) {
    require(dim > 0, "hash_featurize: dim must be positive");
    std::string key;
    if (seg.text) {
        key = "text:" + *seg.text;
    } else {
        std::ostringstream os;
        os.precision(17);
        os << "seg:" << seg.id << '|' << seg.bbox.x1 << ',' << seg.bbox.y1 << ',' << seg.bbox.x2 << ','
           << seg.bbox.y2 << '|' << seg.char_count << '|' << seg.parse_l1.value_or("");
        if (seg.parse_l2)
            for (const auto& s : *seg.parse_l2) os << ',' << s;
        key = os.str();
    }
    const std::uint64_t base = splitmix64(fnv1a64(key) ^ splitmix64(seed) ^ (static_cast<std::uint64_t>(dim) << 32));
    std::vector<double> v(static_cast<std::size_t>(dim));
    double norm2 = 0.0;
    for (int i = 0; i < dim; ++i) {
        const std::uint64_t r = splitmix64(base + static_cast<std::uint64_t>(i) * 0x9e3779b97f4a7c15ULL);
        const double u = static_cast<double>(r >> 11) * 0x1.0p-53;  // [0, 1)
        v[static_cast<std::size_t>(i)] = 2.0 * u - 1.0;
        norm2 += v[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(i)];
    }
    if (norm2 == 0.0) {
        v[0] = 1.0;
        return v;
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& x : v) x *= inv;
    return v;
}

namespace {
constexpr std::uint64_t kAppearanceStream = 0xa9915e5a9915e5a9ULL;
}

std::vector<double> semantic_features(const Segment& seg, const FeatureConfig& cfg) {
    if (seg.semantic_vec) return *seg.semantic_vec;
    if (!cfg.fallback) throw DataError("segment " + seg.id + ": missing semantic_vec and fallback featurizer disabled");
    return hash_featurize(seg, cfg.semantic_dim, cfg.seed);
}

std::vector<double> appearance_features(const Segment& seg, const FeatureConfig& cfg) {
    if (seg.appearance_vec) return *seg.appearance_vec;
    if (!cfg.fallback)
        throw DataError("segment " + seg.id + ": missing appearance_vec and fallback featurizer disabled");
    return hash_featurize(seg, cfg.appearance_dim, cfg.seed ^ kAppearanceStream);
}

}  // namespace docgcn::corpus
