#ifndef DOCGCN_CORPUS_HPP
#define DOCGCN_CORPUS_HPP

#include "docgcn/common.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace docgcn::corpus {

inline constexpr int kSemanticDim = 768;
inline constexpr int kAppearanceDim = 2048;

/// Axis-aligned box in page pixels; (x1, y1) top-left, (x2, y2) bottom-right.
struct BBox {
    double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

    double width() const { return x2 - x1; }
    double height() const { return y2 - y1; }
    double area() const { return width() * height(); }
    bool valid() const { return x1 < x2 && y1 < y2; }
    friend bool operator==(const BBox&, const BBox&) = default;
};

struct Segment {
    std::string id;
    BBox bbox;
    std::int64_t char_count = 0;
    std::string label;  // empty when unlabeled
    std::optional<std::string> parse_l1;
    std::optional<std::vector<std::string>> parse_l2;
    std::optional<std::string> parent_id;
    std::optional<std::vector<double>> semantic_vec;
    std::optional<std::vector<double>> appearance_vec;
    std::optional<std::string> text;

    friend bool operator==(const Segment&, const Segment&) = default;
};

enum class ColumnMode { single, two_column, automatic };

std::string to_string(ColumnMode mode);
ColumnMode column_mode_from_string(const std::string& s);

struct Page {
    std::string page_id;
    double width = 0, height = 0;
    ColumnMode column_mode = ColumnMode::automatic;
    std::vector<Segment> segments;

    std::size_t size() const { return segments.size(); }
    /// Index of the segment with the given id, if any.
    std::optional<std::size_t> index_of(const std::string& id) const;
    /// Parent index per segment (nullopt for roots). Assumes a validated page.
    std::vector<std::optional<std::size_t>> parent_indices() const;
    bool has_parent_links() const;

    friend bool operator==(const Page&, const Page&) = default;
};

/// Ordered category names; ids are positions in this list.
class LabelSet {
public:
    LabelSet() = default;
    explicit LabelSet(std::vector<std::string> names);

    /// Sorted unique non-empty labels found in the pages.
    static LabelSet from_pages(const std::vector<Page>& pages);
    static LabelSet funsd();

    std::size_t size() const { return names_.size(); }
    const std::vector<std::string>& names() const { return names_; }
    const std::string& name(int id) const { return names_.at(static_cast<std::size_t>(id)); }
    std::optional<int> find(const std::string& name) const;
    /// Like find, but throws DataError listing the valid labels.
    int index(const std::string& name) const;
    /// Label ids for every segment of a page.
    std::vector<int> encode(const Page& page) const;

    friend bool operator==(const LabelSet&, const LabelSet&) = default;

private:
    std::vector<std::string> names_;
};

struct IngestOptions {
    int semantic_dim = kSemanticDim;
    int appearance_dim = kAppearanceDim;
};

/// Checks every page invariant; throws StructuralError/DataError on violation.
void validate_page(const Page& page, const IngestOptions& opts = {});

/// Throws StructuralError naming the page if parent links contain a cycle.
void check_forest(const Page& page);

/// Parses one canonical JSON record. `line` is used in error messages;
/// `base_dir` resolves sidecar vector references.
Page page_from_json(const nlohmann::json& j, std::size_t line, const std::filesystem::path& base_dir = {},
                    const IngestOptions& opts = {});
nlohmann::json page_to_json(const Page& page);

/// Reads a JSON Lines file of canonical page records.
std::vector<Page> ingest_canonical(const std::filesystem::path& path, const IngestOptions& opts = {});
void write_canonical(const std::filesystem::path& path, const std::vector<Page>& pages);

/// FUNSD split selector; the adapter reads <dir>/{training,testing}_data/annotations.
enum class FunsdSplit { train, test };

std::vector<Page> ingest_funsd(const std::filesystem::path& dir, FunsdSplit split);

/// Deterministic unit-norm stand-in for pretrained encoder outputs. Depends only
/// on the segment's text (or identity fields when text is absent), seed and dim.
std::vector<double> hash_featurize(const Segment& seg, int dim, std::uint64_t seed);

/// How missing semantic/appearance vectors are filled.
struct FeatureConfig {
    bool fallback = true;
    std::uint64_t seed = 0;
    int semantic_dim = kSemanticDim;
    int appearance_dim = kAppearanceDim;
};

/// Semantic vector of a segment, or the hash fallback. Throws DataError naming
/// the segment when absent and fallback is off.
std::vector<double> semantic_features(const Segment& seg, const FeatureConfig& cfg);
std::vector<double> appearance_features(const Segment& seg, const FeatureConfig& cfg);

}  // namespace docgcn::corpus

#endif  // DOCGCN_CORPUS_HPP
