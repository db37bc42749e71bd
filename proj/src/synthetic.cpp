#include "docgcn/synthetic.hpp"

#include <array>
#include <cmath>
#include <fmt/format.h>
#include <string>

namespace docgcn::synthetic {

namespace {

struct ClassProfile {
    const char* name;
    double density;     // characters per unit area
    double x1, x2;      // horizontal extent on a 100-wide page
    double height;
    const char* parse_l1;
    std::vector<std::string> parse_l2;
    std::array<const char*, 6> vocabulary;
    bool links_up;      // takes the segment above as parent
};

const std::array<ClassProfile, 4>& profiles() {
    static const std::array<ClassProfile, 4> p{{
        {"Title", 0.15, 20, 80, 6, "NP", {"NP", "PP"},
         {"Annual Report", "Introduction", "Summary of Findings", "Methods", "Quarterly Review", "Appendix"}, false},
        {"Text", 0.6, 8, 92, 14, "S", {"NP", "VP"},
         {"the results show a steady increase", "we describe the procedure below", "data were collected weekly",
          "this section reviews prior work", "the committee approved the plan", "costs remained within budget"},
         true},
        {"List", 0.35, 15, 75, 10, "LST", {"LST", "NP"},
         {"first item", "second item", "bullet point", "next step", "numbered entry", "final remark"}, true},
        {"Table", 1.2, 5, 95, 18, "FRAG", {"NP", "NP", "NP"},
         {"Q1 Q2 Q3 Q4", "total 1024 512", "rate 0.4 0.7", "year 2019 2020", "id name value", "min max mean"},
         false},
    }};
    return p;
}

}  // namespace

corpus::LabelSet labels() { return corpus::LabelSet({"List", "Table", "Text", "Title"}); }

std::vector<corpus::Page> generate(const SyntheticConfig& cfg) {
    require(cfg.min_segments >= 1 && cfg.max_segments >= cfg.min_segments, "synthetic: bad segment range");
    Rng rng(cfg.seed);
    const auto& prof = profiles();
    const double width = 100.0, gap = 2.0;
    std::vector<corpus::Page> pages;
    for (std::size_t p = 0; p < cfg.pages; ++p) {
        corpus::Page page;
        page.page_id = fmt::format("synth-{:04d}", p);
        page.width = width;
        page.column_mode = corpus::ColumnMode::single;
        const int n = cfg.min_segments + static_cast<int>(rng.index(static_cast<std::size_t>(cfg.max_segments - cfg.min_segments + 1)));
        double y = 4.0;
        for (int i = 0; i < n; ++i) {
            const auto cls = rng.index(prof.size());
            // Cue classes: 0 density, 1 parse, 2 text. At most one is replaced.
            std::array<std::size_t, 3> cue{cls, cls, cls};
            if (rng.uniform() < cfg.corruption) {
                const auto which = rng.index(3);
                cue[which] = (cls + 1 + rng.index(prof.size() - 1)) % prof.size();
            }
            const auto& c = prof[cls];
            corpus::Segment s;
            s.id = fmt::format("s{}", i);
            s.label = c.name;
            const double jitter = rng.uniform(-2.0, 2.0);
            const double h = c.height * rng.uniform(0.8, 1.2);
            s.bbox = {c.x1 + jitter, y, c.x2 + jitter, y + h};
            const double ratio = prof[cue[0]].density * rng.uniform(0.9, 1.1);
            s.char_count = std::max<std::int64_t>(1, std::llround(ratio * s.bbox.area()));
            s.parse_l1 = prof[cue[1]].parse_l1;
            s.parse_l2 = prof[cue[1]].parse_l2;
            s.text = prof[cue[2]].vocabulary[rng.index(6)];
            if (c.links_up && i > 0) s.parent_id = fmt::format("s{}", i - 1);
            page.segments.push_back(std::move(s));
            y += h + gap;
        }
        page.height = y + 4.0;
        corpus::validate_page(page);
        pages.push_back(std::move(page));
    }
    return pages;
}

std::vector<corpus::Page> generate_chains(std::size_t count, int min_segments, int max_segments, std::uint64_t seed) {
    SyntheticConfig cfg;
    cfg.pages = count;
    cfg.min_segments = min_segments;
    cfg.max_segments = max_segments;
    cfg.seed = seed;
    cfg.corruption = 0.0;
    auto pages = generate(cfg);
    for (auto& page : pages)
        for (std::size_t i = 0; i < page.segments.size(); ++i) {
            auto& s = page.segments[i];
            s.parent_id.reset();
            if (i > 0) s.parent_id = page.segments[i - 1].id;
        }
    return pages;
}

}  // namespace docgcn::synthetic
