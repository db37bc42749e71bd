#ifndef DOCGCN_SYNTHETIC_HPP
#define DOCGCN_SYNTHETIC_HPP

#include "docgcn/corpus.hpp"

#include <vector>

namespace docgcn::synthetic {

/// Generated layout corpus with four classes. Each segment's class fixes a
/// density bucket, a horizontal placement, a parse pattern and a text
/// vocabulary; with probability `corruption` exactly one of the density,
/// parse and text cues is swapped for another class's, so no single cue is
/// reliable while a majority of cues always is.
struct SyntheticConfig {
    std::size_t pages = 200;
    int min_segments = 6;
    int max_segments = 12;
    double corruption = 0.5;
    std::uint64_t seed = 0;
};

/// "List", "Table", "Text", "Title".
corpus::LabelSet labels();

std::vector<corpus::Page> generate(const SyntheticConfig& cfg);

/// Pages where every segment but the first has the segment directly above it
/// as parent; used for relation-model checks.
std::vector<corpus::Page> generate_chains(std::size_t pages, int min_segments, int max_segments, std::uint64_t seed);

}  // namespace docgcn::synthetic

#endif  // DOCGCN_SYNTHETIC_HPP
