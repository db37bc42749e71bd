#ifndef DOCGCN_RENDER_HPP
#define DOCGCN_RENDER_HPP

#include "docgcn/corpus.hpp"

#include <string>
#include <vector>

namespace docgcn::render {

/// Stable fill colour for a label name ("#rrggbb").
std::string label_color(const std::string& label);

/// SVG of a page with one coloured rectangle and caption per segment.
/// `labels` gives the caption per segment (e.g. predictions); when empty the
/// segments' own labels are used.
std::string page_svg(const corpus::Page& page, const std::vector<std::string>& labels = {});

}  // namespace docgcn::render

#endif  // DOCGCN_RENDER_HPP
