#include "docgcn/render.hpp"

#include <fmt/format.h>

#include <array>

namespace docgcn::render {

namespace {

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string label_color(const std::string& label) {
    static constexpr std::array<const char*, 10> palette{"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                                         "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    return palette[fnv1a64(label) % palette.size()];
}

std::string page_svg(const corpus::Page& page, const std::vector<std::string>& labels) {
    require(labels.empty() || labels.size() == page.size(), "page_svg: one label per segment");
    const double font = std::max(6.0, page.height / 90.0);
    std::string out = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\">\n"
        "<rect width=\"{0}\" height=\"{1}\" fill=\"white\" stroke=\"#cccccc\"/>\n",
        page.width, page.height);
    for (std::size_t i = 0; i < page.size(); ++i) {
        const auto& s = page.segments[i];
        const std::string& label = labels.empty() ? s.label : labels[i];
        const auto color = label_color(label);
        out += fmt::format(
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\" fill-opacity=\"0.25\" stroke=\"{}\"/>\n",
            s.bbox.x1, s.bbox.y1, s.bbox.width(), s.bbox.height(), color, color);
        out += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"{}\" fill=\"{}\">{}</text>\n", s.bbox.x1 + 1,
                           s.bbox.y1 + font, font, color, escape(label.empty() ? s.id : label));
    }
    out += "</svg>\n";
    return out;
}

}  // namespace docgcn::render
