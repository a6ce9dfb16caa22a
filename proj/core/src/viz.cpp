#include "sip/viz.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <stdexcept>

namespace sip {

namespace {

std::vector<LabeledSequences> prepare(std::vector<LabeledSequences> rows, int max_length) {
    if (max_length > 0) {
        std::erase_if(rows, [max_length](const LabeledSequences& r) {
            return static_cast<int>(r.subtasks.size()) > max_length;
        });
    }
    std::sort(rows.begin(), rows.end(), [](const LabeledSequences& a, const LabeledSequences& b) {
        if (a.subtasks != b.subtasks) return a.subtasks < b.subtasks;
        return a.id < b.id;
    });
    return rows;
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

}  // namespace

void write_viz_csv(const std::string& path, std::vector<LabeledSequences> rows, int max_length) {
    rows = prepare(std::move(rows), max_length);
    std::size_t slots = 0;
    for (const auto& r : rows) slots = std::max(slots, r.subtasks.size());

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write visualization CSV: " + path);
    out << "id";
    for (std::size_t s = 1; s <= slots; ++s) out << ",q" << s;
    out << '\n';
    for (const auto& r : rows) {
        out << csv_escape(r.id);
        for (std::size_t s = 0; s < slots; ++s) {
            out << ',';
            if (s < r.subtasks.size()) out << csv_escape(r.subtasks[s]);
        }
        out << '\n';
    }
}

void write_viz_svg(const std::string& path, std::vector<LabeledSequences> rows, int max_length) {
    rows = prepare(std::move(rows), max_length);

    static const char* kPalette[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
                                     "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac"};
    constexpr int kPaletteSize = 10;

    std::map<std::string, int> color_of;
    for (const auto& r : rows) {
        for (const auto& q : r.subtasks) {
            if (!color_of.count(q)) {
                const int next = static_cast<int>(color_of.size());
                color_of[q] = next % kPaletteSize;
            }
        }
    }

    std::size_t slots = 0;
    for (const auto& r : rows) slots = std::max(slots, r.subtasks.size());

    constexpr int cell_w = 18, cell_h = 3, legend_h = 22, pad = 6;
    const int width = pad * 2 + std::max<int>(static_cast<int>(slots) * cell_w, 200);
    const int height = legend_h + pad * 2 + static_cast<int>(rows.size()) * cell_h;

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write visualization SVG: " + path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\">\n";

    int lx = pad;
    for (const auto& [label, color] : color_of) {
        out << "  <rect x=\"" << lx << "\" y=\"" << pad << "\" width=\"10\" height=\"10\" fill=\""
            << kPalette[color] << "\"/>\n";
        out << "  <text x=\"" << lx + 13 << "\" y=\"" << pad + 9 << "\" font-size=\"9\">" << label
            << "</text>\n";
        lx += 16 + static_cast<int>(label.size()) * 6;
    }

    int y = legend_h + pad;
    for (const auto& r : rows) {
        int x = pad;
        for (const auto& q : r.subtasks) {
            out << "  <rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell_w
                << "\" height=\"" << cell_h << "\" fill=\"" << kPalette[color_of[q]] << "\"/>\n";
            x += cell_w;
        }
        y += cell_h;
    }
    out << "</svg>\n";
}

}  // namespace sip
