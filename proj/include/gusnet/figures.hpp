#pragma once

#include <filesystem>
#include <string>

#include "gusnet/analysis.hpp"

namespace gusnet {

std::string pie_svg(const PieChart& chart);
std::string scatter_svg(const BabeComparison& cmp, const std::string& title);

// Raster versions without text.
void write_pie_png(const std::filesystem::path& path, const PieChart& chart, int size = 400);
void write_scatter_png(const std::filesystem::path& path, const BabeComparison& cmp,
                       int size = 400);

void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace gusnet
