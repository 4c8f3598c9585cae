#pragma once

#include <string>
#include <vector>

#include "stdlab/csvio.hpp"

namespace stdlab {

// Hand-emitted SVG, a pure function of the input table (golden-file friendly).
std::string render_scatter_svg(const CsvTable& table, const std::string& x_col,
                               const std::string& y_col, const std::string& color_col = "");

std::string render_line_svg(const CsvTable& table, const std::string& x_col,
                            const std::vector<std::string>& y_cols);

}  // namespace stdlab
