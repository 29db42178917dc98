#pragma once

#include <string>

#include "hslab/csv.hpp"

namespace hslab::cli {

// Log-log chart of mean_err and predicted against n, with the fitted slope
// in the legend. Needs the columns n, mean_err and predicted with positive
// values; stderr is drawn as error bars when present. The output depends
// only on the table, so equal inputs give equal bytes.
std::string render_rate_svg(const CsvTable& table);

// Reads a report CSV, renders it and writes the SVG atomically. Returns the
// output path, which defaults to the report path with an .svg extension.
std::string plot_report(const std::string& report_path, const std::string& out_path = "");

}  // namespace hslab::cli
