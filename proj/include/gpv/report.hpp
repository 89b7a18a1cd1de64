#pragma once

#include <span>
#include <string>
#include <string_view>

#include "gpv/analysis.hpp"
#include "gpv/core.hpp"

namespace gpv::report {

/// Escapes &, <, >, " and ' for XML text and attribute values.
std::string xml_escape(std::string_view s);

/// Diverging blue-white-red colour for v in [-1, 1] (clamped); grey for absent.
std::string diverging_color(std::optional<double> v);

/// One <rect class="cell"> per matrix cell. Correlation matrices use the fixed [-1, 1]
/// diverging scale; distance matrices map [0, 2] onto the same ramp.
std::string heatmap_svg(const analysis::Matrix& m, std::string_view title);

/// One <circle class="point"> per embedded label.
std::string scatter_svg(const analysis::Embedding& e, std::string_view title);

/// One <polygon class="series"> per vector over the shared value axes; absent
/// entries plot at the range minimum. Requires vectors of one system.
std::string radar_svg(std::span<const ValueVector> vectors, std::string_view title);

}  // namespace gpv::report
