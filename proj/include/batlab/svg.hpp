#pragma once

#include <string>

#include "batlab/csv.hpp"

namespace batlab {

/// Deterministic SVG rendering of the standard CSV outputs: fixed viewbox,
/// fixed precision, no timestamps. kinds: "segments-overlay" (columns
/// anchor_x, anchor_y, dir_x, dir_y, length), "semilog-decay" (n, value),
/// "mass-vs-logN" (N, mass).
std::string render_svg(const ParsedCsv& csv, const std::string& kind);

}  // namespace batlab
