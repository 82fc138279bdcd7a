#pragma once

#include <iosfwd>
#include <span>
#include <string>

#include "patchy/grid.hpp"

namespace patchy {

// Solution CSV: header `x,y,u`, one row per node in index order, 17
// significant digits so a re-read reproduces the doubles bit for bit.
void write_field_csv(std::ostream& out, const ScalarField& field);
void write_field_csv(const std::string& path, const ScalarField& field);

// Reads a field written by write_field_csv back onto `grid`. Throws IoError on
// malformed input or a row count that does not match the grid.
ScalarField read_field_csv(std::istream& in, const Grid& grid);
ScalarField read_field_csv(const std::string& path, const Grid& grid);

// Patch map CSV: header `x,y,patch`.
void write_patch_csv(std::ostream& out, const Grid& grid, std::span<const int> labels);
void write_patch_csv(const std::string& path, const Grid& grid, std::span<const int> labels);

// Binary PPM heatmaps. Values at or above `clip` (e.g. the BIG sentinel) are
// drawn black.
void write_field_ppm(const std::string& path, const ScalarField& field, double clip);
void write_patch_ppm(const std::string& path, const Grid& grid, std::span<const int> labels);

}  // namespace patchy
