#include "patchy/io.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "patchy/error.hpp"

namespace patchy {

namespace {

std::string fmt17(double v) {
  std::array<char, 40> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", v);
  return buf.data();
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw IoError("cannot open " + path + " for writing");
  return out;
}

// Maps t in [0,1] onto a blue-white-red ramp.
std::array<unsigned char, 3> ramp(double t) {
  t = std::clamp(t, 0.0, 1.0);
  auto ch = [](double v) { return static_cast<unsigned char>(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5); };
  if (t < 0.5) {
    const double s = t / 0.5;
    return {ch(s), ch(s), 255};
  }
  const double s = (t - 0.5) / 0.5;
  return {255, ch(1.0 - s), ch(1.0 - s)};
}

constexpr std::array<std::array<unsigned char, 3>, 8> kPalette{{
    {228, 26, 28},
    {55, 126, 184},
    {77, 175, 74},
    {152, 78, 163},
    {255, 127, 0},
    {255, 255, 51},
    {166, 86, 40},
    {247, 129, 191},
}};

}  // namespace

void write_field_csv(std::ostream& out, const ScalarField& field) {
  const Grid& g = field.grid();
  out << "x,y,u\n";
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vec2 p = g.position(i);
    out << fmt17(p.x) << ',' << fmt17(p.y) << ',' << fmt17(field[i]) << '\n';
  }
  if (!out) throw IoError("failed writing field CSV");
}

void write_field_csv(const std::string& path, const ScalarField& field) {
  auto out = open_out(path);
  write_field_csv(out, field);
}

ScalarField read_field_csv(std::istream& in, const Grid& grid) {
  std::string line;
  if (!std::getline(in, line) || line != "x,y,u") throw IoError("field CSV: missing `x,y,u` header");
  std::vector<double> values;
  values.reserve(grid.size());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::array<double, 3> cols{};
    for (std::size_t k = 0; k < 3; ++k) {
      std::string cell;
      if (!std::getline(row, cell, ',')) throw IoError("field CSV: short row: " + line);
      try {
        std::size_t used = 0;
        cols[k] = std::stod(cell, &used);
        if (used != cell.size()) throw IoError("field CSV: trailing characters in " + cell);
      } catch (const std::logic_error&) {
        throw IoError("field CSV: not a number: " + cell);
      }
    }
    values.push_back(cols[2]);
  }
  if (values.size() != grid.size()) {
    throw IoError("field CSV: expected " + std::to_string(grid.size()) + " rows, got " +
                  std::to_string(values.size()));
  }
  return ScalarField(grid, std::move(values));
}

ScalarField read_field_csv(const std::string& path, const Grid& grid) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return read_field_csv(in, grid);
}

void write_patch_csv(std::ostream& out, const Grid& grid, std::span<const int> labels) {
  if (labels.size() != grid.size()) throw UsageError("patch labels do not match grid size");
  out << "x,y,patch\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Vec2 p = grid.position(i);
    out << fmt17(p.x) << ',' << fmt17(p.y) << ',' << labels[i] << '\n';
  }
  if (!out) throw IoError("failed writing patch CSV");
}

void write_patch_csv(const std::string& path, const Grid& grid, std::span<const int> labels) {
  auto out = open_out(path);
  write_patch_csv(out, grid, labels);
}

void write_field_ppm(const std::string& path, const ScalarField& field, double clip) {
  const Grid& g = field.grid();
  double lo = 0.0;
  double hi = 0.0;
  bool any = false;
  for (double v : field.values()) {
    if (!(v < clip)) continue;
    lo = any ? std::min(lo, v) : v;
    hi = any ? std::max(hi, v) : v;
    any = true;
  }
  const double span = hi > lo ? hi - lo : 1.0;

  auto out = open_out(path, std::ios::out | std::ios::binary);
  out << "P6\n" << g.n() << ' ' << g.n() << "\n255\n";
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double v = field[i];
    const auto px = v < clip ? ramp((v - lo) / span) : std::array<unsigned char, 3>{0, 0, 0};
    out.write(reinterpret_cast<const char*>(px.data()), 3);
  }
  if (!out) throw IoError("failed writing " + path);
}

void write_patch_ppm(const std::string& path, const Grid& grid, std::span<const int> labels) {
  if (labels.size() != grid.size()) throw UsageError("patch labels do not match grid size");
  auto out = open_out(path, std::ios::out | std::ios::binary);
  out << "P6\n" << grid.n() << ' ' << grid.n() << "\n255\n";
  for (int label : labels) {
    const auto& px = label < 0 ? std::array<unsigned char, 3>{0, 0, 0}
                               : kPalette[static_cast<std::size_t>(label) % kPalette.size()];
    out.write(reinterpret_cast<const char*>(px.data()), 3);
  }
  if (!out) throw IoError("failed writing " + path);
}

}  // namespace patchy
