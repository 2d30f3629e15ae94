#pragma once

// GridFunction serialization: CSV columns (x, value) and a compact binary dump
// (uint64 N, then N IEEE-754 doubles, all little-endian).

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "gtlab/errors.hpp"
#include "gtlab/torus_field.hpp"

namespace gtlab {

inline void write_csv(std::ostream& os, const GridFunction& f, const std::string& value_name = "value") {
  os << "x," << value_name << '\n';
  os << std::setprecision(17);
  for (std::size_t j = 0; j < f.size(); ++j) os << f.x(j) << ',' << f[j] << '\n';
}

/// Reads (x, value) rows; a non-numeric first line is treated as a header.
/// The x column must match the uniform grid 2πj/N.
inline GridFunction read_csv(std::istream& is) {
  std::vector<double> xs;
  std::vector<double> vals;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string xs_tok;
    std::string v_tok;
    if (!std::getline(ls, xs_tok, ',') || !std::getline(ls, v_tok, ',')) {
      throw ValidationError("grid CSV line " + std::to_string(lineno) + ": expected two columns");
    }
    try {
      std::size_t pos = 0;
      const double x = std::stod(xs_tok, &pos);
      const double v = std::stod(v_tok);
      xs.push_back(x);
      vals.push_back(v);
    } catch (const std::invalid_argument&) {
      if (xs.empty()) continue;  // header
      throw ValidationError("grid CSV line " + std::to_string(lineno) + ": not a number");
    }
  }
  GridFunction f(vals);
  for (std::size_t j = 0; j < xs.size(); ++j) {
    if (std::abs(xs[j] - f.x(j)) > 1e-9) {
      throw ValidationError("grid CSV: x column is not the uniform grid 2πj/N at row " +
                            std::to_string(j));
    }
  }
  return f;
}

namespace detail {

template <typename U>
void put_le(std::ostream& os, U value) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(U)>>(value);
    std::reverse(bytes.begin(), bytes.end());
    os.write(reinterpret_cast<const char*>(bytes.data()), sizeof(U));
  } else {
    os.write(reinterpret_cast<const char*>(&value), sizeof(U));
  }
}

template <typename U>
U get_le(std::istream& is) {
  std::array<unsigned char, sizeof(U)> bytes{};
  if (!is.read(reinterpret_cast<char*>(bytes.data()), sizeof(U))) {
    throw ValidationError("grid binary: truncated input");
  }
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<U>(bytes);
}

}  // namespace detail

inline void write_binary(std::ostream& os, const GridFunction& f) {
  detail::put_le<std::uint64_t>(os, f.size());
  for (const double v : f) detail::put_le<double>(os, v);
}

inline GridFunction read_binary(std::istream& is) {
  const auto n = detail::get_le<std::uint64_t>(is);
  if (n > (std::uint64_t{1} << 32)) throw ValidationError("grid binary: implausible N");
  std::vector<double> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = detail::get_le<double>(is);
  return GridFunction(std::move(v));
}

}  // namespace gtlab
