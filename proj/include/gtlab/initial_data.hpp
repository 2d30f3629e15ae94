#pragma once

// Initial-data presets: single harmonics, seeded random band-limited data, and
// CSV-loaded profiles.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gtlab/errors.hpp"
#include "gtlab/grid_io.hpp"
#include "gtlab/relaxation.hpp"
#include "gtlab/solver.hpp"
#include "gtlab/torus_field.hpp"

namespace gtlab {

/// Σ_{1<=k<=N/8} (a_k cos kx + b_k sin kx) + c with a_k, b_k, c uniform in
/// [-1, 1], amplitudes damped by 1/k so the data stay smooth.
inline GridFunction random_band_limited(std::size_t n, std::mt19937_64& rng, bool with_mean) {
  GridFunction::validate_resolution(n);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  const std::size_t kmax = std::max<std::size_t>(1, n / 8);
  std::vector<double> a(kmax + 1);
  std::vector<double> b(kmax + 1);
  for (std::size_t k = 1; k <= kmax; ++k) {
    a[k] = uni(rng) / static_cast<double>(k);
    b[k] = uni(rng) / static_cast<double>(k);
  }
  const double c = uni(rng);
  return GridFunction::sample(n, [&](double x) {
    double s = with_mean ? c : 0.0;
    for (std::size_t k = 1; k <= kmax; ++k) {
      const double kx = static_cast<double>(k) * x;
      s += a[k] * std::cos(kx) + b[k] * std::sin(kx);
    }
    return s;
  });
}

/// Random macro state: u has its mean removed, v keeps a random mean.
inline MacroState2V random_state_2v(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  GridFunction u = random_band_limited(n, rng, false);
  GridFunction v = random_band_limited(n, rng, true);
  return {u - average(u), v, 0.0};
}

inline MacroState3V random_state_3v(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  GridFunction u1 = random_band_limited(n, rng, false);
  GridFunction u2 = random_band_limited(n, rng, true);
  GridFunction u3 = random_band_limited(n, rng, true);
  return {u1 - average(u1), u2, u3, 0.0};
}

/// Parses one initial profile:
///   zero | const:c | cos:k[,a] | sin:k[,a] | random | file:path.csv
/// "random" draws from rng with a random mean.
inline GridFunction parse_profile(const std::string& spec, std::size_t n, std::mt19937_64& rng) {
  if (spec == "zero") return GridFunction::constant(n, 0.0);
  if (spec == "random") return random_band_limited(n, rng, true);
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw ValidationError("initial data: cannot parse '" + spec + "'");
  const std::string kind = spec.substr(0, colon);
  const std::string args = spec.substr(colon + 1);
  if (kind == "const") return GridFunction::constant(n, detail::parse_number(args, "constant"));
  if (kind == "cos" || kind == "sin") {
    std::vector<double> p;
    std::istringstream is(args);
    std::string item;
    while (std::getline(is, item, ',')) p.push_back(detail::parse_number(detail::trim(item), "harmonic parameter"));
    if (p.empty() || p.size() > 2) throw ValidationError("initial data: expected " + kind + ":k[,amplitude]");
    const double k = p[0];
    const double amp = p.size() == 2 ? p[1] : 1.0;
    const bool is_cos = kind == "cos";
    return GridFunction::sample(n, [=](double x) { return amp * (is_cos ? std::cos(k * x) : std::sin(k * x)); });
  }
  if (kind == "file") {
    std::ifstream in(args);
    if (!in) throw ValidationError("initial data: cannot open '" + args + "'");
    auto g = read_csv(in);
    if (g.size() != n) {
      throw ValidationError("initial data: file has N=" + std::to_string(g.size()) + " but --n is " + std::to_string(n));
    }
    return g;
  }
  throw ValidationError("initial data: unknown kind '" + kind + "' (zero, const, cos, sin, random, file)");
}

}  // namespace gtlab
