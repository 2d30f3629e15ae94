#pragma once

// Relaxation profiles σ(x) on the torus: constant, piecewise constant on
// half-open pieces (x_{i-1}, x_i], or sampled on a grid.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "gtlab/errors.hpp"
#include "gtlab/grid_io.hpp"
#include "gtlab/torus_field.hpp"

namespace gtlab {

struct SigmaPiece {
  double breakpoint;  // right end of the piece; the last piece ends at 2π
  double value;
};

class RelaxationProfile {
 public:
  struct Constant {
    double value;
  };
  struct PiecewiseConstant {
    std::vector<SigmaPiece> pieces;
  };
  struct Sampled {
    GridFunction samples;
  };
  using Kind = std::variant<Constant, PiecewiseConstant, Sampled>;

  static RelaxationProfile constant(double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
      throw ValidationError("relaxation: σ must be positive and finite");
    }
    return RelaxationProfile(Constant{sigma}, sigma, sigma);
  }

  static RelaxationProfile piecewise(std::vector<SigmaPiece> pieces) {
    if (pieces.empty()) throw ValidationError("relaxation: piecewise profile needs at least one piece");
    double prev = 0.0;
    for (const auto& p : pieces) {
      if (!(p.breakpoint > prev)) {
        throw ValidationError("relaxation: breakpoints must be strictly increasing in (0, 2π]");
      }
      if (!(p.value > 0.0) || !std::isfinite(p.value)) {
        throw ValidationError("relaxation: piece values must be positive and finite");
      }
      prev = p.breakpoint;
    }
    if (std::abs(pieces.back().breakpoint - kTwoPi) > 1e-9) {
      throw ValidationError("relaxation: last breakpoint must be 2π");
    }
    pieces.back().breakpoint = kTwoPi;
    const auto [lo, hi] = std::minmax_element(pieces.begin(), pieces.end(),
                                              [](const auto& a, const auto& b) { return a.value < b.value; });
    const double mn = lo->value;
    const double mx = hi->value;
    return RelaxationProfile(PiecewiseConstant{std::move(pieces)}, mn, mx);
  }

  /// σ ∈ {s1 on (0, π], s2 on (π, 2π]}.
  static RelaxationProfile two_piece(double s1, double s2) {
    return piecewise({{std::numbers::pi, s1}, {kTwoPi, s2}});
  }

  static RelaxationProfile sampled(GridFunction samples) {
    double mn = samples[0];
    double mx = samples[0];
    for (const double s : samples) {
      if (!(s > 0.0) || !std::isfinite(s)) {
        throw ValidationError("relaxation: sampled σ must be positive and finite everywhere");
      }
      mn = std::min(mn, s);
      mx = std::max(mx, s);
    }
    return RelaxationProfile(Sampled{std::move(samples)}, mn, mx);
  }

  const Kind& kind() const { return kind_; }
  double sigma_min() const { return sigma_min_; }
  double sigma_max() const { return sigma_max_; }
  bool is_constant() const { return sigma_max_ - sigma_min_ <= 1e-14 * sigma_max_; }

  /// Point value; at a breakpoint the left-limit value is returned, and x = 0
  /// is identified with 2π.
  double operator()(double x) const {
    return std::visit(
        [x](const auto& k) -> double {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, Constant>) {
            return k.value;
          } else if constexpr (std::is_same_v<K, PiecewiseConstant>) {
            double y = std::fmod(x, kTwoPi);
            if (y < 0) y += kTwoPi;
            if (y <= 1e-12) y = kTwoPi;
            for (const auto& p : k.pieces) {
              if (y <= p.breakpoint + 1e-12) return p.value;
            }
            return k.pieces.back().value;
          } else {
            const std::size_t n = k.samples.size();
            double y = std::fmod(x, kTwoPi);
            if (y < 0) y += kTwoPi;
            const auto j = static_cast<std::size_t>(std::llround(y / kTwoPi * static_cast<double>(n))) % n;
            return k.samples[j];
          }
        },
        kind_);
  }

  /// σ at the grid nodes of an N-point grid.
  GridFunction on_grid(std::size_t n) const {
    if (const auto* s = std::get_if<Sampled>(&kind_)) {
      if (s->samples.size() != n) {
        throw ValidationError("relaxation: sampled profile has N=" + std::to_string(s->samples.size()) +
                              ", requested grid N=" + std::to_string(n));
      }
      return s->samples;
    }
    return GridFunction::sample(n, [this](double x) { return (*this)(x); });
  }

  /// Every distinct value σ takes that matters for sup-conditions: the
  /// extremes, every piece value, and every sample.
  std::vector<double> attained_values() const {
    std::vector<double> out{sigma_min_, sigma_max_};
    if (const auto* p = std::get_if<PiecewiseConstant>(&kind_)) {
      for (const auto& piece : p->pieces) out.push_back(piece.value);
    } else if (const auto* s = std::get_if<Sampled>(&kind_)) {
      out.insert(out.end(), s->samples.begin(), s->samples.end());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  /// (value on (0, π], value on (π, 2π]) for constant or two-piece profiles
  /// with breakpoint π.
  std::pair<double, double> two_piece_values() const {
    if (const auto* c = std::get_if<Constant>(&kind_)) return {c->value, c->value};
    if (const auto* p = std::get_if<PiecewiseConstant>(&kind_)) {
      if (p->pieces.size() == 1) return {p->pieces[0].value, p->pieces[0].value};
      if (p->pieces.size() == 2 && std::abs(p->pieces[0].breakpoint - std::numbers::pi) < 1e-9) {
        return {p->pieces[0].value, p->pieces[1].value};
      }
    }
    throw ValidationError("relaxation: profile is not two-piece constant with breakpoint π");
  }

  std::string describe() const {
    std::ostringstream os;
    os << std::setprecision(12);
    std::visit(
        [&os](const auto& k) {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, Constant>) {
            os << "const:" << k.value;
          } else if constexpr (std::is_same_v<K, PiecewiseConstant>) {
            os << "pc:";
            for (std::size_t i = 0; i < k.pieces.size(); ++i) {
              if (i) os << ',';
              os << k.pieces[i].value << '@' << k.pieces[i].breakpoint;
            }
          } else {
            os << "sampled:N=" << k.samples.size();
          }
        },
        kind_);
    return os.str();
  }

 private:
  RelaxationProfile(Kind k, double mn, double mx) : kind_(std::move(k)), sigma_min_(mn), sigma_max_(mx) {}

  Kind kind_;
  double sigma_min_ = 0.0;
  double sigma_max_ = 0.0;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

inline double parse_number(const std::string& tok, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("cannot parse " + what + " '" + tok + "'");
  }
}

}  // namespace detail

/// Parses a position such as "3.1", "pi", "2pi", "0.5pi", "2*pi", "pi/2".
inline double parse_position(std::string_view text) {
  std::string s = detail::trim(text);
  double divisor = 1.0;
  if (const auto slash = s.find('/'); slash != std::string::npos) {
    divisor = detail::parse_number(detail::trim(s.substr(slash + 1)), "position divisor");
    s = detail::trim(s.substr(0, slash));
  }
  double value = 0.0;
  if (s.size() >= 2 && s.compare(s.size() - 2, 2, "pi") == 0) {
    std::string coef = detail::trim(s.substr(0, s.size() - 2));
    if (!coef.empty() && coef.back() == '*') coef.pop_back();
    value = (coef.empty() ? 1.0 : detail::parse_number(coef, "position")) * std::numbers::pi;
  } else {
    value = detail::parse_number(s, "position");
  }
  return value / divisor;
}

/// Builds a profile from a CLI spec:
///   const:5              constant σ
///   pc:1@pi,4@2pi        value@right-breakpoint pieces
///   sin:m,a[,k]          σ = m + a sin(kx), sampled on the n-point grid
///   file:path.csv        (x, σ) rows on the uniform grid
inline RelaxationProfile parse_relaxation(std::string_view spec, std::size_t n) {
  const auto colon = spec.find(':');
  if (colon == std::string_view::npos) throw ValidationError("--sigma: expected kind:args, got '" + std::string(spec) + "'");
  const std::string kind = detail::trim(spec.substr(0, colon));
  const std::string args = detail::trim(spec.substr(colon + 1));
  if (kind == "const") return RelaxationProfile::constant(detail::parse_number(args, "σ value"));
  if (kind == "pc") {
    std::vector<SigmaPiece> pieces;
    std::istringstream is(args);
    std::string item;
    while (std::getline(is, item, ',')) {
      const auto at = item.find('@');
      if (at == std::string::npos) throw ValidationError("--sigma pc: expected value@breakpoint, got '" + item + "'");
      pieces.push_back({parse_position(item.substr(at + 1)), detail::parse_number(detail::trim(item.substr(0, at)), "σ value")});
    }
    return RelaxationProfile::piecewise(std::move(pieces));
  }
  if (kind == "sin") {
    std::vector<double> p;
    std::istringstream is(args);
    std::string item;
    while (std::getline(is, item, ',')) p.push_back(detail::parse_number(detail::trim(item), "sin parameter"));
    if (p.size() < 2 || p.size() > 3) throw ValidationError("--sigma sin: expected m,a[,k]");
    const double k = p.size() == 3 ? p[2] : 1.0;
    return RelaxationProfile::sampled(
        GridFunction::sample(n, [&](double x) { return p[0] + p[1] * std::sin(k * x); }));
  }
  if (kind == "file") {
    std::ifstream in(args);
    if (!in) throw ValidationError("--sigma file: cannot open '" + args + "'");
    auto g = read_csv(in);
    if (g.size() != n) {
      throw ValidationError("--sigma file: profile has N=" + std::to_string(g.size()) + " but --n is " + std::to_string(n));
    }
    return RelaxationProfile::sampled(std::move(g));
  }
  throw ValidationError("--sigma: unknown kind '" + kind + "' (const, pc, sin, file)");
}

}  // namespace gtlab
