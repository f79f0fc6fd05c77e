#pragma once

// Boundary spaces X of SL(n,R): the circle R u {oo} (n = 2, Moebius action)
// and projective space P^{n-1} (linear action). Regions are finite unions of
// open arcs or of symmetric spherical caps; m is the normalized
// SO(n)-invariant measure.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "orbitlab/error.hpp"
#include "orbitlab/keyvalue.hpp"
#include "orbitlab/matrix.hpp"

namespace orbitlab {

/// Relative tolerance for "exactly on a boundary" and for detecting exact
/// cancellation in the Moebius action.
inline constexpr double kBoundaryTolerance = 1e-12;

/// Point of R u {oo}.
struct CirclePoint {
  double value = 0.0;
  bool infinite = false;

  static CirclePoint at(double x) {
    if (!std::isfinite(x)) return infinity();
    return {x, false};
  }
  static CirclePoint infinity() { return {0.0, true}; }

  friend bool operator==(const CirclePoint& a, const CirclePoint& b) {
    return a.infinite == b.infinite && (a.infinite || a.value == b.value);
  }
};

/// Point of P^{n-1}: unit vector whose first nonzero coordinate is positive.
class ProjectivePoint {
 public:
  ProjectivePoint() = default;

  explicit ProjectivePoint(std::span<const double> v) : n_(static_cast<int>(v.size())) {
    if (n_ < 2 || n_ > kMaxDim) throw std::invalid_argument("projective point dimension out of range");
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (!(norm > 0.0) || !std::isfinite(norm)) throw std::invalid_argument("projective point needs a nonzero vector");
    int lead = 0;
    while (lead < n_ && v[lead] == 0.0) ++lead;
    const double sign = v[lead] < 0.0 ? -1.0 : 1.0;
    for (int i = 0; i < n_; ++i) v_[i] = sign * v[i] / norm;
  }

  static ProjectivePoint basis(int n, int i) {
    std::array<double, kMaxDim> e{};
    e[i] = 1.0;
    return ProjectivePoint(std::span<const double>(e.data(), n));
  }

  int dim() const noexcept { return n_; }
  std::span<const double> coords() const noexcept { return {v_.data(), static_cast<std::size_t>(n_)}; }
  double operator[](int i) const noexcept { return v_[i]; }

 private:
  int n_ = 0;
  std::array<double, kMaxDim> v_{};
};

using BoundaryPoint = std::variant<CirclePoint, ProjectivePoint>;

/// Open arc of the circle. lo < hi: the interval (lo, hi), endpoints may be
/// +-inf. lo > hi: the arc through oo, (lo, +inf) u {oo} u (-inf, hi).
struct Arc {
  double lo = 0.0;
  double hi = 0.0;

  bool wraps() const noexcept { return lo > hi; }
};

struct CircleArcs {
  std::vector<Arc> arcs;
  bool whole = false;  ///< the full space X (no boundary)

  static CircleArcs full_circle() { return {{}, true}; }
};

/// { x : |<x, axis>| > cos(angle) } on P^{n-1}.
struct Cap {
  std::array<double, kMaxDim> axis{};
  double angle = 0.0;
};

struct Caps {
  int n = 3;
  std::vector<Cap> caps;
};

using Region = std::variant<CircleArcs, Caps>;

/// Region plus a display name; this is what region files contain.
struct NamedRegion {
  std::string name;
  Region region;
};

enum class Membership { outside, inside, boundary };

/// Normalized SO(n)-invariant measure of a region, with an error bound
/// (zero for closed forms, three standard errors for Monte Carlo).
struct MeasureValue {
  double value = 0.0;
  double error_bound = 0.0;
};

// ---------------------------------------------------------------------------
// actions
// ---------------------------------------------------------------------------

/// Moebius action x -> (a x + b) / (c x + d). Numerators or denominators
/// that cancel to within kBoundaryTolerance of their terms are taken as
/// exact zeros, so rational basepoints map onto 0 and oo cleanly.
template <class T>
CirclePoint act_circle(const SquareMatrix<T>& g, const CirclePoint& x) {
  if (g.dim() != 2) throw std::invalid_argument("act_circle requires a 2 x 2 matrix");
  const double a = static_cast<double>(g(0, 0)), b = static_cast<double>(g(0, 1));
  const double c = static_cast<double>(g(1, 0)), d = static_cast<double>(g(1, 1));
  if (x.infinite) {
    if (c == 0.0) return CirclePoint::infinity();
    return CirclePoint::at(a / c);
  }
  double num = a * x.value + b;
  double den = c * x.value + d;
  if (std::abs(den) <= kBoundaryTolerance * (std::abs(c * x.value) + std::abs(d))) return CirclePoint::infinity();
  if (std::abs(num) <= kBoundaryTolerance * (std::abs(a * x.value) + std::abs(b))) num = 0.0;
  return CirclePoint::at(num / den);
}

/// v -> g v / |g v|, canonical sign.
template <class T>
ProjectivePoint act_projective(const SquareMatrix<T>& g, const ProjectivePoint& p) {
  const int n = g.dim();
  if (n != p.dim()) throw std::invalid_argument("act_projective: dimension mismatch");
  std::array<double, kMaxDim> w{};
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += static_cast<double>(g(i, j)) * p[j];
    w[i] = s;
  }
  return ProjectivePoint(std::span<const double>(w.data(), n));
}

template <class T>
BoundaryPoint act(const SquareMatrix<T>& g, const BoundaryPoint& x) {
  if (const auto* c = std::get_if<CirclePoint>(&x)) return act_circle(g, *c);
  return act_projective(g, std::get<ProjectivePoint>(x));
}

/// The basepoint whose stabilizer contains the upper-triangular subgroup:
/// oo for the circle, e_1 for P^{n-1}.
inline BoundaryPoint standard_basepoint(int n, bool circle) {
  if (circle) return CirclePoint::infinity();
  return ProjectivePoint::basis(n, 0);
}

// ---------------------------------------------------------------------------
// validation
// ---------------------------------------------------------------------------

namespace detail {

/// Position of x on the unit circle [0, 1), oo at 0.
inline double circle_position(double x) {
  if (std::isinf(x)) return x > 0 ? 1.0 : 0.0;
  return std::atan(x) / std::numbers::pi + 0.5;
}

inline void arc_pieces(const Arc& a, std::vector<std::pair<double, double>>& out) {
  if (a.wraps()) {
    out.emplace_back(circle_position(a.lo), 1.0);
    out.emplace_back(0.0, circle_position(a.hi));
  } else {
    out.emplace_back(circle_position(a.lo), circle_position(a.hi));
  }
}

inline double unit_norm(const Cap& c, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += c.axis[i] * c.axis[i];
  return std::sqrt(s);
}

}  // namespace detail

inline void validate(const CircleArcs& r) {
  if (r.whole) {
    if (!r.arcs.empty()) throw std::invalid_argument("whole-circle region cannot also list arcs");
    return;
  }
  if (r.arcs.empty()) throw std::invalid_argument("circle region needs at least one arc");
  std::vector<std::pair<double, double>> pieces;
  for (const Arc& a : r.arcs) {
    if (std::isnan(a.lo) || std::isnan(a.hi) || a.lo == a.hi) throw std::invalid_argument("degenerate arc");
    if (a.wraps() && (std::isinf(a.lo) || std::isinf(a.hi))) {
      throw std::invalid_argument("an arc through oo needs finite endpoints");
    }
    std::vector<std::pair<double, double>> mine;
    detail::arc_pieces(a, mine);
    for (const auto& p : mine)
      for (const auto& q : pieces)
        if (std::max(p.first, q.first) < std::min(p.second, q.second)) {
          throw std::invalid_argument("arcs overlap");
        }
    pieces.insert(pieces.end(), mine.begin(), mine.end());
  }
}

inline void validate(const Caps& r) {
  if (r.n < 2 || r.n > kMaxDim) throw std::invalid_argument("cap dimension out of range");
  if (r.caps.empty()) throw std::invalid_argument("cap region needs at least one cap");
  for (const Cap& c : r.caps) {
    if (!(c.angle > 0.0 && c.angle < std::numbers::pi / 2)) throw std::invalid_argument("cap angle must be in (0, pi/2)");
    if (std::abs(detail::unit_norm(c, r.n) - 1.0) > 1e-12) throw std::invalid_argument("cap axis must be a unit vector");
  }
  for (std::size_t i = 0; i < r.caps.size(); ++i)
    for (std::size_t j = i + 1; j < r.caps.size(); ++j) {
      double dot = 0.0;
      for (int k = 0; k < r.n; ++k) dot += r.caps[i].axis[k] * r.caps[j].axis[k];
      const double separation = std::acos(std::min(1.0, std::abs(dot)));
      if (separation < r.caps[i].angle + r.caps[j].angle) throw std::invalid_argument("caps overlap");
    }
}

inline void validate(const Region& r) {
  std::visit([](const auto& v) { validate(v); }, r);
}

/// Builds a cap from an arbitrary nonzero axis (normalized here).
inline Cap make_cap(std::span<const double> axis, double angle) {
  Cap c;
  double norm = 0.0;
  for (double x : axis) norm += x * x;
  norm = std::sqrt(norm);
  if (!(norm > 0.0)) throw std::invalid_argument("cap axis must be nonzero");
  for (std::size_t i = 0; i < axis.size(); ++i) c.axis[i] = axis[i] / norm;
  c.angle = angle;
  return c;
}

// ---------------------------------------------------------------------------
// membership
// ---------------------------------------------------------------------------

namespace detail {

inline bool near(double x, double e) { return std::abs(x - e) <= kBoundaryTolerance * std::max(1.0, std::abs(e)); }

inline Membership classify_arc(const Arc& a, const CirclePoint& x) {
  if (x.infinite) {
    if (a.wraps()) return Membership::inside;
    return (std::isinf(a.lo) || std::isinf(a.hi)) ? Membership::boundary : Membership::outside;
  }
  const double v = x.value;
  if ((std::isfinite(a.lo) && near(v, a.lo)) || (std::isfinite(a.hi) && near(v, a.hi))) return Membership::boundary;
  const bool in = a.wraps() ? (v > a.lo || v < a.hi) : (v > a.lo && v < a.hi);
  return in ? Membership::inside : Membership::outside;
}

}  // namespace detail

inline Membership classify(const CircleArcs& r, const CirclePoint& x) {
  if (r.whole) return Membership::inside;
  bool on_boundary = false;
  for (const Arc& a : r.arcs) {
    const Membership m = detail::classify_arc(a, x);
    if (m == Membership::inside) return m;
    on_boundary |= m == Membership::boundary;
  }
  return on_boundary ? Membership::boundary : Membership::outside;
}

inline Membership classify(const Caps& r, const ProjectivePoint& x) {
  if (x.dim() != r.n) throw std::invalid_argument("cap region and point have different dimensions");
  bool on_boundary = false;
  for (const Cap& c : r.caps) {
    double dot = 0.0;
    for (int i = 0; i < r.n; ++i) dot += c.axis[i] * x[i];
    const double d = std::abs(dot);
    const double threshold = std::cos(c.angle);
    if (std::abs(d - threshold) <= kBoundaryTolerance) {
      on_boundary = true;
    } else if (d > threshold) {
      return Membership::inside;
    }
  }
  return on_boundary ? Membership::boundary : Membership::outside;
}

inline Membership classify(const Region& r, const BoundaryPoint& x) {
  if (const auto* arcs = std::get_if<CircleArcs>(&r)) {
    if (const auto* c = std::get_if<CirclePoint>(&x)) return classify(*arcs, *c);
  } else if (const auto* p = std::get_if<ProjectivePoint>(&x)) {
    return classify(std::get<Caps>(r), *p);
  }
  throw std::invalid_argument("region and point belong to different boundary spaces");
}

/// Open-set membership; boundary points are outside.
inline bool contains(const Region& r, const BoundaryPoint& x) { return classify(r, x) == Membership::inside; }

// ---------------------------------------------------------------------------
// measures
// ---------------------------------------------------------------------------

/// m((a, b)) = (1/pi) (arctan b - arctan a), summed over the arcs.
inline MeasureValue measure_circle(const CircleArcs& r) {
  if (r.whole) return {1.0, 0.0};
  double total = 0.0;
  for (const Arc& a : r.arcs) {
    const double span = (std::atan(a.hi) - std::atan(a.lo)) / std::numbers::pi;
    total += a.wraps() ? 1.0 + span : span;
  }
  return {std::clamp(total, 0.0, 1.0), 0.0};
}

struct CapMeasureOptions {
  bool force_monte_carlo = false;
  double target_error = 1e-3;  ///< required 3-sigma bound for Monte Carlo
  std::uint64_t max_samples = 100'000'000;
  std::uint64_t seed = 1;
};

/// m of a union of caps. Closed form 1 - cos(angle) per cap for n = 3,
/// otherwise Monte Carlo over Gaussian-normalized sphere samples.
inline MeasureValue measure_caps(const Caps& r, const CapMeasureOptions& options = {}) {
  validate(r);
  if (r.n == 3 && !options.force_monte_carlo) {
    double total = 0.0;
    for (const Cap& c : r.caps) total += 1.0 - std::cos(c.angle);
    return {std::min(total, 1.0), 0.0};
  }
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uint64_t hits = 0, drawn = 0;
  constexpr std::uint64_t kBatch = 100'000;
  std::array<double, kMaxDim> v{};
  while (true) {
    for (std::uint64_t i = 0; i < kBatch; ++i) {
      for (int k = 0; k < r.n; ++k) v[k] = gauss(rng);
      // canonicalization is irrelevant for |<x, axis>|; skip it
      double norm = 0.0;
      for (int k = 0; k < r.n; ++k) norm += v[k] * v[k];
      norm = std::sqrt(norm);
      for (const Cap& c : r.caps) {
        double dot = 0.0;
        for (int k = 0; k < r.n; ++k) dot += c.axis[k] * v[k];
        if (std::abs(dot) > std::cos(c.angle) * norm) {
          ++hits;
          break;
        }
      }
    }
    drawn += kBatch;
    const double p = static_cast<double>(hits) / static_cast<double>(drawn);
    const double floor_p = 1.0 / static_cast<double>(drawn);
    const double pc = std::clamp(p, floor_p, 1.0 - floor_p);
    const double bound = 3.0 * std::sqrt(pc * (1.0 - pc) / static_cast<double>(drawn));
    if (bound <= options.target_error) return {p, bound};
    if (drawn + kBatch > options.max_samples) {
      throw SampleBudgetError("cap measure: 3-sigma bound " + std::to_string(bound) + " above target " +
                              std::to_string(options.target_error) + " after " + std::to_string(drawn) + " samples");
    }
  }
}

inline MeasureValue measure(const Region& r, const CapMeasureOptions& options = {}) {
  if (const auto* arcs = std::get_if<CircleArcs>(&r)) {
    validate(*arcs);
    return measure_circle(*arcs);
  }
  return measure_caps(std::get<Caps>(r), options);
}

// ---------------------------------------------------------------------------
// parsing
// ---------------------------------------------------------------------------

/// "inf", a decimal, or a fraction "p/q".
inline CirclePoint parse_circle_point(const std::string& text) {
  const std::string s = trim(text);
  if (s == "inf" || s == "oo" || s == "infinity") return CirclePoint::infinity();
  const auto slash = s.find('/');
  if (slash != std::string::npos) {
    const double p = parse_double(s.substr(0, slash));
    const double q = parse_double(s.substr(slash + 1));
    if (q == 0.0) return CirclePoint::infinity();
    return CirclePoint::at(p / q);
  }
  return CirclePoint::at(parse_double(s));
}

/// Comma/space separated coordinates.
inline ProjectivePoint parse_projective_point(const std::string& text) {
  const auto v = parse_double_list(text);
  try {
    return ProjectivePoint(v);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("bad projective point '") + text + "': " + e.what());
  }
}

/// Region file: one [region] stanza per region.
///
///   [region]
///   name = upper
///   kind = arcs          # or: caps, whole
///   arc = 0 inf          # repeatable; "lo hi", lo > hi wraps through oo
///
///   [region]
///   name = polar
///   kind = caps
///   dim = 3
///   cap = 1.0471975511965976 0 0 1   # angle (radians), then axis
///   cap_deg = 30 1 0 0               # same with the angle in degrees
inline std::vector<NamedRegion> parse_region_file(std::istream& in) {
  std::vector<NamedRegion> out;
  for (const Stanza& st : parse_stanzas(in)) {
    if (st.section != "region") continue;
    const std::string where = "region stanza at line " + std::to_string(st.line);
    const std::string* kind = st.find("kind");
    if (!kind) throw ConfigError(where + ": missing kind");
    NamedRegion nr;
    nr.name = st.find("name") ? *st.find("name") : "R" + std::to_string(out.size());
    try {
      if (*kind == "whole") {
        nr.region = CircleArcs::full_circle();
      } else if (*kind == "arcs") {
        CircleArcs arcs;
        for (const auto& text : st.all("arc")) {
          const auto v = parse_double_list(text);
          if (v.size() != 2) throw ConfigError(where + ": arc needs two endpoints");
          arcs.arcs.push_back({v[0], v[1]});
        }
        validate(arcs);
        nr.region = arcs;
      } else if (*kind == "caps") {
        Caps caps;
        caps.n = st.find("dim") ? static_cast<int>(parse_int(*st.find("dim"))) : 3;
        auto add = [&](const std::string& text, double to_radians) {
          const auto v = parse_double_list(text);
          if (static_cast<int>(v.size()) != caps.n + 1) throw ConfigError(where + ": cap needs angle and dim axis coords");
          caps.caps.push_back(make_cap(std::span<const double>(v).subspan(1), v[0] * to_radians));
        };
        for (const auto& [key, text] : st.entries) {
          if (key == "cap") add(text, 1.0);
          if (key == "cap_deg") add(text, std::numbers::pi / 180.0);
        }
        validate(caps);
        nr.region = caps;
      } else {
        throw ConfigError(where + ": unknown kind '" + *kind + "'");
      }
    } catch (const std::invalid_argument& e) {
      throw ConfigError(where + ": " + e.what());
    }
    out.push_back(std::move(nr));
  }
  return out;
}

}  // namespace orbitlab
