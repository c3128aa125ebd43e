#pragma once

// Initial-data mini-language:
//   const:<re><im>i     e.g. const:-1i, const:1, const:0.5-0.25i
//   mode:<n1>,<n2>:<a>  a e^{i n.x}, a in the const syntax
//   gauss:<seed>:<s>    random H^s-normalized data

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>

#include "qnls/field.hpp"

namespace qnls {

struct InitialDataOptions {
  double norm = 1.0;  // H^s norm of gauss data
  int band = -1;      // gauss frequency band; -1 selects Mx/3
  double decay = 1.0; // gauss modulus decay exponent
};

inline double parse_real(std::string_view s, const char* what) {
  double v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || r.ec != std::errc{} || r.ptr != s.data() + s.size())
    throw ValidationError(std::string("cannot parse ") + what + " '" + std::string(s) + "'");
  return v;
}

inline std::int64_t parse_int(std::string_view s, const char* what) {
  std::int64_t v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || r.ec != std::errc{} || r.ptr != s.data() + s.size())
    throw ValidationError(std::string("cannot parse ") + what + " '" + std::string(s) + "'");
  return v;
}

/// Complex literal: "a", "bi", "a+bi", "a-bi", "i", "-i".
inline cplx parse_complex(std::string_view s) {
  if (s.empty()) throw ValidationError("empty complex literal");
  if (s.back() != 'i') return {parse_real(s, "real number"), 0.0};
  const std::string_view body = s.substr(0, s.size() - 1);
  // split at the last sign that is not leading and not an exponent sign
  std::size_t cut = std::string_view::npos;
  for (std::size_t k = body.size(); k-- > 1;)
    if ((body[k] == '+' || body[k] == '-') && body[k - 1] != 'e' && body[k - 1] != 'E') {
      cut = k;
      break;
    }
  auto imag = [](std::string_view t) {
    if (t.empty() || t == "+") return 1.0;
    if (t == "-") return -1.0;
    return parse_real(t.front() == '+' ? t.substr(1) : t, "imaginary part");
  };
  if (cut == std::string_view::npos) return {0.0, imag(body)};
  return {parse_real(body.substr(0, cut), "real part"), imag(body.substr(cut))};
}

inline SpatialField parse_initial_data(std::string_view spec, const SpaceGrid& g, const InitialDataOptions& o = {}) {
  const auto colon = spec.find(':');
  if (colon == std::string_view::npos) throw ValidationError("initial data needs a kind prefix: const, mode or gauss");
  const auto kind = spec.substr(0, colon), rest = spec.substr(colon + 1);
  if (kind == "const") return SpatialField(g, parse_complex(rest));
  if (kind == "mode") {
    const auto c2 = rest.find(':'), comma = rest.find(',');
    if (c2 == std::string_view::npos || comma == std::string_view::npos || comma > c2)
      throw ValidationError("mode data must read mode:<n1>,<n2>:<amp>");
    const FreqVec n{int(parse_int(rest.substr(0, comma), "n1")), int(parse_int(rest.substr(comma + 1, c2 - comma - 1), "n2"))};
    if (2 * std::abs(n.n1) >= int(g.Mx) || 2 * std::abs(n.n2) >= int(g.My))
      throw ValidationError("mode frequency is not resolved by the grid");
    return plane_wave(g, n, parse_complex(rest.substr(c2 + 1)));
  }
  if (kind == "gauss") {
    const auto c2 = rest.find(':');
    if (c2 == std::string_view::npos) throw ValidationError("gauss data must read gauss:<seed>:<s>");
    const auto seed = parse_int(rest.substr(0, c2), "seed");
    const double s = parse_real(rest.substr(c2 + 1), "s");
    if (seed < 0) throw ValidationError("seed must be nonnegative");
    if (!(o.norm >= 0)) throw ValidationError("norm must be nonnegative");
    const int band = o.band >= 0 ? o.band : int(g.Mx / 3);
    return gaussian_data(g, std::uint64_t(seed), s, o.norm, band, o.decay);
  }
  throw ValidationError("unknown initial data kind '" + std::string(kind) + "'");
}

}  // namespace qnls
