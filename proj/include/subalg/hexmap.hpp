#pragma once

#include <array>
#include <cmath>
#include <ostream>

#include "subalg/ratfunc.hpp"

namespace subalg {

// A real material triple mapped to one of the three sign-sector hexagons.
// hexagon_id names the variable whose sign differs (1-based); 0 when all
// three signs agree (the shared center).
struct HexPoint {
  int hexagon_id = 0;
  double x = 0.0, y = 0.0;
  std::array<double, 3> z{};
};

// Ratio coordinates: t_i from the pairwise magnitude ratios, projected to the
// plane s1 + s2 + s3 = 0 and then to (x, y). Invariant under z -> lambda z
// for positive lambda.
inline HexPoint hex_coords(const std::array<double, 3>& z) {
  for (double v : z)
    if (v == 0.0 || !std::isfinite(v)) throw Error(errc::zero_component, "materials must be nonzero");
  const double t1 = 1.0 / (1.0 + std::abs(z[1] / z[2]));
  const double t2 = 1.0 / (1.0 + std::abs(z[2] / z[0]));
  const double t3 = 1.0 / (1.0 + std::abs(z[0] / z[1]));
  const double s1 = 2.0 * t1 - t2 - t3;
  const double s2 = 2.0 * t2 - t3 - t1;

  HexPoint p;
  p.z = z;
  p.x = s1;
  p.y = (s1 + 2.0 * s2) / std::sqrt(3.0);
  const bool neg1 = z[0] < 0, neg2 = z[1] < 0, neg3 = z[2] < 0;
  if (neg1 == neg2 && neg2 == neg3)
    p.hexagon_id = 0;
  else if (neg1 != neg2 && neg1 != neg3)
    p.hexagon_id = 1;
  else if (neg2 != neg1 && neg2 != neg3)
    p.hexagon_id = 2;
  else
    p.hexagon_id = 3;
  return p;
}

// --- univariate roots ---------------------------------------------------------

// Simultaneous-iteration root finder with a Newton polish; plenty for the
// small denominator slices this module meets. Coefficients ascending.
inline std::vector<cplx> poly_roots(std::vector<cplx> coeffs, const Tolerance& tol = Tolerance{}) {
  double scale = 0.0;
  for (const cplx& c : coeffs) scale = std::max(scale, std::abs(c));
  while (!coeffs.empty() && std::abs(coeffs.back()) <= tol.rank_rel * scale) coeffs.pop_back();
  if (coeffs.size() <= 1) return {};
  const std::size_t n = coeffs.size() - 1;
  const cplx lead = coeffs.back();
  for (cplx& c : coeffs) c /= lead;

  auto eval = [&](cplx x) {
    cplx v(0.0);
    for (std::size_t k = coeffs.size(); k-- > 0;) v = v * x + coeffs[k];
    return v;
  };
  auto deriv = [&](cplx x) {
    cplx v(0.0);
    for (std::size_t k = coeffs.size(); k-- > 1;) v = v * x + double(k) * coeffs[k];
    return v;
  };

  double radius = 0.0;
  for (std::size_t k = 0; k < n; ++k) radius = std::max(radius, std::abs(coeffs[k]));
  radius = 1.0 + radius;
  std::vector<cplx> w(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double a = 6.283185307179586 * (double(k) + 0.25) / double(n);
    w[k] = radius * cplx(std::cos(a), std::sin(a));
  }
  for (int iter = 0; iter < 400; ++iter) {
    double moved = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      cplx denom(1.0);
      for (std::size_t j = 0; j < n; ++j)
        if (j != k) denom *= (w[k] - w[j]);
      const cplx step = eval(w[k]) / denom;
      w[k] -= step;
      moved = std::max(moved, std::abs(step) / (1.0 + std::abs(w[k])));
    }
    if (moved < 1e-14) break;
  }
  for (cplx& root : w)
    for (int polish = 0; polish < 3; ++polish) {
      const cplx d = deriv(root);
      if (std::abs(d) < 1e-300) break;
      root -= eval(root) / d;
    }
  return w;
}

// --- pole trajectories ----------------------------------------------------------

struct PoleRow {
  int hexagon_id = 0;
  int branch_id = 0;
  double grid_param = 0.0;
  double x = 0.0, y = 0.0;
  bool at_infinity = false;
};

struct HexGrid {
  double ratio_min = 0.25;  // range of the ratio of the two fixed materials
  double ratio_max = 4.0;
  std::size_t count = 33;
};

struct PoleTrajectory {
  std::vector<PoleRow> rows;
  std::array<std::size_t, 3> branch_count{};  // observed pole branches per hexagon
  std::array<std::size_t, 3> phase_dims{};    // the bounding phase dimensions
  double max_root_residual = 0.0;
};

// Traces the real negative poles of the associated function while one
// material sweeps its sign sector and the other two stay positive, mapping
// every pole through the hexagon coordinates. A vanishing leading slice
// coefficient records a branch at infinity.
inline PoleTrajectory pole_trajectory(const ZCollection& c, const HexGrid& grid,
                                      const Tolerance& tol = Tolerance{}) {
  if (c.m() != 1) throw Error(errc::not_scalar_u, "trajectories need a one-dimensional U");
  if (c.n() != 3) throw Error(errc::not_three_phase, "trajectories need exactly three phases");
  {
    auto [pruned, report] = prune_z(c, tol);
    if (pruned.h != c.h) throw Error(errc::not_pruned, "collection must be pruned first");
  }
  const MultiRational fn = extract_pq(c, tol);

  PoleTrajectory out;
  for (std::size_t i = 0; i < 3; ++i) out.phase_dims[i] = c.phases[i].dim();

  for (int hex = 1; hex <= 3; ++hex) {
    const std::size_t a = static_cast<std::size_t>(hex - 1);
    const std::size_t b = (a + 1) % 3, cc = (a + 2) % 3;
    std::size_t max_branches = 0;
    for (std::size_t g = 0; g < grid.count; ++g) {
      const double frac = grid.count > 1 ? double(g) / double(grid.count - 1) : 0.0;
      const double ratio =
          grid.ratio_min * std::pow(grid.ratio_max / grid.ratio_min, frac);

      // slice the denominator and numerator in the sweeping variable
      const int degq = fn.q.degree_in(a);
      const int degp = fn.p.degree_in(a);
      std::vector<cplx> qslice(static_cast<std::size_t>(degq) + 1, cplx(0.0));
      for (const auto& [e, coeff] : fn.q.terms())
        qslice[static_cast<std::size_t>(e[a])] += coeff * std::pow(ratio, e[b]);
      std::vector<cplx> pslice(static_cast<std::size_t>(degp) + 1, cplx(0.0));
      for (const auto& [e, coeff] : fn.p.terms())
        pslice[static_cast<std::size_t>(e[a])] += coeff * std::pow(ratio, e[b]);

      double qscale = 0.0;
      for (const cplx& v : qslice) qscale = std::max(qscale, std::abs(v));
      std::size_t effq = qslice.size();
      while (effq > 1 && std::abs(qslice[effq - 1])
                 <= 1e-9 * std::max(qscale, 1e-300)) --effq;
      std::size_t effp = pslice.size();
      double pscale = 0.0;
      for (const cplx& v : pslice) pscale = std::max(pscale, std::abs(v));
      while (effp > 1 && std::abs(pslice[effp - 1]) <= 1e-9 * std::max(pscale, 1e-300)) --effp;

      std::vector<double> roots;
      for (const cplx& r : poly_roots(qslice, tol)) {
        if (std::abs(r.imag()) > 1e-7 * (1.0 + std::abs(r.real()))) continue;
        if (r.real() >= 0.0) continue;
        // cross-check the root against the slice
        cplx v(0.0);
        for (std::size_t k = qslice.size(); k-- > 0;) v = v * r.real() + qslice[k];
        out.max_root_residual = std::max(out.max_root_residual, std::abs(v) / std::max(qscale, 1e-300));
        roots.push_back(r.real());
      }
      std::sort(roots.begin(), roots.end());

      std::size_t branches = roots.size();
      const bool infinity_branch = effq < effp;
      if (infinity_branch) ++branches;
      max_branches = std::max(max_branches, branches);

      int branch = 0;
      for (double r : roots) {
        std::array<double, 3> z{};
        z[a] = r;
        z[b] = ratio;
        z[cc] = 1.0;
        const HexPoint hp = hex_coords(z);
        out.rows.push_back({hex, branch++, ratio, hp.x, hp.y, false});
      }
      if (infinity_branch) {
        std::array<double, 3> z{};
        z[a] = -1e30 * std::max(1.0, ratio);
        z[b] = ratio;
        z[cc] = 1.0;
        const HexPoint hp = hex_coords(z);
        out.rows.push_back({hex, branch, ratio, hp.x, hp.y, true});
      }
    }
    out.branch_count[a] = max_branches;
  }
  return out;
}

// CSV rows in the fixed column order hexagon_id, branch_id, grid_param, x, y.
inline void write_pole_csv(std::ostream& os, const PoleTrajectory& t) {
  os << "hexagon_id,branch_id,grid_param,x,y\n";
  os.precision(12);
  for (const PoleRow& r : t.rows)
    os << r.hexagon_id << "," << r.branch_id << "," << r.grid_param << "," << r.x << "," << r.y
       << "\n";
}

// Static figure: the three sign-sector hexagons side by side with the pole
// points marked.
inline void write_pole_svg(std::ostream& os, const PoleTrajectory& t) {
  const double unit = 60.0, gap = 260.0, cx0 = 150.0, cy = 150.0;
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << int(cx0 + 2 * gap + 150)
     << "' height='300'>\n";
  const std::array<std::array<double, 2>, 6> corners = {
      {{2, 0}, {1, 1.7320508075688772}, {-1, 1.7320508075688772}, {-2, 0},
       {-1, -1.7320508075688772}, {1, -1.7320508075688772}}};
  const std::array<const char*, 3> colors = {"#c0392b", "#2471a3", "#1e8449"};
  for (int hex = 1; hex <= 3; ++hex) {
    const double cx = cx0 + gap * (hex - 1);
    os << "<polygon points='";
    for (const auto& corner : corners)
      os << cx + unit * corner[0] << "," << cy - unit * corner[1] << " ";
    os << "' fill='none' stroke='black'/>\n";
    os << "<text x='" << cx - 30 << "' y='" << cy + 2.6 * unit << "'>sector " << hex
       << "</text>\n";
  }
  for (const PoleRow& r : t.rows) {
    const double cx = cx0 + gap * (r.hexagon_id - 1);
    os << "<circle cx='" << cx + unit * r.x << "' cy='" << cy - unit * r.y
       << "' r='2' fill='" << colors[static_cast<std::size_t>(r.hexagon_id - 1)] << "'/>\n";
  }
  os << "</svg>\n";
}

}  // namespace subalg
