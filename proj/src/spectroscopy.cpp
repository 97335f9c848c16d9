#include "rotorcage/spectroscopy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace rotorcage {

std::string roman_label(int value) {
  if (value <= 0 || value > 3999) throw ConfigError("roman label out of range");
  static const std::pair<int, const char*> steps[] = {
      {1000, "M"}, {900, "CM"}, {500, "D"}, {400, "CD"}, {100, "C"},
      {90, "XC"},  {50, "L"},   {40, "XL"}, {10, "X"},   {9, "IX"},
      {5, "V"},    {4, "IV"},   {1, "I"}};
  std::string s;
  for (const auto& [v, sym] : steps)
    while (value >= v) {
      s += sym;
      value -= v;
    }
  return s;
}

namespace {

struct Component {
  int i0, i1;
  double pos;
  int dm;
  int cls_rank;   // 0 allowed, 1 suppressed
  int spin_rank;  // 0 ortho, 1 para
};

struct Line {
  double pos;
  int dm;
  int cls_rank;
  int spin_rank;
  std::vector<Component> comps;
  std::string label;
};

// Components of one class coinciding to within 1e-6 cm^-1 are a single line
// (the identical-manifold model makes dm = 0 components exactly coincident);
// resolution-scale blending happens later and concatenates labels instead.
constexpr double kCoincidenceTol = 1e-6;

int spin_rank_of(const AssignedState& s) { return s.spin == "para" ? 1 : 0; }

}  // namespace

std::vector<TransitionLine> enumerate_q1_transitions(
    const std::vector<AssignedState>& v0, const std::vector<AssignedState>& v1,
    double nu_origin, double resolution) {
  if (v0.empty() || v1.empty())
    throw InputError("transition enumeration needs nonempty manifolds");
  if (!std::isfinite(resolution) || resolution <= 0.0)
    throw ConfigError("resolution must be positive");
  if (!std::isfinite(nu_origin) || nu_origin < 0.0)
    throw ConfigError("nu_origin must be a nonnegative wavenumber");

  std::string bad;
  for (size_t s = 0; s < v0.size(); ++s)
    if (v0[s].ambiguous) bad += " v0[" + std::to_string(s) + "]";
  for (size_t s = 0; s < v1.size(); ++s)
    if (v1[s].ambiguous) bad += " v1[" + std::to_string(s) + "]";
  if (!bad.empty())
    throw InputError("unassigned states present:" + bad);

  std::vector<Component> comps;
  auto nearest_match = [&](const AssignedState& a, int want_m,
                           bool want_bar_match, bool bar) {
    int best = -1;
    double bestd = std::numeric_limits<double>::infinity();
    for (size_t t = 0; t < v1.size(); ++t) {
      const AssignedState& b = v1[t];
      if (b.j_dominant != a.j_dominant || b.n != a.n || b.l != a.l) continue;
      if (b.m_value != want_m) continue;
      if (want_bar_match && b.m_bar != bar) continue;
      const double d = std::abs(b.energy - a.energy);
      if (d < bestd) {
        bestd = d;
        best = static_cast<int>(t);
      }
    }
    return best;
  };

  for (size_t s = 0; s < v0.size(); ++s) {
    const AssignedState& a = v0[s];
    const int same = nearest_match(a, a.m_value, true, a.m_bar);
    if (same >= 0) {
      const double pos = nu_origin + v1[same].energy - a.energy;
      if (!(pos > 0.0))
        throw NumericError("nonpositive line position for " + a.ket());
      comps.push_back({static_cast<int>(s), same, pos, 0, 0, spin_rank_of(a)});
    }
    if (a.m_value == 1) {
      const int down = nearest_match(a, 0, false, false);
      if (down >= 0) {
        const double pos = nu_origin + v1[down].energy - a.energy;
        if (!(pos > 0.0))
          throw NumericError("nonpositive line position for " + a.ket());
        comps.push_back(
            {static_cast<int>(s), down, pos, -1, 1, spin_rank_of(a)});
      }
    }
  }

  // coincident components of one (class, spin) family -> lines
  std::stable_sort(comps.begin(), comps.end(),
                   [](const Component& x, const Component& y) {
                     return std::tie(x.cls_rank, x.spin_rank, x.pos, x.i0,
                                     x.i1) < std::tie(y.cls_rank, y.spin_rank,
                                                      y.pos, y.i0, y.i1);
                   });
  std::vector<Line> lines;
  for (const Component& c : comps) {
    if (!lines.empty()) {
      Line& last = lines.back();
      if (last.cls_rank == c.cls_rank && last.spin_rank == c.spin_rank &&
          c.pos - last.comps.front().pos <= kCoincidenceTol) {
        last.comps.push_back(c);
        continue;
      }
    }
    lines.push_back({c.pos, c.dm, c.cls_rank, c.spin_rank, {c}, {}});
  }

  // label lines by position; ties put ortho before para, allowed before
  // suppressed
  std::vector<int> order(lines.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
    return std::tie(lines[x].pos, lines[x].spin_rank, lines[x].cls_rank) <
           std::tie(lines[y].pos, lines[y].spin_rank, lines[y].cls_rank);
  });
  for (size_t i = 0; i < order.size(); ++i)
    lines[order[i]].label = roman_label(static_cast<int>(i) + 1);

  // Blend same-family lines closer than the resolution. `lines` is already
  // family-major and position-ascending within a family, so chains are
  // consecutive runs.
  std::vector<TransitionLine> rows;
  std::vector<int> row_spin;
  for (size_t li = 0; li < lines.size(); ++li) {
    const Line& ln = lines[li];
    const bool chain = li > 0 && lines[li - 1].cls_rank == ln.cls_rank &&
                       lines[li - 1].spin_rank == ln.spin_rank &&
                       ln.pos - lines[li - 1].pos < resolution;
    if (chain) {
      TransitionLine& last = rows.back();
      last.label += "/" + ln.label;
      for (const Component& c : ln.comps) {
        last.components.emplace_back(c.i0, c.i1);
        ++last.degeneracy;
      }
      continue;
    }
    TransitionLine row;
    row.label = ln.label;
    row.cls = ln.cls_rank ? "suppressed" : "allowed";
    row.delta_m = ln.dm;
    row.degeneracy = static_cast<int>(ln.comps.size());
    for (const Component& c : ln.comps) row.components.emplace_back(c.i0, c.i1);
    row.from_ket = v0[ln.comps.front().i0].ket();
    row.to_ket = v1[ln.comps.front().i1].ket();
    rows.push_back(std::move(row));
    row_spin.push_back(ln.spin_rank);
  }
  for (TransitionLine& row : rows) {
    double sum = 0.0;
    for (const auto& [i0, i1] : row.components)
      sum += nu_origin + v1[i1].energy - v0[i0].energy;
    row.position = sum / static_cast<double>(row.components.size());
  }
  // report order: by position, ortho before para, allowed before suppressed
  std::vector<int> rorder(rows.size());
  for (size_t i = 0; i < rorder.size(); ++i) rorder[i] = static_cast<int>(i);
  std::stable_sort(rorder.begin(), rorder.end(), [&](int x, int y) {
    const int cx = rows[x].cls == "suppressed", cy = rows[y].cls == "suppressed";
    return std::tie(rows[x].position, row_spin[x], cx) <
           std::tie(rows[y].position, row_spin[y], cy);
  });
  std::vector<TransitionLine> out;
  out.reserve(rows.size());
  for (int i : rorder) out.push_back(std::move(rows[i]));
  return out;
}

PeakTable predict_line_positions(const std::map<std::string, double>& levels,
                                 double nu_ref, double resolution) {
  for (const char* need : {"11", "00", "11bar", "10"})
    if (levels.find(need) == levels.end())
      throw InputError(std::string("missing level |") + need + ">");

  std::vector<AssignedState> manifold;
  for (const auto& [key, energy] : levels) {
    if (key.size() < 2 || !std::isdigit(static_cast<unsigned char>(key[0])) ||
        !std::isdigit(static_cast<unsigned char>(key[1])))
      throw InputError("level key '" + key +
                       "' is not of the <lambda><m>[bar] form");
    const bool bar = key.size() > 2 && key.substr(2) == "bar";
    if (key.size() > 2 && !bar)
      throw InputError("level key '" + key +
                       "' is not of the <lambda><m>[bar] form");
    AssignedState st;
    st.energy = energy;
    st.lambda = key[0] - '0';
    st.j_dominant = st.lambda;
    st.m_value = key[1] - '0';
    st.m_bar = bar;
    st.spin = (st.lambda % 2 == 0) ? "para" : "ortho";
    st.purity = 1.0;
    manifold.push_back(st);
  }
  std::stable_sort(manifold.begin(), manifold.end(),
                   [](const AssignedState& a, const AssignedState& b) {
                     return a.energy < b.energy;
                   });

  PeakTable table;
  table.nu_ref = nu_ref;
  table.peaks = enumerate_q1_transitions(manifold, manifold, nu_ref,
                                         resolution);
  table.para_offset_state_diff = levels.at("00") - levels.at("11");
  return table;
}

std::vector<ConversionPathway> conversion_pathways(
    const std::vector<AssignedState>& states,
    const ConversionChannels& channels) {
  if (states.empty()) throw InputError("no states for pathway analysis");
  bool have_ortho = false, have_para = false;
  for (const AssignedState& s : states) {
    if (s.spin == "ortho") have_ortho = true;
    if (s.spin == "para") have_para = true;
  }
  if (!have_ortho || !have_para)
    throw InputError(
        "pathway analysis needs at least one ortho and one para state");

  std::vector<ConversionPathway> out;
  for (size_t o = 0; o < states.size(); ++o) {
    if (states[o].spin != "ortho") continue;
    for (size_t p = 0; p < states.size(); ++p) {
      if (states[p].spin != "para") continue;
      if (states[p].j_dominant != states[o].j_dominant - 1) continue;
      ConversionPathway pw;
      pw.from_index = static_cast<int>(o);
      pw.to_index = static_cast<int>(p);
      pw.from_ket = states[o].ket();
      pw.to_ket = states[p].ket();
      pw.delta_m = states[p].m_value - states[o].m_value;
      if (pw.delta_m == 0) {
        pw.driving_rank = 2;
        pw.open = channels.delta_m0_open;
      } else if (pw.delta_m == 1 || pw.delta_m == -1) {
        pw.driving_rank = 1;
        pw.open = channels.delta_m1_open;
      } else {
        pw.driving_rank = 0;
        pw.open = false;
      }
      out.push_back(std::move(pw));
    }
  }
  return out;
}

double equilibrium_ortho_para_ratio(double temperature, double b_rot,
                                    int j_max) {
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
  if (!(b_rot > 0.0)) throw ConfigError("b_rot must be positive");
  if (j_max < 6) throw ConfigError("j_max must be at least 6");

  double odd = 0.0, even = 0.0;
  for (int j = 0; j <= j_max; ++j) {
    const double pop =
        (2 * j + 1) * std::exp(-b_rot * j * (j + 1) * kHcOverKb / temperature);
    (j % 2 ? odd : even) += pop;
  }
  return 3.0 * odd / even;
}

}  // namespace rotorcage
