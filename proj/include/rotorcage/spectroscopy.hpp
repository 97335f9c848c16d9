#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "rotorcage/common.hpp"
#include "rotorcage/states.hpp"
#include "rotorcage/tensor.hpp"

namespace rotorcage {

// One reported Q1 peak. A peak may blend several coincident components
// (degeneracy) and, when distinct lines of the same class fall within the
// instrument resolution, carries their concatenated labels ("III/IV").
struct TransitionLine {
  std::string label;
  double position = 0.0;  // cm^-1
  std::string cls;        // "allowed" (dm = 0) | "suppressed" (|dm| = 1)
  int delta_m = 0;        // final minus initial |m| label
  int degeneracy = 1;
  std::string from_ket, to_ket;                 // first component's endpoints
  std::vector<std::pair<int, int>> components;  // (v0 index, v1 index)
};

// Q-branch enumeration between two assigned manifolds (pass the v = 0 list
// twice to model identical vibrational manifolds). Allowed components pair
// identical labels; suppressed ones take |m| = 1 initial states into the
// m' = 0 partner of the same (j, n, l). Lines of one (class, spin) family
// closer than `resolution` merge into a single reported peak.
std::vector<TransitionLine> enumerate_q1_transitions(
    const std::vector<AssignedState>& v0, const std::vector<AssignedState>& v1,
    double nu_origin, double resolution);

struct PeakTable {
  std::vector<TransitionLine> peaks;
  double nu_ref = 0.0;
  // The identical-manifold model puts the para line exactly at nu_ref; the
  // level-difference alternative E(|00>) - E(|11>) is reported alongside.
  double para_offset_state_diff = 0.0;
};

// Peak positions from a level map keyed "11", "00", "1bar"-style ("<lambda>
// <m>[bar]" concatenated, e.g. "11bar"); requires at least the four levels
// 11, 00, 11bar, 10.
PeakTable predict_line_positions(const std::map<std::string, double>& levels,
                                 double nu_ref, double resolution = 0.5);

struct ConversionPathway {
  int from_index = 0;  // ortho state
  int to_index = 0;    // para state, j one below
  std::string from_ket, to_ket;
  int delta_m = 0;
  bool open = false;
  int driving_rank = 0;  // 2 for dm = 0, 1 for |dm| = 1, 0 = none
};

// Ortho -> para relaxation channels (delta j = -1 between dominant labels),
// gated by the field's tensor content.
std::vector<ConversionPathway> conversion_pathways(
    const std::vector<AssignedState>& states,
    const ConversionChannels& channels);

// Boltzmann ortho:para ratio with nuclear-spin weights 3:1 over rotor levels
// up to j_max.
double equilibrium_ortho_para_ratio(double temperature, double b_rot,
                                    int j_max);

std::string roman_label(int value);  // 1 -> "I", 4 -> "IV", ...

}  // namespace rotorcage
