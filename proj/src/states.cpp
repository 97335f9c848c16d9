#include "rotorcage/states.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <map>
#include <tuple>

#include "rotorcage/tensor.hpp"

namespace rotorcage {

std::string AssignedState::m_label() const {
  std::string s = std::to_string(m_value);
  if (m_bar) s += "bar";
  return s;
}

std::string AssignedState::ket() const {
  return "|" + std::to_string(lambda) + m_label() + ">";
}

ReducedDensity reduce_densities(const Eigen::VectorXd& v, const Grid3D& grid) {
  if (v.size() != grid.dimension())
    throw InputError("state vector length does not match the grid");
  const double norm2 = v.squaredNorm();
  if (!(norm2 > 0.0) || !std::isfinite(norm2))
    throw NumericError("state vector has zero or non-finite norm");

  ReducedDensity d;
  d.radial = Eigen::VectorXd::Zero(grid.nr);
  d.angular = Eigen::MatrixXd::Zero(grid.ntheta, grid.nphi);
  for (int i = 0; i < grid.nr; ++i)
    for (int j = 0; j < grid.ntheta; ++j)
      for (int k = 0; k < grid.nphi; ++k) {
        const double a = v[grid.index(i, j, k)];
        d.radial[i] += a * a;
        d.angular(j, k) += a * a;
      }
  d.radial /= norm2 * grid.dr;
  for (int j = 0; j < grid.ntheta; ++j)
    d.angular.row(j) /= norm2 * grid.sin_theta[j] * grid.dtheta * grid.dphi;
  return d;
}

int count_radial_nodes(const Eigen::VectorXd& v, const Grid3D& grid,
                       double floor_rel) {
  if (v.size() != grid.dimension())
    throw InputError("state vector length does not match the grid");
  if (!(floor_rel > 0.0)) throw ConfigError("node floor must be positive");
  if (!(v.squaredNorm() > 0.0))
    throw NumericError("state vector has zero norm");

  const int block = grid.ntheta * grid.nphi;
  Eigen::MatrixXd r(grid.nr, block);
  for (int i = 0; i < grid.nr; ++i)
    for (int a = 0; a < block; ++a) r(i, a) = v[i * block + a];

  // Leading left singular vector via the small nr x nr Gram matrix.
  const Eigen::MatrixXd gram = r * r.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  const Eigen::VectorXd u = es.eigenvectors().col(grid.nr - 1);

  const double floor_abs = floor_rel * u.cwiseAbs().maxCoeff();
  int nodes = 0;
  int prev = 0;
  for (int i = 0; i < grid.nr; ++i) {
    if (std::abs(u[i]) < floor_abs) continue;
    const int s = u[i] > 0.0 ? 1 : -1;
    if (prev != 0 && s != prev) ++nodes;
    prev = s;
  }
  return nodes;
}

namespace {

int jm_index(int j, int m) { return j * j + j + m; }

}  // namespace

std::vector<AssignedState> assign_quantum_numbers(const EigenPairs& pairs,
                                                  const Grid3D& grid,
                                                  const ModelParams& params,
                                                  const AssignOptions& opt) {
  params.validate();
  const int n_states = static_cast<int>(pairs.values.size());
  if (n_states == 0) throw InputError("no eigenpairs to assign");
  if (pairs.vectors.rows() != grid.dimension() ||
      pairs.vectors.cols() != n_states)
    throw InputError("eigenvector block does not match the grid dimension");
  if (opt.j_max < 1) throw ConfigError("j_max must be at least 1");
  if (!(opt.purity_floor >= 0.0 && opt.purity_floor <= 1.0))
    throw ConfigError("purity floor must lie in [0, 1]");
  if (!(opt.cluster_tol >= 0.0))
    throw ConfigError("cluster_tol must be nonnegative");

  const int block = grid.ntheta * grid.nphi;
  const int n_jm = (opt.j_max + 1) * (opt.j_max + 1);

  // conj(Y_jm) on the angular nodes, folded with sqrt of the cell measure so
  // a plain dot product against a psi-tilde slice is the overlap integral.
  Eigen::MatrixXd ytr(block, n_jm), yti(block, n_jm);
  for (int j = 0; j <= opt.j_max; ++j)
    for (int m = -j; m <= j; ++m) {
      const int col = jm_index(j, m);
      for (int jt = 0; jt < grid.ntheta; ++jt) {
        const double f =
            std::sqrt(grid.sin_theta[jt] * grid.dtheta * grid.dphi);
        for (int kp = 0; kp < grid.nphi; ++kp) {
          const std::complex<double> y = std::conj(
              sph_harm(j, m, grid.theta_nodes[jt], grid.phi_nodes[kp]));
          ytr(jt * grid.nphi + kp, col) = y.real() * f;
          yti(jt * grid.nphi + kp, col) = y.imag() * f;
        }
      }
    }

  std::vector<AssignedState> out(n_states);
  Eigen::MatrixXd weights(n_states, opt.j_max + 1);  // W_M per state

  for (int s = 0; s < n_states; ++s) {
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>
        r(pairs.vectors.col(s).data(), grid.nr, block);
    const Eigen::MatrixXd cr = r * ytr;
    const Eigen::MatrixXd ci = r * yti;
    const Eigen::RowVectorXd p =
        (cr.array().square() + ci.array().square()).colwise().sum();

    AssignedState& st = out[s];
    st.energy = pairs.values[s];
    st.overlap = Eigen::MatrixXd::Zero(opt.j_max + 1, 2 * opt.j_max + 1);
    for (int j = 0; j <= opt.j_max; ++j)
      for (int m = -j; m <= j; ++m)
        st.overlap(j, m + opt.j_max) = p[jm_index(j, m)];

    int j_dom = 0;
    double best = -1.0;
    for (int j = 0; j <= opt.j_max; ++j) {
      const double pj = st.overlap.row(j).sum();
      if (pj > best) {
        best = pj;
        j_dom = j;
      }
    }
    st.j_dominant = j_dom;
    // quadrature can overshoot the exact weight by O(dtheta^2); purity is a
    // probability and stays capped
    st.purity = std::min(best, 1.0);
    st.lambda = j_dom;
    st.spin = (j_dom % 2 == 0) ? "para" : "ortho";
    st.n = count_radial_nodes(pairs.vectors.col(s), grid, opt.node_floor);
    st.l = st.n % 2;

    for (int mm = 0; mm <= opt.j_max; ++mm) {
      double w = 0.0;
      for (int j = 0; j <= opt.j_max; ++j) {
        w += st.overlap(j, opt.j_max + mm);
        if (mm > 0) w += st.overlap(j, opt.j_max - mm);
      }
      weights(s, mm) = w;
    }
    int m_best = 0;
    double wbest = -1.0;
    for (int mm = 0; mm <= opt.j_max; ++mm)
      if (weights(s, mm) > wbest) {
        wbest = weights(s, mm);
        m_best = mm;
      }
    st.m_value = m_best;

    if (st.purity < opt.purity_floor) {
      st.ambiguous = true;
      if (opt.strict) {
        char buf[192];
        std::snprintf(buf, sizeof buf,
                      "state %d (energy %.6g) has dominant-j weight %.4g "
                      "below the %.3g purity floor",
                      s, st.energy, st.purity, opt.purity_floor);
        throw AmbiguousAssignment(buf, s, st.overlap);
      }
    }
  }

  // Degenerate clusters: consecutive states closer than cluster_tol.
  std::vector<std::pair<int, int>> clusters;  // [begin, end)
  int begin = 0;
  for (int s = 1; s <= n_states; ++s) {
    if (s == n_states ||
        pairs.values[s] - pairs.values[s - 1] > opt.cluster_tol) {
      clusters.emplace_back(begin, s);
      begin = s;
    }
  }
  for (int cid = 0; cid < static_cast<int>(clusters.size()); ++cid)
    for (int s = clusters[cid].first; s < clusters[cid].second; ++s) {
      out[s].cluster_id = cid;
      out[s].cluster_size = clusters[cid].second - clusters[cid].first;
    }

  // Inside a cluster the eigenvectors are arbitrary mixtures, so m labels can
  // collide; reassign the colliding group greedily by azimuthal weight over
  // the 2j+1 label slots (m = 0 once, each m >= 1 twice).
  auto relabel_group = [&](const std::vector<int>& members) {
    const int j = out[members[0]].j_dominant;
    std::map<int, int> count;
    for (int s : members) ++count[out[s].m_value];
    bool conflict = false;
    for (const auto& [mv, c] : count)
      if ((mv == 0 && c > 1) || (mv > 0 && c > 2) || mv > j) conflict = true;
    if (!conflict) return;

    if (static_cast<int>(members.size()) > 2 * j + 1) {
      char buf[160];
      std::snprintf(buf, sizeof buf,
                    "cluster near energy %.6g holds %zu states with "
                    "j_dominant=%d, more than the 2j+1 available labels",
                    out[members[0]].energy, members.size(), j);
      if (opt.strict) throw ClusterLabelError(buf);
      for (int s : members) out[s].ambiguous = true;
      return;
    }
    std::vector<int> capacity(j + 1, 2);
    capacity[0] = 1;
    std::vector<char> done(members.size(), 0);
    for (size_t pick = 0; pick < members.size(); ++pick) {
      double best = -1.0;
      int bi = -1, bm = -1;
      for (size_t i = 0; i < members.size(); ++i) {
        if (done[i]) continue;
        for (int mm = 0; mm <= j; ++mm) {
          if (capacity[mm] == 0) continue;
          if (weights(members[i], mm) > best) {
            best = weights(members[i], mm);
            bi = static_cast<int>(i);
            bm = mm;
          }
        }
      }
      done[bi] = 1;
      --capacity[bm];
      out[members[bi]].m_value = bm;
    }
  };

  for (const auto& [cb, ce] : clusters) {
    if (ce - cb < 2) continue;
    std::map<std::tuple<int, int, int>, std::vector<int>> groups;
    for (int s = cb; s < ce; ++s)
      groups[{out[s].n, out[s].l, out[s].j_dominant}].push_back(s);
    for (const auto& [key, members] : groups)
      if (members.size() > 1) relabel_group(members);
  }

  // Split |m| pairs: ordered by energy, the lower member keeps the plain
  // label and the upper gets the bar.
  std::map<std::tuple<int, int, int, int>, std::vector<int>> bar_groups;
  for (int s = 0; s < n_states; ++s)
    if (out[s].m_value >= 1)
      bar_groups[{out[s].n, out[s].l, out[s].j_dominant, out[s].m_value}]
          .push_back(s);
  for (const auto& [key, members] : bar_groups)
    for (size_t i = 0; i < members.size(); ++i)
      out[members[i]].m_bar = (i % 2 == 1);

  // Label uniqueness within each cluster.
  for (const auto& [cb, ce] : clusters) {
    std::map<std::tuple<int, int, int, int, bool>, int> seen;
    for (int s = cb; s < ce; ++s) {
      const auto key = std::make_tuple(out[s].n, out[s].l, out[s].lambda,
                                       out[s].m_value, out[s].m_bar);
      const auto [it, fresh] = seen.emplace(key, s);
      if (!fresh) {
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "states %d and %d (cluster at %.6g) share the label "
                      "%s with n=%d",
                      it->second, s, out[s].energy, out[s].ket().c_str(),
                      out[s].n);
        if (opt.strict) throw ClusterLabelError(buf);
        out[s].ambiguous = true;
        out[it->second].ambiguous = true;
      }
    }
  }

  return out;
}

}  // namespace rotorcage
