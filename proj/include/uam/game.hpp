#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace uam {

using Profile = std::pair<int, int>;  // (row player action, column player action)

struct EquilibriumReport {
  std::vector<Profile> strict_nash;
  std::vector<Profile> weak_nash;  // includes the strict ones
  Profile stackelberg{0, 0};       // row player leads
  double stackelberg_leader_payoff = 0.0;
};

/// Pure-strategy analysis of a bimatrix game given as payoffs (higher is
/// better). P1(i, j) and P2(i, j) are the payoffs of the row and column
/// players when row plays i and column plays j.
template <typename D1, typename D2>
EquilibriumReport enumerate_equilibria(const Eigen::MatrixBase<D1>& p1, const Eigen::MatrixBase<D2>& p2) {
  const Eigen::Index n = p1.rows();
  const Eigen::Index m = p1.cols();
  EquilibriumReport rep;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      bool strict = true;
      bool weak = true;
      for (Eigen::Index k = 0; k < n; ++k) {
        if (k == i) continue;
        if (p1(k, j) > p1(i, j)) weak = false;
        if (p1(k, j) >= p1(i, j)) strict = false;
      }
      for (Eigen::Index l = 0; l < m; ++l) {
        if (l == j) continue;
        if (p2(i, l) > p2(i, j)) weak = false;
        if (p2(i, l) >= p2(i, j)) strict = false;
      }
      const Profile prof{static_cast<int>(i), static_cast<int>(j)};
      if (weak) rep.weak_nash.push_back(prof);
      if (strict) rep.strict_nash.push_back(prof);
    }
  }

  // Leader commits; the follower best-responds and, among its tied best
  // responses, is assumed to pick the one worst for the leader.
  std::optional<double> best;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double br = p2.row(i).maxCoeff();
    Eigen::Index worst = -1;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (p2(i, j) != br) continue;
      if (worst < 0 || p1(i, j) < p1(i, worst)) worst = j;
    }
    const double v = p1(i, worst);
    if (!best || v > *best) {
      best = v;
      rep.stackelberg = {static_cast<int>(i), static_cast<int>(worst)};
    }
  }
  rep.stackelberg_leader_payoff = best.value_or(0.0);
  return rep;
}

/// A named bimatrix game, e.g. the one-step merge interaction.
struct BimatrixGame {
  std::vector<std::string> actions;
  Eigen::MatrixXd p1;
  Eigen::MatrixXd p2;
};

/// Merge interaction between two aircraft approaching a shared node with
/// actions (speed up, hold, slow down): every profile except one aircraft
/// yielding while the other goes first is a near collision.
BimatrixGame merge_game();

}  // namespace uam
