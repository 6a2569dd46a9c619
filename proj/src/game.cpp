#include "uam/game.hpp"

namespace uam {

BimatrixGame merge_game() {
  BimatrixGame g;
  g.actions = {"speed up", "hold", "slow down"};
  g.p1.resize(3, 3);
  g.p2.resize(3, 3);
  // Going first costs nothing, yielding costs the speed-change penalty and
  // anything else ends in a near collision.
  g.p1 << -1, -1, 0,
          -1, -1, -1,
          -0.01, -1, -1;
  g.p2 << -1, -1, -0.01,
          -1, -1, -1,
          0, -1, -1;
  return g;
}

}  // namespace uam
