#pragma once

#include "lrvf/mdp.hpp"

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace lrvf {

// Plain-text grid layout. Cell characters: S start, G goal, H hole, F free.
// Actions are 0=up, 1=right, 2=down, 3=left; moving into a wall stays put.
// With slip s, the intended direction is taken with probability 1 - 2s and
// each perpendicular direction with probability s (slip = 1/3 makes all
// three equally likely). Goal and hole cells are terminal self-loops with
// zero reward; entering them pays goal_reward / hole_reward once.
struct GridworldSpec {
  std::vector<std::string> rows;
  double slip = 0.0;
  double goal_reward = 1.0;
  double hole_reward = 0.0;
  double step_reward = 0.0;
  double discount = 0.9;
  int max_steps = 200;  // rollout cap; the MDP itself is unbounded

  int height() const { return static_cast<int>(rows.size()); }
  int width() const { return rows.empty() ? 0 : static_cast<int>(rows[0].size()); }
  int cell(int r, int c) const { return r * width() + c; }

  void validate() const {
    require(!rows.empty() && !rows[0].empty(), "gridworld: empty layout");
    int goals = 0, starts = 0, nonterminal = 0;
    for (const std::string& row : rows) {
      require(static_cast<int>(row.size()) == width(), "gridworld: ragged layout rows");
      for (char ch : row) {
        switch (ch) {
          case 'G': ++goals; break;
          case 'H': break;
          case 'S': ++starts; ++nonterminal; break;
          case 'F': ++nonterminal; break;
          default: fail(std::string("gridworld: unknown cell character '") + ch + "'");
        }
      }
    }
    require(goals == 1, "gridworld: layout must contain exactly one goal");
    require(starts <= 1, "gridworld: layout must contain at most one start");
    require(nonterminal >= 1, "gridworld: layout needs at least one non-terminal cell");
    require(slip >= 0.0 && slip <= 0.5, "gridworld: slip must be in [0, 0.5]");
  }

  bool terminal_cell(int r, int c) const {
    const char ch = rows[r][c];
    return ch == 'G' || ch == 'H';
  }

  int start_state() const {
    for (int r = 0; r < height(); ++r)
      for (int c = 0; c < width(); ++c)
        if (rows[r][c] == 'S') return cell(r, c);
    fail("gridworld: layout has no start cell");
  }

  int goal_state() const {
    for (int r = 0; r < height(); ++r)
      for (int c = 0; c < width(); ++c)
        if (rows[r][c] == 'G') return cell(r, c);
    fail("gridworld: layout has no goal cell");
  }
};

inline GridworldSpec parse_grid_layout(std::istream& in) {
  GridworldSpec spec;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    spec.rows.push_back(line);
  }
  return spec;
}

inline GridworldSpec load_grid_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("gridworld: cannot open layout file " + path);
  return parse_grid_layout(in);
}

inline TabularMdp build_gridworld(const GridworldSpec& spec) {
  spec.validate();
  const int h = spec.height(), w = spec.width();
  const int num_states = h * w, num_actions = 4;
  const int goal = spec.goal_state();

  static constexpr int kDr[4] = {-1, 0, 1, 0};
  static constexpr int kDc[4] = {0, 1, 0, -1};
  auto move = [&](int r, int c, int a) {
    const int nr = r + kDr[a], nc = c + kDc[a];
    if (nr < 0 || nr >= h || nc < 0 || nc >= w) return spec.cell(r, c);
    return spec.cell(nr, nc);
  };
  auto cell_char = [&](int s) { return spec.rows[s / w][s % w]; };

  TabularMdp mdp;
  mdp.num_states = num_states;
  mdp.num_actions = num_actions;
  mdp.discount = spec.discount;
  mdp.transition = Mat::Zero(static_cast<Eigen::Index>(num_states) * num_actions, num_states);
  mdp.reward = Vec::Zero(static_cast<Eigen::Index>(num_states) * num_actions);

  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const int s = spec.cell(r, c);
      for (int a = 0; a < num_actions; ++a) {
        const std::int64_t idx = mdp.sa(s, a);
        if (spec.terminal_cell(r, c)) {
          mdp.transition(idx, s) = 1.0;
          continue;
        }
        // Intended direction plus the two perpendicular slips.
        const int candidates[3] = {a, (a + 1) % 4, (a + 3) % 4};
        const double probs[3] = {1.0 - 2.0 * spec.slip, spec.slip, spec.slip};
        double expected = spec.step_reward;
        for (int i = 0; i < 3; ++i) {
          if (probs[i] == 0.0) continue;
          const int ns = move(r, c, candidates[i]);
          mdp.transition(idx, ns) += probs[i];
          if (ns == goal)
            expected += probs[i] * spec.goal_reward;
          else if (cell_char(ns) == 'H')
            expected += probs[i] * spec.hole_reward;
        }
        mdp.reward(idx) = expected;
      }
    }
  mdp.validate();
  return mdp;
}

}  // namespace lrvf
