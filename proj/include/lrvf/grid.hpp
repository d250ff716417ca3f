#pragma once

#include "lrvf/common.hpp"
#include "lrvf/env.hpp"

#include <cmath>
#include <vector>

namespace lrvf {

// Uniform bucketing of the continuous state/action boxes. Values are clipped
// to the bounds; bucket = floor((v - low) / (high - low) * C) with v = high
// mapping to the last bucket.
struct DiscretizationGrid {
  std::vector<int> state_buckets;
  std::vector<int> action_buckets;
  std::vector<DimBounds> state_bounds;
  std::vector<DimBounds> action_bounds;

  static DiscretizationGrid make(const ContinuousSpec& spec, std::vector<int> state_buckets,
                                 std::vector<int> action_buckets) {
    DiscretizationGrid g;
    g.state_buckets = std::move(state_buckets);
    g.action_buckets = std::move(action_buckets);
    g.state_bounds = spec.state_dims;
    g.action_bounds = spec.action_dims;
    g.validate();
    return g;
  }

  void validate() const {
    require(state_buckets.size() == state_bounds.size(),
            "DiscretizationGrid: state bucket count mismatch");
    require(action_buckets.size() == action_bounds.size(),
            "DiscretizationGrid: action bucket count mismatch");
    for (int c : state_buckets) require(c >= 2, "DiscretizationGrid: bucket counts must be >= 2");
    for (int c : action_buckets) require(c >= 2, "DiscretizationGrid: bucket counts must be >= 2");
  }

  std::vector<int> all_dims() const {
    std::vector<int> dims = state_buckets;
    dims.insert(dims.end(), action_buckets.begin(), action_buckets.end());
    return dims;
  }

  std::int64_t num_states() const { return index_product(state_buckets); }
  std::int64_t num_actions() const { return index_product(action_buckets); }

  static int bucket_of(double v, const DimBounds& b, int count) {
    const double clipped = std::clamp(v, b.low, b.high);
    const int idx = static_cast<int>(std::floor((clipped - b.low) / (b.high - b.low) * count));
    return std::min(idx, count - 1);
  }

  static double center_of(int idx, const DimBounds& b, int count) {
    require(idx >= 0 && idx < count, "DiscretizationGrid: index out of range");
    return b.low + (idx + 0.5) * (b.high - b.low) / count;
  }

  MultiIndex discretize_state(const Vec& v) const {
    require(v.size() == static_cast<Eigen::Index>(state_bounds.size()),
            "discretize_state: vector length mismatch");
    MultiIndex idx(state_bounds.size());
    for (std::size_t i = 0; i < state_bounds.size(); ++i)
      idx[i] = bucket_of(v[static_cast<Eigen::Index>(i)], state_bounds[i], state_buckets[i]);
    return idx;
  }

  MultiIndex discretize_action(const Vec& v) const {
    require(v.size() == static_cast<Eigen::Index>(action_bounds.size()),
            "discretize_action: vector length mismatch");
    MultiIndex idx(action_bounds.size());
    for (std::size_t i = 0; i < action_bounds.size(); ++i)
      idx[i] = bucket_of(v[static_cast<Eigen::Index>(i)], action_bounds[i], action_buckets[i]);
    return idx;
  }

  // Bucket centers of an action multi-index.
  Vec action_from_index(const MultiIndex& idx) const {
    require(idx.size() == action_bounds.size(), "action_from_index: index length mismatch");
    Vec v(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i)
      v[static_cast<Eigen::Index>(i)] = center_of(idx[i], action_bounds[i], action_buckets[i]);
    return v;
  }

  Vec state_from_index(const MultiIndex& idx) const {
    require(idx.size() == state_bounds.size(), "state_from_index: index length mismatch");
    Vec v(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i)
      v[static_cast<Eigen::Index>(i)] = center_of(idx[i], state_bounds[i], state_buckets[i]);
    return v;
  }
};

// Grouping of the D = D_S + D_A dimensions into super-dimensions. Groups are
// disjoint, cover every dimension, and never mix state with action dims.
// A group's flat index is the mixed-radix combination of its member indices,
// first member most significant.
struct DimensionPartition {
  std::vector<std::vector<int>> groups;

  static DimensionPartition trivial(int num_dims) {
    DimensionPartition p;
    for (int d = 0; d < num_dims; ++d) p.groups.push_back({d});
    return p;
  }

  void validate(int num_state_dims, int num_action_dims) const {
    const int total = num_state_dims + num_action_dims;
    std::vector<bool> seen(total, false);
    bool seen_action_group = false;
    for (const std::vector<int>& g : groups) {
      require(!g.empty(), "DimensionPartition: empty group");
      const bool is_action = g[0] >= num_state_dims;
      require(is_action || !seen_action_group,
              "DimensionPartition: state groups must precede action groups");
      if (is_action) seen_action_group = true;
      for (int d : g) {
        require(d >= 0 && d < total, "DimensionPartition: dimension out of range");
        require(!seen[d], "DimensionPartition: dimension appears twice");
        require((d >= num_state_dims) == is_action,
                "DimensionPartition: group mixes state and action dimensions");
        seen[d] = true;
      }
    }
    for (bool s : seen) require(s, "DimensionPartition: not all dimensions covered");
  }

  int num_state_groups(int num_state_dims) const {
    int n = 0;
    for (const std::vector<int>& g : groups)
      if (g[0] < num_state_dims) ++n;
    return n;
  }

  std::vector<int> grouped_sizes(const std::vector<int>& dims) const {
    std::vector<int> sizes;
    sizes.reserve(groups.size());
    for (const std::vector<int>& g : groups) {
      std::int64_t s = 1;
      for (int d : g) s *= dims[d];
      sizes.push_back(static_cast<int>(s));
    }
    return sizes;
  }

  MultiIndex apply(const MultiIndex& full, const std::vector<int>& dims) const {
    MultiIndex grouped(groups.size());
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
      std::int64_t flat = 0;
      for (int d : groups[gi]) flat = flat * dims[d] + full[d];
      grouped[gi] = static_cast<int>(flat);
    }
    return grouped;
  }

  MultiIndex invert(const MultiIndex& grouped, const std::vector<int>& dims) const {
    MultiIndex full(dims.size());
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
      std::int64_t flat = grouped[gi];
      for (std::size_t j = groups[gi].size(); j-- > 0;) {
        const int d = groups[gi][j];
        full[d] = static_cast<int>(flat % dims[d]);
        flat /= dims[d];
      }
    }
    return full;
  }
};

}  // namespace lrvf
