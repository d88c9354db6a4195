#pragma once

// Synthetic item-response generator with respondent classes, item groups and
// within-group local dependence.
//
// Each class has a set of intended inside-class item groups. For every
// respondent and group, an effective status is drawn (inside with probability
// p11 when intended inside; outside with probability p21 when intended
// outside). The group's first item is correct with probability p12 (inside)
// or p22 (outside); each later item is correct with probability rho when the
// previous item in the group was correct, else with the item's base easiness.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ierg/model.hpp"

namespace ierg {

struct SimDesign {
  std::size_t n = 300;
  std::size_t p = 24;
  std::size_t groups = 6;
  std::size_t classes = 3;
  /// class -> intended inside-class groups (0-based).
  std::vector<std::vector<std::size_t>> class_inside_groups = {{0, 1}, {4, 5}, {2, 3}};
  double p11 = 0.7;
  double p12 = 0.7;
  double p21 = 0.5;
  double p22 = 0.5;
  double rho = 0.8;
  /// Per-item correct probability outside the rho chain; empty means 0.5.
  std::vector<double> base_easiness;
  std::uint64_t seed = 1;
};

/// Contiguous blocks of groups per class; used when classes/groups differ
/// from the default 3/6 layout.
std::vector<std::vector<std::size_t>> block_class_mapping(std::size_t classes, std::size_t groups);

void validate(const SimDesign& design);

std::size_t item_group(const SimDesign& design, std::size_t item);
std::size_t respondent_class(const SimDesign& design, std::size_t respondent);

struct SimDataset {
  ItemResponseMatrix x;
  std::vector<std::size_t> respondent_class;
  std::vector<std::size_t> item_group;
};

SimDataset generate_dataset(const SimDesign& design);

/// +1 within a group or between groups intended inside together for some
/// class; -1 between groups where every class that includes either has
/// exactly one of them inside; 0 otherwise.
SignedAdjacency true_signed_adjacency(const SimDesign& design);

}  // namespace ierg
