#include "ierg/simulation.hpp"

#include <algorithm>
#include <string>

#include "ierg/error.hpp"
#include "ierg/rng.hpp"

namespace ierg {

namespace {

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

bool contains(const std::vector<std::size_t>& v, std::size_t g) { return std::find(v.begin(), v.end(), g) != v.end(); }

}  // namespace

std::vector<std::vector<std::size_t>> block_class_mapping(std::size_t classes, std::size_t groups) {
  std::vector<std::vector<std::size_t>> mapping(classes);
  for (std::size_t g = 0; g < groups; ++g) mapping[g * classes / groups].push_back(g);
  return mapping;
}

void validate(const SimDesign& d) {
  if (d.n < 1 || d.p < 2) throw ValidationError("design needs n >= 1 and p >= 2");
  if (d.groups < 1 || d.p % d.groups != 0) {
    throw ValidationError("p=" + std::to_string(d.p) + " must be divisible by the number of groups (" +
                          std::to_string(d.groups) + ")");
  }
  if (d.classes < 1 || d.n % d.classes != 0) {
    throw ValidationError("n=" + std::to_string(d.n) + " must be divisible by the number of classes (" +
                          std::to_string(d.classes) + ")");
  }
  if (d.class_inside_groups.size() != d.classes) {
    throw ValidationError("class-to-group mapping must have one entry per class");
  }
  for (const auto& gs : d.class_inside_groups) {
    for (auto g : gs) {
      if (g >= d.groups) throw ValidationError("class mapping names group " + std::to_string(g) + " out of range");
    }
  }
  for (double v : {d.p11, d.p12, d.p21, d.p22, d.rho}) {
    if (!in_unit(v)) throw ValidationError("design probabilities must lie in [0, 1]");
  }
  if (d.p21 > d.p11) throw ValidationError("outside-class probability p21 must not exceed p11");
  if (d.p22 > d.p12) throw ValidationError("outside-class probability p22 must not exceed p12");
  if (!d.base_easiness.empty()) {
    if (d.base_easiness.size() != d.p) throw ValidationError("base easiness needs one value per item");
    for (double v : d.base_easiness) {
      if (!in_unit(v)) throw ValidationError("base easiness values must lie in [0, 1]");
    }
  }
}

std::size_t item_group(const SimDesign& d, std::size_t item) { return item / (d.p / d.groups); }

std::size_t respondent_class(const SimDesign& d, std::size_t respondent) { return respondent / (d.n / d.classes); }

SimDataset generate_dataset(const SimDesign& d) {
  validate(d);
  const std::size_t per_group = d.p / d.groups;
  SimDataset out{ItemResponseMatrix(d.n, d.p), std::vector<std::size_t>(d.n), std::vector<std::size_t>(d.p)};
  for (std::size_t j = 0; j < d.p; ++j) out.item_group[j] = item_group(d, j);

  Rng rng(d.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  // One uniform per decision, drawn whether or not it is used.
  for (std::size_t r = 0; r < d.n; ++r) {
    const std::size_t c = respondent_class(d, r);
    out.respondent_class[r] = c;
    for (std::size_t g = 0; g < d.groups; ++g) {
      const bool intended_inside = contains(d.class_inside_groups[c], g);
      const double u_status = unif(rng);
      const bool inside = intended_inside ? (u_status < d.p11) : !(u_status < d.p21);
      bool previous = false;
      for (std::size_t t = 0; t < per_group; ++t) {
        const std::size_t j = g * per_group + t;
        double prob = 0.0;
        if (t == 0) {
          prob = inside ? d.p12 : d.p22;
        } else if (previous) {
          prob = d.rho;
        } else {
          prob = d.base_easiness.empty() ? 0.5 : d.base_easiness[j];
        }
        previous = unif(rng) < prob;
        out.x.set(r, j, previous);
      }
    }
  }
  return out;
}

SignedAdjacency true_signed_adjacency(const SimDesign& d) {
  validate(d);
  SignedAdjacency a(d.p, d.p, 0);
  for (std::size_t j = 0; j < d.p; ++j) {
    for (std::size_t k = j + 1; k < d.p; ++k) {
      const std::size_t gj = item_group(d, j);
      const std::size_t gk = item_group(d, k);
      int sign = 0;
      if (gj == gk) {
        sign = 1;
      } else {
        bool together = false;
        bool any_involved = false;
        bool always_split = true;
        for (const auto& inside : d.class_inside_groups) {
          const bool ij = contains(inside, gj);
          const bool ik = contains(inside, gk);
          if (ij && ik) together = true;
          if (ij || ik) {
            any_involved = true;
            if (ij == ik) always_split = false;
          }
        }
        if (together) {
          sign = 1;
        } else if (any_involved && always_split) {
          sign = -1;
        }
      }
      a(j, k) = a(k, j) = sign;
    }
  }
  return a;
}

}  // namespace ierg
