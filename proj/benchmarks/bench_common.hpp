#pragma once

#include <random>
#include <vector>

#include "ksgraph/dataset.hpp"

namespace ksgraph::bench {

// Square sparse count matrix with roughly `density` nonzeros, generated from
// a rank-`rank` Poisson intensity so that the spectrum decays.
inline SparseRowMatrix low_rank_counts(Index d, double density, Index rank, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::vector<double>> u(static_cast<std::size_t>(rank)), v(static_cast<std::size_t>(rank));
  for (Index r = 0; r < rank; ++r) {
    for (Index i = 0; i < d; ++i) {
      u[static_cast<std::size_t>(r)].push_back(unif(rng));
      v[static_cast<std::size_t>(r)].push_back(unif(rng));
    }
  }
  std::vector<Eigen::Triplet<double, Index>> triplets;
  std::uniform_int_distribution<Index> col(0, d - 1);
  const auto per_row = static_cast<Index>(density * static_cast<double>(d));
  for (Index i = 0; i < d; ++i) {
    for (Index t = 0; t < per_row; ++t) {
      const Index j = col(rng);
      double rate = 0.0;
      for (Index r = 0; r < rank; ++r) {
        rate += u[static_cast<std::size_t>(r)][static_cast<std::size_t>(i)] *
                v[static_cast<std::size_t>(r)][static_cast<std::size_t>(j)];
      }
      std::poisson_distribution<int> counts(1.0 + 4.0 * rate);
      const int c = counts(rng);
      if (c > 0) triplets.emplace_back(i, j, static_cast<double>(c));
    }
  }
  SparseRowMatrix m(d, d);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

}  // namespace ksgraph::bench
