#pragma once

#include <cmath>
#include <complex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rfs/basis.hpp"

namespace rfs {

namespace detail {
inline void check_normalized(std::span<const std::complex<double>> psi) {
  double n2 = 0.0;
  for (const auto& a : psi) n2 += std::norm(a);
  if (std::abs(std::sqrt(n2) - 1.0) > 1e-6)
    throw std::invalid_argument("state is not normalized (|psi| = " +
                                std::to_string(std::sqrt(n2)) + ")");
}
}  // namespace detail

// <psi| Pi^(n) |psi> for all n at once: each basis amplitude is binned by its
// count of atoms outside |s>. The projectors are diagonal in this basis, so
// no subset enumeration is needed.
inline std::vector<double> survival_distribution(
    std::span<const std::complex<double>> psi, int n_atoms) {
  detail::check_normalized(psi);
  if (psi.size() != state_dim(n_atoms))
    throw std::invalid_argument("survival_distribution: dimension mismatch");
  std::vector<double> dist(static_cast<std::size_t>(n_atoms) + 1, 0.0);
  for (std::size_t idx = 0; idx < psi.size(); ++idx) {
    double w = std::norm(psi[idx]);
    if (w == 0.0) continue;
    int trapped = n_atoms - count_level(idx, n_atoms, kS);
    dist[static_cast<std::size_t>(trapped)] += w;
  }
  return dist;
}

// Probability that exactly n_target of n_atoms are still trapped (not in |s>).
inline double survival_projection(std::span<const std::complex<double>> psi,
                                  int n_target, int n_atoms) {
  if (n_target < 0 || n_target > n_atoms)
    throw std::invalid_argument("survival_projection: n_target out of range");
  return survival_distribution(psi, n_atoms)[static_cast<std::size_t>(
      n_target)];
}

// Mean trapped-atom number <sum_j (1 - s_ss^j)>.
inline double mean_trapped(std::span<const std::complex<double>> psi,
                           int n_atoms) {
  auto dist = survival_distribution(psi, n_atoms);
  double mean = 0.0;
  for (std::size_t n = 0; n < dist.size(); ++n)
    mean += static_cast<double>(n) * dist[n];
  return mean;
}

inline double poisson_pmf(int n, double mean) {
  if (n < 0) return 0.0;
  return std::exp(n * std::log(mean) - mean - std::lgamma(n + 1.0));
}

struct PoissonAveraged {
  std::vector<double> p;        // P(n), n = 0..N_max, renormalized
  double truncated_weight;      // sum_{N > N_max} P_init(N), excluded
  double mean_n;                // sum_n n P(n)
};

// P(n) = sum_{N=0..N_max} P_init(N) P_N(n) for a Poissonian initial atom
// number with the given mean. `per_n` holds P_N for N = 0..N_max (so
// per_n[0] = {1.0}). The Poisson weight beyond N_max is reported separately
// and excluded; the returned distribution is renormalized over N <= N_max.
inline PoissonAveraged poisson_average(
    const std::vector<std::vector<double>>& per_n, double mean_n_init) {
  if (per_n.empty())
    throw std::invalid_argument("poisson_average: no distributions given");
  if (!(mean_n_init > 0.0))
    throw std::invalid_argument("poisson_average: mean must be > 0");
  int n_max = static_cast<int>(per_n.size()) - 1;
  double covered = 0.0;
  for (int n = 0; n <= n_max; ++n) {
    if (per_n[n].size() != static_cast<std::size_t>(n) + 1)
      throw std::invalid_argument("poisson_average: P_" + std::to_string(n) +
                                  " has wrong length");
    double sum = 0.0;
    for (double v : per_n[n]) sum += v;
    if (std::abs(sum - 1.0) > 1e-6)
      throw std::invalid_argument("poisson_average: P_" + std::to_string(n) +
                                  " is not normalized");
    covered += poisson_pmf(n, mean_n_init);
  }

  PoissonAveraged out;
  out.truncated_weight = 1.0 - covered;
  out.p.assign(static_cast<std::size_t>(n_max) + 1, 0.0);
  for (int n = 0; n <= n_max; ++n) {
    double w = poisson_pmf(n, mean_n_init) / covered;
    for (int k = 0; k <= n; ++k)
      out.p[static_cast<std::size_t>(k)] += w * per_n[n][static_cast<std::size_t>(k)];
  }
  out.mean_n = 0.0;
  for (std::size_t k = 0; k < out.p.size(); ++k)
    out.mean_n += static_cast<double>(k) * out.p[k];
  return out;
}

}  // namespace rfs
