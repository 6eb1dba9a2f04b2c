#pragma once

#include "episcan/lattice.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace episcan {

using Lag = std::vector<std::int64_t>;

enum class KernelKind { ExponentialAR, BartlettMA };

std::string to_string(KernelKind k);
KernelKind parse_kernel_kind(const std::string& text);  // "ar" | "ma"

/// Covariance kernel of a multiplier field together with its bandwidth q >= 1.
struct KernelSpec {
    KernelKind kind = KernelKind::ExponentialAR;
    std::int64_t q = 1;

    void validate() const;
    bool operator==(const KernelSpec&) const = default;
};

/// Product-form kernel at lag h:
///   exponential  prod_l exp(-|h_l| / q)
///   Bartlett     prod_l (1 - |h_l| / (q + 1))^+
double kernel_value(const KernelSpec& spec, std::span<const std::int64_t> h);

/// Half-width of the moving-average window, floor(q / 2).
std::int64_t ma_half_width(std::int64_t q);

/// Bandwidth whose Bartlett kernel is the exact covariance of the moving-average
/// field, 2 * floor(q / 2). Equals q for even q.
std::int64_t ma_effective_bandwidth(std::int64_t q);

using Rng = std::mt19937_64;

/// Gaussian multiplier field realization V(i), one value per lattice point.
struct MultiplierField {
    LatticeShape shape;
    std::vector<double> values;
    KernelSpec spec;
    std::uint64_t seed = 0;
};

/// Applies a stationary AR(1) filter y_1 = x_1, y_t = a y_{t-1} + sqrt(1 - a^2) x_t
/// along every axis in turn. Maps i.i.d. N(0,1) input to a field with covariance
/// prod_l a^{|h_l|} and unit variance.
void separable_ar_filter(const LatticeShape& shape, double a, std::span<double> values);

/// Ornstein-Uhlenbeck sheet: covariance prod_l exp(-|h_l| / q).
MultiplierField sample_ar_field(const LatticeShape& shape, std::int64_t q, Rng& rng);

/// Moving-average field: normalized box sum of i.i.d. N(0,1) innovations over a
/// window of half-width floor(q/2) per axis; Bartlett covariance.
MultiplierField sample_ma_field(const LatticeShape& shape, std::int64_t q, Rng& rng);

/// Dispatches on spec.kind.
MultiplierField sample_multiplier(const KernelSpec& spec, const LatticeShape& shape, Rng& rng);

/// Same, seeding a fresh generator from `seed` and recording it.
MultiplierField sample_multiplier(const KernelSpec& spec, const LatticeShape& shape, std::uint64_t seed);

/// Mean of V(i) V(i + lag) over replicates and all positions with i + lag in the lattice.
double empirical_multiplier_cov(const KernelSpec& spec, const LatticeShape& shape, std::span<const std::int64_t> lag,
                                Index replicates, Rng& rng);

/// Per-replicate averages of V(i) V(i + lag); their spread gives a Monte Carlo standard error.
std::vector<double> multiplier_cov_samples(const KernelSpec& spec, const LatticeShape& shape,
                                           std::span<const std::int64_t> lag, Index replicates, Rng& rng);

/// True when q >= sqrt(min n_l), where the bootstrap's bandwidth growth condition
/// is unlikely to hold.
bool bandwidth_too_large(const KernelSpec& spec, const LatticeShape& shape);

/// Seed for stream `stream` of a master seed (splitmix64 mixing); independent
/// replicates use distinct streams.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

}  // namespace episcan
