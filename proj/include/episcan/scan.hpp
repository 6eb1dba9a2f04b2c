#pragma once

#include "episcan/hilbert_gram.hpp"
#include "episcan/lattice.hpp"
#include "episcan/multiplier.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace episcan {

/// How the reported statistic relates to M = max_B Q(B) / N.
enum class StatisticConvention {
    Norm,         // T = sqrt(M), the mean-change statistic
    SquaredNorm,  // T = M, the Cramer-von Mises statistic
};

struct ScanResult {
    double max_squared = 0.0;
    double statistic = 0.0;
    Block argmax;
    std::uint64_t blocks_evaluated = 0;
    StatisticConvention convention = StatisticConvention::SquaredNorm;
    /// The direct (memory-light, slower) evaluation path was used.
    bool tiled = false;
};

double apply_convention(double max_squared, StatisticConvention c);

struct ScanOptions {
    std::optional<VolumeBounds> bounds;
    std::uint64_t memory_cap_bytes = PairPrefixTensor::kDefaultMemoryCap;
    /// Fall back to the direct evaluation path when the pair prefix tensor would
    /// exceed the memory cap; otherwise rethrow the CapacityError.
    bool allow_tiled = true;
    Summation summation = Summation::Plain;
};

/// Maximizes Q(B) = ||sum_{j in B} Y_j - lambda_B sum_all Y_j||^2 over blocks given
/// only the Gram of the Y_j, optionally rescaled entrywise by s_i s_j. Buffers are
/// kept between calls, so one scanner per worker amortizes allocation.
class GramScanner {
public:
    GramScanner(LatticeShape shape, ScanOptions options = {});

    /// `gram` is N x N row-major; `scale` empty means no rescaling.
    ScanResult scan(std::span<const double> gram, std::span<const double> scale = {},
                    StatisticConvention convention = StatisticConvention::SquaredNorm);

    [[nodiscard]] bool tiled() const { return tiled_; }
    [[nodiscard]] const LatticeShape& shape() const { return shape_; }

private:
    struct Best;
    void scan_prefix(Best& best);
    void reduce_level(Index level, Index volume, Best& best);
    void scan_tiled(std::span<const double> gram, std::span<const double> scale, Best& best);

    LatticeShape shape_;
    ScanOptions options_;
    bool tiled_ = false;
    PairPrefixTensor pair_;
    std::vector<double> row_sums_;
    PrefixTensor row_prefix_;
    double total_ = 0.0;
    // Per-level reduced tensors; level 0 aliases pair_ and the row prefix.
    std::vector<std::vector<double>> pair_levels_;
    std::vector<std::vector<double>> row_levels_;
    std::vector<Index> level_extent_;
    IndexVec lo_;
    IndexVec hi_;
};

/// Scan over a Gram matrix: T = M (squared-norm convention) unless told otherwise.
ScanResult scan_gram(const GramMatrix& g, const ScanOptions& options = {},
                     StatisticConvention convention = StatisticConvention::SquaredNorm);

/// Mean-change scan from vector prefix sums: T_n = sqrt(M).
ScanResult scan_mean_change(const ObservationField& field, const ScanOptions& options = {});

/// Same maximization over a field whose observations are rescaled by s_i (empty = 1).
/// No recentering is applied; callers pass already-centered observations when needed.
ScanResult scan_vector_field(const ObservationField& field, std::span<const double> scale,
                             const ScanOptions& options, StatisticConvention convention);

/// Q(B) / N for a single block, recomputed directly from the Gram.
double block_objective(const GramMatrix& g, const Block& b);

/// The change-set estimate: the maximizing block of a completed scan.
Block estimate_change_set(const ScanResult& r);

using LagWeight = std::function<double(std::span<const std::int64_t>)>;

/// Kernel long-run variance over block b:
///   sum_h w(h) N^{-1} sum_{a, a+h in b} (X_a - mu(a)) (X_{a+h} - mu(a+h))^T,
/// returned symmetrized as a p x p row-major matrix.
std::vector<double> lrv_estimate(const ObservationField& field, const LagWeight& weight, const Block& b,
                                 const MeanAssignment& m);

/// Uses kernel_value(kernel, h) as the lag weight.
std::vector<double> lrv_estimate(const ObservationField& field, const KernelSpec& kernel, const Block& b,
                                 const MeanAssignment& m);

}  // namespace episcan
