#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace episcan {

using Index = std::size_t;
using IndexVec = std::vector<Index>;

/// Extents (n_1, ..., n_d) of a finite lattice {1..n_1} x ... x {1..n_d}.
///
/// Lattice points are addressed either by a 1-based multi-index or by a flat
/// row-major offset (last axis fastest). Prefix structures live on the padded
/// grid {0..n_1} x ... x {0..n_d}, also row-major.
class LatticeShape {
public:
    LatticeShape() = default;
    explicit LatticeShape(IndexVec dims);

    static LatticeShape cube(Index n, Index d) { return LatticeShape(IndexVec(d, n)); }

    [[nodiscard]] Index dim() const { return dims_.size(); }
    [[nodiscard]] Index extent(Index axis) const { return dims_[axis]; }
    [[nodiscard]] const IndexVec& dims() const { return dims_; }
    [[nodiscard]] Index points() const { return points_; }
    /// Point count of the zero-padded grid, prod(n_l + 1).
    [[nodiscard]] Index padded_points() const { return padded_points_; }
    [[nodiscard]] Index min_extent() const;

    /// Flat offset of the 1-based multi-index `idx`.
    [[nodiscard]] Index flat(std::span<const Index> idx) const;
    /// 1-based multi-index of flat offset `offset`.
    [[nodiscard]] IndexVec unflat(Index offset) const;
    /// Offset on the padded grid for a 0-based corner coordinate (0..n_l per axis).
    [[nodiscard]] Index padded_flat(std::span<const Index> corner) const;

    bool operator==(const LatticeShape&) const = default;

private:
    IndexVec dims_;
    Index points_ = 0;
    Index padded_points_ = 0;
};

/// Half-open integer rectangle (lo, hi]: lattice points j with lo_l < j_l <= hi_l.
struct Block {
    IndexVec lo;
    IndexVec hi;

    [[nodiscard]] Index dim() const { return lo.size(); }
    [[nodiscard]] Index volume() const;
    [[nodiscard]] bool contains(std::span<const Index> point) const;
    [[nodiscard]] std::string to_string() const;

    bool operator==(const Block&) const = default;
};

/// Lexicographic order on (lo, hi); the scan tie-break rule.
bool lex_less(const Block& a, const Block& b);

/// Throws IndexError naming the offending axis unless 0 <= lo < hi <= n on every axis.
void validate_block(const LatticeShape& shape, const Block& b);

/// Inclusive range [min, max] of admissible block volumes.
struct VolumeBounds {
    Index min = 1;
    Index max = static_cast<Index>(-1);

    [[nodiscard]] bool admits(Index volume) const { return volume >= min && volume <= max; }
    /// Bounds eps1*N <= volume <= (1 - eps2)*N.
    static VolumeBounds from_fractions(double eps1, double eps2, Index points);
};

/// Streams every block 0 <= k < m <= n in lexicographic (k, m) order.
class BlockEnumerator {
public:
    explicit BlockEnumerator(LatticeShape shape, std::optional<VolumeBounds> bounds = std::nullopt);

    /// Writes the next admissible block into `out`; false once exhausted.
    bool next(Block& out);

private:
    bool advance_raw();

    LatticeShape shape_;
    std::optional<VolumeBounds> bounds_;
    Block current_;
    bool started_ = false;
    bool done_ = false;
};

std::vector<Block> enumerate_blocks(const LatticeShape& shape,
                                    std::optional<VolumeBounds> bounds = std::nullopt);

/// Number of blocks in a lattice, prod n_l (n_l + 1) / 2.
std::uint64_t block_count(const LatticeShape& shape);

enum class Summation { Plain, Compensated };

/// Cumulative sums of a (possibly vector-valued) lattice field over the padded grid.
/// Entry at corner m holds the sum of the field over (0, m]; faces with a zero
/// coordinate are zero.
class PrefixTensor {
public:
    PrefixTensor() = default;

    /// `field` holds `channels` values per lattice point, point-major.
    static PrefixTensor build(const LatticeShape& shape, std::span<const double> field,
                              Index channels = 1, Summation mode = Summation::Plain);

    [[nodiscard]] const LatticeShape& shape() const { return shape_; }
    [[nodiscard]] Index channels() const { return channels_; }
    [[nodiscard]] std::span<const double> values() const { return values_; }
    [[nodiscard]] double at(std::span<const Index> corner, Index channel = 0) const;

private:
    LatticeShape shape_;
    Index channels_ = 1;
    std::vector<double> values_;
};

/// Sum of channel `channel` over the block, by 2^d-corner inclusion-exclusion.
double box_sum(const PrefixTensor& t, const Block& b, Index channel = 0);
/// All channels at once; `out` must have t.channels() entries.
void box_sum(const PrefixTensor& t, const Block& b, std::span<double> out);

/// 2d-dimensional cumulative sums of an N x N matrix over pairs of lattice points.
/// Entry (m, m') holds sum_{i in (0,m], j in (0,m']} M_ij.
class PairPrefixTensor {
public:
    static constexpr std::uint64_t kDefaultMemoryCap = std::uint64_t{2} << 30;

    PairPrefixTensor() = default;

    /// `matrix` is N x N row-major over flat lattice offsets. Throws CapacityError
    /// when (prod(n_l + 1))^2 doubles exceed `memory_cap_bytes`.
    static PairPrefixTensor build(const LatticeShape& shape, std::span<const double> matrix,
                                  std::uint64_t memory_cap_bytes = kDefaultMemoryCap,
                                  Summation mode = Summation::Plain);

    /// Rebuilds in place from M_ij * scale_i * scale_j (unscaled when `scale` is
    /// empty), reusing the existing allocation.
    void assign(const LatticeShape& shape, std::span<const double> matrix,
                std::span<const double> scale = {},
                std::uint64_t memory_cap_bytes = kDefaultMemoryCap,
                Summation mode = Summation::Plain);

    static std::uint64_t required_bytes(const LatticeShape& shape);

    [[nodiscard]] const LatticeShape& shape() const { return shape_; }
    [[nodiscard]] std::span<const double> values() const { return values_; }
    [[nodiscard]] double at(std::span<const Index> row_corner, std::span<const Index> col_corner) const;

private:
    LatticeShape shape_;
    std::vector<double> values_;
};

/// sum_{i in b, j in b} M_ij by inclusion-exclusion over 4^d corners.
double pair_box_sum(const PairPrefixTensor& t, const Block& b);

namespace detail {
/// In-place cumulative sum along each axis of a dense row-major tensor whose
/// trailing `inner` contiguous entries per cell are carried along unsummed.
void cumulative_sum_axes(std::span<double> data, std::span<const Index> extents, Summation mode,
                         Index inner = 1);
}  // namespace detail

}  // namespace episcan
