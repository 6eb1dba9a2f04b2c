#pragma once

#include "episcan/lattice.hpp"

#include <span>
#include <string>
#include <variant>
#include <vector>

namespace episcan {

/// p-dimensional real observations on every point of a lattice, point-major.
class ObservationField {
public:
    ObservationField() = default;
    ObservationField(LatticeShape shape, Index p);
    ObservationField(LatticeShape shape, Index p, std::vector<double> data);

    [[nodiscard]] const LatticeShape& shape() const { return shape_; }
    [[nodiscard]] Index p() const { return p_; }
    [[nodiscard]] Index points() const { return shape_.points(); }
    [[nodiscard]] std::span<const double> data() const { return data_; }
    [[nodiscard]] std::span<double> data() { return data_; }

    [[nodiscard]] std::span<const double> at(Index flat) const { return {data_.data() + flat * p_, p_}; }
    [[nodiscard]] std::span<double> at(Index flat) { return {data_.data() + flat * p_, p_}; }

    /// True when every observation equals the first one exactly.
    [[nodiscard]] bool is_constant() const;

    bool operator==(const ObservationField&) const = default;

private:
    LatticeShape shape_;
    Index p_ = 0;
    std::vector<double> data_;
};

/// Density of N(location, scale^2) as a coordinate weight.
struct GaussianWeight {
    double location = 0.0;
    double scale = 1.0;
    bool operator==(const GaussianWeight&) const = default;
};

/// Density of U(a, b) as a coordinate weight.
struct UniformWeight {
    double a = 0.0;
    double b = 1.0;
    bool operator==(const UniformWeight&) const = default;
};

using CoordinateWeight = std::variant<GaussianWeight, UniformWeight>;

/// Product weight w(t) = prod_l w_l(t_l).
struct WeightSpec {
    std::vector<CoordinateWeight> coords;

    /// Same coordinate weight on each of `p` coordinates.
    static WeightSpec uniform_product(CoordinateWeight w, Index p) { return {std::vector<CoordinateWeight>(p, w)}; }
    /// Gaussian(100, 1000) on every coordinate.
    static WeightSpec simulation_default(Index p) { return uniform_product(GaussianWeight{100.0, 1000.0}, p); }

    [[nodiscard]] Index p() const { return coords.size(); }
    void validate() const;
    [[nodiscard]] std::string to_string() const;

    bool operator==(const WeightSpec&) const = default;
};

/// Parses "gaussian:LOC:SCALE" or "uniform:A:B".
CoordinateWeight parse_coordinate_weight(const std::string& text);
std::string to_string(const CoordinateWeight& w);

/// Upper-tail mass of the weight, prod_l int_{s_l >= t_l} w_l(s_l) ds_l.
double weight_survival(const WeightSpec& w, std::span<const double> t);

/// Symmetric N x N matrix of inner products between lattice observations.
struct GramMatrix {
    LatticeShape shape;
    std::vector<double> entries;  // row-major, both triangles stored
    std::vector<double> row_sums;
    double total_sum = 0.0;

    [[nodiscard]] Index size() const { return shape.points(); }
    [[nodiscard]] double operator()(Index i, Index j) const { return entries[i * size() + j]; }

    /// Recomputes row_sums and total_sum from entries.
    void refresh_sums();
};

/// Gram of the weighted-indicator embedding: G_ij = weight_survival(w, max(X_i, X_j)).
GramMatrix gram_indicator_cvm(const ObservationField& field, const WeightSpec& w, unsigned threads = 1);

/// Gram of the Euclidean embedding: G_ij = <X_i, X_j>.
GramMatrix gram_euclidean(const ObservationField& field, unsigned threads = 1);

/// Which mean each lattice point is centered with.
class MeanAssignment {
public:
    enum class Kind { Global, TwoGroup };

    static MeanAssignment global(const LatticeShape& shape);
    /// Points inside `change` form one group, the complement the other.
    static MeanAssignment two_group(const LatticeShape& shape, const Block& change);

    [[nodiscard]] Kind kind() const { return kind_; }
    [[nodiscard]] const LatticeShape& shape() const { return shape_; }
    [[nodiscard]] const Block& change_block() const { return change_; }
    [[nodiscard]] Index groups() const { return group_sizes_.size(); }
    [[nodiscard]] Index group_of(Index flat) const { return group_[flat]; }
    [[nodiscard]] Index group_size(Index g) const { return group_sizes_[g]; }
    [[nodiscard]] std::span<const Index> labels() const { return group_; }

private:
    Kind kind_ = Kind::Global;
    LatticeShape shape_;
    Block change_;
    std::vector<Index> group_;
    std::vector<Index> group_sizes_;
};

/// Gram of the centered embedding, <Y_i - mu(i), Y_j - mu(j)> with mu the group means.
GramMatrix center_gram(const GramMatrix& g, const MeanAssignment& m);

/// Observations minus their group means.
ObservationField center_field(const ObservationField& field, const MeanAssignment& m);

}  // namespace episcan
