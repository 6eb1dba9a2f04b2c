#pragma once

#include "episcan/bootstrap.hpp"
#include "episcan/hilbert_gram.hpp"
#include "episcan/multiplier.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace episcan {

/// Change set (theta, gamma] in fractional coordinates, mapped to the lattice as
/// (floor(n theta), floor(n gamma)].
struct FractionalBlock {
    std::vector<double> theta;
    std::vector<double> gamma;

    void validate() const;
    [[nodiscard]] Block to_block(const LatticeShape& shape) const;
    [[nodiscard]] std::string to_string() const;

    bool operator==(const FractionalBlock&) const = default;
};

/// The three change sets of the reference simulation design (d = 2).
FractionalBlock example_change_set(int example);  // 1: small, 2: medium, 3: large

/// Parses "t1,t2,...:g1,g2,...".
FractionalBlock parse_fractional_block(const std::string& text);

/// Stationary separable AR field, covariance prod_l a^{|h_l|}, unit marginal variance.
ObservationField gen_ar_field(const LatticeShape& shape, double a, Rng& rng);

/// Adds delta to every observation inside the change set.
ObservationField inject_mean_change(const ObservationField& field, double delta, const FractionalBlock& c);

/// Y^2 + Y'^2 off the change set and 4 - (Y^2 + Y'^2) on it, Y, Y' independent AR fields.
/// An empty `c` (no theta/gamma) gives the unchanged field everywhere.
ObservationField gen_skewness_change(const LatticeShape& shape, double a, const FractionalBlock& c, Rng& rng);

enum class ScenarioKind { Null, MeanChange, SkewnessChange };

std::string to_string(ScenarioKind s);  // "null" | "mean" | "skew"
ScenarioKind parse_scenario(const std::string& text);

struct Scenario {
    ScenarioKind kind = ScenarioKind::Null;
    double delta = 0.0;
    FractionalBlock change_set;
};

/// One data field for Monte Carlo run `run`.
ObservationField generate_scenario_field(const LatticeShape& shape, double a, const Scenario& s, std::uint64_t seed);

struct ExperimentConfig {
    Index d = 2;
    Index n = 30;
    double a = 0.2;
    Scenario scenario;
    /// Template for the per-run test; its kernel, alpha and mean are overridden by the grid.
    TestConfig test;
    std::vector<KernelKind> kernels{KernelKind::ExponentialAR};
    std::vector<std::int64_t> bandwidths{6};
    std::vector<double> alphas{0.05};
    std::vector<MeanEstimator> estimators{MeanEstimator::Global};
    Index runs = 200;
    std::uint64_t seed = 0;
    /// 0 selects default_threads().
    unsigned threads = 0;

    void validate() const;
};

struct RejectionCell {
    ScenarioKind scenario = ScenarioKind::Null;
    MeanEstimator estimator = MeanEstimator::Global;
    KernelKind kernel = KernelKind::ExponentialAR;
    double a = 0.0;
    Index n = 0;
    std::int64_t q = 0;
    double alpha = 0.0;
    Index rejections = 0;
    Index runs = 0;

    [[nodiscard]] double frequency() const {
        return runs == 0 ? 0.0 : static_cast<double>(rejections) / static_cast<double>(runs);
    }
};

struct RejectionTable {
    ExperimentConfig config;
    std::vector<RejectionCell> cells;
    double runtime_ms = 0.0;
    /// Every cell of a run is evaluated on the same simulated field.
    bool shared_data_across_grid = true;

    [[nodiscard]] const RejectionCell& cell(MeanEstimator e, KernelKind k, std::int64_t q, double alpha) const;
};

/// Monte Carlo rejection frequencies over the (estimator, kernel, q, alpha) grid.
/// Run r draws its data from derive_seed(seed, 2r) and its multipliers from
/// derive_seed(seed, 2r + 1); results do not depend on the thread count.
RejectionTable run_experiment(const ExperimentConfig& cfg);

}  // namespace episcan
