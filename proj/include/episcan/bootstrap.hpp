#pragma once

#include "episcan/hilbert_gram.hpp"
#include "episcan/multiplier.hpp"
#include "episcan/scan.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace episcan {

enum class StatisticKind { MeanChange, CvM };
enum class MeanEstimator { Global, Adapted };

std::string to_string(StatisticKind k);    // "mean" | "cvm"
std::string to_string(MeanEstimator m);    // "global" | "adapted"
StatisticKind parse_statistic_kind(const std::string& text);
MeanEstimator parse_mean_estimator(const std::string& text);

StatisticConvention convention_of(StatisticKind k);

/// Restriction eps1 * N <= volume <= (1 - eps2) * N on scanned blocks.
struct SizeBounds {
    double eps1 = 0.0;
    double eps2 = 0.0;
    bool operator==(const SizeBounds&) const = default;
};

struct TestConfig {
    StatisticKind statistic = StatisticKind::CvM;
    /// CvM only; empty means Gaussian(100, 1000) on every coordinate.
    WeightSpec weight;
    KernelSpec kernel{KernelKind::ExponentialAR, 6};
    Index replicates = 199;
    double alpha = 0.05;
    MeanEstimator mean = MeanEstimator::Global;
    std::optional<SizeBounds> size_bounds;
    std::uint64_t seed = 0;
    bool keep_bootstrap_sample = false;
    /// 0 selects default_threads().
    unsigned threads = 0;
    std::uint64_t memory_cap_bytes = PairPrefixTensor::kDefaultMemoryCap;

    /// Throws ConfigError on contradictions; `p` is the observation dimension.
    void validate(Index p) const;
    [[nodiscard]] WeightSpec effective_weight(Index p) const;
};

struct TestReport {
    StatisticKind kind = StatisticKind::CvM;
    double statistic = 0.0;
    Block change_block;
    std::vector<double> bootstrap_sample;  // empty unless requested
    double threshold = 0.0;
    double alpha = 0.05;
    double p_value = 1.0;
    bool reject = false;
    bool degenerate = false;
    double runtime_ms = 0.0;
    Index replicates = 0;
    KernelSpec kernel;
    MeanEstimator mean = MeanEstimator::Global;
    WeightSpec weight;  // empty for the mean statistic
    std::uint64_t seed = 0;
    std::optional<SizeBounds> size_bounds;
    std::vector<std::string> warnings;
};

/// One bootstrap replicate over a centered Gram: the scan of V_i V_j G~_ij with
/// the statistic's convention.
double bootstrap_statistic(const GramMatrix& centered, const MultiplierField& v, StatisticConvention convention,
                           const ScanOptions& options = {});

/// The same replicate computed from centered p-vectors V_i (X_i - mu(i)).
double bootstrap_statistic(const ObservationField& centered, const MultiplierField& v,
                           StatisticConvention convention, const ScanOptions& options = {});

/// The ceil((1 - alpha) K)-th order statistic (1-based, ascending).
double bootstrap_quantile(std::span<const double> values, double alpha);

/// (1 + #{T* >= T}) / (K + 1).
double bootstrap_p_value(std::span<const double> values, double statistic);

/// Data-dependent part of a test: statistic, change-set estimate and the centered
/// representation the multipliers act on. Immutable once built; replicates may
/// be drawn from several threads.
class PreparedTest {
public:
    static PreparedTest prepare(const ObservationField& field, StatisticKind kind, const WeightSpec& weight,
                                MeanEstimator mean, const ScanOptions& options, unsigned threads = 1);

    [[nodiscard]] StatisticKind kind() const { return kind_; }
    [[nodiscard]] const ScanResult& scan() const { return scan_; }
    [[nodiscard]] double statistic() const { return scan_.statistic; }
    [[nodiscard]] bool degenerate() const { return degenerate_; }
    [[nodiscard]] const LatticeShape& shape() const { return shape_; }
    [[nodiscard]] const ScanOptions& options() const { return options_; }

    /// Bootstrap statistics for replicates 0..K-1; replicate j uses multiplier seed
    /// derive_seed(seed, j), so the sample is independent of `threads`.
    [[nodiscard]] std::vector<double> bootstrap_sample(const KernelSpec& kernel, Index replicates,
                                                       std::uint64_t seed, unsigned threads) const;

private:
    StatisticKind kind_ = StatisticKind::CvM;
    LatticeShape shape_;
    ScanOptions options_;
    ScanResult scan_;
    bool degenerate_ = false;
    GramMatrix centered_gram_;         // CvM
    ObservationField centered_field_;  // mean change
};

/// Decision for one significance level given a bootstrap sample.
struct Decision {
    double threshold = 0.0;
    double p_value = 1.0;
    bool reject = false;
};

Decision decide(double statistic, std::span<const double> sample, double alpha, bool degenerate);

/// Full pipeline: statistic, change set, K bootstrap replicates, threshold, decision.
TestReport run_test(const ObservationField& field, const TestConfig& cfg);

}  // namespace episcan
