#pragma once

#include "priorpose/random.hpp"
#include "priorpose/solver.hpp"
#include "priorpose/types.hpp"

#include <optional>
#include <span>
#include <vector>

namespace priorpose {

struct RobustConfig {
    int iterations = 2000;
    double sigma = 3e-7;           // squared Sampson threshold, normalized coordinates
    double alpha = 3.33;           // prior weight
    double tau = 0.1;              // sampling temperature, squared Sampson units
    double biased_fraction = 0.5;  // share of iterations drawn from prior-weighted sampling
    double grid_extent = 3.0;      // half-width of the prior lattice, meters
    int grid_per_axis = 3;
    uint64_t seed = 0;
    bool refit = false;  // eight-point polish on the winning inlier set

    /// Throws InvalidArgument when a field is out of range.
    void validate() const;
};

// Fixed 3D lattice used to compare two rigid transforms.
struct PriorGrid {
    std::vector<Eigen::Vector3d> points;

    /// grid_per_axis^3 points spaced evenly on [-extent, extent]^3.
    static PriorGrid lattice(double extent, int per_axis);
    static PriorGrid from_config(const RobustConfig &cfg) { return lattice(cfg.grid_extent, cfg.grid_per_axis); }
};

struct ScoredHypothesis {
    EssentialMatrix essential = EssentialMatrix::Zero();
    int inlier_count = 0;
    std::vector<uint8_t> inlier_mask;
    double prior_term = 0.0;  // alpha * beta, zero without a prior
    double total_score = 0.0;
    // Origin of the hypothesis inside a robust run; -1 when scored standalone.
    int iteration = -1;
    int solution_index = -1;

    bool operator==(const ScoredHypothesis &o) const {
        return essential == o.essential && inlier_count == o.inlier_count && inlier_mask == o.inlier_mask &&
               prior_term == o.prior_term && total_score == o.total_score && iteration == o.iteration &&
               solution_index == o.solution_index;
    }
};

struct RobustResult {
    Pose pose;  // unit translation
    ScoredHypothesis hypothesis;
};

struct InlierCount {
    int count = 0;
    std::vector<uint8_t> mask;
};

/// mask[i] iff sampson_error(m[i], e) < sigma (strict).
InlierCount count_inliers(const EssentialMatrix &e, std::span<const Correspondence> m, double sigma);

/// Mean squared distance between the grid mapped by `a` and by `b`.
double transform_discrepancy(const Pose &a, const Pose &b, const PriorGrid &grid);

/// Log-likelihood proxy of an essential matrix under a prior pose: the best
/// negated discrepancy over its four factorizations, translation scaled to
/// the prior's norm. Always <= 0.
double beta_prior(const EssentialMatrix &e, const Pose &prior, const PriorGrid &grid);

/// Inlier count plus alpha * beta when a prior is given.
ScoredHypothesis score_hypothesis(const EssentialMatrix &e, std::span<const Correspondence> m,
                                  const std::optional<Pose> &prior, const RobustConfig &cfg);
ScoredHypothesis score_hypothesis(const EssentialMatrix &e, std::span<const Correspondence> m,
                                  const std::optional<Pose> &prior, const RobustConfig &cfg, const PriorGrid &grid);

/// exp(-sampson / tau) of each correspondence under the prior's essential matrix.
std::vector<double> sampling_weights(std::span<const Correspondence> m, const Pose &prior, double tau);

MinimalSample uniform_minimal_sample(size_t n, Rng &rng);

/// Five distinct indices without replacement, via exponential keys
/// u^(1 / w) (top five win).
MinimalSample weighted_minimal_sample(std::span<const double> weights, Rng &rng);

/// Whether iteration `i` draws from the weighted sampler for a given biased share.
bool is_biased_iteration(int i, double biased_fraction);

/// Classic RANSAC: exactly cfg.iterations uniform samples, inlier-count
/// scoring, no early stopping.
RobustResult ransac(std::span<const Correspondence> m, const RobustConfig &cfg);

/// Prior-guided RANSAC: scores alpha * beta + inliers, and draws the biased
/// share of minimal samples from prior-agreement weights.
RobustResult prior_guided_ransac(std::span<const Correspondence> m, const Pose &prior, const RobustConfig &cfg);

/// Hypothesis selection alone, without decomposing the winner into a pose.
ScoredHypothesis ransac_hypothesis(std::span<const Correspondence> m, const RobustConfig &cfg);
ScoredHypothesis prior_guided_hypothesis(std::span<const Correspondence> m, const Pose &prior,
                                         const RobustConfig &cfg);

}  // namespace priorpose
