#include "priorpose/robust.hpp"
#include "priorpose/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace priorpose {

void RobustConfig::validate() const {
    auto fail = [](const std::string &what) { throw Error(ErrorCode::InvalidArgument, "RobustConfig: " + what); };
    if (iterations < 1)
        fail("iterations must be >= 1");
    if (!(sigma > 0.0))
        fail("sigma must be > 0");
    if (!(tau > 0.0))
        fail("tau must be > 0");
    if (!std::isfinite(alpha))
        fail("alpha must be finite");
    if (!(biased_fraction >= 0.0 && biased_fraction <= 1.0))
        fail("biased_fraction must lie in [0, 1]");
    if (!(grid_extent > 0.0))
        fail("grid_extent must be > 0");
    if (grid_per_axis < 2)
        fail("grid_per_axis must be >= 2");
}

PriorGrid PriorGrid::lattice(double extent, int per_axis) {
    if (per_axis < 2 || !(extent > 0.0))
        throw Error(ErrorCode::InvalidArgument, "PriorGrid: need per_axis >= 2 and extent > 0");
    std::vector<double> ticks(static_cast<size_t>(per_axis));
    for (int i = 0; i < per_axis; ++i)
        ticks[static_cast<size_t>(i)] = -extent + 2.0 * extent * i / (per_axis - 1);
    PriorGrid grid;
    grid.points.reserve(ticks.size() * ticks.size() * ticks.size());
    for (double x : ticks)
        for (double y : ticks)
            for (double z : ticks)
                grid.points.emplace_back(x, y, z);
    return grid;
}

InlierCount count_inliers(const EssentialMatrix &e, std::span<const Correspondence> m, double sigma) {
    InlierCount out;
    out.mask.resize(m.size(), 0);
    for (size_t i = 0; i < m.size(); ++i) {
        const double err = sampson_error_unchecked(m[i].p.homogeneous(), m[i].q.homogeneous(), e);
        if (err < sigma) {
            out.mask[i] = 1;
            ++out.count;
        }
    }
    return out;
}

double transform_discrepancy(const Pose &a, const Pose &b, const PriorGrid &grid) {
    if (grid.points.empty())
        throw Error(ErrorCode::InvalidArgument, "transform_discrepancy: empty grid");
    const Eigen::Matrix3d dr = a.rotation - b.rotation;
    const Eigen::Vector3d dt = a.translation - b.translation;
    double sum = 0.0;
    for (const auto &g : grid.points)
        sum += (dr * g + dt).squaredNorm();
    return sum / static_cast<double>(grid.points.size());
}

double beta_prior(const EssentialMatrix &e, const Pose &prior, const PriorGrid &grid) {
    const double scale = prior.translation.norm();
    if (!(scale > tol::kDegenerateNorm))
        throw Error(ErrorCode::DegenerateInput, "beta_prior: prior translation is zero");
    double best = -std::numeric_limits<double>::infinity();
    for (const Pose &candidate : candidate_transforms(e, scale))
        best = std::max(best, -transform_discrepancy(candidate, prior, grid));
    return best;
}

ScoredHypothesis score_hypothesis(const EssentialMatrix &e, std::span<const Correspondence> m,
                                  const std::optional<Pose> &prior, const RobustConfig &cfg, const PriorGrid &grid) {
    ScoredHypothesis h;
    h.essential = e;
    auto inliers = count_inliers(e, m, cfg.sigma);
    h.inlier_count = inliers.count;
    h.inlier_mask = std::move(inliers.mask);
    if (prior && cfg.alpha != 0.0)
        h.prior_term = cfg.alpha * beta_prior(e, *prior, grid);
    h.total_score = h.prior_term + static_cast<double>(h.inlier_count);
    // Stored as the exact difference so total - inliers == prior_term bitwise.
    h.prior_term = h.total_score - static_cast<double>(h.inlier_count);
    return h;
}

ScoredHypothesis score_hypothesis(const EssentialMatrix &e, std::span<const Correspondence> m,
                                  const std::optional<Pose> &prior, const RobustConfig &cfg) {
    return score_hypothesis(e, m, prior, cfg, PriorGrid::from_config(cfg));
}

std::vector<double> sampling_weights(std::span<const Correspondence> m, const Pose &prior, double tau) {
    if (!(tau > 0.0))
        throw Error(ErrorCode::InvalidArgument, "sampling_weights: tau must be > 0");
    const EssentialMatrix e = essential_from_pose(prior);
    std::vector<double> w(m.size());
    for (size_t i = 0; i < m.size(); ++i) {
        const double err = sampson_error_unchecked(m[i].p.homogeneous(), m[i].q.homogeneous(), e);
        w[i] = std::isinf(err) ? 0.0 : std::exp(-err / tau);
    }
    return w;
}

MinimalSample uniform_minimal_sample(size_t n, Rng &rng) {
    if (n < 5)
        throw Error(ErrorCode::TooFewCorrespondences, "uniform_minimal_sample: fewer than 5 correspondences");
    MinimalSample s;
    std::uniform_int_distribution<size_t> pick(0, n - 1);
    for (size_t k = 0; k < 5; ++k) {
        size_t idx;
        do {
            idx = pick(rng);
        } while (std::find(s.indices.begin(), s.indices.begin() + static_cast<std::ptrdiff_t>(k), idx) !=
                 s.indices.begin() + static_cast<std::ptrdiff_t>(k));
        s.indices[k] = idx;
    }
    return s;
}

MinimalSample weighted_minimal_sample(std::span<const double> weights, Rng &rng) {
    if (weights.size() < 5)
        throw Error(ErrorCode::TooFewCorrespondences, "weighted_minimal_sample: fewer than 5 correspondences");
    for (double w : weights)
        if (!(w >= 0.0) || !std::isfinite(w))
            throw Error(ErrorCode::InvalidArgument, "weighted_minimal_sample: weights must be finite and >= 0");

    // log(u^(1/w)) = log(u) / w; zero weights rank last, ordered by a fresh draw,
    // so an all-zero vector degrades to uniform sampling.
    struct Key {
        double primary;
        double secondary;
        size_t index;
    };
    std::vector<Key> keys(weights.size());
    for (size_t i = 0; i < weights.size(); ++i) {
        const double u = uniform_open01(rng);
        if (weights[i] > 0.0)
            keys[i] = {std::log(u) / weights[i], 0.0, i};
        else
            keys[i] = {-std::numeric_limits<double>::infinity(), u, i};
    }
    std::partial_sort(keys.begin(), keys.begin() + 5, keys.end(), [](const Key &a, const Key &b) {
        if (a.primary != b.primary)
            return a.primary > b.primary;
        if (a.secondary != b.secondary)
            return a.secondary > b.secondary;
        return a.index < b.index;
    });
    MinimalSample s;
    for (size_t k = 0; k < 5; ++k)
        s.indices[k] = keys[k].index;
    return s;
}

bool is_biased_iteration(int i, double biased_fraction) {
    return std::floor((i + 1) * biased_fraction) > std::floor(i * biased_fraction);
}

namespace {

struct Engine {
    std::span<const Correspondence> m;
    const RobustConfig &cfg;
    const Pose *prior = nullptr;

    RobustResult run() const {
        ScoredHypothesis best = select_best();
        const PriorGrid grid = prior != nullptr && cfg.alpha != 0.0 ? PriorGrid::from_config(cfg) : PriorGrid{};
        Pose pose = final_pose(best, grid);
        return {std::move(pose), std::move(best)};
    }

    ScoredHypothesis select_best() const {
        cfg.validate();
        if (m.size() < 5)
            throw Error(ErrorCode::TooFewCorrespondences,
                        "robust estimation needs at least 5 correspondences, got " + std::to_string(m.size()));

        std::vector<Eigen::Vector3d> ph(m.size()), qh(m.size());
        for (size_t i = 0; i < m.size(); ++i) {
            ph[i] = m[i].p.homogeneous();
            qh[i] = m[i].q.homogeneous();
        }

        const bool use_prior_score = prior != nullptr && cfg.alpha != 0.0;
        const bool any_biased = prior != nullptr && cfg.biased_fraction > 0.0;
        const PriorGrid grid = use_prior_score ? PriorGrid::from_config(cfg) : PriorGrid{};
        const std::vector<double> weights = any_biased ? sampling_weights(m, *prior, cfg.tau) : std::vector<double>{};

        bool found = false;
        ScoredHypothesis best;
        std::array<Correspondence, 5> sample;
        for (int it = 0; it < cfg.iterations; ++it) {
            Rng rng = derive_rng(cfg.seed, {static_cast<uint64_t>(it)});
            const bool biased = any_biased && is_biased_iteration(it, cfg.biased_fraction);
            const MinimalSample ms = biased ? weighted_minimal_sample(weights, rng) : uniform_minimal_sample(m.size(), rng);
            for (size_t k = 0; k < 5; ++k)
                sample[k] = m[ms.indices[k]];

            const std::vector<EssentialMatrix> solutions = five_point(sample);
            for (size_t s = 0; s < solutions.size(); ++s) {
                const EssentialMatrix &e = solutions[s];
                int count = 0;
                for (size_t i = 0; i < m.size(); ++i)
                    count += sampson_error_unchecked(ph[i], qh[i], e) < cfg.sigma ? 1 : 0;

                double prior_term = 0.0;
                if (use_prior_score) {
                    try {
                        prior_term = cfg.alpha * beta_prior(e, *prior, grid);
                    } catch (const Error &) {
                        continue;
                    }
                }
                const double total = prior_term + static_cast<double>(count);
                prior_term = total - static_cast<double>(count);
                // Earlier hypotheses win exact ties.
                const bool better = !found || total > best.total_score ||
                                    (total == best.total_score && prior_term > best.prior_term);
                if (better) {
                    found = true;
                    best.essential = e;
                    best.inlier_count = count;
                    best.prior_term = prior_term;
                    best.total_score = total;
                    best.iteration = it;
                    best.solution_index = static_cast<int>(s);
                }
            }
        }
        if (!found)
            throw Error(ErrorCode::NoValidHypothesis, "no minimal sample produced a valid essential matrix");

        best.inlier_mask = count_inliers(best.essential, m, cfg.sigma).mask;
        if (cfg.refit && best.inlier_count >= 8)
            refit(best, grid);
        return best;
    }

    void refit(ScoredHypothesis &best, const PriorGrid &grid) const {
        const CorrespondenceSet inliers = select(best.inlier_mask);
        EssentialMatrix e;
        try {
            e = eight_point_normalized(inliers);
        } catch (const Error &) {
            return;
        }
        std::optional<Pose> p = prior ? std::optional<Pose>(*prior) : std::nullopt;
        ScoredHypothesis polished;
        try {
            polished = score_hypothesis(e, m, p, cfg, grid.points.empty() ? PriorGrid::from_config(cfg) : grid);
        } catch (const Error &) {
            return;
        }
        if (polished.total_score >= best.total_score) {
            polished.iteration = best.iteration;
            polished.solution_index = best.solution_index;
            best = std::move(polished);
        }
    }

    CorrespondenceSet select(const std::vector<uint8_t> &mask) const {
        CorrespondenceSet out;
        for (size_t i = 0; i < m.size(); ++i)
            if (mask[i])
                out.push_back(m[i]);
        return out;
    }

    Pose final_pose(const ScoredHypothesis &best, const PriorGrid &grid) const {
        CorrespondenceSet support = select(best.inlier_mask);
        if (support.empty())
            support.assign(m.begin(), m.end());
        if (prior == nullptr)
            return decompose_essential(best.essential, support);

        // With a prior, chirality ties are resolved by agreement with the prior.
        const auto candidates = candidate_transforms(best.essential, 1.0);
        std::array<int, 4> front{};
        for (size_t k = 0; k < 4; ++k)
            front[k] = count_in_front(support, candidates[k]);
        const int max_front = *std::max_element(front.begin(), front.end());
        const PriorGrid &g = grid.points.empty() ? PriorGrid::from_config(cfg) : grid;
        Pose scaled_prior = *prior;
        scaled_prior.translation.normalize();
        size_t chosen = 4;
        double best_disc = std::numeric_limits<double>::infinity();
        for (size_t k = 0; k < 4; ++k) {
            if (front[k] != max_front)
                continue;
            const double d = transform_discrepancy(candidates[k], scaled_prior, g);
            if (chosen == 4 || d < best_disc) {
                chosen = k;
                best_disc = d;
            }
        }
        return candidates[chosen];
    }
};

}  // namespace

RobustResult ransac(std::span<const Correspondence> m, const RobustConfig &cfg) {
    return Engine{m, cfg, nullptr}.run();
}

RobustResult prior_guided_ransac(std::span<const Correspondence> m, const Pose &prior, const RobustConfig &cfg) {
    if (!(prior.translation.norm() > tol::kDegenerateNorm))
        throw Error(ErrorCode::DegenerateInput, "prior_guided_ransac: prior translation is zero");
    return Engine{m, cfg, &prior}.run();
}

ScoredHypothesis ransac_hypothesis(std::span<const Correspondence> m, const RobustConfig &cfg) {
    return Engine{m, cfg, nullptr}.select_best();
}

ScoredHypothesis prior_guided_hypothesis(std::span<const Correspondence> m, const Pose &prior,
                                         const RobustConfig &cfg) {
    if (!(prior.translation.norm() > tol::kDegenerateNorm))
        throw Error(ErrorCode::DegenerateInput, "prior_guided_hypothesis: prior translation is zero");
    return Engine{m, cfg, &prior}.select_best();
}

}  // namespace priorpose
