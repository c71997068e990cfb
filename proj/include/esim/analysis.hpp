#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "esim/model.hpp"
#include "esim/simulator.hpp"

namespace esim {

/// One sharing configuration on the frontier (c1 = c1_max or c2 = c2_max),
/// with simulated loss rates and per-agent benefits relative to
/// standalone operation.
struct FrontierPoint {
    SharingConfig config;
    double llr1 = 0.0, llr2 = 0.0;
    double se1 = 0.0, se2 = 0.0;
    double benefit1 = 0.0, benefit2 = 0.0; // [llr_sa_i - llr_i]_+
    double flatten_coord = 0.0;            // position along the flattened frontier
};

struct SweepResult {
    std::vector<FrontierPoint> points;
    double llr_sa1 = 0.0, llr_sa2 = 0.0;
    double se_sa1 = 0.0, se_sa2 = 0.0;
    double c1_max = 0.0, c2_max = 0.0;
};

/// Exact standalone loss-of-load rate for a single agent driven by a
/// two-state on/off chain (rates lambda_on: on->off, lambda_off: off->on;
/// r_on > 0 > r_off), from the stationary solution of the finite-buffer
/// fluid queue: LLR = |r_off| * P(level-0 atom, off state).
///
/// Rejects mean-drift-zero inputs (the exponent of the stationary
/// solution vanishes; that degenerate case would need the polynomial
/// branch, which is not provided).
double standalone_llr_closed_form(double lambda_on, double lambda_off, double r_on,
                                  double r_off, double B);

/// Simulate every configuration along the flattened frontier
///   (0, c2_max) -> (c1_max, c2_max) -> (c1_max, 0)
/// on a grid of the given step (endpoints forced in), all runs sharing
/// one seed (common random numbers). flatten_coord increases strictly
/// along the path. `jobs` > 1 runs sweep points concurrently; results
/// are identical regardless.
SweepResult pareto_sweep(const ModelSpec& model, double grid_step, double horizon,
                         double warmup, std::uint64_t seed, int jobs = 1);

/// Frontier point maximizing min_i [llr_sa_i - llr_i]_+; ties break
/// toward the smaller flatten_coord.
FrontierPoint egalitarian_solution(const std::vector<FrontierPoint>& frontier,
                                   double llr_sa1, double llr_sa2);

/// Probe base + step*(1, theta) for each theta (clipped to the valid
/// rectangle), with common random numbers, returning the first probe
/// where both agents' loss rates drop below base's by more than the
/// statistical slack (2 paired batch-means standard errors).
/// Requires base strictly inside the rectangle.
std::optional<SharingConfig> mutual_benefit_search(const ModelSpec& model,
                                                   const SharingConfig& base, double step,
                                                   const std::vector<double>& theta_grid,
                                                   double horizon, std::uint64_t seed);

struct CoordDeltas {
    double dllr1 = 0.0;
    double dllr2 = 0.0;
    double dsum = 0.0;
};

/// Signed pathwise finite differences of (llr1, llr2, llr1+llr2) with
/// respect to each c_i, from coupled runs on one shared background path.
struct MonotonicityProbe {
    CoordDeltas wrt_c1;
    CoordDeltas wrt_c2;
    double eps = 0.0;
};

MonotonicityProbe monotonicity_probe(const ModelSpec& model, const SharingConfig& config,
                                     double eps, double horizon, std::uint64_t seed);

} // namespace esim
