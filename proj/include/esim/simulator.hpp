#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "esim/dynamics.hpp"
#include "esim/model.hpp"

namespace esim {

struct HybridState {
    double t = 0.0;
    int bg = 0; // background state index / trace sample index
    double b1 = 0.0;
    double b2 = 0.0;
};

/// Cumulative quantities over a run; all non-negative and non-decreasing.
/// served_i is the covered part of the deficit-side demand:
/// served_i + lost_i == integral of [r_i]_- dt.
struct Accumulators {
    double lost1 = 0.0, lost2 = 0.0;
    double served1 = 0.0, served2 = 0.0;
    double over1 = 0.0, over2 = 0.0;
    double xfer_1to2 = 0.0, xfer_2to1 = 0.0;
    double net_in1 = 0.0, net_in2 = 0.0; // integral of r_i dt
    double elapsed = 0.0;
};

struct SimOptions {
    int batch_count = 20;         // batch-means batches over the post-warmup window
    int max_events_per_slot = 256; // chattering guard for the intra-slot loop
    /// Called at every event instant (boundary hit, slot edge, checkpoints).
    std::function<void(const HybridState&, const Accumulators&)> on_event;
};

struct SimulationResult {
    double llr1 = 0.0, llr2 = 0.0; // lost energy / elapsed, after warm-up
    double se1 = 0.0, se2 = 0.0;   // batch-means standard errors of llr_i
    std::vector<double> batch_means1, batch_means2;
    Accumulators acc; // full-horizon accumulators (warm-up included)
    Accumulators acc_warmup; // snapshot taken at the warm-up instant
    HybridState final_state;
};

/// Advance one system by dt under constant net generation (r1, r2),
/// processing battery boundary hits exactly: rates are constant between
/// events, so paths are piecewise linear and hit times are solved in
/// closed form. Throws SimulationError if the event count exceeds
/// opts.max_events_per_slot.
void advance_slot(HybridState& state, double r1, double r2, double dt,
                  const SharingConfig& config, const ModelSpec& model,
                  Accumulators& acc, const SimOptions& opts = {});

/// Simulate the sharing system. CTMC backgrounds draw holding times and
/// jump targets from the seeded generator; trace backgrounds replay
/// samples in order, cycling past the end. Deterministic given
/// (model, config, horizon, warmup, seed, initial).
///
/// Default initial state: b_i = B_i / 2, background = first listed state.
SimulationResult simulate(const ModelSpec& model, const SharingConfig& config,
                          double horizon, double warmup, std::uint64_t seed,
                          std::optional<HybridState> initial = {},
                          const SimOptions& opts = {});

struct StandaloneResult {
    double llr = 0.0;
    double se = 0.0;
    std::vector<double> batch_means;
};

/// Standalone operation of one agent: no transfers of any kind,
/// including no overflow sharing. Uses the same background sampling as
/// simulate, so equal seeds give a common background path.
StandaloneResult simulate_standalone(const ModelSpec& model, int agent, double horizon,
                                     double warmup, std::uint64_t seed,
                                     const SimOptions& opts = {});

struct CoupledRow {
    double t = 0.0;
    double b1_a = 0.0, b2_a = 0.0, b1_b = 0.0, b2_b = 0.0;
    double lost1_a = 0.0, lost2_a = 0.0, over1_a = 0.0, over2_a = 0.0;
    double lost1_b = 0.0, lost2_b = 0.0, over1_b = 0.0, over2_b = 0.0;
};

/// Pathwise comparison of two configurations on one shared background
/// sample path. Extremes are taken over the merged event timeline (every
/// event instant of either system). Gap minima are signed so that the
/// sample-path ordering properties for config_b = config_a + eps on one
/// coordinate correspond to all gap minima >= 0 (up to float slack):
///   min_battery_gap_i  = min_t (b_i^a - b_i^b)
///   min_lost_gap_giver = min_t (lost_g^b - lost_g^a)   g = perturbed coord
///   min_over_gap_i     = min_t (over_i^a - over_i^b)
///   min_total_lost_gap = min_t ((lost1+lost2)^a - (lost1+lost2)^b)
/// When the configs differ on exactly one coordinate by eps >= 0, the
/// Lipschitz slacks are also tracked:
///   min_lipschitz_slack_giver    = min_t (eps*t - (lost_g^b - lost_g^a))
///   min_lipschitz_slack_receiver = min_t (eps*t - (lost_r^a - lost_r^b))
struct CoupledReport {
    Accumulators acc_a, acc_b;
    double llr1_a = 0.0, llr2_a = 0.0; // no warm-up: lost / horizon
    double llr1_b = 0.0, llr2_b = 0.0;
    double min_battery_gap1 = 0.0, min_battery_gap2 = 0.0;
    double min_lost_gap_giver = 0.0;
    double min_over_gap1 = 0.0, min_over_gap2 = 0.0;
    double min_total_lost_gap = 0.0;
    bool lipschitz_applicable = false;
    int giver = 0; // perturbed coordinate (1 or 2), 0 if configs equal
    double eps = 0.0;
    double min_lipschitz_slack_giver = 0.0;
    double min_lipschitz_slack_receiver = 0.0;
    std::vector<CoupledRow> rows; // filled when record_rows is set
};

struct CoupledOptions {
    bool record_rows = false;
    int max_events_per_slot = 256;
};

CoupledReport coupled_simulate(const ModelSpec& model, const SharingConfig& config_a,
                               const SharingConfig& config_b, double horizon,
                               std::uint64_t seed, const CoupledOptions& opts = {});

/// Energy-balance residual of a completed run, relative to the total
/// energy moved: |d(b1+b2) - (net_in + lost - over)| / scale.
double conservation_residual(const Accumulators& acc, const HybridState& initial,
                             const HybridState& final_state);

} // namespace esim
