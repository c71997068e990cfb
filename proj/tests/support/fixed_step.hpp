#pragma once

#include <cstdint>

#include "esim/model.hpp"

namespace esim::testing {

struct FixedStepResult {
    double llr1 = 0.0;
    double llr2 = 0.0;
    double lost1 = 0.0;
    double lost2 = 0.0;
    double over1 = 0.0;
    double over2 = 0.0;
};

/// Cross-validation oracle: an explicit fixed-step integrator written
/// independently of the event-driven engine. Transfers are decided from
/// battery positions at the start of each step, batteries move by the
/// net flow, and boundary clipping books the clipped energy as lost load
/// (at zero) or overflow (at capacity). The background path reproduces
/// the engine's sampling contract (one seeded stream, exponential
/// holding, weighted jump), so equal seeds give the common path.
FixedStepResult fixed_step_llr(const ModelSpec& model, const SharingConfig& config,
                               double horizon, double warmup, double dt, std::uint64_t seed);

} // namespace esim::testing
