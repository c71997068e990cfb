#pragma once

#include "esim/model.hpp"

namespace esim {

/// Battery region at an instant. A battery sitting exactly on a boundary
/// whose derivative points inward is treated as Interior for the next
/// rate evaluation (see resolve_rates).
enum class Region { Empty, Interior, Full };

/// Instantaneous rates at one hybrid state. Loss and overflow are
/// derived residually from the per-agent balance
///   r_i + xfer_in_i - xfer_out_i - db_i + loss_i - over_i = 0,
/// which therefore holds exactly by construction. A negative residual
/// cannot be booked as loss/overflow; its magnitude is reported in
/// defect_i instead (nonzero only for region labels that the resolver
/// would immediately re-label, or for genuine rule bugs).
struct RateBundle {
    double db1 = 0.0, db2 = 0.0;             // battery derivatives
    double xfer_1to2 = 0.0, xfer_2to1 = 0.0; // transfer rates, >= 0
    double loss1 = 0.0, loss2 = 0.0;         // lost-load rates, >= 0
    double over1 = 0.0, over2 = 0.0;         // overflow-lost rates, >= 0
    double defect1 = 0.0, defect2 = 0.0;     // balance defects, >= 0
};

/// Rates for the given region pair, with the battery derivatives taken
/// cell-by-cell from the sharing mechanism's dynamics table (including
/// the indicator conditions in the Empty/Full and Full/Empty cells) and
/// the transfer rates from the mechanism's three deficit-sharing rules
/// plus the overflow rule.
///
/// Requires 0 <= config.c_i <= cap.
RateBundle instantaneous_rates(Region region1, Region region2, double r1, double r2,
                               const SharingConfig& config, double cap);

/// Throws SimulationError if either balance defect exceeds tolerance.
void check_consistency(const RateBundle& rates, double tol = 1e-9);

struct ResolvedRates {
    Region region1 = Region::Interior;
    Region region2 = Region::Interior;
    RateBundle rates;
};

/// Region labels and rates consistent with the battery positions:
/// boundary labels stick while the derivative points outward, flip to
/// Interior when it points inward, and the one genuinely chattering
/// corner (a full battery drained slower than the overflow it receives)
/// resolves to its sliding motion: the battery stays pinned at capacity,
/// the transfer covers exactly the drain, and the sender discards the
/// rest of its surplus.
///
/// Positions must satisfy 0 <= b_i <= B_i; boundary means exact equality.
ResolvedRates resolve_rates(double b1, double b2, double r1, double r2,
                            const ModelSpec& model, const SharingConfig& config);

} // namespace esim
