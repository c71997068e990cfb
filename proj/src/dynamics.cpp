#include "esim/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "esim/errors.hpp"

namespace esim {

namespace {

inline double pos(double x) { return x > 0.0 ? x : 0.0; }  // (x)_+
inline double neg(double x) { return x < 0.0 ? -x : 0.0; } // (x)_-

// Battery derivative of the "own" agent for the (own, other) region cell.
// Cell formulas, written from the own agent's side:
//             other Empty                          other Int.      other Full
//  own Empty  [r - min(c_own,(r_o)_-)]_+           max(0, r)       1{r_o >= min(c_oth,(r)_-)} [r + min(cap,(r_o)_+)]_+
//  own Int.   r - min(c_own,(r_o)_-)               r               r + min(cap,(r_o)_+)
//  own Full   1{r < min(c_own,(r_o)_-)} [r - ...]  min(0, r)       min(0, r)
inline double table_derivative(Region own, Region other, double r, double r_o, double c_own,
                               double c_oth, double cap) {
    switch (own) {
        case Region::Interior:
            if (other == Region::Empty) return r - std::min(c_own, neg(r_o));
            if (other == Region::Full) return r + std::min(cap, pos(r_o));
            return r;
        case Region::Empty:
            if (other == Region::Empty) return pos(r - std::min(c_own, neg(r_o)));
            if (other == Region::Full)
                return (r_o >= std::min(c_oth, neg(r))) ? pos(r + std::min(cap, pos(r_o))) : 0.0;
            return std::max(0.0, r);
        case Region::Full:
            if (other == Region::Empty) {
                const double nominal = std::min(c_own, neg(r_o));
                return (r < nominal) ? r - nominal : 0.0;
            }
            return std::min(0.0, r);
    }
    return r;
}

// Transfer rate from the own agent to the other, per the sharing rules:
// deficit covering capped at c_own (further capped by own generation when
// the own battery is empty, and switching to a surplus share when it is
// full), plus unconditional overflow sharing capped at cap. No transfer
// reaches a full battery from another full battery.
inline double transfer_from(Region own, Region other, double r, double r_o, double c_own,
                            double cap) {
    const bool other_deficit = (other == Region::Empty && r_o < 0.0);
    if (other_deficit) {
        const double nominal = std::min(c_own, -r_o);
        switch (own) {
            case Region::Empty: return std::min(pos(r), nominal);
            case Region::Interior: return nominal;
            case Region::Full: return (r <= nominal) ? nominal : std::min(cap, r);
        }
    }
    if (own == Region::Full && r > 0.0 && other != Region::Full) return std::min(cap, r);
    return 0.0;
}

} // namespace

RateBundle instantaneous_rates(Region region1, Region region2, double r1, double r2,
                               const SharingConfig& config, double cap) {
    RateBundle out;
    out.db1 = table_derivative(region1, region2, r1, r2, config.c1, config.c2, cap);
    out.db2 = table_derivative(region2, region1, r2, r1, config.c2, config.c1, cap);
    out.xfer_1to2 = transfer_from(region1, region2, r1, r2, config.c1, cap);
    out.xfer_2to1 = transfer_from(region2, region1, r2, r1, config.c2, cap);

    // Residual of r_i + in_i - out_i - db_i; booked as overflow at a full
    // battery, as lost load at an empty one. A residual of the wrong sign
    // cannot be booked and is reported as a defect.
    const double resid1 = r1 + out.xfer_2to1 - out.xfer_1to2 - out.db1;
    const double resid2 = r2 + out.xfer_1to2 - out.xfer_2to1 - out.db2;
    auto book = [](Region region, double resid, double& loss, double& over, double& defect) {
        if (region == Region::Full) {
            over = pos(resid);
            defect = neg(resid);
        } else if (region == Region::Empty) {
            loss = neg(resid);
            defect = pos(resid);
        } else {
            defect = std::abs(resid);
        }
    };
    book(region1, resid1, out.loss1, out.over1, out.defect1);
    book(region2, resid2, out.loss2, out.over2, out.defect2);
    return out;
}

void check_consistency(const RateBundle& rates, double tol) {
    if (rates.defect1 > tol || rates.defect2 > tol)
        throw SimulationError("dynamics: balance residual of the wrong sign (rule bug?)");
}

ResolvedRates resolve_rates(double b1, double b2, double r1, double r2,
                            const ModelSpec& model, const SharingConfig& config) {
    const bool at0_1 = (b1 <= 0.0), atB_1 = (b1 >= model.B1);
    const bool at0_2 = (b2 <= 0.0), atB_2 = (b2 >= model.B2);

    ResolvedRates res;
    res.region1 = at0_1 ? Region::Empty : (atB_1 ? Region::Full : Region::Interior);
    res.region2 = at0_2 ? Region::Empty : (atB_2 ? Region::Full : Region::Interior);

    // Boundary labels stick unless the cell derivative points inward; a
    // label only ever moves boundary -> Interior here, so the loop settles
    // after at most two flips (the cap turns a rule bug into an error).
    bool settled = false;
    for (int round = 0; round < 4 && !settled; ++round) {
        res.rates = instantaneous_rates(res.region1, res.region2, r1, r2, config, model.c);
        settled = true;
        if (res.region1 == Region::Empty && res.rates.db1 > 0.0) {
            res.region1 = Region::Interior;
            settled = false;
        } else if (res.region1 == Region::Full && res.rates.db1 < 0.0) {
            res.region1 = Region::Interior;
            settled = false;
        }
        if (res.region2 == Region::Empty && res.rates.db2 > 0.0) {
            res.region2 = Region::Interior;
            settled = false;
        } else if (res.region2 == Region::Full && res.rates.db2 < 0.0) {
            res.region2 = Region::Interior;
            settled = false;
        }
    }
    if (!settled)
        throw SimulationError("dynamics: region labels failed to settle (chattering)");

    // A battery re-labelled off a boundary must now move away from it.
    // The one consistent exception: a full battery whose drain is smaller
    // than the overflow it receives. Its true motion slides along the
    // capacity boundary: the transfer covers exactly the drain and the
    // sender discards the rest of its surplus.
    auto sliding = [&](bool receiver_is_1) -> bool {
        const Region sender_region = receiver_is_1 ? res.region2 : res.region1;
        const double r_recv = receiver_is_1 ? r1 : r2;
        const double r_send = receiver_is_1 ? r2 : r1;
        if (sender_region != Region::Full || !(r_send > 0.0) || !(r_recv < 0.0)) return false;
        RateBundle s;
        s.db1 = s.db2 = 0.0;
        const double covered = -r_recv;
        if (receiver_is_1) {
            s.xfer_2to1 = covered;
            s.over2 = r_send - covered;
            res.region1 = Region::Full;
        } else {
            s.xfer_1to2 = covered;
            s.over1 = r_send - covered;
            res.region2 = Region::Full;
        }
        if ((receiver_is_1 ? s.over2 : s.over1) < 0.0) return false;
        res.rates = s;
        return true;
    };

    const bool conflict1 =
        res.region1 == Region::Interior &&
        ((at0_1 && res.rates.db1 < 0.0) || (atB_1 && res.rates.db1 > 0.0));
    const bool conflict2 =
        res.region2 == Region::Interior &&
        ((at0_2 && res.rates.db2 < 0.0) || (atB_2 && res.rates.db2 > 0.0));
    if (conflict1 || conflict2) {
        const bool handled = conflict1 && atB_1 && res.rates.db1 > 0.0 ? sliding(true)
                             : conflict2 && atB_2 && res.rates.db2 > 0.0 ? sliding(false)
                                                                         : false;
        if (!handled)
            throw SimulationError("dynamics: region labels failed to settle (chattering)");
    }

    check_consistency(res.rates);
    return res;
}

} // namespace esim
