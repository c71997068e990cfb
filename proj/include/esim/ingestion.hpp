#pragma once

#include <string>
#include <variant>
#include <vector>

#include "esim/model.hpp"

namespace esim {

/// Uniformly sampled generation series. Powers are megawatts, the sample
/// period is minutes, and start_minute_of_day anchors time-of-day
/// evaluation (local civil time; no DST adjustment).
struct GenerationTrace {
    double period_minutes = 0.0;
    double start_minute_of_day = 0.0;
    std::vector<double> values;
};

struct ConstantDemand {
    double level = 0.0; // MW
};

/// Demand active on [window_start, window_end) minutes-of-day, zero outside.
struct WindowedDemand {
    double window_start = 0.0;
    double window_end = 0.0;
    double level = 0.0;
};

using DemandCurve = std::variant<ConstantDemand, WindowedDemand>;

/// Parse a `timestamp,power` CSV (header required). Timestamps are either
/// "YYYY-MM-DD HH:MM[:SS]" or plain minutes since trace start. Rows must
/// be spaced exactly `period_minutes` apart; gaps and irregular spacing
/// are rejected with the offending line number.
GenerationTrace load_trace_csv(const std::string& path, double period_minutes);

/// Replicate each sample of a coarser trace onto a finer grid
/// (e.g. hourly -> 5-minute: each value repeated 12x). The source period
/// must be an integer multiple of the target.
GenerationTrace expand_hourly(const GenerationTrace& trace, double target_period_minutes);

enum class DemandMode { Constant, Windowed };

struct DemandWindow {
    double start_minute = 0.0;
    double end_minute = 0.0;
};

/// Constant mode: level = fraction * mean(trace).
/// Windowed mode: level = fraction * mean(trace restricted to the daily
/// window); demand is zero outside the window.
DemandCurve build_demand(const GenerationTrace& trace, DemandMode mode, double fraction,
                         const DemandWindow* window = nullptr);

/// Assemble a trace-background model with r_i(t) = gen_i(t) - demand_i(t)
/// samplewise (windowed demand evaluated by time-of-day). Traces must
/// share period and length. Internally the sample period is converted to
/// hours so that MW x hours = MWh.
ModelSpec net_generation_model(const GenerationTrace& gen1, const DemandCurve& demand1,
                               const GenerationTrace& gen2, const DemandCurve& demand2,
                               double B1, double B2, double c);

double demand_at_minute_of_day(const DemandCurve& demand, double minute_of_day);

} // namespace esim
