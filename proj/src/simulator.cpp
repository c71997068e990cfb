#include "esim/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "esim/errors.hpp"
#include "esim/rng.hpp"

namespace esim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Walks the background process slot by slot: each slot has constant
// (r1, r2) and a duration. CTMC slots draw exponential holding times and
// jump targets from the run's generator; trace slots replay in order,
// cycling past the end.
class BackgroundWalker {
  public:
    BackgroundWalker(const ModelSpec& model, int initial_state, std::uint64_t seed)
        : model_(model), rng_(seed), state_(initial_state) {
        if (const auto* ctmc = model.ctmc()) {
            const std::size_t n = ctmc->size();
            if (state_ < 0 || state_ >= static_cast<int>(n))
                throw SimulationError("background: initial state index out of range");
            exit_rate_.resize(n, 0.0);
            for (std::size_t s = 0; s < n; ++s) {
                double total = 0.0;
                for (std::size_t t = 0; t < n; ++t)
                    if (t != s) total += std::max(0.0, ctmc->rate(s, t));
                exit_rate_[s] = total;
            }
            row_.resize(n, 0.0);
            slot_left_ = draw_holding();
        } else {
            const auto* trace = model.trace();
            const int n = static_cast<int>(trace->series.size());
            state_ = ((initial_state % n) + n) % n;
            slot_left_ = trace->sample_period;
        }
    }

    int state() const { return state_; }
    double slot_left() const { return slot_left_; }

    NetGen rates() const {
        if (const auto* ctmc = model_.ctmc()) return ctmc->netgen[state_];
        return model_.trace()->series[state_];
    }

    void consume(double dt) { slot_left_ -= dt; }

    void next_slot() {
        if (const auto* ctmc = model_.ctmc()) {
            const std::size_t n = ctmc->size();
            if (exit_rate_[state_] > 0.0) {
                for (std::size_t t = 0; t < n; ++t)
                    row_[t] = (static_cast<int>(t) == state_)
                                  ? 0.0
                                  : std::max(0.0, ctmc->rate(state_, t));
                state_ = static_cast<int>(rng_.pick_weighted(row_, exit_rate_[state_]));
            }
            slot_left_ = draw_holding();
        } else {
            const auto* trace = model_.trace();
            state_ = (state_ + 1) % static_cast<int>(trace->series.size());
            slot_left_ = trace->sample_period;
        }
    }

  private:
    double draw_holding() {
        const double q = exit_rate_[state_];
        return q > 0.0 ? rng_.exponential(q) : kInf;
    }

    const ModelSpec& model_;
    Rng rng_;
    int state_ = 0;
    double slot_left_ = 0.0;
    std::vector<double> exit_rate_;
    std::vector<double> row_;
};

inline void accumulate(Accumulators& acc, const RateBundle& rates, double r1, double r2,
                       double dt) {
    acc.lost1 += rates.loss1 * dt;
    acc.lost2 += rates.loss2 * dt;
    acc.served1 += (std::max(0.0, -r1) - rates.loss1) * dt;
    acc.served2 += (std::max(0.0, -r2) - rates.loss2) * dt;
    acc.over1 += rates.over1 * dt;
    acc.over2 += rates.over2 * dt;
    acc.xfer_1to2 += rates.xfer_1to2 * dt;
    acc.xfer_2to1 += rates.xfer_2to1 * dt;
    acc.net_in1 += r1 * dt;
    acc.net_in2 += r2 * dt;
    acc.elapsed += dt;
}

struct BoundaryHit {
    double when = kInf;
    double target = 0.0;
};

// One system advancing through a constant-rate segment. Batteries move
// linearly, so boundary-hit instants are exact quotients; a battery whose
// hit is the step taken is snapped exactly onto the boundary, which keeps
// the region labelling free of round-off chatter.
struct Stepper {
    const ModelSpec& model;
    SharingConfig config;
    double b1, b2;
    ResolvedRates cur;

    Stepper(const ModelSpec& m, const SharingConfig& cfg, double b1_init, double b2_init)
        : model(m), config(cfg), b1(b1_init), b2(b2_init) {}

    void resolve(double r1, double r2) { cur = resolve_rates(b1, b2, r1, r2, model, config); }

    BoundaryHit hit1() const {
        if (cur.rates.db1 > 0.0) return {(model.B1 - b1) / cur.rates.db1, model.B1};
        if (cur.rates.db1 < 0.0) return {b1 / -cur.rates.db1, 0.0};
        return {};
    }
    BoundaryHit hit2() const {
        if (cur.rates.db2 > 0.0) return {(model.B2 - b2) / cur.rates.db2, model.B2};
        if (cur.rates.db2 < 0.0) return {b2 / -cur.rates.db2, 0.0};
        return {};
    }

    void advance(double dt, double r1, double r2, Accumulators& acc) {
        const BoundaryHit h1 = hit1();
        const BoundaryHit h2 = hit2();
        b1 = (dt == h1.when) ? h1.target : b1 + cur.rates.db1 * dt;
        b2 = (dt == h2.when) ? h2.target : b2 + cur.rates.db2 * dt;
        b1 = std::clamp(b1, 0.0, model.B1);
        b2 = std::clamp(b2, 0.0, model.B2);
        accumulate(acc, cur.rates, r1, r2, dt);
    }

    double next_event() const { return std::min(hit1().when, hit2().when); }
};

} // namespace

void advance_slot(HybridState& state, double r1, double r2, double dt,
                  const SharingConfig& config, const ModelSpec& model, Accumulators& acc,
                  const SimOptions& opts) {
    if (!(dt > 0.0)) throw SimulationError("advance_slot: dt must be positive");
    Stepper sys(model, config, state.b1, state.b2);
    double left = dt;
    int events = 0;
    while (left > 0.0) {
        if (++events > opts.max_events_per_slot)
            throw SimulationError("advance_slot: event cap exceeded (chattering?)");
        sys.resolve(r1, r2);
        const double step = std::min(left, sys.next_event());
        sys.advance(step, r1, r2, acc);
        left -= step;
        state.t += step;
        state.b1 = sys.b1;
        state.b2 = sys.b2;
        if (opts.on_event) opts.on_event(state, acc);
    }
}

namespace {

// Batch bookkeeping shared by simulate and simulate_standalone: records
// cumulative lost energy at the warm-up instant and at each batch edge.
struct Checkpoints {
    std::vector<double> times;
    std::size_t next = 0;

    Checkpoints(double warmup_time, double horizon, int batches) {
        times.push_back(warmup_time);
        for (int k = 1; k <= batches; ++k)
            times.push_back(warmup_time + (horizon - warmup_time) * k / batches);
        next = warmup_time > 0.0 ? 0 : 1;
    }

    double limit(double horizon) const {
        return next < times.size() ? std::min(horizon, times[next]) : horizon;
    }

    template <typename AtWarmup, typename AtEdge>
    void observe(double t, AtWarmup&& at_warmup, AtEdge&& at_edge) {
        while (next < times.size() && t >= times[next] - 1e-12) {
            if (next == 0) at_warmup();
            at_edge();
            ++next;
        }
    }
};

void batch_stats(const std::vector<double>& lost_at, double window, int batches,
                 std::vector<double>& means, double& se) {
    means.clear();
    se = 0.0;
    if (lost_at.size() < 2) return;
    const double len = window / batches;
    for (std::size_t k = 1; k < lost_at.size(); ++k)
        means.push_back((lost_at[k] - lost_at[k - 1]) / len);
    if (means.size() < 2) return;
    double mean = 0.0;
    for (double m : means) mean += m;
    mean /= static_cast<double>(means.size());
    double var = 0.0;
    for (double m : means) var += (m - mean) * (m - mean);
    var /= static_cast<double>(means.size() - 1);
    se = std::sqrt(var / static_cast<double>(means.size()));
}

} // namespace

SimulationResult simulate(const ModelSpec& model, const SharingConfig& config, double horizon,
                          double warmup, std::uint64_t seed, std::optional<HybridState> initial,
                          const SimOptions& opts) {
    require_valid_config(model, config);
    if (!(horizon > warmup) || warmup < 0.0)
        throw SimulationError("simulate: need horizon > warmup >= 0");

    HybridState state;
    if (initial) {
        state = *initial;
        state.t = 0.0;
        if (state.b1 < 0.0 || state.b1 > model.B1 || state.b2 < 0.0 || state.b2 > model.B2)
            throw SimulationError("simulate: initial battery levels outside [0, B]");
    } else {
        state.b1 = model.B1 / 2.0;
        state.b2 = model.B2 / 2.0;
        state.bg = 0;
    }

    const int batches = std::max(1, opts.batch_count);
    Checkpoints ck(warmup, horizon, batches);
    std::vector<double> lost1_at, lost2_at;

    SimulationResult result;
    Accumulators acc;
    BackgroundWalker bg(model, state.bg, seed);
    state.bg = bg.state();
    const HybridState start = state;
    if (opts.on_event) opts.on_event(state, acc);

    while (state.t < horizon) {
        const double dt = std::min(bg.slot_left(), ck.limit(horizon) - state.t);
        if (dt > 0.0) {
            const NetGen r = bg.rates();
            advance_slot(state, r.r1, r.r2, dt, config, model, acc, opts);
            bg.consume(dt);
        }
        ck.observe(
            state.t, [&] { result.acc_warmup = acc; },
            [&] {
                lost1_at.push_back(acc.lost1);
                lost2_at.push_back(acc.lost2);
            });
        if (bg.slot_left() <= 0.0 && state.t < horizon) {
            bg.next_slot();
            state.bg = bg.state();
        }
    }
    if (warmup == 0.0) {
        lost1_at.insert(lost1_at.begin(), 0.0);
        lost2_at.insert(lost2_at.begin(), 0.0);
    }

    result.acc = acc;
    result.final_state = state;
    const double window = horizon - warmup;
    result.llr1 = (acc.lost1 - result.acc_warmup.lost1) / window;
    result.llr2 = (acc.lost2 - result.acc_warmup.lost2) / window;
    batch_stats(lost1_at, window, batches, result.batch_means1, result.se1);
    batch_stats(lost2_at, window, batches, result.batch_means2, result.se2);

    // the balance identity must close on every run
    if (conservation_residual(acc, start, state) > 1e-6)
        throw SimulationError("simulate: energy balance violated");
    return result;
}

StandaloneResult simulate_standalone(const ModelSpec& model, int agent, double horizon,
                                     double warmup, std::uint64_t seed, const SimOptions& opts) {
    require_simulatable(model);
    if (agent != 1 && agent != 2)
        throw SimulationError("simulate_standalone: agent must be 1 or 2");
    if (!(horizon > warmup) || warmup < 0.0)
        throw SimulationError("simulate_standalone: need horizon > warmup >= 0");

    const double cap_b = (agent == 1) ? model.B1 : model.B2;
    double b = cap_b / 2.0;
    double t = 0.0;
    double lost = 0.0;
    double lost_at_warmup = 0.0;

    const int batches = std::max(1, opts.batch_count);
    Checkpoints ck(warmup, horizon, batches);
    std::vector<double> lost_at;

    BackgroundWalker bg(model, 0, seed);
    while (t < horizon) {
        const double dt = std::min(bg.slot_left(), ck.limit(horizon) - t);
        if (dt > 0.0) {
            const NetGen rates = bg.rates();
            const double r = (agent == 1) ? rates.r1 : rates.r2;
            // single battery, piecewise linear with reflecting boundaries
            double left = dt;
            while (left > 0.0) {
                const bool pinned_low = (b <= 0.0 && r < 0.0);
                const bool pinned_high = (b >= cap_b && r > 0.0);
                const double db = (pinned_low || pinned_high) ? 0.0 : r;
                double step = left;
                double snap = -1.0;
                if (db > 0.0 && (cap_b - b) / db <= step) {
                    step = (cap_b - b) / db;
                    snap = cap_b;
                } else if (db < 0.0 && b / -db <= step) {
                    step = b / -db;
                    snap = 0.0;
                }
                if (pinned_low) lost += -r * step;
                b = snap >= 0.0 ? snap : b + db * step;
                left -= step;
                t += step;
            }
            bg.consume(dt);
        }
        ck.observe(
            t, [&] { lost_at_warmup = lost; }, [&] { lost_at.push_back(lost); });
        if (bg.slot_left() <= 0.0 && t < horizon) bg.next_slot();
    }
    if (warmup == 0.0) lost_at.insert(lost_at.begin(), 0.0);

    StandaloneResult result;
    const double window = horizon - warmup;
    result.llr = (lost - lost_at_warmup) / window;
    batch_stats(lost_at, window, batches, result.batch_means, result.se);
    return result;
}

CoupledReport coupled_simulate(const ModelSpec& model, const SharingConfig& config_a,
                               const SharingConfig& config_b, double horizon, std::uint64_t seed,
                               const CoupledOptions& opts) {
    require_valid_config(model, config_a);
    require_valid_config(model, config_b);
    if (!(horizon > 0.0)) throw SimulationError("coupled_simulate: horizon must be positive");

    CoupledReport report;
    const double d1 = config_b.c1 - config_a.c1;
    const double d2 = config_b.c2 - config_a.c2;
    if (d1 != 0.0 && d2 == 0.0) {
        report.lipschitz_applicable = d1 > 0.0;
        report.giver = 1;
        report.eps = d1;
    } else if (d2 != 0.0 && d1 == 0.0) {
        report.lipschitz_applicable = d2 > 0.0;
        report.giver = 2;
        report.eps = d2;
    }

    Stepper sys_a(model, config_a, model.B1 / 2.0, model.B2 / 2.0);
    Stepper sys_b(model, config_b, model.B1 / 2.0, model.B2 / 2.0);
    Accumulators acc_a, acc_b;
    BackgroundWalker bg(model, 0, seed);

    double t = 0.0;
    auto observe = [&]() {
        report.min_battery_gap1 = std::min(report.min_battery_gap1, sys_a.b1 - sys_b.b1);
        report.min_battery_gap2 = std::min(report.min_battery_gap2, sys_a.b2 - sys_b.b2);
        const double lost_g_a = report.giver == 2 ? acc_a.lost2 : acc_a.lost1;
        const double lost_g_b = report.giver == 2 ? acc_b.lost2 : acc_b.lost1;
        const double lost_r_a = report.giver == 2 ? acc_a.lost1 : acc_a.lost2;
        const double lost_r_b = report.giver == 2 ? acc_b.lost1 : acc_b.lost2;
        report.min_lost_gap_giver = std::min(report.min_lost_gap_giver, lost_g_b - lost_g_a);
        report.min_over_gap1 = std::min(report.min_over_gap1, acc_a.over1 - acc_b.over1);
        report.min_over_gap2 = std::min(report.min_over_gap2, acc_a.over2 - acc_b.over2);
        report.min_total_lost_gap =
            std::min(report.min_total_lost_gap,
                     (acc_a.lost1 + acc_a.lost2) - (acc_b.lost1 + acc_b.lost2));
        if (report.lipschitz_applicable) {
            report.min_lipschitz_slack_giver = std::min(
                report.min_lipschitz_slack_giver, report.eps * t - (lost_g_b - lost_g_a));
            report.min_lipschitz_slack_receiver = std::min(
                report.min_lipschitz_slack_receiver, report.eps * t - (lost_r_a - lost_r_b));
        }
        if (opts.record_rows)
            report.rows.push_back({t, sys_a.b1, sys_a.b2, sys_b.b1, sys_b.b2, acc_a.lost1,
                                   acc_a.lost2, acc_a.over1, acc_a.over2, acc_b.lost1,
                                   acc_b.lost2, acc_b.over1, acc_b.over2});
    };
    observe();

    while (t < horizon) {
        const NetGen r = bg.rates();
        const double dt = std::min(bg.slot_left(), horizon - t);
        // merged event timeline: step both systems to the earliest
        // boundary hit of either one, comparing at every such instant
        double slot = dt;
        int events = 0;
        while (slot > 0.0) {
            if (++events > opts.max_events_per_slot)
                throw SimulationError("coupled_simulate: event cap exceeded (chattering?)");
            sys_a.resolve(r.r1, r.r2);
            sys_b.resolve(r.r1, r.r2);
            const double step = std::min({slot, sys_a.next_event(), sys_b.next_event()});
            sys_a.advance(step, r.r1, r.r2, acc_a);
            sys_b.advance(step, r.r1, r.r2, acc_b);
            slot -= step;
            t += step;
            observe();
        }
        bg.consume(dt);
        if (bg.slot_left() <= 0.0 && t < horizon) bg.next_slot();
    }

    report.acc_a = acc_a;
    report.acc_b = acc_b;
    report.llr1_a = acc_a.lost1 / horizon;
    report.llr2_a = acc_a.lost2 / horizon;
    report.llr1_b = acc_b.lost1 / horizon;
    report.llr2_b = acc_b.lost2 / horizon;
    return report;
}

double conservation_residual(const Accumulators& acc, const HybridState& initial,
                             const HybridState& final_state) {
    const double lhs = (final_state.b1 + final_state.b2) - (initial.b1 + initial.b2);
    const double rhs =
        (acc.net_in1 + acc.net_in2) + (acc.lost1 + acc.lost2) - (acc.over1 + acc.over2);
    const double scale = std::max({1.0, std::abs(acc.net_in1) + std::abs(acc.net_in2),
                                   acc.lost1 + acc.lost2, acc.over1 + acc.over2});
    return std::abs(lhs - rhs) / scale;
}

} // namespace esim
