#include "esim/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include "esim/errors.hpp"

namespace esim {

namespace {

std::string fmt_pair(std::size_t i, std::size_t j) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "(%zu,%zu)", i, j);
    return buf;
}

// Strong connectivity of the positive-rate transition graph.
bool strongly_connected(const CtmcBackground& bg) {
    const std::size_t n = bg.size();
    if (n == 0) return false;
    auto reachable = [&](bool transpose) {
        std::vector<bool> seen(n, false);
        std::vector<std::size_t> stack{0};
        seen[0] = true;
        while (!stack.empty()) {
            const std::size_t s = stack.back();
            stack.pop_back();
            for (std::size_t t = 0; t < n; ++t) {
                const double q = transpose ? bg.rate(t, s) : bg.rate(s, t);
                if (t != s && q > 0.0 && !seen[t]) {
                    seen[t] = true;
                    stack.push_back(t);
                }
            }
        }
        return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
    };
    return reachable(false) && reachable(true);
}

void check_regeneration_states(const std::vector<NetGen>& netgen, ValidationReport& report) {
    bool s1 = false, s2 = false, s3 = false, s4 = false;
    double min_r1 = 0.0, min_r2 = 0.0;
    for (const auto& g : netgen) {
        min_r1 = std::min(min_r1, g.r1);
        min_r2 = std::min(min_r2, g.r2);
    }
    for (const auto& g : netgen) {
        if (g.r1 > 0.0 && g.r2 > 0.0) s1 = true;
        if (g.r1 < 0.0 && g.r2 < 0.0) s2 = true;
        if (g.r1 > 0.0 && g.r2 < 0.0 && g.r2 == min_r2) s3 = true;
        if (g.r1 < 0.0 && g.r2 > 0.0 && g.r1 == min_r1) s4 = true;
    }
    if (!s1) report.violations.push_back({"s1 missing", "no state with r1 > 0 and r2 > 0"});
    if (!s2) report.violations.push_back({"s2 missing", "no state with r1 < 0 and r2 < 0"});
    if (!s3)
        report.violations.push_back(
            {"s3 missing", "no state with r1 > 0 where r2 attains its most negative value"});
    if (!s4)
        report.violations.push_back(
            {"s4 missing", "no state with r2 > 0 where r1 attains its most negative value"});
}

} // namespace

CtmcBackground product_chain(const AgentChain& agent1, const AgentChain& agent2) {
    const std::size_t n1 = agent1.states.size();
    const std::size_t n2 = agent2.states.size();
    if (n1 == 0 || n2 == 0) throw ConfigError("product_chain: empty agent chain");
    if (agent1.rate_matrix.size() != n1 * n1 || agent1.r.size() != n1 ||
        agent2.rate_matrix.size() != n2 * n2 || agent2.r.size() != n2)
        throw ConfigError("product_chain: inconsistent agent chain sizes");

    CtmcBackground bg;
    const std::size_t n = n1 * n2;
    bg.states.reserve(n);
    bg.netgen.reserve(n);
    bg.rate_matrix.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n1; ++i) {
        for (std::size_t j = 0; j < n2; ++j) {
            bg.states.push_back(agent1.states[i] + "|" + agent2.states[j]);
            bg.netgen.push_back({agent1.r[i], agent2.r[j]});
        }
    }
    auto idx = [n2](std::size_t i, std::size_t j) { return i * n2 + j; };
    for (std::size_t i = 0; i < n1; ++i) {
        for (std::size_t j = 0; j < n2; ++j) {
            const std::size_t s = idx(i, j);
            double out = 0.0;
            for (std::size_t k = 0; k < n1; ++k) {
                if (k != i) {
                    const double q = agent1.rate_matrix[i * n1 + k];
                    bg.rate_matrix[s * n + idx(k, j)] = q;
                    out += q;
                }
            }
            for (std::size_t k = 0; k < n2; ++k) {
                if (k != j) {
                    const double q = agent2.rate_matrix[j * n2 + k];
                    bg.rate_matrix[s * n + idx(i, k)] = q;
                    out += q;
                }
            }
            bg.rate_matrix[s * n + s] = -out;
        }
    }
    return bg;
}

ValidationReport validate_model(const ModelSpec& model) {
    ValidationReport report;

    if (!(model.B1 > 0.0)) report.violations.push_back({"B1 positive", "B1 must be > 0"});
    if (!(model.B2 > 0.0)) report.violations.push_back({"B2 positive", "B2 must be > 0"});
    if (!(model.c >= 0.0)) report.violations.push_back({"c nonnegative", "c must be >= 0"});

    if (const auto* ctmc = model.ctmc()) {
        const std::size_t n = ctmc->size();
        if (n == 0) {
            report.violations.push_back({"states nonempty", "CTMC has no states"});
            return report;
        }
        if (ctmc->rate_matrix.size() != n * n)
            report.violations.push_back({"rate_matrix shape", "rate matrix is not n x n"});
        if (ctmc->netgen.size() != n)
            report.violations.push_back({"netgen shape", "netgen must list one (r1, r2) per state"});
        if (!report.violations.empty() &&
            (ctmc->rate_matrix.size() != n * n || ctmc->netgen.size() != n))
            return report;

        double scale = 0.0;
        for (double q : ctmc->rate_matrix) scale = std::max(scale, std::abs(q));
        const double tol = 1e-9 * std::max(1.0, scale);
        for (std::size_t i = 0; i < n; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double q = ctmc->rate(i, j);
                row += q;
                if (i != j && q < 0.0)
                    report.violations.push_back(
                        {"rate_matrix off-diagonal", "negative rate at " + fmt_pair(i, j)});
                if (!std::isfinite(q))
                    report.violations.push_back(
                        {"rate_matrix finite", "non-finite rate at " + fmt_pair(i, j)});
            }
            if (std::abs(row) > tol)
                report.violations.push_back(
                    {"rate_matrix row sum", "row " + std::to_string(i) + " sums to " +
                                                std::to_string(row) + ", expected 0"});
        }
        if (!strongly_connected(*ctmc))
            report.violations.push_back(
                {"irreducibility", "positive-rate transition graph is not strongly connected"});
        for (std::size_t i = 0; i < n; ++i) {
            if (!std::isfinite(ctmc->netgen[i].r1) || !std::isfinite(ctmc->netgen[i].r2))
                report.violations.push_back(
                    {"netgen finite", "non-finite net generation in state " + std::to_string(i)});
        }
        check_regeneration_states(ctmc->netgen, report);
    } else if (const auto* trace = model.trace()) {
        if (trace->series.empty())
            report.violations.push_back({"trace nonempty", "trace has no samples"});
        if (!(trace->sample_period > 0.0))
            report.violations.push_back({"sample_period positive", "sample period must be > 0"});
        for (std::size_t i = 0; i < trace->series.size(); ++i) {
            if (!std::isfinite(trace->series[i].r1) || !std::isfinite(trace->series[i].r2)) {
                report.violations.push_back(
                    {"netgen finite", "non-finite net generation at sample " + std::to_string(i)});
                break;
            }
        }
        report.notes.push_back("regeneration-states check: not applicable (trace background)");
    }
    return report;
}

double c_max(const ModelSpec& model, int agent) {
    if (agent != 1 && agent != 2) throw SimulationError("c_max: agent must be 1 or 2");
    double worst_other_deficit = 0.0;
    auto scan = [&](const std::vector<NetGen>& gens) {
        for (const auto& g : gens) {
            const double r_other = (agent == 1) ? g.r2 : g.r1;
            worst_other_deficit = std::max(worst_other_deficit, std::max(0.0, -r_other));
        }
    };
    if (const auto* ctmc = model.ctmc())
        scan(ctmc->netgen);
    else if (const auto* trace = model.trace())
        scan(trace->series);
    return std::min(model.c, worst_other_deficit);
}

void require_simulatable(const ModelSpec& model) {
    if (!(model.B1 > 0.0) || !(model.B2 > 0.0))
        throw SimulationError("model: battery capacities must be positive");
    if (!(model.c >= 0.0)) throw SimulationError("model: transfer capacity must be >= 0");
    if (const auto* ctmc = model.ctmc()) {
        const std::size_t n = ctmc->size();
        if (n == 0 || ctmc->rate_matrix.size() != n * n || ctmc->netgen.size() != n)
            throw SimulationError("model: malformed CTMC background");
    } else if (const auto* trace = model.trace()) {
        if (trace->series.empty() || !(trace->sample_period > 0.0))
            throw SimulationError("model: malformed trace background");
    } else {
        throw SimulationError("model: missing background");
    }
}

void require_valid_config(const ModelSpec& model, const SharingConfig& config) {
    require_simulatable(model);
    const double m1 = c_max(model, 1);
    const double m2 = c_max(model, 2);
    const double tol = 1e-12 * std::max(1.0, model.c);
    if (!(config.c1 >= 0.0) || config.c1 > m1 + tol)
        throw SimulationError("sharing config: c1 outside [0, c1_max]");
    if (!(config.c2 >= 0.0) || config.c2 > m2 + tol)
        throw SimulationError("sharing config: c2 outside [0, c2_max]");
}

} // namespace esim
