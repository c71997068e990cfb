#pragma once

#include <string>
#include <variant>
#include <vector>

namespace esim {

/// Net power generation (supply minus demand) of both agents in one
/// background state or trace sample.
struct NetGen {
    double r1 = 0.0;
    double r2 = 0.0;
};

/// Finite-state continuous-time Markov chain driving both agents' net
/// generation. `rate_matrix` is dense row-major (n x n), rows sum to zero.
struct CtmcBackground {
    std::vector<std::string> states;
    std::vector<double> rate_matrix;
    std::vector<NetGen> netgen;

    std::size_t size() const { return states.size(); }
    double rate(std::size_t from, std::size_t to) const {
        return rate_matrix[from * states.size() + to];
    }
};

/// Piecewise-constant net-generation series sampled at a fixed period.
struct TraceBackground {
    double sample_period = 0.0;
    std::vector<NetGen> series;
};

using Background = std::variant<CtmcBackground, TraceBackground>;

/// The two-agent system: common background process, battery capacities,
/// and the physical cap on inter-agent transfer rate. Immutable once
/// built; safe to share across concurrent simulation workers.
struct ModelSpec {
    Background background;
    double B1 = 0.0; // battery capacity, agent 1
    double B2 = 0.0; // battery capacity, agent 2
    double c = 0.0;  // transfer capacity (either direction)

    const CtmcBackground* ctmc() const { return std::get_if<CtmcBackground>(&background); }
    const TraceBackground* trace() const { return std::get_if<TraceBackground>(&background); }
};

/// Peak rates (c1, c2) at which each agent covers the other's deficit
/// from its battery.
struct SharingConfig {
    double c1 = 0.0;
    double c2 = 0.0;
};

struct Violation {
    std::string code;   // stable identifier, e.g. "rate_matrix row sum"
    std::string detail; // human-readable specifics
};

/// Violations are data, not failures: an invalid model still produces a
/// report rather than an exception.
struct ValidationReport {
    std::vector<Violation> violations;
    std::vector<std::string> notes;

    bool ok() const { return violations.empty(); }
};

/// One agent's own chain, used to assemble a product background for two
/// agents with independent drivers.
struct AgentChain {
    std::vector<std::string> states;
    std::vector<double> rate_matrix; // n x n row-major
    std::vector<double> r;           // net generation per state
};

/// Product of two independent per-agent chains: joint states "<a>|<b>",
/// transitions change one coordinate at a time.
CtmcBackground product_chain(const AgentChain& agent1, const AgentChain& agent2);

ValidationReport validate_model(const ModelSpec& model);

/// Largest useful deficit-covering rate for `agent` (1 or 2):
/// min(c, max over states of the negative part of the other agent's net
/// generation). Raising c_i beyond this cannot change the realised sharing.
double c_max(const ModelSpec& model, int agent);

/// Throws SimulationError when 0 <= c_i <= c_max(model, i) fails.
void require_valid_config(const ModelSpec& model, const SharingConfig& config);

/// Structural checks only (finite/positive capacities, well-formed
/// background); throws SimulationError. Regeneration-state checks are
/// advisory and live in validate_model.
void require_simulatable(const ModelSpec& model);

} // namespace esim
