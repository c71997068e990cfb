#include "esim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "esim/errors.hpp"

namespace esim {

double standalone_llr_closed_form(double lambda_on, double lambda_off, double r_on,
                                  double r_off, double B) {
    if (!(lambda_on > 0.0) || !(lambda_off > 0.0))
        throw SimulationError("closed form: switching rates must be positive");
    if (!(r_on > 0.0) || !(r_off < 0.0))
        throw SimulationError("closed form: need r_on > 0 > r_off");
    if (!(B > 0.0)) throw SimulationError("closed form: need B > 0");

    const double total = lambda_on + lambda_off;
    const double pi_off = lambda_on / total;
    const double drift = (r_on * lambda_off + r_off * lambda_on) / total;
    // stationary exponent of the level distribution on (0, B)
    const double z = -(lambda_on / r_on + lambda_off / r_off);
    if (std::abs(z) * std::max(B, 1.0) < 1e-12 || drift == 0.0)
        throw SimulationError(
            "closed form: zero mean drift (degenerate exponent; polynomial branch not provided)");

    // P(level 0, off state); the e^{zB} factor is kept on whichever side
    // avoids overflow for large z*B
    double p0;
    if (z > 0.0) {
        const double w = std::exp(-z * B);
        p0 = pi_off * w / (w + lambda_off * (w - 1.0) / (r_off * z));
    } else {
        p0 = pi_off / (1.0 + lambda_off * (1.0 - std::exp(z * B)) / (r_off * z));
    }
    return -r_off * p0;
}

SweepResult pareto_sweep(const ModelSpec& model, double grid_step, double horizon,
                         double warmup, std::uint64_t seed, int jobs) {
    require_simulatable(model);
    if (!(grid_step > 0.0)) throw SimulationError("pareto_sweep: grid step must be positive");

    SweepResult result;
    result.c1_max = c_max(model, 1);
    result.c2_max = c_max(model, 2);

    auto axis_values = [&](double hi) {
        std::vector<double> v;
        for (double x = 0.0; x < hi - 1e-12; x += grid_step) v.push_back(x);
        v.push_back(hi); // endpoint forced in
        return v;
    };

    // flattened frontier: (0, c2max) -> (c1max, c2max) -> (c1max, 0)
    std::vector<FrontierPoint> points;
    for (double c1 : axis_values(result.c1_max))
        points.push_back({{c1, result.c2_max}, 0, 0, 0, 0, 0, 0, c1});
    {
        auto back = axis_values(result.c2_max);
        std::reverse(back.begin(), back.end());
        for (double c2 : back) {
            if (c2 == result.c2_max) continue; // corner already present
            points.push_back(
                {{result.c1_max, c2}, 0, 0, 0, 0, 0, 0, result.c1_max + (result.c2_max - c2)});
        }
    }

    const auto sa1 = simulate_standalone(model, 1, horizon, warmup, seed);
    const auto sa2 = simulate_standalone(model, 2, horizon, warmup, seed);
    result.llr_sa1 = sa1.llr;
    result.llr_sa2 = sa2.llr;
    result.se_sa1 = sa1.se;
    result.se_sa2 = sa2.se;

    auto run_point = [&](FrontierPoint& p) {
        const SimulationResult r = simulate(model, p.config, horizon, warmup, seed);
        p.llr1 = r.llr1;
        p.llr2 = r.llr2;
        p.se1 = r.se1;
        p.se2 = r.se2;
        p.benefit1 = std::max(0.0, result.llr_sa1 - r.llr1);
        p.benefit2 = std::max(0.0, result.llr_sa2 - r.llr2);
    };

    jobs = std::max(1, jobs);
    if (jobs == 1) {
        for (auto& p : points) run_point(p);
    } else {
        std::vector<std::thread> workers;
        std::size_t stride = static_cast<std::size_t>(jobs);
        for (std::size_t w = 0; w < stride; ++w) {
            workers.emplace_back([&, w] {
                for (std::size_t i = w; i < points.size(); i += stride) run_point(points[i]);
            });
        }
        for (auto& th : workers) th.join();
    }

    result.points = std::move(points);
    return result;
}

FrontierPoint egalitarian_solution(const std::vector<FrontierPoint>& frontier, double llr_sa1,
                                   double llr_sa2) {
    if (frontier.empty()) throw SimulationError("egalitarian_solution: empty frontier");
    const FrontierPoint* best = nullptr;
    double best_value = -1.0;
    for (const auto& p : frontier) {
        const double benefit1 = std::max(0.0, llr_sa1 - p.llr1);
        const double benefit2 = std::max(0.0, llr_sa2 - p.llr2);
        const double value = std::min(benefit1, benefit2);
        // strict improvement required: ties go to the smaller flatten_coord
        if (best == nullptr || value > best_value) {
            best = &p;
            best_value = value;
        }
    }
    FrontierPoint chosen = *best;
    chosen.benefit1 = std::max(0.0, llr_sa1 - chosen.llr1);
    chosen.benefit2 = std::max(0.0, llr_sa2 - chosen.llr2);
    return chosen;
}

namespace {

// standard error of the difference of two runs' batch-mean series,
// paired per batch (the runs share one background path)
double paired_se(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2) return 0.0;
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    double mean = 0.0;
    for (double x : d) mean += x;
    mean /= static_cast<double>(d.size());
    double var = 0.0;
    for (double x : d) var += (x - mean) * (x - mean);
    var /= static_cast<double>(d.size() - 1);
    return std::sqrt(var / static_cast<double>(d.size()));
}

} // namespace

std::optional<SharingConfig> mutual_benefit_search(const ModelSpec& model,
                                                   const SharingConfig& base, double step,
                                                   const std::vector<double>& theta_grid,
                                                   double horizon, std::uint64_t seed) {
    const double m1 = c_max(model, 1);
    const double m2 = c_max(model, 2);
    if (!(base.c1 < m1 && base.c2 < m2))
        throw SimulationError("mutual_benefit_search: base must lie strictly inside the rectangle");
    if (!(step > 0.0)) throw SimulationError("mutual_benefit_search: step must be positive");

    const double warmup = 0.01 * horizon;
    const SimulationResult ref = simulate(model, base, horizon, warmup, seed);

    for (double theta : theta_grid) {
        SharingConfig probe{std::clamp(base.c1 + step, 0.0, m1),
                            std::clamp(base.c2 + step * theta, 0.0, m2)};
        if (probe.c1 == base.c1 && probe.c2 == base.c2) continue;
        const SimulationResult r = simulate(model, probe, horizon, warmup, seed);
        const double slack1 = 2.0 * paired_se(r.batch_means1, ref.batch_means1);
        const double slack2 = 2.0 * paired_se(r.batch_means2, ref.batch_means2);
        if (r.llr1 < ref.llr1 - slack1 && r.llr2 < ref.llr2 - slack2) return probe;
    }
    return std::nullopt;
}

MonotonicityProbe monotonicity_probe(const ModelSpec& model, const SharingConfig& config,
                                     double eps, double horizon, std::uint64_t seed) {
    MonotonicityProbe probe;
    probe.eps = eps;
    const auto delta = [&](const SharingConfig& perturbed) {
        const CoupledReport r = coupled_simulate(model, config, perturbed, horizon, seed);
        return CoordDeltas{r.llr1_b - r.llr1_a, r.llr2_b - r.llr2_a,
                           (r.llr1_b + r.llr2_b) - (r.llr1_a + r.llr2_a)};
    };
    probe.wrt_c1 = delta({config.c1 + eps, config.c2});
    probe.wrt_c2 = delta({config.c1, config.c2 + eps});
    return probe;
}

} // namespace esim
