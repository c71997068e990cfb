#include "esim/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "esim/errors.hpp"

namespace esim {

using nlohmann::json;

namespace {

json background_to_json(const Background& bg) {
    json j;
    if (const auto* ctmc = std::get_if<CtmcBackground>(&bg)) {
        j["type"] = "ctmc";
        j["states"] = ctmc->states;
        const std::size_t n = ctmc->size();
        json rows = json::array();
        for (std::size_t i = 0; i < n; ++i) {
            json row = json::array();
            for (std::size_t k = 0; k < n; ++k) row.push_back(ctmc->rate(i, k));
            rows.push_back(std::move(row));
        }
        j["rate_matrix"] = std::move(rows);
        json gens = json::array();
        for (const auto& g : ctmc->netgen) gens.push_back(json::array({g.r1, g.r2}));
        j["netgen"] = std::move(gens);
    } else {
        const auto& trace = std::get<TraceBackground>(bg);
        j["type"] = "trace";
        j["sample_period"] = trace.sample_period * 60.0; // back to minutes
        json series = json::array();
        for (const auto& g : trace.series) series.push_back(json::array({g.r1, g.r2}));
        j["series"] = std::move(series);
    }
    return j;
}

CtmcBackground ctmc_from_json(const json& j) {
    CtmcBackground bg;
    bg.states = j.at("states").get<std::vector<std::string>>();
    const std::size_t n = bg.states.size();
    const auto& rows = j.at("rate_matrix");
    if (!rows.is_array() || rows.size() != n)
        throw ConfigError("config: rate_matrix must have one row per state");
    for (const auto& row : rows) {
        if (!row.is_array() || row.size() != n)
            throw ConfigError("config: rate_matrix rows must have one entry per state");
        for (const auto& q : row) bg.rate_matrix.push_back(q.get<double>());
    }
    const auto& gens = j.at("netgen");
    if (!gens.is_array() || gens.size() != n)
        throw ConfigError("config: netgen must list one (r1, r2) pair per state");
    for (const auto& g : gens) {
        if (!g.is_array() || g.size() != 2) throw ConfigError("config: netgen entries are pairs");
        bg.netgen.push_back({g[0].get<double>(), g[1].get<double>()});
    }
    return bg;
}

CtmcBackground product_from_json(const json& j) {
    const auto& agents = j.at("agents");
    if (!agents.is_array() || agents.size() != 2)
        throw ConfigError("config: ctmc_product needs exactly two agents");
    AgentChain chains[2];
    for (int a = 0; a < 2; ++a) {
        const auto& spec = agents[a];
        chains[a].states = spec.at("states").get<std::vector<std::string>>();
        const std::size_t n = chains[a].states.size();
        const auto& rows = spec.at("rate_matrix");
        if (!rows.is_array() || rows.size() != n)
            throw ConfigError("config: agent rate_matrix must be square");
        for (const auto& row : rows)
            for (const auto& q : row) chains[a].rate_matrix.push_back(q.get<double>());
        chains[a].r = spec.at("r").get<std::vector<double>>();
        if (chains[a].r.size() != n)
            throw ConfigError("config: agent r must list one value per state");
    }
    return product_chain(chains[0], chains[1]);
}

TraceBackground trace_from_json(const json& j, const std::string& base_dir) {
    TraceBackground bg;
    const double period_minutes = j.at("sample_period").get<double>();
    if (!(period_minutes > 0.0)) throw ConfigError("config: sample_period must be positive");
    bg.sample_period = period_minutes / 60.0;

    if (j.contains("series")) {
        for (const auto& g : j.at("series")) {
            if (!g.is_array() || g.size() != 2)
                throw ConfigError("config: trace series entries are pairs");
            bg.series.push_back({g[0].get<double>(), g[1].get<double>()});
        }
    } else if (j.contains("csv")) {
        std::filesystem::path p = j.at("csv").get<std::string>();
        if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
        std::ifstream in(p);
        if (!in) throw ConfigError("config: cannot open trace csv " + p.string());
        std::string line;
        if (!std::getline(in, line))
            throw ConfigError("config: trace csv " + p.string() + " is empty");
        int line_no = 1;
        while (std::getline(in, line)) {
            ++line_no;
            while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
            if (line.empty()) continue;
            double t, r1, r2;
            if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &t, &r1, &r2) != 3)
                throw ConfigError("config: " + p.string() + ":" + std::to_string(line_no) +
                                  ": expected `t,r1,r2`");
            bg.series.push_back({r1, r2});
        }
    } else {
        throw ConfigError("config: trace background needs `series` or `csv`");
    }
    if (bg.series.empty()) throw ConfigError("config: trace background has no samples");
    return bg;
}

void require_units(const json& j) {
    if (!j.contains("units"))
        throw ConfigError(
            "config: trace models must declare units {\"power\":\"MW\",\"energy\":\"MWh\","
            "\"period\":\"min\"}");
    const auto& u = j.at("units");
    auto want = [&](const char* key, const char* value) {
        if (!u.contains(key) || u.at(key).get<std::string>() != value)
            throw ConfigError(std::string("config: units.") + key + " must be \"" + value + "\"");
    };
    want("power", "MW");
    want("energy", "MWh");
    want("period", "min");
}

} // namespace

ExperimentConfig parse_config_json(const std::string& text, const std::string& base_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: JSON parse error: ") + e.what());
    }
    try {
        ExperimentConfig cfg;
        const auto& m = j.at("model");
        const auto& bg = m.at("background");
        const std::string type = bg.at("type").get<std::string>();
        if (type == "ctmc")
            cfg.model.background = ctmc_from_json(bg);
        else if (type == "ctmc_product")
            cfg.model.background = product_from_json(bg);
        else if (type == "trace") {
            require_units(j);
            cfg.model.background = trace_from_json(bg, base_dir);
        } else
            throw ConfigError("config: unknown background type '" + type + "'");
        cfg.model.B1 = m.at("B1").get<double>();
        cfg.model.B2 = m.at("B2").get<double>();
        cfg.model.c = m.at("c").get<double>();
        if (j.contains("sharing")) {
            cfg.sharing.c1 = j.at("sharing").at("c1").get<double>();
            cfg.sharing.c2 = j.at("sharing").at("c2").get<double>();
        }
        if (j.contains("defaults")) {
            const auto& d = j.at("defaults");
            if (d.contains("horizon")) cfg.horizon = d.at("horizon").get<double>();
            if (d.contains("warmup")) cfg.warmup = d.at("warmup").get<double>();
            if (d.contains("seed")) cfg.seed = d.at("seed").get<std::uint64_t>();
            if (d.contains("grid_step")) cfg.grid_step = d.at("grid_step").get<double>();
        }
        if (j.contains("initial")) {
            const auto& s = j.at("initial");
            InitialConditions init;
            init.b1 = s.at("b1").get<double>();
            init.b2 = s.at("b2").get<double>();
            if (s.contains("bg")) init.bg = s.at("bg").get<int>();
            cfg.initial = init;
        }
        return cfg;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

std::string config_to_json(const ExperimentConfig& config) {
    json j;
    j["model"]["background"] = background_to_json(config.model.background);
    j["model"]["B1"] = config.model.B1;
    j["model"]["B2"] = config.model.B2;
    j["model"]["c"] = config.model.c;
    j["sharing"]["c1"] = config.sharing.c1;
    j["sharing"]["c2"] = config.sharing.c2;
    json d;
    if (config.horizon) d["horizon"] = *config.horizon;
    if (config.warmup) d["warmup"] = *config.warmup;
    if (config.seed) d["seed"] = *config.seed;
    if (config.grid_step) d["grid_step"] = *config.grid_step;
    if (!d.is_null()) j["defaults"] = std::move(d);
    if (config.initial)
        j["initial"] = {{"b1", config.initial->b1},
                        {"b2", config.initial->b2},
                        {"bg", config.initial->bg}};
    if (config.model.trace() != nullptr)
        j["units"] = {{"power", "MW"}, {"energy", "MWh"}, {"period", "min"}};
    return j.dump(2);
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_json(buf.str(),
                             std::filesystem::path(path).parent_path().string().empty()
                                 ? "."
                                 : std::filesystem::path(path).parent_path().string());
}

void save_config(const ExperimentConfig& config, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("config: cannot write " + path);
    out << config_to_json(config) << "\n";
}

std::vector<std::string> preset_names() { return {"toy-symmetric", "toy-asym1", "toy-asym2"}; }

bool is_preset(const std::string& name) {
    for (const auto& p : preset_names())
        if (p == name) return true;
    return false;
}

ExperimentConfig make_preset(const std::string& name) {
    double r2_hi;
    if (name == "toy-symmetric")
        r2_hi = 2.0;
    else if (name == "toy-asym1")
        r2_hi = 2.15;
    else if (name == "toy-asym2")
        r2_hi = 2.5;
    else
        throw ConfigError("unknown preset '" + name + "'");

    // two independent unit-rate on/off chains
    AgentChain agent1{{"lo", "hi"}, {-1.0, 1.0, 1.0, -1.0}, {-1.5, 2.0}};
    AgentChain agent2{{"lo", "hi"}, {-1.0, 1.0, 1.0, -1.0}, {-1.5, r2_hi}};

    ExperimentConfig cfg;
    cfg.model.background = product_chain(agent1, agent2);
    cfg.model.B1 = 10.0;
    cfg.model.B2 = 10.0;
    cfg.model.c = 1.5;
    cfg.sharing = {1.5, 1.5};
    cfg.horizon = 1e6;
    cfg.seed = 1;
    cfg.grid_step = 0.25;
    return cfg;
}

ExperimentConfig load_config_or_preset(const std::string& path_or_name) {
    if (std::filesystem::exists(path_or_name)) return load_config(path_or_name);
    if (is_preset(path_or_name)) return make_preset(path_or_name);
    throw ConfigError("no such config file or preset: " + path_or_name);
}

} // namespace esim
