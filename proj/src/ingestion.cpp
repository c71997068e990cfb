#include "esim/ingestion.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "esim/errors.hpp"

namespace esim {

namespace {

constexpr double kMinutesPerDay = 1440.0;

// proleptic Gregorian day count (days since 1970-01-01)
long days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const long era = (y >= 0 ? y : y - 399) / 400;
    const long yoe = y - era * 400;
    const long doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const long doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + doe - 719468;
}

// Accepts "YYYY-MM-DD HH:MM[:SS]" (also with 'T') or a plain number of
// minutes since trace start. Returns minutes on an absolute axis whose
// origin is midnight of the epoch day.
bool parse_timestamp(const std::string& field, double& minutes_abs, double& minute_of_day,
                     bool& is_civil) {
    int year, month, day, hh, mm;
    int ss = 0;
    char sep;
    if (std::sscanf(field.c_str(), "%d-%d-%d%c%d:%d:%d", &year, &month, &day, &sep, &hh, &mm,
                    &ss) >= 6) {
        if (month < 1 || month > 12 || day < 1 || day > 31 || hh < 0 || hh > 23 || mm < 0 ||
            mm > 59)
            return false;
        minute_of_day = hh * 60.0 + mm + ss / 60.0;
        minutes_abs =
            static_cast<double>(days_from_civil(year, month, day)) * kMinutesPerDay +
            minute_of_day;
        is_civil = true;
        return true;
    }
    char* end = nullptr;
    const double v = std::strtod(field.c_str(), &end);
    if (end == field.c_str() || *end != '\0' || !std::isfinite(v)) return false;
    minutes_abs = v;
    minute_of_day = std::fmod(v, kMinutesPerDay);
    is_civil = false;
    return true;
}

void trim_right(std::string& s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
}

} // namespace

GenerationTrace load_trace_csv(const std::string& path, double period_minutes) {
    if (!(period_minutes > 0.0)) throw ConfigError("trace: sample period must be positive");
    std::ifstream in(path);
    if (!in) throw ConfigError("trace: cannot open " + path);

    GenerationTrace trace;
    trace.period_minutes = period_minutes;

    std::string line;
    if (!std::getline(in, line)) throw ConfigError("trace: " + path + " is empty (header required)");

    int line_no = 1;
    double prev_abs = 0.0;
    bool have_prev = false;
    while (std::getline(in, line)) {
        ++line_no;
        trim_right(line);
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw ConfigError("trace: " + path + ":" + std::to_string(line_no) +
                              ": expected `timestamp,power`");
        const std::string ts = line.substr(0, comma);
        const std::string pw = line.substr(comma + 1);

        double minutes_abs = 0.0, minute_of_day = 0.0;
        bool is_civil = false;
        if (!parse_timestamp(ts, minutes_abs, minute_of_day, is_civil))
            throw ConfigError("trace: " + path + ":" + std::to_string(line_no) +
                              ": unparseable timestamp '" + ts + "'");
        char* end = nullptr;
        const double power = std::strtod(pw.c_str(), &end);
        if (end == pw.c_str() || !std::isfinite(power))
            throw ConfigError("trace: " + path + ":" + std::to_string(line_no) +
                              ": unparseable power '" + pw + "'");
        if (power < 0.0)
            throw ConfigError("trace: " + path + ":" + std::to_string(line_no) +
                              ": negative power");

        if (have_prev) {
            const double gap = minutes_abs - prev_abs;
            if (std::abs(gap - period_minutes) > 1e-6 * std::max(1.0, period_minutes))
                throw ConfigError("trace: " + path + ":" + std::to_string(line_no) +
                                  ": spacing of " + std::to_string(gap) +
                                  " min, expected " + std::to_string(period_minutes));
        } else {
            trace.start_minute_of_day = is_civil ? minute_of_day : 0.0;
        }
        prev_abs = minutes_abs;
        have_prev = true;
        trace.values.push_back(power);
    }
    if (trace.values.empty()) throw ConfigError("trace: " + path + " has no data rows");
    return trace;
}

GenerationTrace expand_hourly(const GenerationTrace& trace, double target_period_minutes) {
    if (!(target_period_minutes > 0.0))
        throw ConfigError("expand_hourly: target period must be positive");
    const double ratio_f = trace.period_minutes / target_period_minutes;
    const long ratio = std::lround(ratio_f);
    if (ratio < 1 || std::abs(ratio_f - static_cast<double>(ratio)) > 1e-9)
        throw ConfigError("expand_hourly: source period must be an integer multiple of target");

    GenerationTrace out;
    out.period_minutes = target_period_minutes;
    out.start_minute_of_day = trace.start_minute_of_day;
    out.values.reserve(trace.values.size() * static_cast<std::size_t>(ratio));
    for (double v : trace.values)
        for (long k = 0; k < ratio; ++k) out.values.push_back(v);
    return out;
}

double demand_at_minute_of_day(const DemandCurve& demand, double minute_of_day) {
    if (const auto* constant = std::get_if<ConstantDemand>(&demand)) return constant->level;
    const auto& w = std::get<WindowedDemand>(demand);
    return (minute_of_day >= w.window_start && minute_of_day < w.window_end) ? w.level : 0.0;
}

DemandCurve build_demand(const GenerationTrace& trace, DemandMode mode, double fraction,
                         const DemandWindow* window) {
    if (!(fraction > 0.0) || fraction > 1.0)
        throw ConfigError("build_demand: fraction must be in (0, 1]");
    if (trace.values.empty()) throw ConfigError("build_demand: empty trace");

    if (mode == DemandMode::Constant) {
        double sum = 0.0;
        for (double v : trace.values) sum += v;
        return ConstantDemand{fraction * sum / static_cast<double>(trace.values.size())};
    }
    if (window == nullptr) throw ConfigError("build_demand: windowed mode needs a window");
    if (!(window->start_minute < window->end_minute))
        throw ConfigError("build_demand: window start must precede end");

    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t k = 0; k < trace.values.size(); ++k) {
        const double tod =
            std::fmod(trace.start_minute_of_day + static_cast<double>(k) * trace.period_minutes,
                      kMinutesPerDay);
        if (tod >= window->start_minute && tod < window->end_minute) {
            sum += trace.values[k];
            ++count;
        }
    }
    if (count == 0) throw ConfigError("build_demand: no samples fall inside the window");
    return WindowedDemand{window->start_minute, window->end_minute,
                          fraction * sum / static_cast<double>(count)};
}

ModelSpec net_generation_model(const GenerationTrace& gen1, const DemandCurve& demand1,
                               const GenerationTrace& gen2, const DemandCurve& demand2,
                               double B1, double B2, double c) {
    if (gen1.period_minutes != gen2.period_minutes)
        throw ConfigError("net_generation_model: traces must share the sample period");
    if (gen1.values.size() != gen2.values.size())
        throw ConfigError("net_generation_model: traces must have equal length");
    if (gen1.values.empty()) throw ConfigError("net_generation_model: empty traces");

    TraceBackground bg;
    bg.sample_period = gen1.period_minutes / 60.0; // internal time unit: hours
    bg.series.reserve(gen1.values.size());
    for (std::size_t k = 0; k < gen1.values.size(); ++k) {
        const double tod1 =
            std::fmod(gen1.start_minute_of_day + static_cast<double>(k) * gen1.period_minutes,
                      kMinutesPerDay);
        const double tod2 =
            std::fmod(gen2.start_minute_of_day + static_cast<double>(k) * gen2.period_minutes,
                      kMinutesPerDay);
        bg.series.push_back({gen1.values[k] - demand_at_minute_of_day(demand1, tod1),
                             gen2.values[k] - demand_at_minute_of_day(demand2, tod2)});
    }

    ModelSpec model;
    model.background = std::move(bg);
    model.B1 = B1;
    model.B2 = B2;
    model.c = c;
    return model;
}

} // namespace esim
