#include "stik/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <sstream>

#include "stik/errors.hpp"
#include "stik/problems.hpp"
#include "stik/regparam.hpp"
#include "stik/sampling.hpp"
#include "stik/solvers.hpp"
#include "stik/textio.hpp"

namespace stik {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
        throw InvalidArgument(key + ": expected a number, got '" + v + "'");
    }
    return out;
}

long to_long(const std::string& key, const std::string& v) {
    long out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
        throw InvalidArgument(key + ": expected an integer, got '" + v + "'");
    }
    return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
        throw InvalidArgument(key + ": expected a non-negative integer, got '" + v + "'");
    }
    return out;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw InvalidArgument(key + ": expected true or false, got '" + v + "'");
}

struct Field {
    const char* key;
    std::function<void(ExperimentConfig&, const std::string& key, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

#define STIK_STRING(path, member)                                                              \
    Field {                                                                                    \
        path, [](ExperimentConfig& c, const std::string&, const std::string& v) { c.member = v; }, \
            [](const ExperimentConfig& c) { return c.member; }                                 \
    }
#define STIK_DOUBLE(path, member)                                                                   \
    Field {                                                                                         \
        path, [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.member = to_double(k, v); }, \
            [](const ExperimentConfig& c) { return format_double(c.member); }                       \
    }
#define STIK_LONG(path, member)                                                                   \
    Field {                                                                                       \
        path, [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.member = to_long(k, v); }, \
            [](const ExperimentConfig& c) { return std::to_string(c.member); }                    \
    }
#define STIK_OPT_DOUBLE(path, member)                                                     \
    Field {                                                                               \
        path,                                                                             \
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {         \
                if (v.empty()) {                                                          \
                    c.member.reset();                                                     \
                } else {                                                                  \
                    c.member = to_double(k, v);                                           \
                }                                                                         \
            },                                                                            \
            [](const ExperimentConfig& c) { return c.member ? format_double(*c.member) : std::string(); } \
    }

const std::vector<Field>& fields() {
    static const std::vector<Field> table = {
        STIK_STRING("problem.source", problem.source),
        STIK_STRING("problem.name", problem.name),
        STIK_LONG("problem.n", problem.n),
        STIK_STRING("problem.noise", problem.noise),
        STIK_DOUBLE("problem.noise_value", problem.noise_value),
        STIK_DOUBLE("problem.prolate_w", problem.prolate_w),
        STIK_DOUBLE("problem.gravity_depth", problem.gravity_depth),
        STIK_STRING("problem.path", problem.path),
        STIK_LONG("sampling.blocks", sampling.blocks),
        STIK_STRING("sampling.strategy", sampling.strategy),
        STIK_STRING("solver.method", solver.method),
        STIK_LONG("solver.memory", solver.memory),
        STIK_DOUBLE("solver.lsqr_tol", solver.lsqr_tol),
        STIK_LONG("solver.lsqr_maxit", solver.lsqr_maxit),
        STIK_STRING("regparam.method", regparam.method),
        STIK_DOUBLE("regparam.lambda", regparam.lambda),
        STIK_OPT_DOUBLE("regparam.initial", regparam.initial),
        STIK_DOUBLE("regparam.gamma", regparam.gamma),
        STIK_OPT_DOUBLE("regparam.sigma2", regparam.sigma2),
        STIK_DOUBLE("regparam.grid.min", regparam.grid_min),
        STIK_DOUBLE("regparam.grid.max", regparam.grid_max),
        STIK_LONG("regparam.grid.points", regparam.grid_points),
        STIK_LONG("regparam.grid.refine", regparam.grid_refine),
        STIK_STRING("regparam.trace", regparam.trace),
        STIK_LONG("regparam.probes", regparam.probes),
        STIK_LONG("superres.n", superres.n),
        STIK_LONG("superres.ell", superres.ell),
        STIK_LONG("superres.frames", superres.frames),
        STIK_DOUBLE("superres.max_shift", superres.max_shift),
        STIK_DOUBLE("superres.max_angle", superres.max_angle),
        STIK_DOUBLE("superres.noise_level", superres.noise_level),
        STIK_STRING("superres.image", superres.image),
        STIK_LONG("run.epochs", run.epochs),
        Field{"run.seed",
              [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.run.seed = to_u64(k, v); },
              [](const ExperimentConfig& c) { return std::to_string(c.run.seed); }},
        STIK_LONG("run.replicates", run.replicates),
        STIK_STRING("output.csv", output.csv),
        Field{"output.timing",
              [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.output.timing = to_bool(k, v); },
              [](const ExperimentConfig& c) { return std::string(c.output.timing ? "true" : "false"); }},
    };
    return table;
}

#undef STIK_STRING
#undef STIK_DOUBLE
#undef STIK_LONG
#undef STIK_OPT_DOUBLE

template <class F>
void check_enum(const std::string& key, F parse, const std::string& value) {
    try {
        parse(value);
    } catch (const InvalidArgument& e) {
        throw InvalidArgument(key + ": " + e.what());
    }
}

}  // namespace

void set_config_value(ExperimentConfig& config, const std::string& key, const std::string& value) {
    for (const Field& f : fields()) {
        if (key == f.key) {
            f.set(config, key, value);
            return;
        }
    }
    throw InvalidArgument("unknown config key '" + key + "'");
}

void apply_override(ExperimentConfig& config, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw InvalidArgument("override '" + assignment + "' is not key=value");
    set_config_value(config, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

ExperimentConfig parse_config(std::istream& in, const std::string& origin) {
    ExperimentConfig config;
    std::string section;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = origin + ":" + std::to_string(lineno);
        if (line.front() == '[') {
            if (line.back() != ']') throw InvalidArgument(where + ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw InvalidArgument(where + ": expected key = value");
        if (section.empty()) throw InvalidArgument(where + ": key outside of a [section]");
        const std::string key = section + "." + trim(line.substr(0, eq));
        try {
            set_config_value(config, key, trim(line.substr(eq + 1)));
        } catch (const InvalidArgument& e) {
            throw InvalidArgument(where + ": " + e.what());
        }
    }
    return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open config " + path.string());
    return parse_config(in, path.string());
}

std::string serialize_config(const ExperimentConfig& config) {
    std::ostringstream out;
    std::string section;
    for (const Field& f : fields()) {
        const std::string key = f.key;
        const auto dot = key.find('.');
        const std::string sec = key.substr(0, dot);
        if (sec != section) {
            if (!section.empty()) out << '\n';
            out << '[' << sec << "]\n";
            section = sec;
        }
        out << key.substr(dot + 1) << " = " << f.get(config) << '\n';
    }
    return out.str();
}

std::vector<std::string> config_keys() {
    std::vector<std::string> keys;
    for (const Field& f : fields()) keys.emplace_back(f.key);
    return keys;
}

void validate_config(const ExperimentConfig& c) {
    auto require = [](bool ok, const std::string& key, const std::string& what) {
        if (!ok) throw InvalidArgument(key + ": " + what);
    };
    require(c.problem.source == "generated" || c.problem.source == "files" || c.problem.source == "frames",
            "problem.source", "expected generated, files or frames");
    if (c.problem.source == "generated") {
        require(c.problem.name == "gravity" || c.problem.name == "shaw" || c.problem.name == "baart" ||
                    c.problem.name == "prolate" || c.problem.name == "toy2d",
                "problem.name", "expected gravity, shaw, baart, prolate or toy2d");
        require(c.problem.n >= 2, "problem.n", "must be >= 2");
    } else {
        require(!c.problem.path.empty(), "problem.path", "required when problem.source is " + c.problem.source);
    }
    check_enum("problem.noise", parse_noise_mode, c.problem.noise);
    require(c.problem.noise == "none" || c.problem.noise_value > 0.0, "problem.noise_value", "must be > 0");
    require(c.sampling.blocks >= 1, "sampling.blocks", "must be >= 1");
    if (c.problem.source == "generated") {
        const long m = c.problem.name == "toy2d" ? 10 : c.problem.n;
        require(m % c.sampling.blocks == 0, "sampling.blocks", "must divide the " + std::to_string(m) + " rows of A");
    }
    check_enum("sampling.strategy", parse_sampling_strategy, c.sampling.strategy);
    check_enum("solver.method", parse_method, c.solver.method);
    require(c.solver.memory >= 0, "solver.memory", "must be >= 0");
    require(c.solver.lsqr_tol > 0.0, "solver.lsqr_tol", "must be > 0");
    require(c.solver.lsqr_maxit >= 0, "solver.lsqr_maxit", "must be >= 0");
    check_enum("regparam.method", parse_selection_method, c.regparam.method);
    require(c.regparam.lambda > 0.0, "regparam.lambda", "must be > 0");
    require(!c.regparam.initial || *c.regparam.initial > 0.0, "regparam.initial", "must be > 0");
    require(c.regparam.gamma > 1.0, "regparam.gamma", "must be > 1");
    require(!c.regparam.sigma2 || *c.regparam.sigma2 >= 0.0, "regparam.sigma2", "must be >= 0");
    require(c.regparam.grid_min > 0.0, "regparam.grid.min", "must be > 0");
    require(c.regparam.grid_max >= c.regparam.grid_min, "regparam.grid.max", "must be >= grid.min");
    require(c.regparam.grid_points >= 1, "regparam.grid.points", "must be >= 1");
    require(c.regparam.grid_refine >= 0, "regparam.grid.refine", "must be >= 0");
    check_enum("regparam.trace", parse_trace_mode, c.regparam.trace);
    require(c.regparam.probes >= 1, "regparam.probes", "must be >= 1");
    require(c.superres.n >= 1, "superres.n", "must be >= 1");
    require(c.superres.ell >= 1 && c.superres.n % c.superres.ell == 0, "superres.ell", "must divide superres.n");
    require(c.superres.frames >= 1, "superres.frames", "must be >= 1");
    require(c.superres.max_shift >= 0.0 && c.superres.max_shift < static_cast<double>(c.superres.n),
            "superres.max_shift", "must lie in [0, n)");
    require(c.superres.max_angle >= 0.0 && c.superres.max_angle < 3.14159, "superres.max_angle",
            "must lie in [0, pi)");
    require(c.superres.noise_level >= 0.0, "superres.noise_level", "must be >= 0");
    require(c.run.epochs >= 0, "run.epochs", "must be >= 0");
    require(c.run.replicates >= 1, "run.replicates", "must be >= 1");
}

}  // namespace stik
