#include "qmeas/config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "qmeas/errors.hpp"
#include "qmeas/io.hpp"
#include "qmeas/util.hpp"

namespace qmeas {
namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

bool to_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v)) return false;
    out = v;
    return true;
}

bool to_ll(const std::string& s, long long& out) {
    if (s.empty()) return false;
    errno = 0;
    char* end = nullptr;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (end != s.c_str() + s.size() || errno == ERANGE) return false;
    out = v;
    return true;
}

std::string want_number(const std::string& v, double& out) {
    double x = 0.0;
    if (!to_double(v, x)) return "expected a number, got '" + v + "'";
    out = x;
    return {};
}

std::string want_positive(const std::string& v, double& out) {
    double x = 0.0;
    if (!to_double(v, x)) return "expected a number, got '" + v + "'";
    if (!(x > 0.0)) return "must be positive, got '" + v + "'";
    out = x;
    return {};
}

std::string want_nonnegative(const std::string& v, double& out) {
    double x = 0.0;
    if (!to_double(v, x)) return "expected a number, got '" + v + "'";
    if (x < 0.0) return "must be nonnegative, got '" + v + "'";
    out = x;
    return {};
}

template <class Int>
std::string want_int(const std::string& v, long long lo, long long hi, Int& out) {
    long long x = 0;
    if (!to_ll(v, x)) return "expected an integer, got '" + v + "'";
    if (x < lo || x > hi)
        return "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "], got '" + v +
               "'";
    out = static_cast<Int>(x);
    return {};
}

std::string want_u64(const std::string& v, std::uint64_t& out) {
    if (v.empty() || v[0] == '-' || v[0] == '+')
        return "expected an unsigned integer, got '" + v + "'";
    errno = 0;
    char* end = nullptr;
    const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
    if (end != v.c_str() + v.size() || errno == ERANGE)
        return "expected an unsigned integer, got '" + v + "'";
    out = x;
    return {};
}

std::string want_bool(const std::string& v, bool& out) {
    if (v == "true" || v == "1") {
        out = true;
        return {};
    }
    if (v == "false" || v == "0") {
        out = false;
        return {};
    }
    return "expected true or false, got '" + v + "'";
}

std::string check_profile_spec(const std::string& v) {
    if (v == "gaussian") return {};
    if (v.rfind("perturbed:", 0) == 0) {
        double a = 0.0;
        if (!to_double(v.substr(10), a)) return "expected perturbed:<a> with numeric a";
        if (a < 0.0 || a > 0.5) return "perturbation amplitude must lie in [0, 0.5]";
        return {};
    }
    if (v.rfind("table:", 0) == 0) {
        const std::string path = v.substr(6);
        if (path.empty()) return "expected table:<path>";
        if (!std::filesystem::exists(path)) return "profile table not found: " + path;
        return {};
    }
    return "expected gaussian, perturbed:<a>, or table:<path>";
}

// Setters return an empty string on success, else the complaint to report.
using Setter = std::function<std::string(RunConfig&, const std::string&)>;
using Getter = std::function<std::string(const RunConfig&)>;

enum KeyGroup { kShared, kDiscrete, kSse };

struct KeyDef {
    const char* name;
    KeyGroup group;
    Setter set;
    Getter get;
};

std::string join_doubles(const std::vector<double>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ',';
        out += fmt17(xs[i]);
    }
    return out;
}

std::vector<KeyDef> build_key_table() {
    auto num = [](auto ref) {
        return [ref](RunConfig& c, const std::string& v) { return want_number(v, ref(c)); };
    };
    auto pos = [](auto ref) {
        return [ref](RunConfig& c, const std::string& v) { return want_positive(v, ref(c)); };
    };
    auto nonneg = [](auto ref) {
        return [ref](RunConfig& c, const std::string& v) { return want_nonnegative(v, ref(c)); };
    };
    auto boolean = [](auto ref) {
        return [ref](RunConfig& c, const std::string& v) { return want_bool(v, ref(c)); };
    };
    auto integer = [](auto ref, long long lo, long long hi) {
        return [ref, lo, hi](RunConfig& c, const std::string& v) {
            return want_int(v, lo, hi, ref(c));
        };
    };
    auto show = [](auto ref) {
        return [ref](const RunConfig& c) { return fmt17(ref(c)); };
    };
    auto show_int = [](auto ref) {
        return [ref](const RunConfig& c) { return std::to_string(ref(c)); };
    };
    auto show_bool = [](auto ref) {
        return [ref](const RunConfig& c) { return ref(c) ? std::string("true") : std::string("false"); };
    };

    std::vector<KeyDef> t;
    t.push_back({"schema_version", kShared,
                 [](RunConfig& c, const std::string& v) {
                     return want_int(v, 0, 1000000, c.schema_version);
                 },
                 show_int([](const RunConfig& c) { return c.schema_version; })});
    t.push_back({"seed", kShared,
                 [](RunConfig& c, const std::string& v) { return want_u64(v, c.seed); },
                 [](const RunConfig& c) { return std::to_string(c.seed); }});
    t.push_back({"run_mode", kShared,
                 [](RunConfig& c, const std::string& v) -> std::string {
                     if (v == "none") c.run_mode = RunMode::None;
                     else if (v == "discrete") c.run_mode = RunMode::Discrete;
                     else if (v == "sse") c.run_mode = RunMode::Sse;
                     else return "expected none, discrete, or sse, got '" + v + "'";
                     return {};
                 },
                 [](const RunConfig& c) -> std::string {
                     switch (c.run_mode) {
                         case RunMode::Discrete: return "discrete";
                         case RunMode::Sse: return "sse";
                         default: return "none";
                     }
                 }});
    t.push_back({"output_dir", kShared,
                 [](RunConfig& c, const std::string& v) -> std::string {
                     if (v.empty()) return "must not be empty";
                     c.output_dir = v;
                     return {};
                 },
                 [](const RunConfig& c) { return c.output_dir; }});

    t.push_back({"grid_points", kShared,
                 integer([](RunConfig& c) -> int& { return c.grid.n_points; }, 2, 1 << 24),
                 show_int([](const RunConfig& c) { return c.grid.n_points; })});
    t.push_back({"grid_x_min", kShared, num([](RunConfig& c) -> double& { return c.grid.x_min; }),
                 show([](const RunConfig& c) { return c.grid.x_min; })});
    t.push_back({"grid_x_max", kShared, num([](RunConfig& c) -> double& { return c.grid.x_max; }),
                 show([](const RunConfig& c) { return c.grid.x_max; })});
    t.push_back({"hbar", kShared, pos([](RunConfig& c) -> double& { return c.grid.hbar; }),
                 show([](const RunConfig& c) { return c.grid.hbar; })});

    t.push_back({"hamiltonian", kShared,
                 [](RunConfig& c, const std::string& v) -> std::string {
                     if (v == "none") c.h.kind = PotentialKind::None;
                     else if (v == "free") c.h.kind = PotentialKind::Free;
                     else if (v == "harmonic") c.h.kind = PotentialKind::Harmonic;
                     else if (v == "quartic") c.h.kind = PotentialKind::Quartic;
                     else return "expected none, free, harmonic, or quartic, got '" + v + "'";
                     return {};
                 },
                 [](const RunConfig& c) -> std::string {
                     switch (c.h.kind) {
                         case PotentialKind::None: return "none";
                         case PotentialKind::Harmonic: return "harmonic";
                         case PotentialKind::Quartic: return "quartic";
                         default: return "free";
                     }
                 }});
    t.push_back({"mass", kShared, pos([](RunConfig& c) -> double& { return c.h.mass; }),
                 show([](const RunConfig& c) { return c.h.mass; })});
    t.push_back({"omega", kShared, pos([](RunConfig& c) -> double& { return c.h.omega; }),
                 show([](const RunConfig& c) { return c.h.omega; })});
    t.push_back({"quartic_coeff", kShared,
                 num([](RunConfig& c) -> double& { return c.h.quartic_coeff; }),
                 show([](const RunConfig& c) { return c.h.quartic_coeff; })});

    t.push_back({"state", kShared,
                 [](RunConfig& c, const std::string& v) -> std::string {
                     if (v == "gaussian") {
                         c.state_kind = StateKind::Gaussian;
                         c.state_snapshot.clear();
                         return {};
                     }
                     if (v.rfind("snapshot:", 0) == 0) {
                         const std::string path = v.substr(9);
                         if (path.empty()) return "expected snapshot:<path>";
                         if (!std::filesystem::exists(path))
                             return "state snapshot not found: " + path;
                         c.state_kind = StateKind::Snapshot;
                         c.state_snapshot = path;
                         return {};
                     }
                     return "expected gaussian or snapshot:<path>, got '" + v + "'";
                 },
                 [](const RunConfig& c) {
                     return c.state_kind == StateKind::Snapshot ? "snapshot:" + c.state_snapshot
                                                                : std::string("gaussian");
                 }});
    t.push_back({"state_center", kShared,
                 num([](RunConfig& c) -> double& { return c.state_center; }),
                 show([](const RunConfig& c) { return c.state_center; })});
    t.push_back({"state_variance", kShared,
                 pos([](RunConfig& c) -> double& { return c.state_variance; }),
                 show([](const RunConfig& c) { return c.state_variance; })});
    t.push_back({"state_momentum", kShared,
                 num([](RunConfig& c) -> double& { return c.state_momentum; }),
                 show([](const RunConfig& c) { return c.state_momentum; })});

    t.push_back({"profile_q", kShared,
                 [](RunConfig& c, const std::string& v) -> std::string {
                     const std::string err = check_profile_spec(v);
                     if (!err.empty()) return err;
                     c.profile_q = v;
                     return {};
                 },
                 [](const RunConfig& c) { return c.profile_q; }});
    t.push_back({"profile_p", kShared,
                 [](RunConfig& c, const std::string& v) -> std::string {
                     const std::string err = check_profile_spec(v);
                     if (!err.empty()) return err;
                     c.profile_p = v;
                     return {};
                 },
                 [](const RunConfig& c) { return c.profile_p; }});

    t.push_back({"scaling", kDiscrete,
                 [](RunConfig& c, const std::string& v) -> std::string {
                     if (v == "fixed") c.scaling = ScalingRule::Fixed;
                     else if (v == "sqrt_tau") c.scaling = ScalingRule::SqrtTau;
                     else return "expected fixed or sqrt_tau, got '" + v + "'";
                     return {};
                 },
                 [](const RunConfig& c) {
                     return c.scaling == ScalingRule::Fixed ? std::string("fixed")
                                                            : std::string("sqrt_tau");
                 }});
    t.push_back({"mu", kDiscrete, pos([](RunConfig& c) -> double& { return c.mu; }),
                 show([](const RunConfig& c) { return c.mu; })});
    t.push_back({"nu", kDiscrete, nonneg([](RunConfig& c) -> double& { return c.nu; }),
                 show([](const RunConfig& c) { return c.nu; })});
    t.push_back({"tau", kDiscrete, pos([](RunConfig& c) -> double& { return c.tau; }),
                 show([](const RunConfig& c) { return c.tau; })});
    t.push_back({"sigma", kDiscrete, pos([](RunConfig& c) -> double& { return c.sigma; }),
                 show([](const RunConfig& c) { return c.sigma; })});
    t.push_back({"apparatus_q_points", kDiscrete,
                 integer([](RunConfig& c) -> int& { return c.apparatus_q.n_points; }, 2, 1 << 22),
                 show_int([](const RunConfig& c) { return c.apparatus_q.n_points; })});
    t.push_back({"apparatus_q_half_width", kDiscrete,
                 pos([](RunConfig& c) -> double& { return c.apparatus_q.half_width; }),
                 show([](const RunConfig& c) { return c.apparatus_q.half_width; })});
    t.push_back({"apparatus_p_points", kDiscrete,
                 integer([](RunConfig& c) -> int& { return c.apparatus_p.n_points; }, 2, 1 << 22),
                 show_int([](const RunConfig& c) { return c.apparatus_p.n_points; })});
    t.push_back({"apparatus_p_half_width", kDiscrete,
                 pos([](RunConfig& c) -> double& { return c.apparatus_p.half_width; }),
                 show([](const RunConfig& c) { return c.apparatus_p.half_width; })});

    t.push_back({"kappa_q", kSse, nonneg([](RunConfig& c) -> double& { return c.kappa_q; }),
                 show([](const RunConfig& c) { return c.kappa_q; })});
    t.push_back({"kappa_p", kSse, nonneg([](RunConfig& c) -> double& { return c.kappa_p; }),
                 show([](const RunConfig& c) { return c.kappa_p; })});
    t.push_back({"dt", kSse, pos([](RunConfig& c) -> double& { return c.dt; }),
                 show([](const RunConfig& c) { return c.dt; })});
    t.push_back({"renormalize", kSse, boolean([](RunConfig& c) -> bool& { return c.renormalize; }),
                 show_bool([](const RunConfig& c) { return c.renormalize; })});

    t.push_back({"n_steps", kShared,
                 integer([](RunConfig& c) -> long long& { return c.n_steps; }, 0, 1000000000000LL),
                 show_int([](const RunConfig& c) { return c.n_steps; })});
    t.push_back({"record_every", kShared,
                 integer([](RunConfig& c) -> int& { return c.record_every; }, 1, 1000000000),
                 show_int([](const RunConfig& c) { return c.record_every; })});
    t.push_back({"ensemble_size", kShared,
                 integer([](RunConfig& c) -> int& { return c.ensemble_size; }, 1, 1000000000),
                 show_int([](const RunConfig& c) { return c.ensemble_size; })});
    t.push_back({"snapshot_final", kShared,
                 boolean([](RunConfig& c) -> bool& { return c.snapshot_final; }),
                 show_bool([](const RunConfig& c) { return c.snapshot_final; })});

    t.push_back({"tau_list", kShared,
                 [](RunConfig& c, const std::string& v) -> std::string {
                     std::vector<double> xs;
                     std::size_t start = 0;
                     while (start <= v.size()) {
                         const auto comma = v.find(',', start);
                         const std::string piece =
                             trim(comma == std::string::npos ? v.substr(start)
                                                             : v.substr(start, comma - start));
                         double x = 0.0;
                         if (!to_double(piece, x) || !(x > 0.0))
                             return "expected comma-separated positive numbers, got '" + v + "'";
                         xs.push_back(x);
                         if (comma == std::string::npos) break;
                         start = comma + 1;
                     }
                     if (xs.empty()) return "must not be empty";
                     c.tau_list = std::move(xs);
                     return {};
                 },
                 [](const RunConfig& c) { return join_doubles(c.tau_list); }});
    t.push_back({"horizon", kShared, pos([](RunConfig& c) -> double& { return c.horizon; }),
                 show([](const RunConfig& c) { return c.horizon; })});
    t.push_back({"converge_dt", kShared, pos([](RunConfig& c) -> double& { return c.converge_dt; }),
                 show([](const RunConfig& c) { return c.converge_dt; })});
    t.push_back({"bootstrap", kShared,
                 integer([](RunConfig& c) -> int& { return c.bootstrap; }, 1, 1000000),
                 show_int([](const RunConfig& c) { return c.bootstrap; })});
    return t;
}

const std::vector<KeyDef>& key_table() {
    static const std::vector<KeyDef> table = build_key_table();
    return table;
}

const KeyDef* find_key(const std::string& name) {
    for (const auto& def : key_table())
        if (name == def.name) return &def;
    return nullptr;
}

std::string unknown_key_message(const std::string& key, int line) {
    std::string best;
    std::size_t best_d = 3;  // suggest only within distance 2
    for (const auto& def : key_table()) {
        const std::size_t d = edit_distance(key, def.name);
        if (d < best_d) {
            best_d = d;
            best = def.name;
        }
    }
    std::string msg = "unknown key '" + key + "'";
    if (line > 0) msg += " (line " + std::to_string(line) + ")";
    if (!best.empty()) msg += "; did you mean '" + best + "'?";
    return msg;
}

struct Entry {
    std::string key, value;
    int line;  // 0 for CLI overrides
};

}  // namespace

CouplingSchedule RunConfig::make_schedule() const {
    return scaling == ScalingRule::SqrtTau ? CouplingSchedule::sqrt_tau(tau, sigma)
                                           : CouplingSchedule::fixed(mu, nu, tau, sigma);
}

SseConfig RunConfig::make_sse() const {
    SseConfig s;
    s.kappa_q = kappa_q;
    s.kappa_p = kappa_p;
    s.dt = dt;
    s.h = h;
    s.n_steps = n_steps;
    s.seed = seed;
    s.renormalize = renormalize;
    s.record_every = record_every;
    return s;
}

RunConfig parse_config_text(const std::string& text, const std::string& origin,
                            const std::vector<std::string>& overrides,
                            std::ostream* provenance) {
    std::vector<std::string> errs;

    std::vector<Entry> entries;
    std::set<std::string> explicit_keys;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string body = trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            errs.push_back("line " + std::to_string(lineno) + ": expected key = value");
            continue;
        }
        const std::string key = trim(body.substr(0, eq));
        const std::string value = trim(body.substr(eq + 1));
        if (key.empty()) {
            errs.push_back("line " + std::to_string(lineno) + ": empty key");
            continue;
        }
        if (!find_key(key)) {
            errs.push_back(unknown_key_message(key, lineno));
            continue;
        }
        if (!explicit_keys.insert(key).second) {
            errs.push_back("duplicate key '" + key + "' (line " + std::to_string(lineno) + ")");
            continue;
        }
        entries.push_back({key, value, lineno});
    }

    std::vector<Entry> merged_overrides;
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos || eq == 0) {
            errs.push_back("override '" + o + "': expected key=value");
            continue;
        }
        const std::string key = trim(o.substr(0, eq));
        const std::string value = trim(o.substr(eq + 1));
        if (!find_key(key)) {
            errs.push_back(unknown_key_message(key, 0));
            continue;
        }
        bool replaced = false;
        for (auto& e : merged_overrides)
            if (e.key == key) {
                e.value = value;  // later --set wins
                replaced = true;
            }
        if (!replaced) merged_overrides.push_back({key, value, 0});
        explicit_keys.insert(key);
    }

    RunConfig cfg;
    auto apply = [&](const Entry& e) {
        const std::string msg = find_key(e.key)->set(cfg, e.value);
        if (!msg.empty()) {
            const std::string where =
                e.line > 0 ? "line " + std::to_string(e.line) + ": " : "override ";
            errs.push_back(where + "'" + e.key + "': " + msg);
        }
    };
    for (const auto& e : entries) apply(e);
    for (const auto& e : merged_overrides) apply(e);

    if (!explicit_keys.count("schema_version")) {
        errs.push_back("missing mandatory key 'schema_version'");
    } else if (cfg.schema_version != 1) {
        errs.push_back("unsupported schema_version " + std::to_string(cfg.schema_version) +
                       " (this build reads version 1)");
    }
    if (!explicit_keys.count("seed"))
        errs.push_back("missing mandatory key 'seed' (runs must be explicitly seeded)");

    if (cfg.run_mode != RunMode::None) {
        const bool discrete = cfg.run_mode == RunMode::Discrete;
        const KeyGroup clashing = discrete ? kSse : kDiscrete;
        for (const auto& def : key_table()) {
            if (def.group == clashing && explicit_keys.count(def.name)) {
                errs.push_back(std::string("key '") + def.name + "' belongs to the " +
                               (discrete ? "limit-equation" : "discrete-step") +
                               " mode and conflicts with run_mode = " +
                               (discrete ? "discrete" : "sse"));
            }
        }
    }
    if (cfg.scaling == ScalingRule::SqrtTau) {
        for (const char* k : {"mu", "nu"}) {
            if (explicit_keys.count(k))
                errs.push_back(std::string("'") + k +
                               "' has no effect under scaling = sqrt_tau (couplings are slaved "
                               "to sqrt(tau))");
        }
    }
    if (!(cfg.grid.x_max > cfg.grid.x_min))
        errs.push_back("grid_x_max must exceed grid_x_min");

    if (!errs.empty()) {
        std::string msg = "invalid config " + origin + ":";
        for (const auto& e : errs) msg += "\n  - " + e;
        throw ConfigError(msg);
    }

    if (provenance) {
        for (const auto& def : key_table())
            if (!explicit_keys.count(def.name))
                (*provenance) << "default: " << def.name << " = " << def.get(cfg) << "\n";
    }
    return cfg;
}

RunConfig parse_config(const std::string& path, const std::vector<std::string>& overrides,
                       std::ostream* provenance) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path, overrides, provenance);
}

std::string serialize_config(const RunConfig& cfg) {
    const bool skip_discrete = cfg.run_mode == RunMode::Sse;
    const bool skip_sse = cfg.run_mode == RunMode::Discrete;
    const bool slaved = cfg.scaling == ScalingRule::SqrtTau;
    std::ostringstream os;
    os << "# flat key = value; '#' starts a comment\n";
    for (const auto& def : key_table()) {
        if (def.group == kDiscrete && skip_discrete) continue;
        if (def.group == kSse && skip_sse) continue;
        const std::string name = def.name;
        if (slaved && !skip_discrete && (name == "mu" || name == "nu")) continue;
        os << name << " = " << def.get(cfg) << "\n";
    }
    return os.str();
}

DetectorProfile make_profile(const std::string& spec) {
    if (spec == "gaussian") return DetectorProfile::gaussian();
    if (spec.rfind("perturbed:", 0) == 0) {
        double a = 0.0;
        if (!to_double(spec.substr(10), a))
            throw ConfigError("invalid profile spec '" + spec + "'");
        return DetectorProfile::perturbed_gaussian(a);
    }
    if (spec.rfind("table:", 0) == 0) {
        const std::string path = spec.substr(6);
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot read profile table " + path);
        std::vector<double> u, chi;
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            std::string body = trim(line);
            if (body.empty()) continue;
            for (auto& c : body)
                if (c == ',') c = ' ';
            std::istringstream row(body);
            double a = 0.0, b = 0.0;
            if (!(row >> a >> b) || !(row >> std::ws).eof())
                throw ConfigError("profile table " + path + " line " + std::to_string(lineno) +
                                  ": expected a 'u, chi' pair");
            u.push_back(a);
            chi.push_back(b);
        }
        return DetectorProfile::from_table(u, chi);
    }
    throw ConfigError("invalid profile spec '" + spec +
                      "' (expected gaussian, perturbed:<a>, or table:<path>)");
}

WaveFunction make_initial_state(const RunConfig& cfg) {
    if (cfg.state_kind == StateKind::Snapshot) return read_snapshot(cfg.state_snapshot);
    auto grid = std::make_shared<const Grid>(cfg.grid);
    return WaveFunction::gaussian(grid, cfg.state_center, cfg.state_variance,
                                  cfg.state_momentum / cfg.grid.hbar);
}

}  // namespace qmeas
