#include "mg/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "mg/errors.hpp"

namespace mg {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ConfigError(path + ": " + what);
}

void check_keys(const YAML::Node& node, const std::string& path,
                const std::string& section, const std::set<std::string>& allowed) {
    if (!node || !node.IsMap()) return;
    for (const auto& kv : node) {
        const std::string key = kv.first.as<std::string>();
        if (allowed.count(key)) continue;
        std::ostringstream os;
        os << "unknown key '" << key << "' in " << section << "; allowed:";
        for (const auto& a : allowed) os << " " << a;
        fail(path, os.str());
    }
}

template <typename T>
T require(const YAML::Node& node, const char* field, const std::string& path,
          const std::string& section) {
    const YAML::Node v = node[field];
    if (!v) fail(path, section + "." + field + " is required");
    try {
        return v.as<T>();
    } catch (const YAML::Exception& e) {
        fail(path, section + "." + field + ": " + e.what());
    }
}

template <typename T>
T optional_of(const YAML::Node& node, const char* field, T def,
              const std::string& path, const std::string& section) {
    const YAML::Node v = node[field];
    if (!v) return def;
    try {
        return v.as<T>();
    } catch (const YAML::Exception& e) {
        fail(path, section + "." + field + ": " + e.what());
    }
}

NoiseModel parse_noise(const YAML::Node& node, const std::string& path) {
    if (!node) return NoiseModel::none();
    check_keys(node, path, "noise", {"kind", "sigma", "values", "probs"});
    const std::string kind = require<std::string>(node, "kind", path, "noise");
    if (kind == "none") return NoiseModel::none();
    if (kind == "gaussian") {
        const double sigma = require<double>(node, "sigma", path, "noise");
        if (sigma < 0.0) fail(path, "noise.sigma must be >= 0");
        return NoiseModel::gaussian(sigma);
    }
    if (kind == "discrete") {
        const auto values = require<std::vector<double>>(node, "values", path, "noise");
        const auto probs = require<std::vector<double>>(node, "probs", path, "noise");
        return NoiseModel::discrete(values, probs);
    }
    fail(path, "noise.kind must be none, gaussian or discrete (got '" + kind + "')");
}

PriceFunction parse_price(const YAML::Node& node, const Interval& fallback,
                          const std::string& path) {
    if (!node) return PriceFunction::linear(fallback);
    check_keys(node, path, "price", {"kind", "coeffs", "range", "x", "y"});
    const std::string kind =
        optional_of<std::string>(node, "kind", "linear", path, "price");

    Interval range = fallback;
    if (node["range"]) {
        const auto r = require<std::vector<double>>(node, "range", path, "price");
        if (r.size() != 2 || !(r[0] < r[1]))
            fail(path, "price.range must be [lo, hi] with lo < hi");
        range = {r[0], r[1]};
    }

    if (kind == "linear") {
        if (node["coeffs"])
            fail(path, "price.kind=linear takes no coeffs; use kind=polynomial");
        return PriceFunction::linear(range);
    }
    if (kind == "polynomial") {
        const auto coeffs = require<std::vector<double>>(node, "coeffs", path, "price");
        if (coeffs.empty()) fail(path, "price.coeffs must list c1, c2, ...");
        return PriceFunction::polynomial(coeffs, range);
    }
    if (kind == "tabulated") {
        const auto x = require<std::vector<double>>(node, "x", path, "price");
        const auto y = require<std::vector<double>>(node, "y", path, "price");
        if (x.size() < 2) fail(path, "price.x must list at least two sample points");
        const Interval table_range =
            node["range"] ? range : Interval{x.front(), x.back()};
        return PriceFunction::tabulated(x, y, table_range);
    }
    fail(path, "price.kind must be linear, polynomial or tabulated (got '" + kind + "')");
}

}  // namespace

std::string mode_name(Mode m) {
    switch (m) {
        case Mode::simulate: return "simulate";
        case Mode::solve: return "solve";
        case Mode::sweep: return "sweep";
        case Mode::dynamics: return "dynamics";
        case Mode::compare: return "compare";
        case Mode::alpha_c: return "alpha-c";
    }
    return "?";
}

Mode parse_mode(const std::string& name) {
    if (name == "simulate") return Mode::simulate;
    if (name == "solve") return Mode::solve;
    if (name == "sweep") return Mode::sweep;
    if (name == "dynamics") return Mode::dynamics;
    if (name == "compare") return Mode::compare;
    if (name == "alpha-c" || name == "alpha_c") return Mode::alpha_c;
    throw ConfigError("unknown mode '" + name +
                      "'; expected simulate, solve, sweep, dynamics, compare or alpha-c");
}

Interval default_price_range(int N, double noise_sd) {
    // |A| never exceeds sqrt(N); solver quadrature probes a few sigma around
    // the bias.  One formula covers both with headroom.
    const double base = std::max(std::sqrt(static_cast<double>(std::max(N, 1))), 32.0);
    const double half = base + 16.0 * noise_sd + 2.0;
    return {-half, half};
}

RunConfig parse_config(const std::string& text, const std::string& path,
                       const std::string* cli_mode) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        fail(path, std::string("YAML parse error: ") + e.what());
    }
    if (!root.IsMap()) fail(path, "top level must be a mapping");
    check_keys(root, path, "top level",
               {"mode", "game", "price", "noise", "seed", "ensemble_size", "workers",
                "out", "alpha", "alpha_grid", "solver", "dynamics", "alpha_c",
                "compare"});

    RunConfig rc;
    rc.path = path;
    rc.raw_text = text;
    if (root["mode"]) {
        rc.mode = parse_mode(require<std::string>(root, "mode", path, "top level"));
        if (cli_mode && parse_mode(*cli_mode) != rc.mode) {
            fail(path, "mode '" + mode_name(rc.mode) +
                           "' in the recipe disagrees with the command '" + *cli_mode +
                           "'");
        }
    } else if (cli_mode) {
        rc.mode = parse_mode(*cli_mode);
    } else {
        fail(path, "top level.mode is required");
    }

    const YAML::Node game = root["game"];
    if (game) {
        check_keys(game, path, "game", {"N", "P", "S", "b", "T", "warmup"});
        rc.game.N = optional_of<int>(game, "N", 0, path, "game");
        rc.game.P = optional_of<int>(game, "P", 0, path, "game");
        rc.game.S = optional_of<int>(game, "S", 2, path, "game");
        rc.game.b = optional_of<double>(game, "b", 0.0, path, "game");
        rc.game.T = optional_of<long long>(game, "T", 0, path, "game");
        rc.game.warmup = optional_of<long long>(game, "warmup", -1, path, "game");
    }

    rc.game.seed = optional_of<std::uint64_t>(root, "seed", 1, path, "top level");
    rc.ensemble_size = optional_of<int>(root, "ensemble_size", 1, path, "top level");
    rc.workers = optional_of<int>(root, "workers", 1, path, "top level");
    rc.out = optional_of<std::string>(root, "out", "out", path, "top level");
    rc.alpha = optional_of<double>(root, "alpha", 0.0, path, "top level");
    rc.alpha_grid = optional_of<std::vector<double>>(root, "alpha_grid", {}, path,
                                                     "top level");

    rc.game.noise = parse_noise(root["noise"], path);
    rc.game.price = parse_price(
        root["price"], default_price_range(rc.game.N, rc.game.noise.sd()), path);

    const YAML::Node solver = root["solver"];
    if (solver) {
        check_keys(solver, path, "solver",
                   {"tol", "quad_order", "damping", "max_outer", "rsb_guard"});
        rc.solve.tol = optional_of<double>(solver, "tol", rc.solve.tol, path, "solver");
        rc.solve.quad_order =
            optional_of<int>(solver, "quad_order", rc.solve.quad_order, path, "solver");
        rc.solve.damping =
            optional_of<double>(solver, "damping", rc.solve.damping, path, "solver");
        rc.solve.max_outer =
            optional_of<int>(solver, "max_outer", rc.solve.max_outer, path, "solver");
        rc.solve.rsb_guard =
            optional_of<double>(solver, "rsb_guard", rc.solve.rsb_guard, path, "solver");
    }

    const YAML::Node dyn = root["dynamics"];
    if (dyn) {
        check_keys(dyn, path, "dynamics", {"tracked"});
        rc.tracked = optional_of<int>(dyn, "tracked", rc.tracked, path, "dynamics");
    }

    const YAML::Node ac = root["alpha_c"];
    if (ac) {
        check_keys(ac, path, "alpha_c", {"lo", "hi"});
        rc.alpha_c_lo = optional_of<double>(ac, "lo", rc.alpha_c_lo, path, "alpha_c");
        rc.alpha_c_hi = optional_of<double>(ac, "hi", rc.alpha_c_hi, path, "alpha_c");
    }

    const YAML::Node cmp = root["compare"];
    if (cmp) {
        check_keys(cmp, path, "compare", {"se_band", "ks_tol", "b_override"});
        rc.compare_se_band =
            optional_of<double>(cmp, "se_band", rc.compare_se_band, path, "compare");
        rc.compare_ks_tol =
            optional_of<double>(cmp, "ks_tol", rc.compare_ks_tol, path, "compare");
        rc.compare_b_override = optional_of<double>(cmp, "b_override",
                                                    rc.compare_b_override, path,
                                                    "compare");
    }

    rc.validate();
    return rc;
}

RunConfig load_config(const std::string& path, const std::string* cli_mode) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path + ": cannot open config file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path, cli_mode);
}

void RunConfig::validate() const {
    std::ostringstream os;
    if (workers < 1) {
        os << path << ": workers must be >= 1 (got " << workers << ")";
        throw ConfigError(os.str());
    }
    if (ensemble_size < 1) {
        os << path << ": ensemble_size must be >= 1 (got " << ensemble_size << ")";
        throw ConfigError(os.str());
    }
    if (out.empty()) throw ConfigError(path + ": out must name a directory");
    if (!(solve.tol > 0.0) || solve.quad_order < 8 || solve.max_outer < 10 ||
        !(solve.damping > 0.0 && solve.damping <= 1.0) || solve.rsb_guard < 0.0) {
        throw ConfigError(path +
                          ": solver requires tol > 0, quad_order >= 8, max_outer >= 10, "
                          "damping in (0, 1], rsb_guard >= 0");
    }

    const bool runs_engine =
        mode == Mode::simulate || mode == Mode::dynamics || mode == Mode::compare;
    if (runs_engine) {
        try {
            game.validate();
        } catch (const ConfigError& e) {
            throw ConfigError(path + ": game: " + e.what());
        }
    }

    switch (mode) {
        case Mode::simulate:
            break;
        case Mode::dynamics:
            if (tracked < 1 || tracked > game.N) {
                os << path << ": dynamics.tracked must be in [1, N] (got " << tracked
                   << ", N = " << game.N << ")";
                throw ConfigError(os.str());
            }
            break;
        case Mode::compare:
            if (!(compare_se_band > 0.0) || !(compare_ks_tol > 0.0))
                throw ConfigError(path + ": compare.se_band and compare.ks_tol must be > 0");
            break;
        case Mode::solve:
            if (!(alpha > 0.0)) {
                os << path << ": solve mode requires alpha > 0 (got " << alpha << ")";
                throw ConfigError(os.str());
            }
            break;
        case Mode::sweep: {
            if (alpha_grid.empty())
                throw ConfigError(path + ": sweep mode requires a non-empty alpha_grid");
            double prev = 0.0;
            for (double a : alpha_grid) {
                if (!(a > 0.0)) {
                    os << path << ": alpha_grid values must be > 0 (got " << a << ")";
                    throw ConfigError(os.str());
                }
                if (!(a > prev)) {
                    os << path << ": alpha_grid must be strictly increasing (" << a
                       << " after " << prev << ")";
                    throw ConfigError(os.str());
                }
                prev = a;
            }
            break;
        }
        case Mode::alpha_c:
            if (!(alpha_c_lo > 0.0) || !(alpha_c_lo < alpha_c_hi)) {
                os << path << ": alpha_c requires 0 < lo < hi (got lo = " << alpha_c_lo
                   << ", hi = " << alpha_c_hi << ")";
                throw ConfigError(os.str());
            }
            break;
    }
}

}  // namespace mg
