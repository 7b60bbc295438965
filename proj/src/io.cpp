#include "mg/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mg/errors.hpp"
#include "mg/version.hpp"

namespace mg {

using ordered_json = nlohmann::ordered_json;

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ULL;  // FNV offset basis
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;                  // FNV prime
    }
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

void ensure_dir(const std::string& path) {
    std::error_code ec;
    std::filesystem::create_directories(path, ec);
    if (ec) throw Error("cannot create directory " + path + ": " + ec.message());
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + path + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("short write to " + path);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string timeseries_csv(const TimeSeries& ts) {
    if (!ts.record_series || ts.A.empty())
        throw EmptyWindow("time-series CSV requires a run with record_series enabled");
    std::string out = "t,mu,eta,A,g_t\n";
    for (std::size_t k = 0; k < ts.A.size(); ++k) {
        out += std::to_string(k + 1);
        out += ',';
        out += std::to_string(ts.mu[k]);
        out += ',';
        out += format_double(ts.eta[k]);
        out += ',';
        out += format_double(ts.A[k]);
        out += ',';
        out += format_double(ts.g[k]);
        out += '\n';
    }
    return out;
}

std::string histogram_csv(const Histogram& h) {
    std::string out = "bin_center,density\n";
    for (std::size_t k = 0; k < h.center.size(); ++k) {
        out += format_double(h.center[k]);
        out += ',';
        out += format_double(h.density[k]);
        out += '\n';
    }
    return out;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::string out = "alpha,sigma,q_x,q_g,q_A,R_x,R_g,b,phi,converged\n";
    for (const SweepRow& r : rows) {
        out += format_double(r.alpha);
        const bool has_values = r.status != "rsb";
        const double nan = std::numeric_limits<double>::quiet_NaN();
        const CavitySolution& s = r.sol;
        const double vals[] = {
            has_values ? s.sigma : nan, has_values ? s.q_x : nan,
            has_values ? s.q_g : nan,   has_values ? s.q_A : nan,
            has_values ? s.R_x : nan,   has_values ? s.R_g : nan,
            has_values ? s.b : nan,     has_values ? s.phi : nan};
        for (double v : vals) {
            out += ',';
            out += format_double(v);
        }
        out += ',';
        out += r.status;
        out += '\n';
    }
    return out;
}

std::string trajectory_csv(const TrajectoryRecord& rec) {
    std::string out = "t,agent_id,U,u_tau,sign\n";
    const std::size_t M = rec.times.size();
    for (std::size_t s = 0; s < M; ++s) {
        for (std::size_t k = 0; k < rec.agent_ids.size(); ++k) {
            const double u = rec.U[k * M + s];
            out += std::to_string(rec.times[s]);
            out += ',';
            out += std::to_string(rec.agent_ids[k]);
            out += ',';
            out += format_double(u);
            out += ',';
            out += format_double(rec.u_tau[k * M + s]);
            out += ',';
            out += (u > 0.0 ? "1" : (u < 0.0 ? "-1" : "0"));
            out += '\n';
        }
    }
    return out;
}

namespace {

ordered_json meta_json(const OutputMeta& meta) {
    ordered_json j;
    j["version"] = kVersion;
    j["config_hash"] = meta.config_hash;
    j["seeds"] = meta.seeds;
    return j;
}

ordered_json estimate_json(const Estimate& e) {
    ordered_json j;
    j["value"] = e.value;
    j["se"] = e.se;
    return j;
}

ordered_json solution_fields(const CavitySolution& s) {
    ordered_json j;
    j["alpha"] = s.alpha;
    j["sigma"] = s.sigma;
    j["sigma2"] = s.sigma2;
    j["q_x"] = s.q_x;
    j["q_g"] = s.q_g;
    j["q_A"] = s.q_A;
    j["R_x"] = s.R_x;
    j["R_g"] = s.R_g;
    j["b"] = s.b;
    j["phi"] = s.phi;
    j["margin"] = s.margin;
    j["converged"] = s.converged;
    j["iterations"] = s.iterations;
    j["residual"] = s.residual;
    return j;
}

}  // namespace

std::string observables_json(const ObservableSet& obs, const TimeSeries& ts,
                             const OutputMeta& meta) {
    ordered_json j = meta_json(meta);
    j["run"] = {{"N", ts.N},       {"P", ts.P},
                {"S", ts.S},       {"b", ts.b},
                {"T", ts.T},       {"warmup", ts.warmup},
                {"seed", ts.seed}, {"price", ts.price_desc},
                {"noise", ts.noise_desc}};
    j["alpha"] = obs.alpha;
    j["post_steps"] = obs.post_steps;
    j["batches"] = obs.batches;
    j["tie_events"] = obs.tie_events;
    j["sigma"] = obs.sigma;
    j["sigma2"] = estimate_json(obs.sigma2);
    j["gbar"] = estimate_json(obs.gbar_mean);
    j["q_x"] = estimate_json(obs.q_x);
    j["phi"] = obs.phi;
    j["q_A"] = estimate_json(obs.q_A);
    j["q_g"] = obs.q_g;
    j["volatility_parts"] = {{"total", obs.parts.total},
                             {"noise", obs.parts.noise_part},
                             {"switching", obs.parts.switching_part},
                             {"information", obs.parts.info_part},
                             {"residual", obs.parts.residual},
                             {"residual_se", obs.parts.residual_se}};
    return j.dump(2) + "\n";
}

std::string solution_json(const CavitySolution& sol, const OutputMeta& meta) {
    ordered_json j = meta_json(meta);
    j["solution"] = solution_fields(sol);
    return j.dump(2) + "\n";
}

std::string alpha_c_json(const AlphaCResult& res, const OutputMeta& meta) {
    ordered_json j = meta_json(meta);
    j["alpha_c"] = res.alpha_c;
    j["phi_c"] = res.phi_c;
    j["boundary"] = res.boundary;
    ordered_json probes = ordered_json::array();
    for (const CavitySolution& p : res.probes) probes.push_back(solution_fields(p));
    j["probes"] = probes;
    return j.dump(2) + "\n";
}

namespace {

constexpr std::uint32_t kBinaryMagic = 0x4D475453;  // "MGTS"
constexpr std::uint32_t kBinaryVersion = 1;

template <typename T>
void put(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
void put_vec(std::ofstream& out, const std::vector<T>& v) {
    const std::uint64_t n = v.size();
    put(out, n);
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(n * sizeof(T)));
}

template <typename T>
T get(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}

template <typename T>
std::vector<T> get_vec(std::ifstream& in) {
    const std::uint64_t n = get<std::uint64_t>(in);
    std::vector<T> v(n);
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(n * sizeof(T)));
    return v;
}

}  // namespace

void write_timeseries_binary(const std::string& path, const TimeSeries& ts) {
    if (!ts.record_series)
        throw EmptyWindow("binary dump requires a run with record_series enabled");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + path + " for writing");
    put(out, kBinaryMagic);
    put(out, kBinaryVersion);
    put(out, static_cast<std::int32_t>(ts.N));
    put(out, static_cast<std::int32_t>(ts.P));
    put(out, static_cast<std::int32_t>(ts.S));
    put(out, ts.b);
    put(out, ts.T);
    put(out, ts.warmup);
    put(out, ts.seed);
    put(out, ts.noise_variance);
    put_vec(out, ts.A);
    put_vec(out, ts.g);
    put_vec(out, ts.eta);
    put_vec(out, ts.mu);
    if (!out) throw Error("short write to " + path);
}

TimeSeries read_timeseries_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    if (get<std::uint32_t>(in) != kBinaryMagic)
        throw Error(path + " is not a run dump (bad magic)");
    if (get<std::uint32_t>(in) != kBinaryVersion)
        throw Error(path + ": unsupported dump version");
    TimeSeries ts;
    ts.N = get<std::int32_t>(in);
    ts.P = get<std::int32_t>(in);
    ts.S = get<std::int32_t>(in);
    ts.b = get<double>(in);
    ts.T = get<long long>(in);
    ts.warmup = get<long long>(in);
    ts.seed = get<std::uint64_t>(in);
    ts.noise_variance = get<double>(in);
    ts.A = get_vec<double>(in);
    ts.g = get_vec<double>(in);
    ts.eta = get_vec<double>(in);
    ts.mu = get_vec<std::int32_t>(in);
    if (!in) throw Error(path + ": truncated dump");
    return ts;
}

}  // namespace mg
