#include "mmh/simulate.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>

#include "mmh/errors.hpp"
#include "mmh/parallel.hpp"
#include "mmh/random.hpp"

namespace mmh {

double SimConfig::effective_horizon(const HestonRegimeParams& p) const
{
    return horizon > 0.0 ? horizon : p.horizon;
}

std::size_t SimConfig::n_steps(const HestonRegimeParams& p) const
{
    const double steps = std::round(static_cast<double>(steps_per_year) * effective_horizon(p));
    return std::max<std::size_t>(1, static_cast<std::size_t>(steps));
}

void SimConfig::validate(const HestonRegimeParams& p) const
{
    if (n_paths == 0) throw ConfigError("n_paths must be at least 1");
    if (steps_per_year == 0) throw ConfigError("steps_per_year must be at least 1");
    if (brownian_substeps == 0) throw ConfigError("brownian_substeps must be at least 1");
    if (!(v0 > 0.0)) throw ConfigError("v0 must be positive");
    if (!(x0 >= 0.0)) throw ConfigError("x0 must be nonnegative");
    if (!(horizon >= 0.0) || horizon > p.horizon) throw ConfigError("horizon must lie in (0, T]");
    if (state0 >= p.n_states()) throw ConfigError("state0 out of range");
    const double h = effective_horizon(p);
    for (double t : record_times) {
        if (!(t >= 0.0 && t <= h)) throw ConfigError("record time outside [0, horizon]");
    }
    if (frozen_path) {
        if (frozen_path->start != 0.0 || frozen_path->horizon < h) {
            throw ConfigError("frozen path must cover [0, horizon]");
        }
        try {
            frozen_path->validate(p.n_states());
        } catch (const Error& e) {
            throw ConfigError(std::string("frozen path: ") + e.what());
        }
        if (frozen_path->states.front() != state0) throw ConfigError("frozen path must start in state0");
    }
    try {
        p.validate();
    } catch (const Error& e) {
        throw ConfigError(std::string("model: ") + e.what());
    }
}

std::size_t PathBundle::record_of(double t) const
{
    for (std::size_t k = 0; k < record_steps.size(); ++k) {
        if (std::abs(record_time(k) - t) <= 0.5 * dt) return k;
    }
    throw InvalidInput("time is not a recorded grid point");
}

std::vector<double> PathBundle::terminal_wealth() const
{
    std::vector<double> out(n_paths);
    for (std::size_t i = 0; i < n_paths; ++i) out[i] = wealth[index(i, n_records() - 1)];
    return out;
}

namespace {

struct Grid {
    double horizon = 0.0;
    double dt = 0.0;
    std::vector<double> times;
    std::vector<std::size_t> record_steps;
    std::vector<std::ptrdiff_t> slot;  // record index per step, -1 if not recorded
};

Grid make_grid(const HestonRegimeParams& p, const SimConfig& cfg)
{
    Grid g;
    g.horizon = cfg.effective_horizon(p);
    const std::size_t n = cfg.n_steps(p);
    g.dt = g.horizon / static_cast<double>(n);
    g.times.resize(n + 1);
    for (std::size_t k = 0; k < n; ++k) g.times[k] = static_cast<double>(k) * g.dt;
    g.times[n] = g.horizon;

    if (cfg.record_all_steps) {
        g.record_steps.resize(n + 1);
        for (std::size_t k = 0; k <= n; ++k) g.record_steps[k] = k;
    } else {
        g.record_steps = {0, n};
        for (double t : cfg.record_times) {
            g.record_steps.push_back(static_cast<std::size_t>(std::llround(t / g.dt)));
        }
        std::sort(g.record_steps.begin(), g.record_steps.end());
        g.record_steps.erase(std::unique(g.record_steps.begin(), g.record_steps.end()),
                             g.record_steps.end());
    }
    g.slot.assign(n + 1, -1);
    for (std::size_t k = 0; k < g.record_steps.size(); ++k) {
        g.slot[g.record_steps[k]] = static_cast<std::ptrdiff_t>(k);
    }
    return g;
}

PathBundle empty_bundle(const Grid& g, std::size_t n_paths, std::uint64_t seed)
{
    PathBundle b;
    b.dt = g.dt;
    b.step_times = g.times;
    b.record_steps = g.record_steps;
    b.n_paths = n_paths;
    b.seed = seed;
    const std::size_t size = n_paths * g.record_steps.size();
    b.state.resize(size);
    b.factor.resize(size);
    b.asset.resize(size);
    b.wealth.resize(size);
    return b;
}

// Simulates paths [first, first + out.n_paths) into out.
void simulate_range(const HestonRegimeParams& p, const MarkovChainSpec& chain,
                    const StrategyFn& strategy, const SimConfig& cfg, const Grid& g,
                    std::size_t first, PathBundle& out)
{
    const std::size_t n_rec = g.record_steps.size();
    const std::size_t n_steps = g.times.size() - 1;
    const double dt = g.dt;
    const double sqrt_dt = std::sqrt(dt);
    const double rho_perp = std::sqrt(std::max(0.0, 1.0 - p.rho * p.rho));
    const double sub_scale = 1.0 / std::sqrt(static_cast<double>(cfg.brownian_substeps));

    parallel_for(out.n_paths, cfg.workers, [&](std::size_t local) {
        const std::size_t i = first + local;
        PathStream stream(cfg.seed, i);
        const RegimePath path = cfg.frozen_path ? *cfg.frozen_path
                                                : sample_path(chain, 0.0, g.horizon, cfg.state0, stream);

        double x = cfg.x0;
        double log_p = 0.0;
        double log_v = 0.0;
        std::size_t seg = 0;
        const std::size_t base = local * n_rec;

        auto record = [&](std::size_t k, std::size_t e) {
            const auto slot = g.slot[k];
            if (slot < 0) return;
            const std::size_t at = base + static_cast<std::size_t>(slot);
            out.state[at] = e;
            out.factor[at] = std::max(x, 0.0);
            out.asset[at] = std::exp(log_p);
            out.wealth[at] = k == 0 ? cfg.v0 : cfg.v0 * std::exp(log_v);
        };

        for (std::size_t k = 0; k < n_steps; ++k) {
            const double t = g.times[k];
            while (seg + 1 < path.n_segments() && path.segment_end(seg) <= t) ++seg;
            const std::size_t e = path.states[seg];
            record(k, e);

            double zx = 0.0;
            double zperp = 0.0;
            for (std::size_t s = 0; s < cfg.brownian_substeps; ++s) {
                zx += stream.normal();
                zperp += stream.normal();
            }
            zx *= sub_scale;
            zperp *= sub_scale;
            const double zp = p.rho * zx + rho_perp * zperp;

            const double pi = strategy(t, e);
            const double xp = std::max(x, 0.0);
            const double vol = std::sqrt(xp) * sqrt_dt;
            const double nu = p.nu[e];
            const double slope = p.excess_slope(e);
            const double r = p.r[e];

            x += p.kappa[e] * (p.theta[e] - xp) * dt + p.chi[e] * vol * zx;
            log_p += (r + slope * xp - 0.5 * nu * nu * xp) * dt + nu * vol * zp;
            log_v += (r + pi * slope * xp - 0.5 * pi * pi * nu * nu * xp) * dt + pi * nu * vol * zp;
        }
        while (seg + 1 < path.n_segments() && path.segment_end(seg) <= g.horizon) ++seg;
        record(n_steps, path.states[seg]);
    });
}

}  // namespace

PathBundle simulate_paths(const HestonRegimeParams& p, const MarkovChainSpec& chain,
                          const StrategyFn& strategy, const SimConfig& cfg)
{
    cfg.validate(p);
    if (chain.n_states() != p.n_states()) throw ConfigError("chain and model disagree on state count");
    if (!strategy) throw ConfigError("no strategy given");
    const Grid g = make_grid(p, cfg);
    PathBundle out = empty_bundle(g, cfg.n_paths, cfg.seed);
    simulate_range(p, chain, strategy, cfg, g, 0, out);
    return out;
}

McEstimate expected_utility_mc(const PathBundle& bundle, double delta)
{
    const Utility u(delta);
    std::vector<double> samples(bundle.n_paths);
    for (std::size_t i = 0; i < bundle.n_paths; ++i) {
        samples[i] = u(bundle.wealth[bundle.index(i, bundle.n_records() - 1)]);
    }
    return summarize(samples);
}

double empirical_quantile(std::vector<double> samples, double level)
{
    if (samples.empty()) throw InvalidInput("quantile of an empty sample");
    if (!(level > 0.0 && level <= 1.0)) throw InvalidInput("quantile level must lie in (0, 1]");
    const auto n = samples.size();
    auto rank = static_cast<std::size_t>(std::ceil(level * static_cast<double>(n)));
    rank = std::clamp<std::size_t>(rank, 1, n);
    auto nth = samples.begin() + static_cast<std::ptrdiff_t>(rank - 1);
    std::nth_element(samples.begin(), nth, samples.end());
    return *nth;
}

Histogram terminal_wealth_histogram(const PathBundle& bundle, const std::vector<double>& edges)
{
    if (edges.size() < 2) throw InvalidInput("histogram needs at least two edges");
    for (std::size_t j = 1; j < edges.size(); ++j) {
        if (!(edges[j] > edges[j - 1])) throw InvalidInput("histogram edges must be strictly increasing");
    }
    Histogram h;
    h.edges = edges;
    h.counts.assign(edges.size() - 1, 0);
    const auto wealth = bundle.terminal_wealth();
    for (double v : wealth) {
        if (v < edges.front()) {
            ++h.underflow;
        } else if (v >= edges.back()) {
            ++h.overflow;
        } else {
            const auto it = std::upper_bound(edges.begin(), edges.end(), v);
            ++h.counts[static_cast<std::size_t>(it - edges.begin()) - 1];
        }
    }
    if (!wealth.empty()) {
        h.q05 = empirical_quantile(wealth, 0.05);
        h.q95 = empirical_quantile(wealth, 0.95);
    }
    return h;
}

void Histogram::write_csv(std::ostream& out) const
{
    const double inf = std::numeric_limits<double>::infinity();
    out << "bin_lo,bin_hi,count\n" << std::setprecision(17);
    out << -inf << ',' << edges.front() << ',' << underflow << '\n';
    for (std::size_t j = 0; j < counts.size(); ++j) {
        out << edges[j] << ',' << edges[j + 1] << ',' << counts[j] << '\n';
    }
    out << edges.back() << ',' << inf << ',' << overflow << '\n';
}

std::vector<MartingalePoint> martingale_diagnostic(const HestonRegimeParams& p,
                                                   const MarkovChainSpec& chain, const XiTable& xi,
                                                   const SimConfig& cfg,
                                                   const std::vector<double>& checkpoints,
                                                   const StrategyFn& strategy)
{
    if (p.variant == Variant::MMH) throw DomainViolation("martingale_diagnostic needs a separable variant");
    if (checkpoints.empty()) throw ConfigError("no checkpoints given");
    require_solution_assumptions(p);
    SimConfig run = cfg;
    run.record_times = checkpoints;
    run.record_all_steps = false;
    const PathBundle bundle = simulate_paths(p, chain, strategy, run);
    const double phi0 = value_separable(p, {0.0, cfg.v0, cfg.x0, cfg.state0}, xi);

    std::vector<MartingalePoint> out;
    std::vector<double> samples(bundle.n_paths);
    for (double t : checkpoints) {
        const std::size_t k = bundle.record_of(t);
        const double tk = bundle.record_time(k);
        for (std::size_t i = 0; i < bundle.n_paths; ++i) {
            const std::size_t at = bundle.index(i, k);
            samples[i] = value_separable(p, {tk, bundle.wealth[at], bundle.factor[at], bundle.state[at]}, xi);
        }
        const McEstimate est = summarize(samples);
        MartingalePoint point{tk, est.mean, est.std_err, 0.0};
        if (est.std_err > 0.0) point.z_score = (est.mean - phi0) / est.std_err;
        out.push_back(point);
    }
    return out;
}

std::vector<MartingalePoint> martingale_diagnostic(const HestonRegimeParams& p,
                                                   const MarkovChainSpec& chain, const XiTable& xi,
                                                   const SimConfig& cfg,
                                                   const std::vector<double>& checkpoints)
{
    return martingale_diagnostic(p, chain, xi, cfg, checkpoints, optimal_policy(p));
}

std::vector<double> variance_observable(const PathBundle& bundle, const HestonRegimeParams& p)
{
    std::vector<double> out(bundle.factor.size());
    for (std::size_t j = 0; j < out.size(); ++j) {
        const double nu = p.nu[bundle.state[j]];
        out[j] = nu * nu * bundle.factor[j];
    }
    return out;
}

namespace {

constexpr char kMagic[5] = {'R', 'A', 'P', 'B', '1'};

void put_u64(std::ostream& out, std::uint64_t v)
{
    char bytes[8];
    for (int b = 0; b < 8; ++b) bytes[b] = static_cast<char>((v >> (8 * b)) & 0xffu);
    out.write(bytes, 8);
}

void put_f64(std::ostream& out, double v)
{
    put_u64(out, std::bit_cast<std::uint64_t>(v));
}

std::uint64_t get_u64(std::istream& in)
{
    unsigned char bytes[8];
    if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw InvalidInput("truncated path dump");
    std::uint64_t v = 0;
    for (int b = 7; b >= 0; --b) v = (v << 8) | bytes[b];
    return v;
}

double get_f64(std::istream& in)
{
    return std::bit_cast<double>(get_u64(in));
}

void write_header(std::ostream& out, std::size_t n_paths, const std::vector<double>& times)
{
    out.write(kMagic, sizeof kMagic);
    put_u64(out, n_paths);
    put_u64(out, times.size());
    put_u64(out, kDumpFields.size());
    for (const auto& f : kDumpFields) {
        put_u64(out, f.size());
        out.write(f.data(), static_cast<std::streamsize>(f.size()));
    }
    for (double t : times) put_f64(out, t);
}

void write_paths(std::ostream& out, const PathBundle& b)
{
    const std::size_t n = b.n_records();
    for (std::size_t i = 0; i < b.n_paths; ++i) {
        for (std::size_t k = 0; k < n; ++k) put_f64(out, static_cast<double>(b.state[b.index(i, k)] + 1));
        for (std::size_t k = 0; k < n; ++k) put_f64(out, b.factor[b.index(i, k)]);
        for (std::size_t k = 0; k < n; ++k) put_f64(out, b.asset[b.index(i, k)]);
        for (std::size_t k = 0; k < n; ++k) put_f64(out, b.wealth[b.index(i, k)]);
    }
}

}  // namespace

void write_path_dump(std::ostream& out, const PathBundle& bundle)
{
    std::vector<double> times(bundle.n_records());
    for (std::size_t k = 0; k < times.size(); ++k) times[k] = bundle.record_time(k);
    write_header(out, bundle.n_paths, times);
    write_paths(out, bundle);
}

PathDump read_path_dump(std::istream& in)
{
    char magic[sizeof kMagic];
    if (!in.read(magic, sizeof magic) || !std::equal(magic, magic + sizeof magic, kMagic)) {
        throw InvalidInput("not a path dump (bad magic)");
    }
    PathDump d;
    d.n_paths = get_u64(in);
    const auto n_times = get_u64(in);
    const auto n_fields = get_u64(in);
    if (n_fields > 1024) throw InvalidInput("implausible field count in path dump");
    for (std::uint64_t f = 0; f < n_fields; ++f) {
        const auto len = get_u64(in);
        if (len > 4096) throw InvalidInput("implausible field name in path dump");
        std::string name(len, '\0');
        if (!in.read(name.data(), static_cast<std::streamsize>(len))) throw InvalidInput("truncated path dump");
        d.fields.push_back(std::move(name));
    }
    d.times.resize(n_times);
    for (auto& t : d.times) t = get_f64(in);
    d.data.resize(d.n_paths * n_fields * n_times);
    for (auto& v : d.data) v = get_f64(in);
    return d;
}

void stream_path_dump(std::ostream& out, const HestonRegimeParams& p, const MarkovChainSpec& chain,
                      const StrategyFn& strategy, const SimConfig& cfg, std::size_t block_size)
{
    cfg.validate(p);
    if (chain.n_states() != p.n_states()) throw ConfigError("chain and model disagree on state count");
    if (!strategy) throw ConfigError("no strategy given");
    if (block_size == 0) throw ConfigError("block_size must be at least 1");
    SimConfig all = cfg;
    all.record_all_steps = true;
    const Grid g = make_grid(p, all);
    write_header(out, cfg.n_paths, g.times);
    for (std::size_t first = 0; first < cfg.n_paths; first += block_size) {
        const std::size_t count = std::min(block_size, cfg.n_paths - first);
        PathBundle block = empty_bundle(g, count, cfg.seed);
        simulate_range(p, chain, strategy, all, g, first, block);
        write_paths(out, block);
    }
}

}  // namespace mmh
