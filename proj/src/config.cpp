#include "mmh/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <vector>

#include "mmh/errors.hpp"

namespace mmh {

std::uint64_t fnv1a(const std::string& bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

SimConfig RunConfig::sim_config() const
{
    SimConfig cfg;
    cfg.n_paths = sim_paths;
    cfg.steps_per_year = steps_per_year;
    cfg.seed = sim_seed;
    cfg.v0 = v0;
    cfg.x0 = x0;
    cfg.state0 = state0;
    cfg.workers = workers;
    return cfg;
}

namespace {

struct Entry {
    std::string value;
    int line = 0;
    bool used = false;
};

// key -> entry, per section
using Section = std::map<std::string, Entry>;

[[noreturn]] void fail(int line, const std::string& what)
{
    throw ConfigError("line " + std::to_string(line) + ": " + what);
}

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const Entry& e, const std::string& key)
{
    const char* begin = e.value.c_str();
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0' || errno == ERANGE) {
        fail(e.line, "'" + key + "' expects a number, got '" + e.value + "'");
    }
    return v;
}

std::size_t to_count(const Entry& e, const std::string& key)
{
    const char* begin = e.value.c_str();
    char* end = nullptr;
    errno = 0;
    const long long v = std::strtoll(begin, &end, 10);
    if (end == begin || *end != '\0' || errno == ERANGE || v < 0) {
        fail(e.line, "'" + key + "' expects a nonnegative integer, got '" + e.value + "'");
    }
    return static_cast<std::size_t>(v);
}

// Splits "theta.2" into ("theta", {2}); indices are 1-based in the file.
std::pair<std::string, std::vector<std::size_t>> split_key(const std::string& key, int line)
{
    std::vector<std::string> parts;
    std::stringstream ss(key);
    std::string part;
    while (std::getline(ss, part, '.')) parts.push_back(part);
    if (parts.empty() || parts[0].empty()) fail(line, "empty key");
    std::vector<std::size_t> idx;
    for (std::size_t j = 1; j < parts.size(); ++j) {
        const auto& s = parts[j];
        if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
            fail(line, "bad state index in '" + key + "'");
        }
        const auto v = std::stoul(s);
        if (v == 0) fail(line, "state indices are 1-based in '" + key + "'");
        idx.push_back(v);
    }
    return {parts[0], idx};
}

class Reader {
public:
    Reader(std::map<std::string, Section>& sections, std::map<std::string, int>& header_lines)
        : sections_(sections), header_lines_(header_lines)
    {
    }

    int header(const std::string& sec) const
    {
        const auto it = header_lines_.find(sec);
        return it == header_lines_.end() ? 0 : it->second;
    }

    Entry* find(const std::string& sec, const std::string& key)
    {
        auto s = sections_.find(sec);
        if (s == sections_.end()) return nullptr;
        auto e = s->second.find(key);
        if (e == s->second.end()) return nullptr;
        e->second.used = true;
        return &e->second;
    }

    Entry& need(const std::string& sec, const std::string& key)
    {
        Entry* e = find(sec, key);
        if (!e) fail(header(sec), "missing key '" + key + "' in [" + sec + "]");
        return *e;
    }

    std::optional<double> number(const std::string& sec, const std::string& key)
    {
        Entry* e = find(sec, key);
        if (!e) return std::nullopt;
        return to_double(*e, key);
    }

    std::optional<std::size_t> count(const std::string& sec, const std::string& key)
    {
        Entry* e = find(sec, key);
        if (!e) return std::nullopt;
        return to_count(*e, key);
    }

    // name.1 .. name.n, or a single unindexed name broadcast to all states.
    std::vector<double> per_state(const std::string& sec, const std::string& name, std::size_t n)
    {
        if (Entry* all = find(sec, name)) {
            const double v = to_double(*all, name);
            for (std::size_t i = 1; i <= n; ++i) {
                if (Entry* dup = find(sec, name + "." + std::to_string(i))) {
                    fail(dup->line, "'" + name + "' is given both with and without a state index");
                }
            }
            return std::vector<double>(n, v);
        }
        std::vector<double> out(n);
        for (std::size_t i = 1; i <= n; ++i) {
            const std::string key = name + "." + std::to_string(i);
            out[i - 1] = to_double(need(sec, key), key);
        }
        return out;
    }

    void reject_unused()
    {
        for (const auto& [sec, entries] : sections_) {
            for (const auto& [key, e] : entries) {
                if (!e.used) fail(e.line, "unknown key '" + key + "' in [" + sec + "]");
            }
        }
    }

private:
    std::map<std::string, Section>& sections_;
    std::map<std::string, int>& header_lines_;
};

}  // namespace

RunConfig parse_config(const std::string& text)
{
    static const std::map<std::string, std::set<std::string>> known{
        {"model", {"variant", "n_states", "r", "nu", "kappa", "theta", "chi", "d", "lambda_hat", "rho", "delta", "horizon"}},
        {"chain", {"q"}},
        {"initial", {"v0", "x0", "state0"}},
        {"solver", {"xi_method", "grid_step", "n_paths_xi", "seed"}},
        {"sim", {"n_paths", "steps_per_year", "seed", "workers"}},
    };
    std::map<std::string, Section> sections;
    std::map<std::string, int> header_lines;
    std::string current;
    std::size_t max_index = 0;

    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') fail(line, "unterminated section header");
            current = trim(s.substr(1, s.size() - 2));
            if (!known.count(current)) fail(line, "unknown section [" + current + "]");
            if (header_lines.count(current)) fail(line, "duplicate section [" + current + "]");
            header_lines[current] = line;
            sections[current];
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) fail(line, "expected 'key = value'");
        if (current.empty()) fail(line, "key outside of any section");
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        if (key.empty()) fail(line, "empty key");
        if (value.empty()) fail(line, "empty value for '" + key + "'");
        const auto [name, idx] = split_key(key, line);
        if (!known.at(current).count(name)) fail(line, "unknown key '" + key + "' in [" + current + "]");
        for (auto i : idx) max_index = std::max(max_index, i);
        auto& sec = sections[current];
        if (sec.count(key)) fail(line, "duplicate key '" + key + "'");
        sec[key] = Entry{value, line, false};
    }
    for (const auto& sec : {"model", "chain", "initial"}) {
        if (!header_lines.count(sec)) fail(line, std::string("missing section [") + sec + "]");
    }

    Reader rd(sections, header_lines);
    RunConfig cfg;
    cfg.hash = [&] {
        std::ostringstream h;
        h << std::hex << std::setw(16) << std::setfill('0') << fnv1a(text);
        return h.str();
    }();

    std::size_t n = std::max<std::size_t>(max_index, 1);
    if (auto given = rd.count("model", "n_states")) {
        if (*given == 0 || *given < max_index) {
            fail(rd.find("model", "n_states")->line, "n_states is smaller than the largest state index");
        }
        n = *given;
    }

    auto& p = cfg.model;
    const Entry& variant = rd.need("model", "variant");
    try {
        p.variant = parse_variant(variant.value);
    } catch (const Error& e) {
        fail(variant.line, e.what());
    }
    p.r = rd.per_state("model", "r", n);
    p.nu = rd.per_state("model", "nu", n);
    p.kappa = rd.per_state("model", "kappa", n);
    p.theta = rd.per_state("model", "theta", n);
    p.chi = rd.per_state("model", "chi", n);
    if (p.variant == Variant::MMH) {
        p.lambda_hat = rd.per_state("model", "lambda_hat", n);
    } else {
        p.d = to_double(rd.need("model", "d"), "d");
    }
    p.rho = rd.number("model", "rho").value_or(0.0);
    p.delta = to_double(rd.need("model", "delta"), "delta");
    p.horizon = to_double(rd.need("model", "horizon"), "horizon");
    try {
        p.validate();
    } catch (const Error& e) {
        fail(rd.header("model"), std::string("[model] ") + e.what());
    }

    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    std::vector<std::optional<std::pair<double, int>>> diagonal(n);
    for (auto& [key, e] : sections["chain"]) {
        const auto [name, idx] = split_key(key, e.line);
        if (name != "q" || idx.size() != 2) fail(e.line, "chain keys have the form q.i.j");
        if (idx[0] > n || idx[1] > n) fail(e.line, "state index beyond n_states in '" + key + "'");
        e.used = true;
        const double v = to_double(e, key);
        if (idx[0] != idx[1] && v < 0.0) fail(e.line, "negative rate " + key);
        if (idx[0] == idx[1]) {
            diagonal[idx[0] - 1] = {v, e.line};
        } else {
            q(static_cast<Eigen::Index>(idx[0] - 1), static_cast<Eigen::Index>(idx[1] - 1)) = v;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        const double off = q.row(ii).sum();
        if (diagonal[i]) {
            const auto [v, at] = *diagonal[i];
            if (std::abs(v + off) > kRowSumTolerance * std::max(1.0, std::abs(off))) {
                fail(at, "diagonal q." + std::to_string(i + 1) + "." + std::to_string(i + 1) +
                             " does not equal minus the off-diagonal row sum");
            }
        }
        q(ii, ii) = -off;
    }
    try {
        cfg.chain = validate_intensity(q);
    } catch (const Error& e) {
        fail(rd.header("chain"), std::string("[chain] ") + e.what());
    }

    cfg.v0 = to_double(rd.need("initial", "v0"), "v0");
    cfg.x0 = to_double(rd.need("initial", "x0"), "x0");
    const Entry& s0 = rd.need("initial", "state0");
    const auto state0 = to_count(s0, "state0");
    if (state0 == 0 || state0 > n) fail(s0.line, "state0 must lie in 1.." + std::to_string(n));
    cfg.state0 = state0 - 1;
    if (!(cfg.v0 > 0.0)) fail(rd.find("initial", "v0")->line, "v0 must be positive");
    if (!(cfg.x0 >= 0.0)) fail(rd.find("initial", "x0")->line, "x0 must be nonnegative");

    if (Entry* m = rd.find("solver", "xi_method")) {
        if (m->value == "ode") {
            cfg.xi_method = XiMethod::ODE;
        } else if (m->value == "mc") {
            cfg.xi_method = XiMethod::MC;
        } else {
            fail(m->line, "xi_method must be 'ode' or 'mc'");
        }
    }
    cfg.grid_step = rd.number("solver", "grid_step").value_or(0.0);
    if (cfg.grid_step < 0.0) fail(rd.find("solver", "grid_step")->line, "grid_step must be nonnegative");
    cfg.n_paths_xi = rd.count("solver", "n_paths_xi").value_or(cfg.n_paths_xi);
    cfg.solver_seed = rd.count("solver", "seed").value_or(cfg.solver_seed);
    cfg.sim_paths = rd.count("sim", "n_paths").value_or(cfg.sim_paths);
    cfg.steps_per_year = rd.count("sim", "steps_per_year").value_or(cfg.steps_per_year);
    cfg.sim_seed = rd.count("sim", "seed").value_or(cfg.sim_seed);
    cfg.workers = rd.count("sim", "workers").value_or(cfg.workers);
    if (cfg.n_paths_xi == 0) fail(rd.find("solver", "n_paths_xi")->line, "n_paths_xi must be at least 1");
    if (cfg.sim_paths == 0) fail(rd.find("sim", "n_paths")->line, "n_paths must be at least 1");
    if (cfg.steps_per_year == 0) fail(rd.find("sim", "steps_per_year")->line, "steps_per_year must be at least 1");

    rd.reject_unused();
    return cfg;
}

RunConfig load_config(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_config(buf.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

}  // namespace mmh
