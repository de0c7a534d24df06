#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mmh/cli.hpp"
#include "mmh/errors.hpp"

using namespace mmh;
namespace fs = std::filesystem;

namespace {

const std::string kSet1 = MMH_CONFIG_DIR "/set1.cfg";
const std::string kSet2 = MMH_CONFIG_DIR "/set2.cfg";

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

class TempDir {
public:
    TempDir()
    {
        path_ = fs::temp_directory_path() / ("mmh_cli_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
                                             ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    std::string file(const std::string& name, const std::string& content = "") const
    {
        const auto p = (path_ / name).string();
        if (!content.empty()) std::ofstream(p) << content;
        return p;
    }

private:
    fs::path path_;
};

struct Result {
    int code = 0;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args)
{
    args.insert(args.begin(), "mmh");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

// Data rows of a CSV with a provenance comment line and a header.
struct Csv {
    std::string provenance;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

std::vector<std::string> split(const std::string& line)
{
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

Csv parse_csv(const std::string& text)
{
    Csv csv;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("#", 0) == 0) {
            csv.provenance = line;
        } else if (csv.header.empty()) {
            csv.header = split(line);
        } else {
            csv.rows.push_back(split(line));
        }
    }
    return csv;
}

std::string replace(std::string text, const std::string& from, const std::string& to)
{
    const auto at = text.find(from);
    if (at != std::string::npos) text.replace(at, from.size(), to);
    return text;
}

}  // namespace

TEST(Config, ParsesShippedSets)
{
    const auto c1 = load_config(kSet1);
    EXPECT_EQ(c1.model.variant, Variant::SMMH_RHO);
    EXPECT_EQ(c1.model.n_states(), 2u);
    EXPECT_EQ(c1.model.r, (std::vector<double>{0.03, 0.01}));
    EXPECT_EQ(c1.model.kappa, (std::vector<double>{4.0, 4.0}));
    EXPECT_EQ(c1.model.d, 1.7);
    EXPECT_EQ(c1.model.rho, -0.8);
    EXPECT_EQ(c1.model.delta, 0.3);
    EXPECT_EQ(c1.chain.rate(0, 1), 1.0909);
    EXPECT_EQ(c1.chain.rate(1, 0), 3.4413);
    EXPECT_EQ(c1.v0, 10.0);
    EXPECT_EQ(c1.x0, 0.02);
    EXPECT_EQ(c1.state0, 0u);
    EXPECT_EQ(c1.sim_paths, 100'000u);
    EXPECT_EQ(c1.hash.size(), 16u);
    const auto c2 = load_config(kSet2);
    EXPECT_EQ(c2.model.delta, -1.0);
    EXPECT_NE(c1.hash, c2.hash);
}

TEST(Config, ErrorsCarryLineNumbers)
{
    const std::string base = read_file(kSet1);
    auto expect_line = [](const std::string& text, const std::string& anchor) {
        try {
            parse_config(text);
            ADD_FAILURE() << "expected ConfigError for anchor " << anchor;
        } catch (const ConfigError& e) {
            EXPECT_NE(std::string(e.what()).find(anchor), std::string::npos) << e.what();
        }
    };
    expect_line(replace(base, "kappa = 4.0", "kappa 4.0"), "line 9:");
    expect_line(replace(base, "kappa = 4.0", "kappa = four"), "line 9:");
    expect_line(replace(base, "kappa = 4.0", "kapa = 4.0"), "line 9:");
    expect_line(replace(base, "[sim]", "[simulation]"), "line 32:");
    expect_line(replace(base, "q.2.1 = 3.4413", "q.2.1 = -3.4413"), "line 20:");
    expect_line(replace(base, "d = 1.7", "d = 1.7\nlambda_hat.1 = 2"), "line 14:");  // not used by SMMH_RHO
    expect_line(replace(base, "state0 = 1", "state0 = 3"), "line");
    EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ull);
}

TEST(Config, BroadcastAndDiagonal)
{
    const std::string text =
        "[model]\nvariant = MMH\nn_states = 2\nr = 0.02\nnu = 1\nkappa = 3\ntheta = 0.05\nchi = 0.3\n"
        "lambda_hat.1 = 1\nlambda_hat.2 = 0.5\nrho = 0\ndelta = 0.5\nhorizon = 2\n"
        "[chain]\nq.1.1 = -2\nq.1.2 = 2\nq.2.1 = 1\n[initial]\nv0 = 1\nx0 = 0.05\nstate0 = 2\n";
    const auto cfg = parse_config(text);
    EXPECT_EQ(cfg.model.variant, Variant::MMH);
    EXPECT_EQ(cfg.model.theta, (std::vector<double>{0.05, 0.05}));
    EXPECT_EQ(cfg.model.lambda_hat, (std::vector<double>{1.0, 0.5}));
    EXPECT_EQ(cfg.chain.exit_rate(1), 1.0);
    EXPECT_EQ(cfg.state0, 1u);
    EXPECT_THROW(parse_config(replace(text, "q.1.1 = -2", "q.1.1 = -3")), ConfigError);
    EXPECT_THROW(parse_config(replace(text, "[initial]", "[initial]\nv1 = 3")), ConfigError);
}

TEST(Validate, ExitCodes)
{
    TempDir dir;
    const auto ok = run({"validate", kSet1});
    EXPECT_EQ(ok.code, cli::kExitOk);
    EXPECT_NE(ok.out.find("all checks passed"), std::string::npos);
    EXPECT_EQ(ok.out.find("FAIL"), std::string::npos);
    EXPECT_EQ(run({"validate", kSet2}).code, cli::kExitOk);

    // chi = 1 with kappa theta = 0.05: 0.1 < 1.
    std::string feller = read_file(kSet1);
    feller = replace(feller, "kappa = 4.0", "kappa = 2.5");
    feller = replace(feller, "theta.1 = 0.02", "theta.1 = 0.02\n");
    feller = replace(feller, "chi = 0.35", "chi = 1");
    const auto bad = run({"validate", dir.file("feller.cfg", feller)});
    EXPECT_EQ(bad.code, cli::kExitFailure);
    EXPECT_NE(bad.err.find("FellerViolated"), std::string::npos);
    EXPECT_NE(bad.out.find("FAIL feller state 1"), std::string::npos) << bad.out;

    const auto malformed = run({"validate", dir.file("bad.cfg", "[model]\nvariant = SMMH\nthis is not a pair\n")});
    EXPECT_EQ(malformed.code, cli::kExitUsage);
    EXPECT_NE(malformed.err.find("line 3"), std::string::npos) << malformed.err;

    EXPECT_EQ(run({"validate", dir.file("missing.cfg")}).code, cli::kExitUsage);
}

TEST(Validate, AssumptionFailureExitsOne)
{
    TempDir dir;
    std::string text = read_file(kSet1);
    text = replace(text, "\ndelta = 0.3", "\ndelta = 0.99");
    text = replace(text, "rho = -0.8", "rho = 0.9");
    const auto res = run({"validate", dir.file("assume.cfg", text)});
    EXPECT_EQ(res.code, cli::kExitFailure);
    EXPECT_NE(res.err.find("AssumptionViolated"), std::string::npos);
}

TEST(Solve, Set1Rows)
{
    const auto res = run({"solve", kSet1, "--t-grid", "10"});
    ASSERT_EQ(res.code, 0) << res.err;
    const auto csv = parse_csv(res.out);
    EXPECT_EQ(csv.provenance.rfind("# config_hash=", 0), 0u);
    EXPECT_NE(csv.provenance.find(" seed=1"), std::string::npos);
    EXPECT_EQ(csv.header, (std::vector<std::string>{"t", "state", "phi", "xi", "D_or_B", "pi_mv", "pi_h", "pi_total"}));
    ASSERT_EQ(csv.rows.size(), 22u);
    EXPECT_EQ(csv.rows[0][0], "0");
    EXPECT_EQ(csv.rows[0][1], "1");
    EXPECT_NEAR(std::stod(csv.rows[0][2]), 7.4261, 0.005);
    EXPECT_NEAR(std::stod(csv.rows[0][5]), 2.4286, 1e-4);
    EXPECT_NEAR(std::stod(csv.rows[1][5]), 1.8681, 1e-4);
    const auto& last = csv.rows.back();
    EXPECT_EQ(last[0], "5");
    EXPECT_EQ(last[3], "1");  // xi(T) = 1
    EXPECT_EQ(last[4], "0");  // D(T) = 0
    EXPECT_EQ(last[6], "0");  // pi_h(T) = 0
}

TEST(Solve, NoLeverageMeansNoHedge)
{
    TempDir dir;
    std::string text = read_file(kSet1);
    text = replace(text, "variant = SMMH_RHO", "variant = SMMH");
    text = replace(text, "rho = -0.8", "rho = 0");
    const auto res = run({"solve", dir.file("smmh.cfg", text), "--t-grid", "5"});
    ASSERT_EQ(res.code, 0) << res.err;
    for (const auto& row : parse_csv(res.out).rows) EXPECT_EQ(row[6], "0");
}

TEST(Solve, WritesFileAndRejectsZeroGrid)
{
    TempDir dir;
    const auto path = dir.file("solve.csv");
    EXPECT_EQ(run({"solve", kSet2, "--t-grid", "4", "--out", path}).code, 0);
    const auto csv = parse_csv(read_file(path));
    EXPECT_EQ(csv.rows.size(), 10u);
    EXPECT_NEAR(std::stod(csv.rows[0][2]), -0.0802, 0.005);
    EXPECT_EQ(run({"solve", kSet1, "--t-grid", "0"}).code, cli::kExitUsage);
}

TEST(Simulate, SinglePathLeavesStdErrBlank)
{
    const auto res = run({"simulate", kSet1, "--paths", "1", "--steps-per-year", "10"});
    ASSERT_EQ(res.code, 0) << res.err;
    const auto csv = parse_csv(res.out);
    EXPECT_EQ(csv.header, (std::vector<std::string>{"n_paths", "steps_per_year", "strategy", "mean", "std_err", "q05",
                                                    "q95", "runtime_s"}));
    ASSERT_EQ(csv.rows.size(), 1u);
    EXPECT_EQ(csv.rows[0][0], "1");
    EXPECT_EQ(csv.rows[0][4], "");
}

TEST(Simulate, HistogramDumpAndDeterminism)
{
    TempDir dir;
    const auto hist = dir.file("hist.csv");
    const auto dump = dir.file("paths.bin");
    const std::vector<std::string> args{"simulate", kSet1, "--paths", "200", "--steps-per-year", "20", "--seed", "4",
                                        "--hist-out", hist, "--bins", "10", "--dump", dump};
    const auto a = run(args);
    ASSERT_EQ(a.code, 0) << a.err;
    const auto b = run(args);
    auto strip_runtime = [](const std::string& out) { return out.substr(0, out.rfind(',')); };
    EXPECT_EQ(strip_runtime(a.out), strip_runtime(b.out));
    EXPECT_NE(a.out.find("seed=4"), std::string::npos);

    const auto h = parse_csv(read_file(hist));
    EXPECT_EQ(h.header, (std::vector<std::string>{"bin_lo", "bin_hi", "count"}));
    ASSERT_EQ(h.rows.size(), 12u);
    EXPECT_EQ(h.rows[1][0], "0");
    EXPECT_EQ(h.rows[10][1], "150");
    std::size_t total = 0;
    for (const auto& r : h.rows) total += std::stoul(r[2]);
    EXPECT_EQ(total, 200u);

    std::ifstream in(dump, std::ios::binary);
    const auto d = read_path_dump(in);
    EXPECT_EQ(d.n_paths, 200u);
    EXPECT_EQ(d.times.size(), 101u);
}

TEST(Simulate, ConstantStrategyAndErrors)
{
    const auto res = run({"simulate", kSet1, "--paths", "50", "--steps-per-year", "10", "--strategy", "const:0"});
    ASSERT_EQ(res.code, 0) << res.err;
    EXPECT_NE(res.out.find(",const:0,"), std::string::npos);
    EXPECT_EQ(run({"simulate", kSet1, "--strategy", "greedy"}).code, cli::kExitUsage);
    EXPECT_EQ(run({"simulate", kSet1, "--strategy", "const:x"}).code, cli::kExitUsage);
    EXPECT_EQ(run({"simulate", kSet1, "--paths", "0"}).code, cli::kExitUsage);
    EXPECT_EQ(run({"simulate", kSet1, "--bins", "0"}).code, cli::kExitUsage);
}

TEST(Diagnose, StartCheckpointIsExact)
{
    const auto res = run({"diagnose", kSet1, "--checkpoints", "0,2.5,5", "--paths", "300", "--seed", "3"});
    ASSERT_EQ(res.code, 0) << res.err;
    const auto csv = parse_csv(res.out);
    EXPECT_EQ(csv.header, (std::vector<std::string>{"t", "mean_phi", "std_err", "z_score"}));
    ASSERT_EQ(csv.rows.size(), 3u);
    EXPECT_EQ(csv.rows[0][2], "0");
    EXPECT_EQ(csv.rows[0][3], "0");
    EXPECT_NEAR(std::stod(csv.rows[0][1]), 7.4261, 0.005);
    EXPECT_EQ(run({"diagnose", kSet1, "--checkpoints", "7"}).code, cli::kExitUsage);
}

TEST(Compare, ThreeMethods)
{
    TempDir dir;
    std::string text = read_file(kSet1);
    text = replace(text, "n_paths_xi = 10000", "n_paths_xi = 500");
    const auto res = run({"compare", dir.file("cmp.cfg", text), "--paths", "300"});
    ASSERT_EQ(res.code, 0) << res.err;
    const auto csv = parse_csv(res.out);
    ASSERT_EQ(csv.rows.size(), 3u);
    EXPECT_EQ(csv.rows[0][0], "formula_ode");
    EXPECT_EQ(csv.rows[1][0], "formula_xi_mc");
    EXPECT_EQ(csv.rows[2][0], "full_mc");
    EXPECT_GT(std::stod(csv.rows[1][2]), 0.0);
}

TEST(Run, UsageErrors)
{
    EXPECT_EQ(run({}).code, cli::kExitUsage);
    EXPECT_EQ(run({"frobnicate"}).code, cli::kExitUsage);
    EXPECT_EQ(run({"solve"}).code, cli::kExitUsage);
    EXPECT_EQ(run({"solve", kSet1, "--t-grid", "abc"}).code, cli::kExitUsage);
    EXPECT_EQ(run({"--help"}).code, cli::kExitOk);
}
