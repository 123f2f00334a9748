#include "cli.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

using intnet::json;
namespace fs = std::filesystem;

namespace {

struct CliRun {
    int code = -1;
    std::string out;
    std::string err;
};

CliRun run(std::vector<std::string> args)
{
    args.insert(args.begin(), "intnet");
    std::vector<const char*> argv;
    for (const std::string& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    CliRun r;
    r.code = intnet::cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

json parse(const CliRun& r) { return json::parse(r.out); }

fs::path temp_file(const std::string& name, const std::string& content)
{
    const fs::path dir = fs::temp_directory_path() / "intnet_cli_test";
    fs::create_directories(dir);
    const fs::path p = dir / name;
    std::ofstream(p, std::ios::binary) << content;
    return p;
}

std::string read_text(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

const char* kRateConfig = R"({"d": 1, "beta": 1, "F": 0.5, "K": 1,
  "function": {"name": "cosine", "params": {"amp": 0.5, "freq": 1}},
  "n_list": [27, 64, 125], "seeds": [1, 2, 3], "q_cap": 20000, "n_mc": 2000})";

}  // namespace

TEST(Cli, BoundsCorollary)
{
    const CliRun a = run({"bounds", "--N", "2", "--eps", "0.5"});
    ASSERT_EQ(a.code, 0);
    EXPECT_EQ(parse(a)["q_bound"]["value"], "34992");
    EXPECT_EQ(parse(a)["q_bound"]["digits"], 5);
    const CliRun b = run({"bounds", "--N", "1", "--eps", "2"});
    EXPECT_EQ(parse(b)["q_bound"]["value"], "32");
    const CliRun csv = run({"--format", "csv", "bounds", "--N", "1", "--eps", "0.25"});
    EXPECT_EQ(csv.out, "N,eps,q_bound,digits\n1,1/4,256,3\n");
}

TEST(Cli, BoundsSchedule)
{
    const CliRun r = run({"bounds", "--n", "27", "--beta", "1", "--F", "0.5", "--K", "1", "--d", "1"});
    ASSERT_EQ(r.code, 0);
    const json j = parse(r);
    EXPECT_EQ(j["M_n"], 3);
    EXPECT_EQ(j["N_n"], 4);
    EXPECT_EQ(j["Q_n"], "16200000000000");
    EXPECT_EQ(j["Q_n_digits"], 14);
}

TEST(Cli, BoundsUsageErrors)
{
    EXPECT_EQ(run({"bounds"}).code, 3);
    EXPECT_EQ(run({"bounds", "--N", "2"}).code, 3);
    EXPECT_EQ(run({"bounds", "--N", "2", "--eps", "zero"}).code, 3);
    EXPECT_EQ(run({}).code, 3);
    EXPECT_EQ(run({"frobnicate"}).code, 3);
    EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, KronSearchExamples)
{
    const CliRun a = run({"kron-search", "--targets", "[0.5]", "--eps", "0.1"});
    ASSERT_EQ(a.code, 0);
    EXPECT_EQ(parse(a)["q"], "1");
    EXPECT_EQ(parse(a)["config"]["q_cap"]["value"], "640");

    EXPECT_EQ(parse(run({"kron-search", "--targets", "[0.0]", "--eps", "0.01"}))["q"], "0");
    const CliRun c = run({"kron-search", "--targets", "[0.5,0.5]", "--eps", "0.2", "--workers", "3"});
    EXPECT_EQ(parse(c)["q"], "6");
    EXPECT_EQ(parse(c)["config"]["precision_cap"], 4096);

    const fs::path file = temp_file("targets.json", "[0.5, 0.5]");
    EXPECT_EQ(parse(run({"kron-search", "--targets-file", file.string(), "--eps", "0.2"}))["q"], "6");
}

TEST(Cli, KronSearchExactDecimals)
{
    // 0.1 must be read as exactly 1/10, not the nearest double
    const json j = parse(run({"kron-search", "--targets", "[0.1]", "--eps", "0.3"}));
    EXPECT_EQ(j["config"]["targets"][0], "1/10");
}

TEST(Cli, KronSearchNotFound)
{
    const CliRun r = run({"kron-search", "--targets", "[0.5,0.5]", "--eps", "0.2", "--cap", "5"});
    EXPECT_EQ(r.code, 2);
    const json j = parse(r);
    EXPECT_EQ(j["status"], "not_found");
    EXPECT_EQ(j["scanned"], "11");
    EXPECT_EQ(j["scanned_range"]["min"], "-5");
    EXPECT_EQ(j["scanned_range"]["max"], "5");
}

TEST(Cli, KronSearchValidation)
{
    EXPECT_EQ(run({"kron-search", "--targets", "[1.5]", "--eps", "0.1"}).code, 3);
    EXPECT_EQ(run({"kron-search", "--targets", "[]", "--eps", "0.1"}).code, 3);
    EXPECT_EQ(run({"kron-search", "--targets", "[0.5", "--eps", "0.1"}).code, 3);
    EXPECT_EQ(run({"kron-search", "--targets", "[0.5]"}).code, 3);
    EXPECT_EQ(run({"kron-search", "--targets", "[0.5]", "--eps", "0.1", "--strategy", "random"}).code, 3);
    EXPECT_EQ(run({"kron-search", "--targets", "[0.5]", "--eps", "0.1", "--cap", "-4"}).code, 3);
}

TEST(Cli, ApproximateExamples)
{
    const CliRun zero = run({"approximate", "--function", "zero", "--eps", "2", "--K", "1"});
    ASSERT_EQ(zero.code, 0);
    EXPECT_EQ(parse(zero)["report"]["q"], "0");
    EXPECT_LE(parse(zero)["report"]["sup_error_grid"].get<double>(), 2.0);

    const fs::path grid = fs::temp_directory_path() / "intnet_cli_test" / "grid.csv";
    const CliRun cosine = run({"approximate", "--function", "cosine", "--param", "amp=0.5", "--param", "freq=2",
                            "--eps", "0.5", "--beta", "1", "--F", "1", "--K", "1", "--cap", "10000000",
                            "--grid-csv", grid.string()});
    ASSERT_EQ(cosine.code, 0) << cosine.err;
    const json r = parse(cosine)["report"];
    EXPECT_EQ(r["M"], 4);
    EXPECT_EQ(r["N"], 5);
    EXPECT_LE(r["sup_error_grid"].get<double>(), 0.5);
    EXPECT_EQ(r["q_bound"]["value"], "13695130288521216");
    const std::string csv = read_text(grid);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "x1,f,z");
}

TEST(Cli, ApproximateErrors)
{
    EXPECT_EQ(run({"approximate", "--function", "sine", "--eps", "0.5"}).code, 3);
    EXPECT_EQ(run({"approximate", "--function", "cosine", "--param", "amp", "--eps", "0.5"}).code, 3);
    const CliRun violation = run({"approximate", "--function", "cosine", "--param", "amp=2", "--eps", "0.5"});
    EXPECT_EQ(violation.code, 3);
    EXPECT_EQ(parse(violation)["status"], "class_violation");
    const CliRun cap = run({"--precision-cap", "32", "approximate", "--function", "zero", "--eps", "0.5"});
    EXPECT_EQ(cap.code, 4);
    EXPECT_EQ(parse(cap)["status"], "precision_cap");
    const CliRun nf = run({"approximate", "--function", "cosine", "--param", "freq=2", "--eps", "0.5", "--cap", "3"});
    EXPECT_EQ(nf.code, 2);
    EXPECT_EQ(parse(nf)["status"], "not_found");
}

TEST(Cli, FitNoiselessNetwork)
{
    const intnet::NetworkParams truth(1, 1.0, 2, 321);
    std::mt19937_64 rng(2);
    std::vector<intnet::Sample> data;
    for (int s = 0; s < 60; ++s) {
        intnet::Point x{intnet::uniform01(rng)};
        data.push_back({x, intnet::forward(truth, x)});
    }
    std::ostringstream os;
    intnet::write_dataset_csv(os, data, 1);
    const fs::path file = temp_file("noiseless.csv", os.str());
    const CliRun r = run({"fit", "--data", file.string(), "--M", "2", "--cap", "1000"});
    ASSERT_EQ(r.code, 0) << r.err;
    const json j = parse(r);
    EXPECT_LE(j["risk"].get<double>(), 1e-12);
    EXPECT_EQ(j["n"], 60);
    EXPECT_EQ(j["q_hat"], "321");
}

TEST(Cli, FitDatasetErrors)
{
    const CliRun empty = run({"fit", "--data", temp_file("empty.csv", "").string(), "--M", "2"});
    EXPECT_EQ(empty.code, 3);
    const CliRun bad = run({"fit", "--data", temp_file("bad.csv", "x1,y\n0.1,0.2\n0.3,abc\n").string(), "--M", "2"});
    EXPECT_EQ(bad.code, 3);
    EXPECT_NE(parse(bad)["message"].get<std::string>().find("line 3"), std::string::npos);
    const CliRun header = run({"fit", "--data", temp_file("header.csv", "a,b\n0.1,0.2\n").string(), "--M", "2"});
    EXPECT_EQ(header.code, 3);
    const CliRun missing = run({"fit", "--data", "/nonexistent/data.csv", "--M", "2"});
    EXPECT_EQ(missing.code, 3);
}

TEST(Cli, RateStudyCsvShapeAndDeterminism)
{
    const fs::path config = temp_file("rate.json", kRateConfig);
    const fs::path csv = fs::temp_directory_path() / "intnet_cli_test" / "rate.csv";
    const CliRun a = run({"rate-study", "--config", config.string(), "--csv", csv.string()});
    ASSERT_EQ(a.code, 0) << a.err;
    const std::string table = read_text(csv);
    std::vector<std::string> lines;
    std::istringstream is(table);
    for (std::string line; std::getline(is, line);) lines.push_back(line);
    ASSERT_EQ(lines.size(), 5u);
    EXPECT_EQ(lines[0], "n,M_n,q_cap,mean_pred_err,sd_pred_err,theoretical_exponent,fitted_slope");
    EXPECT_EQ(lines[4].rfind("summary,", 0), 0u);

    const CliRun b = run({"rate-study", "--config", config.string()});
    EXPECT_EQ(a.out, b.out);
    const json j = parse(a);
    EXPECT_EQ(j["rows"].size(), 3u);
    EXPECT_EQ(j["rows"][0]["schedule"]["Q_n"], "16200000000000");

    const CliRun c = run({"--format", "csv", "--workers", "4", "rate-study", "--config", config.string()});
    EXPECT_EQ(c.out, table);
}

TEST(Cli, RateStudyConfigValidation)
{
    const CliRun r = run({"rate-study", "--config",
                       temp_file("badrate.json", R"({"d": 0, "beta": "x", "F": 1, "K": 1, "extra": 2,
                         "function": {"name": "cosine"}, "n_list": [], "seeds": [1], "q_cap": 10})")
                           .string()});
    EXPECT_EQ(r.code, 3);
    const json fields = parse(r)["fields"];
    EXPECT_TRUE(fields.contains("d"));
    EXPECT_TRUE(fields.contains("beta"));
    EXPECT_TRUE(fields.contains("n_list"));
    EXPECT_TRUE(fields.contains("extra"));
    EXPECT_FALSE(fields.contains("F"));
    EXPECT_EQ(run({"rate-study", "--config", temp_file("notjson.json", "{").string()}).code, 3);
}

TEST(Cli, OutFileAndSelftest)
{
    const fs::path out = fs::temp_directory_path() / "intnet_cli_test" / "bounds.json";
    const CliRun r = run({"--out", out.string(), "bounds", "--N", "2", "--eps", "0.5"});
    EXPECT_EQ(r.code, 0);
    EXPECT_TRUE(r.out.empty());
    EXPECT_EQ(json::parse(read_text(out))["q_bound"]["value"], "34992");

    const CliRun self = run({"selftest"});
    EXPECT_EQ(self.code, 0);
    EXPECT_EQ(self.out.find("FAIL"), std::string::npos);
}

TEST(CliProcess, ExitCodes)
{
    const std::string exe = INTNET_CLI_PATH;
    auto status = [&](const std::string& args) {
        const int raw = std::system((exe + " " + args + " > /dev/null 2>&1").c_str());
        return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    };
    EXPECT_EQ(status("bounds --N 2 --eps 0.5"), 0);
    EXPECT_EQ(status("kron-search --targets '[0.5,0.5]' --eps 0.2 --cap 5"), 2);
    EXPECT_EQ(status("kron-search --targets '[2]' --eps 0.2"), 3);
    EXPECT_EQ(status("--precision-cap 32 approximate --function zero --eps 0.5"), 4);
    EXPECT_EQ(status("--help"), 0);
}
