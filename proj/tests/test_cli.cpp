// End-to-end tests of the command-line tool: spawn the real binary and check
// exit codes, record structure, and reproducibility guarantees.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace {

using nlohmann::json;

struct RunResult {
    int code = -1;
    std::string out;
};

std::string cli_path() {
    const char* bin = std::getenv("ISOLAB_BIN");
    return bin != nullptr ? bin : "./isolab";
}

RunResult run_cli(const std::string& args, const std::string& envPrefix = "") {
    std::string cmd;
    if (!envPrefix.empty()) cmd += envPrefix + " ";
    cmd += "'" + cli_path() + "' " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    RunResult r;
    char buf[4096];
    std::size_t got = 0;
    while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
    int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

// JSONL records from captured stdout, timestamps dropped so reruns compare
std::vector<json> records_of(const std::string& text) {
    std::vector<json> recs;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) {
        if (line.empty() || line[0] != '{') continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("payload")) continue;
        j.erase("timestamp");
        recs.push_back(std::move(j));
    }
    return recs;
}

std::vector<json> records_of_file(const std::string& path) {
    std::ifstream f(path);
    REQUIRE(f.good());
    std::stringstream ss;
    ss << f.rdbuf();
    return records_of(ss.str());
}

}  // namespace

TEST_CASE("bad invocations exit with the usage code") {
    CHECK(run_cli("frobnicate").code == 2);
    CHECK(run_cli("estimate --quantity Iq --q 2").code == 2);  // missing --measure
    CHECK(run_cli("estimate --measure nosuch:4 --quantity Iq --q 2").code == 2);
    CHECK(run_cli("param --measure gaussian:4 --name bogus").code == 2);
    CHECK(run_cli("check --relation no-such-relation").code == 2);
    CHECK(run_cli("laplace --measure gaussian:3 --xi 1,2").code == 2);  // dim mismatch
}

TEST_CASE("help text covers subcommands and relation tags") {
    RunResult top = run_cli("--help");
    CHECK(top.code == 0);
    CHECK(top.out.find("estimate") != std::string::npos);
    CHECK(top.out.find("lambdagauge") != std::string::npos);
    CHECK(top.out.find("report") != std::string::npos);

    RunResult chk = run_cli("check --help");
    CHECK(chk.code == 0);
    CHECK(chk.out.find("I2-normalization") != std::string::npos);
    CHECK(chk.out.find("good-marginals") != std::string::npos);

    RunResult list = run_cli("check --list");
    CHECK(list.code == 0);
    CHECK(list.out.find("section-formula") != std::string::npos);
    CHECK(list.out.find("negmoment-via-L") != std::string::npos);

    CHECK(run_cli("--version").code == 0);
}

TEST_CASE("norm moment estimate matches the closed form") {
    RunResult r = run_cli(
        "estimate --measure gaussian:10 --quantity Iq --q 2 --samples 50000 --seed 5");
    REQUIRE(r.code == 0);
    auto recs = records_of(r.out);
    REQUIRE(recs.size() == 1);
    const json& rec = recs.front();
    CHECK(rec.at("toolVersion") == "isolab 0.1.0");
    CHECK(rec.at("configDigest").get<std::string>().size() == 16);
    const json& est = rec.at("payload").at("estimate");
    double v = est.at("value").get<double>();
    double se = est.at("stderr").get<double>();
    CHECK(std::abs(v - std::sqrt(10.0)) <= 3.0 * se + 1e-6);
}

TEST_CASE("records are reproducible and thread-invariant") {
    const std::string base =
        "estimate --measure cube:5 --quantity Iq --q 2 --samples 20000 --seed 11";
    RunResult a = run_cli(base + " --threads 1");
    RunResult b = run_cli(base + " --threads 2");
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);
    auto ra = records_of(a.out);
    auto rb = records_of(b.out);
    REQUIRE(ra.size() == 1);
    REQUIRE(rb.size() == 1);
    CHECK(ra.front().dump() == rb.front().dump());  // digest and payload both agree

    RunResult c = run_cli(
        "estimate --measure cube:5 --quantity Iq --q 2 --samples 20000 --seed 12");
    auto rc = records_of(c.out);
    REQUIRE(rc.size() == 1);
    CHECK(ra.front().at("payload").at("estimate").at("value") !=
          rc.front().at("payload").at("estimate").at("value"));
}

TEST_CASE("seed resolves from flag, environment, then config file") {
    const std::string base = "estimate --measure cube:4 --quantity Iq --q 2 --samples 10000";
    RunResult flag = run_cli(base + " --seed 11");
    RunResult env = run_cli(base, "ISOLAB_SEED=11");
    REQUIRE(flag.code == 0);
    REQUIRE(env.code == 0);
    CHECK(records_of(flag.out).front().dump() == records_of(env.out).front().dump());

    {
        std::ofstream cfg("cli_seed.cfg");
        cfg << "# comment line\n";
        cfg << "seed=11\n";
    }
    RunResult fromCfg = run_cli(base + " --config cli_seed.cfg");
    REQUIRE(fromCfg.code == 0);
    CHECK(records_of(fromCfg.out).front().at("payload") ==
          records_of(flag.out).front().at("payload"));

    RunResult cliWins = run_cli(base + " --config cli_seed.cfg --seed 12");
    REQUIRE(cliWins.code == 0);
    CHECK(records_of(cliWins.out).front().at("payload") !=
          records_of(flag.out).front().at("payload"));

    RunResult envWins = run_cli(base + " --config cli_seed.cfg", "ISOLAB_SEED=12");
    REQUIRE(envWins.code == 0);
    CHECK(records_of(envWins.out).front().at("payload") ==
          records_of(cliWins.out).front().at("payload"));
}

TEST_CASE("structural parameter golden values") {
    RunResult r = run_cli("param --measure gaussian:10 --name qmc --delta 2 --seed 3");
    REQUIRE(r.code == 0);
    auto recs = records_of(r.out);
    REQUIRE(recs.size() == 1);
    CHECK(recs.front().at("payload").at("value").get<double>() == 9.0);
    CHECK(recs.front().at("payload").at("boundKind") == "exact");

    RunResult empty = run_cli("param --measure gaussian:6 --name qmc --delta 1 --seed 3");
    REQUIRE(empty.code == 0);
    auto erecs = records_of(empty.out);
    REQUIRE(erecs.size() == 1);
    CHECK(erecs.front().at("payload").at("value").get<double>() == 0.0);
    auto flags = erecs.front().at("payload").at("flags").get<std::vector<std::string>>();
    CHECK(std::find(flags.begin(), flags.end(), "empty-set") != flags.end());
}

TEST_CASE("gauge solve reports the level and domain limits") {
    RunResult g = run_cli("lambdagauge --measure gaussian:4 --p 2 --axis 1 --seed 4");
    REQUIRE(g.code == 0);
    auto recs = records_of(g.out);
    REQUIRE(recs.size() == 1);
    CHECK(recs.front().at("payload").at("t").get<double>() == doctest::Approx(2.0).epsilon(0.05));
    CHECK(recs.front().at("payload").at("domainLimited") == false);

    RunResult lim =
        run_cli("lambdagauge --measure product-exponential:3 --p 100 --axis 0 --seed 4");
    REQUIRE(lim.code == 0);
    auto lrecs = records_of(lim.out);
    REQUIRE(lrecs.size() == 1);
    CHECK(lrecs.front().at("payload").at("domainLimited") == true);
}

TEST_CASE("tilt derivative check passes on a gaussian") {
    RunResult r =
        run_cli("tiltcheck --measure gaussian:3 --x 0.3,0,0 --samples 100000 --seed 6");
    REQUIRE(r.code == 0);
    auto recs = records_of(r.out);
    REQUIRE(recs.size() == 1);
    const json& p = recs.front().at("payload");
    CHECK(p.at("pass") == true);
    CHECK(p.at("gradGap").get<double>() <= p.at("gradCap").get<double>());
    CHECK(p.at("hessGap").get<double>() <= p.at("hessCap").get<double>());
}

TEST_CASE("relation check writes records and report aggregates them") {
    RunResult r = run_cli(
        "check --relation section-formula --measures gaussian --nmax 4 --seed 7 "
        "--out cli_check.jsonl");
    CHECK(r.code == 0);
    auto recs = records_of_file("cli_check.jsonl");
    int relationRows = 0;
    int summaryRows = 0;
    for (const json& rec : recs) {
        const json& p = rec.at("payload");
        if (p.at("kind") == "relation") {
            ++relationRows;
            CHECK(p.at("verdict") == "pass");
            CHECK(p.at("relation") == "section-formula");
        }
        if (p.at("kind") == "relation-summary") {
            ++summaryRows;
            CHECK(p.at("maxFittedConstant").is_number());
        }
    }
    CHECK(relationRows >= 3);  // dimensions 2 through 4
    CHECK(summaryRows == 1);

    RunResult rep = run_cli("report --in cli_check.jsonl");
    CHECK(rep.code == 0);
    CHECK(rep.out.find("section-formula") != std::string::npos);

    RunResult repCsv = run_cli("report --in cli_check.jsonl --out cli_report.csv");
    CHECK(repCsv.code == 0);
    std::ifstream csv("cli_report.csv");
    REQUIRE(csv.good());
    std::string header;
    std::getline(csv, header);
    CHECK(header == "relation,n,checks,pass,fail,indeterminate,constant");
}

TEST_CASE("indeterminate and failing checks exit distinctly") {
    RunResult indet = run_cli(
        "check --relation lambda-polar --measures product-exponential "
        "--nmin 3 --nmax 3 --p 100 --seed 7");
    CHECK(indet.code == 3);

    RunResult fail = run_cli(
        "check --relation volume-lower --measures gaussian --nmin 4 --nmax 4 "
        "--A 0.001 --seed 7");
    CHECK(fail.code == 1);
}

TEST_CASE("scan emits a CSV grid with summary footers") {
    RunResult r = run_cli(
        "scan --relation I2-normalization --measures gaussian --nmin 3 --nmax 4 "
        "--seed 7 --out cli_scan.csv");
    CHECK(r.code == 0);
    std::ifstream f("cli_scan.csv");
    REQUIRE(f.good());
    std::string line;
    std::getline(f, line);
    CHECK(line ==
          "relation,measure,n,k,p,q,delta,A,lhs,lhs_stderr,rhs,rhs_stderr,fitted,verdict");
    int dataRows = 0;
    bool sawFooter = false;
    while (std::getline(f, line)) {
        if (line.rfind("I2-normalization,gaussian:", 0) == 0) {
            ++dataRows;
            CHECK(line.find(",pass") != std::string::npos);
        }
        if (line.rfind("# relation=I2-normalization maxFittedConstant=", 0) == 0)
            sawFooter = true;
    }
    CHECK(dataRows == 2);
    CHECK(sawFooter);
}
