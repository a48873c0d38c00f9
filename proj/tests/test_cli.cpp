#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#ifndef NUENT_CLI_PATH
#error "NUENT_CLI_PATH must point at the nuentangle binary"
#endif

namespace {

struct RunResult {
    int exit_code = -1;
    std::string out;
};

RunResult run_cli(const std::string& args) {
    const std::string cmd = std::string("'") + NUENT_CLI_PATH + "' " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    RunResult r;
    char buf[4096];
    std::size_t got;
    while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
    const int status = pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("nuent_cli_test_" + name);
}

} // namespace

TEST_CASE("bell-eval defaults reproduce the reference configuration") {
    const RunResult r = run_cli("bell-eval");
    REQUIRE(r.exit_code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j.at("h_defined").get<bool>());
    CHECK(std::abs(j.at("h").get<double>() - 1.7087114439221978) < 1e-9);
    CHECK(std::abs(j.at("h_numerator").get<double>() - 0.318213) < 1e-3);
    CHECK(std::abs(j.at("h_denominator").get<double>() - 0.18616) < 1e-3);
    CHECK(std::abs(j.at("t_l1").get<double>() - 0.579497) < 1e-12);
}

TEST_CASE("bell-eval --times parses a four-tuple") {
    const RunResult r = run_cli("bell-eval --times 0.579497,0.0579214,0.0001,0.180264");
    REQUIRE(r.exit_code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(std::abs(j.at("h").get<double>() - 1.7087114439221978) < 1e-9);
}

TEST_CASE("usage errors exit with code 2 and list the subcommands") {
    CHECK(run_cli("").exit_code == 2);
    CHECK(run_cli("bell-eval --no-such-flag 1").exit_code == 2);
    CHECK(run_cli("no-such-command").exit_code == 2);
    CHECK(run_cli("convert --energy-gev 0.1").exit_code == 2);          // neither --s nor --km
    CHECK(run_cli("convert --s 0.1 --km 5 --energy-gev 0.1").exit_code == 2);
}

TEST_CASE("help exits 0 and documents the energy conventions") {
    CHECK(run_cli("--help").exit_code == 0);
    const RunResult r = run_cli("convert --help");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("0.106") != std::string::npos);
    CHECK(r.out.find("0.107") != std::string::npos);
    CHECK(run_cli("qkd-run --help").exit_code == 0);
}

TEST_CASE("degenerate configuration reports an undefined ratio via exit 1") {
    const RunResult r = run_cli("bell-eval --times 0,0,0,0");
    CHECK(r.exit_code == 1);
    const auto j = nlohmann::json::parse(r.out);
    CHECK_FALSE(j.at("h_defined").get<bool>());
    CHECK(j.at("h").is_null());
}

TEST_CASE("convert reproduces the reference distances") {
    const RunResult r = run_cli("convert --s 0.0001 --energy-gev 0.106");
    REQUIRE(r.exit_code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(std::abs(j.at("km").get<double>() - 0.42) < 0.01);

    const RunResult inv = run_cli("convert --km 2418.373307086614 --energy-gev 0.106");
    REQUIRE(inv.exit_code == 0);
    CHECK(std::abs(nlohmann::json::parse(inv.out).at("s").get<double>() - 0.579497) < 1e-9);
}

TEST_CASE("table output in both formats") {
    const RunResult j = run_cli("table --tl 0.3 --tr 0.7");
    REQUIRE(j.exit_code == 0);
    const auto parsed = nlohmann::json::parse(j.out);
    CHECK(std::abs(parsed.at("sum").get<double>() - 1.0) < 1e-10);
    CHECK(parsed.at("p").size() == 3);

    const RunResult c = run_cli("table --tl 0 --tr 0 --format csv");
    REQUIRE(c.exit_code == 0);
    std::istringstream lines(c.out);
    std::string line;
    std::getline(lines, line);
    CHECK(line == "alpha,beta,p");
    int rows = 0;
    while (std::getline(lines, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 9);
}

TEST_CASE("bell-scan emits the pinned CSV schema") {
    const RunResult r = run_cli("bell-scan --res1 3 --res2 3");
    REQUIRE(r.exit_code == 0);
    std::istringstream lines(r.out);
    std::string line;
    std::getline(lines, line);
    CHECK(line == "axis1,axis2,h,defined");
    int rows = 0;
    while (std::getline(lines, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 9);
}

TEST_CASE("artifacts are byte-deterministic given flags and seed") {
    const std::string opt = "bell-optimize --n-starts 8 --seed 5";
    const RunResult a = run_cli(opt);
    const RunResult b = run_cli(opt);
    REQUIRE(a.exit_code == 0);
    CHECK(a.out == b.out);

    const std::string qkd = "qkd-run --n 5000 --seed 11 --eve-te 0.05";
    CHECK(run_cli(qkd).out == run_cli(qkd).out);

    const std::string src = "source-sample --n 50 --seed 3";
    const RunResult s1 = run_cli(src);
    CHECK(s1.out == run_cli(src).out);
    std::istringstream lines(s1.out);
    std::string line;
    std::getline(lines, line);
    CHECK(line == "e_mean,eps");
}

TEST_CASE("qkd-run without an eavesdropper reports a quiet channel") {
    const RunResult r = run_cli("qkd-run --n 20000 --seed 1");
    REQUIRE(r.exit_code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK_FALSE(j.at("alarm").get<bool>());
    CHECK(j.at("same_flavor_count").get<long long>() == 0);
    CHECK(j.at("sifted_count").get<long long>() > 0);
    const std::string alice = j.at("alice_bits").get<std::string>();
    const std::string bob = j.at("bob_bits").get<std::string>();
    REQUIRE(alice.size() == bob.size());
    for (std::size_t i = 0; i < alice.size(); ++i) CHECK(alice[i] != bob[i]);
}

TEST_CASE("qkd-run with Eve writes the per-event CSV") {
    const auto events = temp_file("events.csv");
    const RunResult r =
        run_cli("qkd-run --n 2000 --seed 2 --eve-te 0.05 --events " + events.string());
    REQUIRE(r.exit_code == 0);
    CHECK(nlohmann::json::parse(r.out).at("alarm").get<bool>());
    std::ifstream f(events);
    REQUIRE(f.good());
    std::string line;
    std::getline(f, line);
    CHECK(line == "pair_index,baseline,alice_flavor,bob_flavor,detected,sifted_bit");
    int rows = 0;
    while (std::getline(f, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 2000);
    std::filesystem::remove(events);
}

TEST_CASE("smear at zero spread matches bell-eval") {
    const RunResult eval = run_cli("bell-eval");
    const RunResult smear = run_cli(
        "smear --spread 0 --energy-gev 0.106 "
        "--distances 2418.373307086614,241.71922834645667,0.4173228346456693,752.2828346456694");
    REQUIRE(eval.exit_code == 0);
    REQUIRE(smear.exit_code == 0);
    const double h_eval = nlohmann::json::parse(eval.out).at("h").get<double>();
    const auto results = nlohmann::json::parse(smear.out).at("results");
    REQUIRE(results.size() == 1);
    CHECK(std::abs(results[0].at("h").get<double>() - h_eval) < 1e-9);
}

TEST_CASE("osc-prob evaluates the vacuum formula") {
    const RunResult r = run_cli("osc-prob --initial e --final mu --s 0.1");
    REQUIRE(r.exit_code == 0);
    CHECK(std::abs(nlohmann::json::parse(r.out).at("probability").get<double>() -
                   0.0673985090339633) < 1e-10);
}

TEST_CASE("config file fills values and flags override it") {
    const auto cfg = temp_file("config.json");
    {
        std::ofstream f(cfg);
        f << R"({"physics": {"dm2_32": 4.8e-3}, "seed": 123})";
    }
    // config value changes the physics
    const RunResult a = run_cli("osc-prob --initial mu --final mu --s 0.1 --config " + cfg.string());
    REQUIRE(a.exit_code == 0);
    // flag wins over the config value
    const RunResult b = run_cli("osc-prob --initial mu --final mu --s 0.1 --dm2-32 2.4e-3 --config " +
                                cfg.string());
    REQUIRE(b.exit_code == 0);
    const RunResult plain = run_cli("osc-prob --initial mu --final mu --s 0.1");
    CHECK(nlohmann::json::parse(b.out).at("probability").get<double>() ==
          nlohmann::json::parse(plain.out).at("probability").get<double>());
    CHECK(nlohmann::json::parse(a.out).at("probability").get<double>() !=
          nlohmann::json::parse(plain.out).at("probability").get<double>());
    std::filesystem::remove(cfg);
}

TEST_CASE("contamination subcommand finds the reference minimum") {
    const RunResult r = run_cli(
        "contamination --fixed-side left --fixed-flavor e --fixed-time 0.579497 --lo 0.02 --hi 0.03");
    REQUIRE(r.exit_code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(std::abs(j.at("t").get<double>() - 0.02604) < 1e-3);
    const RunResult point = run_cli(
        "contamination --fixed-side right --fixed-flavor mu --fixed-time 0.180264 --t 0.02568");
    REQUIRE(point.exit_code == 0);
    CHECK(std::abs(nlohmann::json::parse(point.out).at("value").get<double>() - 1.8662039027e-3) <
          1e-9);
}

TEST_CASE("--output writes the artifact to a file") {
    const auto out = temp_file("eval.json");
    const RunResult r = run_cli("bell-eval --output " + out.string());
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.empty());
    std::ifstream f(out);
    REQUIRE(f.good());
    std::stringstream body;
    body << f.rdbuf();
    CHECK(std::abs(nlohmann::json::parse(body.str()).at("h").get<double>() - 1.7087114439221978) <
          1e-9);
    std::filesystem::remove(out);
}
