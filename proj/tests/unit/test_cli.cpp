#include <catch_amalgamated.hpp>
#include <json.hpp>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

#include "msldp/cli.hpp"

using json = nlohmann::json;

namespace {

struct Run {
    int code = -1;
    std::string out;
};

Run run(const std::string& args) {
    const std::string cmd = std::string(MSLDP_CLI) + " " + args + " 2>/dev/null";
    Run r;
    FILE* f = popen(cmd.c_str(), "r");
    REQUIRE(f);
    std::array<char, 4096> buf;
    std::size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), f)) > 0) r.out.append(buf.data(), n);
    const int st = pclose(f);
    r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return r;
}

std::string tmp(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("msldp_test_" + name)).string();
}

}  // namespace

TEST_CASE("hamiltonian command") {
    const auto r = run("hamiltonian --model mm --x 1 --p 0.6931");
    REQUIRE(r.code == 0);
    const auto j = json::parse(r.out);
    CHECK(j["msldp"] == msldp::cli::version());
    CHECK(j["config"]["command"] == "hamiltonian");
    CHECK_THAT(j["result"]["H0"].get<double>(), Catch::Matchers::WithinAbs(0.6457513, 1e-4));
}

TEST_CASE("models command lists the bundled set") {
    const auto r = run("models");
    REQUIRE(r.code == 0);
    const auto j = json::parse(r.out);
    REQUIRE(j["result"].size() == 4);
    std::vector<std::string> names;
    for (const auto& m : j["result"]) names.push_back(m["name"]);
    CHECK(names == std::vector<std::string>{"mm", "srg", "dr", "vp"});
}

TEST_CASE("exit codes") {
    CHECK(run("rate --model dr --x0 1 --target 1.2").code == 2);
    CHECK(run("no-such-command").code == 2);
    CHECK(run("hamiltonian --model no_such_model --x 1 --p 0").code == 1);
    CHECK(run("hamiltonian --model dr --x -1 --p 0").code == 1);
}

TEST_CASE("every bundled model passes check") {
    for (const char* m : {"mm", "srg", "dr", "vp"}) {
        const auto r = run(std::string("check --model ") + m);
        CHECK(r.code == 0);
        const auto j = json::parse(r.out);
        CHECK(j["result"]["violations"].empty());
    }
}

TEST_CASE("replay reproduces the output") {
    for (const std::string args : {"hamiltonian --model srg --x 1,0.5 --p 0.2,-0.1",
                                   "simulate --model mm --N 50 --T 0.5 --dt 0.1 --seed 3",
                                   "hjb --model mm --n 50 --T 0.2"}) {
        const auto path = tmp("replay.out");
        const auto first = run(args + " --out " + path);
        REQUIRE(first.code == 0);
        std::ifstream in(path);
        const std::string a((std::istreambuf_iterator<char>(in)), {});
        const auto second = run("--replay " + path);
        REQUIRE(second.code == 0);
        CHECK(second.out == a);
        std::filesystem::remove(path);
    }
}

TEST_CASE("csv header embeds the configuration") {
    const auto r = run("lln --model dr --x0 1 --T 1 --dt 0.5");
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("# msldp " + msldp::cli::version() + "\n# config: ", 0) == 0);
}
