#include <doctest.h>

#include <sys/wait.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "epigmrf/config.hpp"
#include "epigmrf/scenario.hpp"

using namespace epigmrf;
namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "epigmrf_cli";

int run(const std::string& args, const fs::path& log = {})
{
    std::string cmd = std::string(EPIGMRF_CLI_PATH) + " " + args;
    cmd += log.empty() ? " >/dev/null 2>&1" : " >" + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// Relative path -> contents for every regular file under `dir`.
std::map<std::string, std::string> tree(const fs::path& dir)
{
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file()) {
            out[fs::relative(e.path(), dir).string()] = slurp(e.path());
        }
    }
    return out;
}

fs::path small_scenario()
{
    ScenarioSpec s = ScenarioSpec::desk();
    s.n_days = 20;
    s.train_days = 15;
    s.test_days = 5;
    s.replicates = 1;
    s.fit_iterations = 600;
    s.fit_burn_in = 300;
    s.fit_thin = 3;
    s.validate();
    fs::create_directories(kRoot);
    const fs::path p = kRoot / "scenario.json";
    std::ofstream(p) << s.to_json().dump(2);
    return p;
}

// simulate, then fit/forecast/score/diagnose with model (c) into `dir`.
void pipeline(const fs::path& dir)
{
    fs::remove_all(dir);
    REQUIRE(run("simulate --config " + small_scenario().string() + " --seed 11 --out " + dir.string()) == 0);
    const fs::path rep = dir / "replicate_00";
    const std::string cfg = " --config " + (rep / "model_c.json").string();
    const std::string out = " --out " + (dir / "fit").string();
    REQUIRE(run("fit" + cfg + out + " --chains 2") == 0);
    REQUIRE(run("forecast" + cfg + out + " --chains 2") == 0);
    REQUIRE(run("score" + cfg + out + " --per-age") == 0);
    REQUIRE(run("diagnose" + cfg + out + " --chains 2") == 0);
}

} // namespace

TEST_SUITE("cli")
{
    TEST_CASE("every subcommand is byte-for-byte reproducible")
    {
        pipeline(kRoot / "first");
        pipeline(kRoot / "second");
        const auto a = tree(kRoot / "first"), b = tree(kRoot / "second");
        CHECK(a.size() == b.size());
        for (const char* f : {"replicate_00/deaths_train.csv", "fit/draws_chain0.csv", "fit/draws_chain1.csv",
                              "fit/forecast.csv", "fit/scores.csv", "fit/diagnostics.csv"}) {
            INFO(f);
            REQUIRE(a.count(f) == 1);
        }
        for (const auto& [name, contents] : a) {
            INFO(name);
            REQUIRE(b.count(name) == 1);
            CHECK(b.at(name) == contents);
        }
        CHECK(a.at("fit/draws_chain0.csv") != a.at("fit/draws_chain1.csv"));
        CHECK(a.count("fit/age_1/scores.csv") == 1);
    }

    TEST_CASE("outputs start with the metadata line")
    {
        pipeline(kRoot / "meta");
        // The hash covers the effective config, including command-line overrides.
        RunConfig cfg = RunConfig::load(kRoot / "meta" / "replicate_00" / "model_c.json");
        cfg.mcmc.chains = 2;
        const std::string expected = "# epigmrf version=" EPIGMRF_VERSION " seed=" + std::to_string(cfg.mcmc.seed) +
                                     " config_hash=" + cfg.hash();
        for (const char* f : {"draws_chain0.csv", "forecast.csv", "diagnostics.csv", "acceptance.csv"}) {
            INFO(f);
            const std::string text = slurp(kRoot / "meta" / "fit" / f);
            CHECK(text.substr(0, text.find('\n')) == expected);
        }
        cfg.mcmc.chains = RunConfig::load(kRoot / "meta" / "replicate_00" / "model_c.json").mcmc.chains;
        const std::string scores = slurp(kRoot / "meta" / "fit" / "scores.csv");
        CHECK(scores.substr(0, scores.find('\n')).find(cfg.hash()) != std::string::npos);
        const std::string data = slurp(kRoot / "meta" / "replicate_00" / "deaths_train.csv");
        CHECK(data.rfind("# epigmrf version=" EPIGMRF_VERSION " seed=11 config_hash=", 0) == 0);
    }

    TEST_CASE("a resumed fit equals an uninterrupted one")
    {
        const fs::path dir = kRoot / "resume";
        fs::remove_all(dir);
        REQUIRE(run("simulate --config " + small_scenario().string() + " --seed 5 --out " + dir.string()) == 0);
        const std::string cfg = " --config " + (dir / "replicate_00" / "model_a.json").string();
        REQUIRE(run("fit" + cfg + " --out " + (dir / "whole").string()) == 0);
        REQUIRE(run("fit" + cfg + " --out " + (dir / "part").string() + " --max-iterations 250") == 0);
        CHECK_FALSE(fs::exists(dir / "part" / "draws_chain0.csv"));
        REQUIRE(run("fit" + cfg + " --out " + (dir / "part").string() + " --max-iterations 420 --resume") == 0);
        REQUIRE(run("fit" + cfg + " --out " + (dir / "part").string() + " --resume") == 0);
        CHECK(slurp(dir / "part" / "draws_chain0.csv") == slurp(dir / "whole" / "draws_chain0.csv"));
        CHECK(slurp(dir / "part" / "chain_0" / "checkpoint.json").empty() == false);
    }

    TEST_CASE("a missing data file exits with status 2 and names the file")
    {
        const fs::path dir = kRoot / "missing";
        fs::remove_all(dir);
        REQUIRE(run("simulate --config " + small_scenario().string() + " --seed 3 --out " + dir.string()) == 0);
        const fs::path rep = dir / "replicate_00";
        fs::remove(rep / "deaths_train.csv");
        const fs::path log = dir / "stderr.txt";
        CHECK(run("fit --config " + (rep / "model_b.json").string() + " --out " + (dir / "fit").string(), log) == 2);
        CHECK(slurp(log).find((rep / "deaths_train.csv").string()) != std::string::npos);

        CHECK(run("fit --config " + (dir / "nope.json").string(), log) == 2);
        CHECK(slurp(log).find("nope.json") != std::string::npos);
    }

    TEST_CASE("diagnose reports split R-hat for each parameter over two chains")
    {
        const fs::path fit = kRoot / "first" / "fit";
        REQUIRE(fs::exists(fit / "diagnostics.csv"));
        std::istringstream in(slurp(fit / "diagnostics.csv"));
        std::string line;
        std::getline(in, line); // metadata
        std::getline(in, line);
        CHECK(line.find("rhat") != std::string::npos);
        int rows = 0;
        while (std::getline(in, line)) {
            rows += line.empty() ? 0 : 1;
        }
        CHECK(rows > 10);
    }

    TEST_CASE("unknown subcommands and options are rejected")
    {
        CHECK(run("explode") != 0);
        CHECK(run("fit --bogus 1") != 0);
        CHECK(run("simulate --profile huge") != 0);
    }
}
