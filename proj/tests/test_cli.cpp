#include <catch2/catch.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "deer/data.hpp"

namespace fs = std::filesystem;

namespace {

std::string cli_path() {
    const char* p = std::getenv("DEER_CLI");
    REQUIRE(p != nullptr);  // wired up by ctest
    return p;
}

int run(const std::string& args) {
    const std::string cmd = cli_path() + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path workspace() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / "deer_cli_test";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

}  // namespace

TEST_CASE("cli end to end") {
    const auto ws = workspace();
    const auto data_dir = ws / "data";

    SECTION("full pipeline") {
        // generate into a directory that does not exist yet
        REQUIRE(run("generate --out " + data_dir.string() +
                    " --n-items 120 --dim 4 --m-min 2 --m-max 4 --seed 7 "
                    "--fractions 0.7,0.15,0.15") == 0);
        for (const char* f :
             {"train.jsonl", "val.jsonl", "test.jsonl", "truth.jsonl", "config.json"})
            CHECK(fs::exists(data_dir / f));
        const auto train = deer::load((data_dir / "train.jsonl").string());
        CHECK(train.items.size() == 84);
        CHECK(train.feature_dim == 4);

        // train a small evidential model with both ablation flags off
        const auto run_dir = ws / "run_deer";
        REQUIRE(run("train --train " + (data_dir / "train.jsonl").string() +
                    " --val " + (data_dir / "val.jsonl").string() + " --out " +
                    run_dir.string() +
                    " --hidden 16,16 --epochs 10 --batch-size 16 --seed 3") == 0);
        CHECK(fs::exists(run_dir / "checkpoint.json"));
        CHECK(fs::exists(run_dir / "trace.tsv"));
        CHECK(fs::exists(run_dir / "config.json"));

        // trace has a header plus one row per epoch
        std::istringstream trace(slurp(run_dir / "trace.tsv"));
        std::string line;
        int rows = 0;
        while (std::getline(trace, line))
            if (!line.empty()) ++rows;
        CHECK(rows == 11);

        // evaluate with truth joined in
        const auto eval_dir = ws / "eval_deer";
        REQUIRE(run("eval --checkpoint " + (run_dir / "checkpoint.json").string() +
                    " --data " + (data_dir / "test.jsonl").string() + " --truth " +
                    (data_dir / "truth.jsonl").string() + " --out " +
                    eval_dir.string()) == 0);
        const std::string summary = slurp(eval_dir / "summary.tsv");
        CHECK(summary.find("aleatoric_truth_corr") != std::string::npos);
        const std::string preds = slurp(eval_dir / "predictions.tsv");
        CHECK(preds.find("aleatoric") != std::string::npos);
        // evidential rows populate every uncertainty column
        std::istringstream preds_in(preds);
        std::getline(preds_in, line);  // header
        std::getline(preds_in, line);
        CHECK(line.find("nan") == std::string::npos);

        // reject curve over the default grid
        const auto rej_dir = ws / "reject";
        REQUIRE(run("reject --predictions " +
                    (eval_dir / "predictions.tsv").string() + " --out " +
                    rej_dir.string() + " --fractions 0,0.1,0.2") == 0);
        const std::string curve = slurp(rej_dir / "reject.tsv");
        std::istringstream curve_in(curve);
        std::getline(curve_in, line);
        CHECK(line == "attribute\tfraction\tcoverage\trmse");
        int curve_rows = 0;
        while (std::getline(curve_in, line))
            if (!line.empty()) ++curve_rows;
        CHECK(curve_rows == 9);  // 3 attributes x 3 fractions

        // single-fraction grid reproduces the corpus RMSE row for row
        const auto rej0_dir = ws / "reject0";
        REQUIRE(run("reject --predictions " +
                    (eval_dir / "predictions.tsv").string() + " --out " +
                    rej0_dir.string() + " --fractions 0") == 0);
        const std::string zero = slurp(rej0_dir / "reject.tsv");
        std::istringstream zero_in(zero);
        std::getline(zero_in, line);  // header
        while (std::getline(zero_in, line)) {
            if (line.empty()) continue;
            std::stringstream cells(line);
            std::string attr, fraction, coverage;
            std::getline(cells, attr, '\t');
            std::getline(cells, fraction, '\t');
            std::getline(cells, coverage, '\t');
            CHECK(fraction == "0");
            CHECK(coverage == "1");
        }

        // loss-variant flags land in the config echo and checkpoint
        const auto ablate_dir = ws / "run_ablate";
        REQUIRE(run("train --train " + (data_dir / "train.jsonl").string() +
                    " --out " + ablate_dir.string() +
                    " --hidden 8 --epochs 2 --seed 3 --no-reg-sigma --avg-nll") == 0);
        const std::string echo = slurp(ablate_dir / "config.json");
        CHECK(echo.find("\"no_reg_sigma\": true") != std::string::npos);
        CHECK(echo.find("\"avg_nll\": true") != std::string::npos);

        // mcdp and ensemble models evaluate through the KDE path
        const auto mcdp_dir = ws / "run_mcdp";
        REQUIRE(run("train --train " + (data_dir / "train.jsonl").string() +
                    " --out " + mcdp_dir.string() +
                    " --model mcdp --hidden 8 --epochs 4 --seed 3") == 0);
        const auto mcdp_eval = ws / "eval_mcdp";
        REQUIRE(run("eval --checkpoint " + (mcdp_dir / "checkpoint.json").string() +
                    " --data " + (data_dir / "test.jsonl").string() + " --out " +
                    mcdp_eval.string() + " --mc-passes 10") == 0);
        const std::string mcdp_preds = slurp(mcdp_eval / "predictions.tsv");
        CHECK(mcdp_preds.find("nan") != std::string::npos);  // no analytic split

        // repeated evaluation with the same seed is byte-identical, including
        // the stochastic MC-dropout sampling path
        const auto mcdp_eval2 = ws / "eval_mcdp2";
        REQUIRE(run("eval --checkpoint " + (mcdp_dir / "checkpoint.json").string() +
                    " --data " + (data_dir / "test.jsonl").string() + " --out " +
                    mcdp_eval2.string() + " --mc-passes 10") == 0);
        CHECK(slurp(mcdp_eval2 / "summary.tsv") == slurp(mcdp_eval / "summary.tsv"));
        CHECK(slurp(mcdp_eval2 / "predictions.tsv") ==
              slurp(mcdp_eval / "predictions.tsv"));

        const auto ens_dir = ws / "run_ens";
        REQUIRE(run("train --train " + (data_dir / "train.jsonl").string() +
                    " --out " + ens_dir.string() +
                    " --model ensemble --ensemble-size 2 --hidden 8 --epochs 4 "
                    "--seed 3") == 0);
        const auto ens_eval = ws / "eval_ens";
        REQUIRE(run("eval --checkpoint " + (ens_dir / "checkpoint.json").string() +
                    " --data " + (data_dir / "test.jsonl").string() + " --out " +
                    ens_eval.string()) == 0);
        CHECK(fs::exists(ens_eval / "summary.tsv"));
    }

    SECTION("exit codes") {
        // usage errors
        CHECK(run("generate --out " + (ws / "bad").string() +
                  " --m-min 6 --m-max 2") == 1);
        CHECK(run("nonsense") == 1);
        CHECK(run("train --out x") == 1);  // missing required --train
        // runtime errors
        CHECK(run("train --train /nonexistent.jsonl --out " +
                  (ws / "bad2").string()) == 2);
        CHECK(run("eval --checkpoint /nonexistent.json --data /also-missing.jsonl "
                  "--out " +
                  (ws / "bad3").string()) == 2);
    }
}
