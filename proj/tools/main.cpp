// deer: synthetic-data generation, evidential/baseline training, evaluation
// and reject-option analysis for multi-annotator emotion attribute regression.
//
// Subcommands: generate | train | eval | reject. Every command writes a
// config.json echo of its resolved settings next to its outputs, and all
// randomness flows from explicit seeds, so identical invocations produce
// byte-identical files. Exit codes: 0 success, 1 usage error, 2 runtime error.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "deer/baselines.hpp"
#include "deer/checkpoint.hpp"
#include "deer/data.hpp"
#include "deer/metrics.hpp"
#include "deer/net.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// shortest decimal form that parses back to the same double
std::string fmt(double v) {
    char buf[40];
    for (int precision = 15; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof buf, "%.*g", precision, v);
        if (std::strtod(buf, nullptr) == v || v != v) break;
    }
    return buf;
}

std::vector<double> parse_number_list(const std::string& csv, const char* what) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            out.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw UsageError(std::string(what) + ": cannot parse '" + tok + "'");
        }
    }
    if (out.empty()) throw UsageError(std::string(what) + ": empty list");
    return out;
}

std::vector<std::string> parse_name_list(const std::string& csv) {
    std::vector<std::string> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) out.push_back(tok);
    }
    return out;
}

void write_text(const fs::path& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out << content;
    if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

void write_config_echo(const fs::path& dir, const json& cfg) {
    write_text(dir / "config.json", cfg.dump(2) + "\n");
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double va = 0.0, vb = 0.0, cov = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        va += (a[i] - ma) * (a[i] - ma);
        vb += (b[i] - mb) * (b[i] - mb);
        cov += (a[i] - ma) * (b[i] - mb);
    }
    const double denom = std::sqrt(va * vb);
    return denom > 0.0 ? cov / denom : 0.0;
}

// ---------------------------------------------------------------------------
// generate

struct GenerateArgs {
    std::string out_dir;
    std::size_t n_items = 5000;
    std::size_t dim = 8;
    std::string attributes = "valence,arousal,dominance";
    std::size_t m_min = 3;
    std::size_t m_max = 7;
    std::uint64_t seed = 1;
    double s0 = 0.1;
    double s1 = 0.6;
    std::string fractions = "0.8,0.1,0.1";
};

int cmd_generate(const GenerateArgs& args) {
    deer::GenerateConfig cfg;
    cfg.n_items = args.n_items;
    cfg.feature_dim = args.dim;
    cfg.attributes = parse_name_list(args.attributes);
    cfg.m_min = args.m_min;
    cfg.m_max = args.m_max;
    cfg.seed = args.seed;
    cfg.noise_base = args.s0;
    cfg.noise_slope = args.s1;
    if (cfg.attributes.empty()) throw UsageError("--attributes must be nonempty");
    if (cfg.m_min < 1 || cfg.m_max > 20 || cfg.m_min > cfg.m_max)
        throw UsageError("--m-min/--m-max must satisfy 1 <= lo <= hi <= 20");
    const auto fracs = parse_number_list(args.fractions, "--fractions");
    if (fracs.size() != 3) throw UsageError("--fractions needs train,val,test");

    const fs::path dir(args.out_dir);
    fs::create_directories(dir);

    const auto [data, truth] = deer::generate(cfg);
    const auto parts = deer::split(data, fracs[0], fracs[1], fracs[2], cfg.seed);
    deer::save(parts.train, (dir / "train.jsonl").string());
    deer::save(parts.validation, (dir / "val.jsonl").string());
    deer::save(parts.test, (dir / "test.jsonl").string());
    deer::save_truth(truth, (dir / "truth.jsonl").string());

    json echo;
    echo["command"] = "generate";
    echo["n_items"] = cfg.n_items;
    echo["dim"] = cfg.feature_dim;
    echo["attributes"] = cfg.attributes;
    echo["m_min"] = cfg.m_min;
    echo["m_max"] = cfg.m_max;
    echo["seed"] = cfg.seed;
    echo["s0"] = cfg.noise_base;
    echo["s1"] = cfg.noise_slope;
    echo["fractions"] = fracs;
    write_config_echo(dir, echo);

    std::cout << "wrote " << parts.train.items.size() << "/"
              << parts.validation.items.size() << "/" << parts.test.items.size()
              << " train/val/test items to " << dir.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
    std::string train_path;
    std::string val_path;
    std::string out_dir;
    std::string model = "deer";
    std::size_t epochs = 100;
    std::size_t batch_size = 32;
    std::uint64_t seed = 1;
    double learning_rate = 1e-3;
    std::string hidden = "128,128";
    double dropout = -1.0;  // -1: model default (0.3, mcdp 0.4)
    double lambda = 0.1;
    std::string lambdas;    // optional per-attribute override
    std::string epsilons;   // optional per-attribute override
    std::size_t ensemble_size = 10;
    bool no_reg_sigma = false;
    bool avg_nll = false;
    bool no_grad_through_phi = false;
    std::size_t early_stop_patience = 0;
};

std::string trace_to_tsv(const deer::TrainTrace& trace) {
    std::ostringstream out;
    out << "epoch\ttrain_total\ttrain_nll\ttrain_reg_mean\ttrain_reg_var\tval_total\n";
    for (const auto& e : trace)
        out << e.epoch << '\t' << fmt(e.train_total) << '\t' << fmt(e.train_nll)
            << '\t' << fmt(e.train_reg_mean) << '\t' << fmt(e.train_reg_var)
            << '\t' << fmt(e.val_total) << '\n';
    return out.str();
}

int cmd_train(const TrainArgs& args) {
    if (args.model != "deer" && args.model != "mcdp" && args.model != "ensemble")
        throw UsageError("--model must be deer, mcdp or ensemble");

    const deer::Dataset train = deer::load(args.train_path);
    std::optional<deer::Dataset> val;
    if (!args.val_path.empty()) val = deer::load(args.val_path);
    const std::size_t n_attr = train.attributes.size();

    deer::TrainConfig cfg;
    const auto hidden = parse_number_list(args.hidden, "--hidden");
    cfg.hidden.clear();
    for (double h : hidden) {
        if (h < 1.0) throw UsageError("--hidden widths must be positive");
        cfg.hidden.push_back(static_cast<std::size_t>(h));
    }
    cfg.epochs = args.epochs;
    cfg.batch_size = args.batch_size;
    cfg.seed = args.seed;
    cfg.adam.learning_rate = args.learning_rate;
    cfg.dropout_rate = args.dropout >= 0.0
                           ? args.dropout
                           : (args.model == "mcdp" ? 0.4 : 0.3);
    cfg.lambdas.assign(n_attr, args.lambda);
    if (!args.lambdas.empty()) cfg.lambdas = parse_number_list(args.lambdas, "--lambdas");
    if (!args.epsilons.empty())
        cfg.epsilons = parse_number_list(args.epsilons, "--epsilons");
    cfg.loss.use_reg_var = !args.no_reg_sigma;
    cfg.loss.averaged_nll = args.avg_nll;
    cfg.loss.grad_through_weight = !args.no_grad_through_phi;
    cfg.early_stop_patience = args.early_stop_patience;

    const fs::path dir(args.out_dir);
    fs::create_directories(dir);

    json echo;
    echo["command"] = "train";
    echo["model"] = args.model;
    echo["train"] = args.train_path;
    echo["val"] = args.val_path;
    echo["hidden"] = cfg.hidden;
    echo["epochs"] = cfg.epochs;
    echo["batch_size"] = cfg.batch_size;
    echo["seed"] = cfg.seed;
    echo["learning_rate"] = cfg.adam.learning_rate;
    echo["dropout"] = cfg.dropout_rate;
    echo["lambdas"] = cfg.lambdas;
    echo["epsilons"] = cfg.epsilons.empty()
                           ? std::vector<double>(n_attr, 1.0 / static_cast<double>(n_attr))
                           : cfg.epsilons;
    echo["ensemble_size"] = args.ensemble_size;
    echo["no_reg_sigma"] = args.no_reg_sigma;
    echo["avg_nll"] = args.avg_nll;
    echo["no_grad_through_phi"] = args.no_grad_through_phi;
    echo["early_stop_patience"] = cfg.early_stop_patience;

    deer::Checkpoint ckpt;
    ckpt.model_kind = args.model;
    ckpt.attributes = train.attributes;
    ckpt.dropout_rate = cfg.dropout_rate;
    ckpt.config = echo;

    deer::TrainTrace trace;
    const deer::Dataset* val_ptr = val ? &*val : nullptr;
    if (args.model == "deer") {
        auto [net, tr] = deer::train_deer(train, val_ptr, cfg);
        ckpt.shape = net.shape;
        ckpt.members = {net.params};
        trace = std::move(tr);
    } else if (args.model == "mcdp") {
        auto [net, tr] = deer::train_point(train, val_ptr, cfg);
        ckpt.shape = net.shape;
        ckpt.members = {net.params};
        trace = std::move(tr);
    } else {
        if (args.ensemble_size < 2)
            throw UsageError("--ensemble-size must be at least 2");
        const auto members =
            deer::train_ensemble(args.ensemble_size, train, val_ptr, cfg);
        ckpt.shape = members.front().shape;
        for (const auto& m : members) ckpt.members.push_back(m.params);
        deer::TrainConfig probe = cfg;  // trace of the first member
        auto [net, tr] = deer::train_point(train, val_ptr, probe);
        (void)net;
        trace = std::move(tr);
    }

    deer::save_checkpoint(ckpt, (dir / "checkpoint.json").string());
    write_text(dir / "trace.tsv", trace_to_tsv(trace));
    write_config_echo(dir, echo);
    std::cout << "trained " << args.model << " model, checkpoint in "
              << dir.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
    std::string checkpoint_path;
    std::string data_path;
    std::string truth_path;
    std::string out_dir;
    std::size_t mc_passes = 50;
    std::uint64_t mc_seed = 1234;
    std::string kde_bandwidth = "silverman";
};

struct ItemPrediction {
    std::string id;
    double mean = std::numeric_limits<double>::quiet_NaN();
    double aleatoric = std::numeric_limits<double>::quiet_NaN();
    double epistemic = std::numeric_limits<double>::quiet_NaN();
    double total = std::numeric_limits<double>::quiet_NaN();
    double y_bar = std::numeric_limits<double>::quiet_NaN();
    double sigma2_bar = std::numeric_limits<double>::quiet_NaN();
    double mu_star = std::numeric_limits<double>::quiet_NaN();
    double sigma2_star = std::numeric_limits<double>::quiet_NaN();
};

int cmd_eval(const EvalArgs& args) {
    const deer::Checkpoint ckpt = deer::load_checkpoint(args.checkpoint_path);
    const deer::Dataset data = deer::load(args.data_path);
    if (data.attributes != ckpt.attributes)
        throw std::runtime_error("dataset attributes do not match the checkpoint");
    if (data.feature_dim != ckpt.shape.input)
        throw std::runtime_error("dataset feature width does not match the checkpoint");

    deer::BandwidthRule bandwidth = deer::BandwidthRule::silverman();
    if (args.kde_bandwidth != "silverman") {
        try {
            bandwidth = deer::BandwidthRule::fixed(std::stod(args.kde_bandwidth));
        } catch (const std::invalid_argument&) {
            throw UsageError("--kde-bandwidth must be 'silverman' or a positive number");
        }
    }
    if (args.mc_passes < 2) throw UsageError("--mc-passes must be at least 2");

    std::optional<deer::TruthTable> truth;
    if (!args.truth_path.empty()) truth = deer::load_truth(args.truth_path);

    const std::size_t n_attr = ckpt.attributes.size();
    const std::size_t n_items = data.items.size();

    // per attribute, aligned with data.items
    std::vector<std::vector<ItemPrediction>> table(
        n_attr, std::vector<ItemPrediction>(n_items));
    std::vector<std::vector<deer::NIGParams>> omegas(n_attr);
    std::vector<std::vector<std::vector<double>>> samples(n_attr);
    std::vector<std::vector<deer::LabelSet>> labels(n_attr);

    const bool evidential = ckpt.model_kind == "deer";
    const std::vector<deer::Mlp> members = ckpt.mlps();

    for (std::size_t i = 0; i < n_items; ++i) {
        const auto& item = data.items[i];
        std::vector<std::vector<double>> item_samples;
        if (ckpt.model_kind == "mcdp")
            item_samples = deer::mc_dropout_predict(
                members[0], item.features, args.mc_passes,
                args.mc_seed + static_cast<std::uint64_t>(i));
        else if (ckpt.model_kind == "ensemble")
            item_samples = deer::ensemble_predict(members, item.features);
        std::vector<deer::NIGParams> ws;
        if (evidential) ws = deer::forward_evidential(members[0], item.features);

        for (std::size_t a = 0; a < n_attr; ++a) {
            const auto& ls = item.labels.at(ckpt.attributes[a]);
            labels[a].push_back(ls);
            ItemPrediction& p = table[a][i];
            p.id = item.id;
            p.y_bar = ls.mean();
            p.sigma2_bar = ls.variance();
            if (evidential) {
                const auto u = deer::uncertainty(ws[a]);
                p.mean = u.mean;
                p.aleatoric = u.aleatoric;
                p.epistemic = u.epistemic;
                p.total = u.total;
                omegas[a].push_back(ws[a]);
            } else {
                const auto& s = item_samples[a];
                double mean = 0.0;
                for (double v : s) mean += v;
                mean /= static_cast<double>(s.size());
                double var = 0.0;
                for (double v : s) var += (v - mean) * (v - mean);
                var /= static_cast<double>(s.size());
                p.mean = mean;
                p.total = var;  // sample spread is the only uncertainty here
                samples[a].push_back(s);
            }
            if (truth) {
                const auto& entry = truth->at(item.id).at(ckpt.attributes[a]);
                p.mu_star = entry.mean;
                p.sigma2_star = entry.var;
            }
        }
    }

    // summary metrics per attribute
    deer::EvalSummary summary;
    std::vector<double> calib_corr(n_attr,
                                   std::numeric_limits<double>::quiet_NaN());
    std::vector<double> rmse_vs_truth(n_attr,
                                      std::numeric_limits<double>::quiet_NaN());
    for (std::size_t a = 0; a < n_attr; ++a) {
        deer::AttributeEval row;
        row.attribute = ckpt.attributes[a];
        std::vector<double> hyp(n_items), ref(n_items);
        for (std::size_t i = 0; i < n_items; ++i) {
            hyp[i] = table[a][i].mean;
            ref[i] = table[a][i].y_bar;
        }
        row.ccc = deer::ccc(hyp, ref);
        row.rmse = deer::rmse(hyp, ref);
        if (evidential) {
            row.nll_avg = deer::nll_avg(omegas[a], labels[a]);
            row.nll_all = deer::nll_all(omegas[a], labels[a]);
        } else {
            const auto [avg, all] = deer::nll_kde(samples[a], labels[a], bandwidth);
            row.nll_avg = avg;
            row.nll_all = all;
        }
        if (truth) {
            std::vector<double> star(n_items), star_var(n_items), unc(n_items);
            for (std::size_t i = 0; i < n_items; ++i) {
                star[i] = table[a][i].mu_star;
                star_var[i] = table[a][i].sigma2_star;
                unc[i] = evidential ? table[a][i].aleatoric : table[a][i].total;
            }
            rmse_vs_truth[a] = deer::rmse(hyp, star);
            calib_corr[a] = pearson(unc, star_var);
        }
        summary.per_attribute.push_back(row);
    }

    const fs::path dir(args.out_dir);
    fs::create_directories(dir);

    std::ostringstream sum;
    sum << "attribute\tccc\trmse\tnll_avg\tnll_all";
    if (truth) sum << "\trmse_vs_truth\taleatoric_truth_corr";
    sum << '\n';
    for (std::size_t a = 0; a < n_attr; ++a) {
        const auto& row = summary.per_attribute[a];
        sum << row.attribute << '\t' << fmt(row.ccc) << '\t' << fmt(row.rmse)
            << '\t' << fmt(row.nll_avg) << '\t' << fmt(row.nll_all);
        if (truth) sum << '\t' << fmt(rmse_vs_truth[a]) << '\t' << fmt(calib_corr[a]);
        sum << '\n';
    }
    write_text(dir / "summary.tsv", sum.str());

    std::ostringstream preds;
    preds << "id\tattribute\tpred_mean\taleatoric\tepistemic\ttotal\ty_bar\t"
             "sigma2_bar\tmu_star\tsigma2_star\n";
    for (std::size_t a = 0; a < n_attr; ++a)
        for (std::size_t i = 0; i < n_items; ++i) {
            const auto& p = table[a][i];
            preds << p.id << '\t' << ckpt.attributes[a] << '\t' << fmt(p.mean)
                  << '\t' << fmt(p.aleatoric) << '\t' << fmt(p.epistemic) << '\t'
                  << fmt(p.total) << '\t' << fmt(p.y_bar) << '\t'
                  << fmt(p.sigma2_bar) << '\t' << fmt(p.mu_star) << '\t'
                  << fmt(p.sigma2_star) << '\n';
        }
    write_text(dir / "predictions.tsv", preds.str());

    json echo;
    echo["command"] = "eval";
    echo["checkpoint"] = args.checkpoint_path;
    echo["data"] = args.data_path;
    echo["truth"] = args.truth_path;
    echo["model_kind"] = ckpt.model_kind;
    echo["mc_passes"] = args.mc_passes;
    echo["mc_seed"] = args.mc_seed;
    echo["kde_bandwidth"] = args.kde_bandwidth;
    write_config_echo(dir, echo);

    std::cout << sum.str();
    return 0;
}

// ---------------------------------------------------------------------------
// reject

struct RejectArgs {
    std::string predictions_path;
    std::string out_dir;
    std::string fractions;  // empty: 0..0.5 step 0.05
};

int cmd_reject(const RejectArgs& args) {
    std::vector<double> fractions;
    if (args.fractions.empty()) {
        for (int i = 0; i <= 10; ++i) fractions.push_back(0.05 * i);
    } else {
        fractions = parse_number_list(args.fractions, "--fractions");
    }

    std::ifstream in(args.predictions_path);
    if (!in)
        throw std::runtime_error("cannot open '" + args.predictions_path + "'");
    std::string header;
    if (!std::getline(in, header))
        throw std::runtime_error("predictions file is empty");
    std::map<std::string, std::size_t> col;
    {
        std::stringstream ss(header);
        std::string name;
        std::size_t idx = 0;
        while (std::getline(ss, name, '\t')) col[name] = idx++;
    }
    for (const char* required : {"id", "attribute", "pred_mean", "total", "y_bar"})
        if (col.find(required) == col.end())
            throw std::runtime_error(std::string("predictions file lacks column '") +
                                     required + "'");

    std::map<std::string, std::vector<deer::RejectEntry>> per_attribute;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, '\t')) cells.push_back(cell);
        deer::RejectEntry e;
        e.id = cells.at(col["id"]);
        e.prediction = std::stod(cells.at(col["pred_mean"]));
        e.reference = std::stod(cells.at(col["y_bar"]));
        e.uncertainty = std::stod(cells.at(col["total"]));
        per_attribute[cells.at(col["attribute"])].push_back(e);
    }
    if (per_attribute.empty())
        throw std::runtime_error("predictions file holds no rows");

    std::ostringstream out;
    out << "attribute\tfraction\tcoverage\trmse\n";
    for (const auto& [attribute, entries] : per_attribute) {
        const auto curve = deer::reject_curve(entries, fractions);
        for (const auto& p : curve.points)
            out << attribute << '\t' << fmt(p.fraction) << '\t' << fmt(p.coverage)
                << '\t' << fmt(p.rmse) << '\n';
    }

    const fs::path dir(args.out_dir);
    fs::create_directories(dir);
    write_text(dir / "reject.tsv", out.str());

    json echo;
    echo["command"] = "reject";
    echo["predictions"] = args.predictions_path;
    echo["fractions"] = fractions;
    write_config_echo(dir, echo);

    std::cout << out.str();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"deep evidential emotion regression toolkit"};
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* cmd_gen = app.add_subcommand("generate", "write a synthetic dataset");
    cmd_gen->add_option("--out", gen.out_dir, "output directory")->required();
    cmd_gen->add_option("--n-items", gen.n_items, "number of items");
    cmd_gen->add_option("--dim", gen.dim, "feature width");
    cmd_gen->add_option("--attributes", gen.attributes, "comma-separated names");
    cmd_gen->add_option("--m-min", gen.m_min, "min annotators per item");
    cmd_gen->add_option("--m-max", gen.m_max, "max annotators per item");
    cmd_gen->add_option("--seed", gen.seed, "generator seed");
    cmd_gen->add_option("--s0", gen.s0, "noise variance floor");
    cmd_gen->add_option("--s1", gen.s1, "heteroscedastic amplitude (0 = constant)");
    cmd_gen->add_option("--fractions", gen.fractions, "train,val,test fractions");
    cmd_gen->set_config("--config");

    TrainArgs tr;
    auto* cmd_tr = app.add_subcommand("train", "train a model");
    cmd_tr->add_option("--train", tr.train_path, "training records")->required();
    cmd_tr->add_option("--val", tr.val_path, "validation records");
    cmd_tr->add_option("--out", tr.out_dir, "output directory")->required();
    cmd_tr->add_option("--model", tr.model, "deer | mcdp | ensemble");
    cmd_tr->add_option("--epochs", tr.epochs, "training epochs");
    cmd_tr->add_option("--batch-size", tr.batch_size, "mini-batch size");
    cmd_tr->add_option("--seed", tr.seed, "training seed");
    cmd_tr->add_option("--lr", tr.learning_rate, "Adam learning rate");
    cmd_tr->add_option("--hidden", tr.hidden, "hidden widths, comma separated");
    cmd_tr->add_option("--dropout", tr.dropout, "dropout rate (default 0.3, mcdp 0.4)");
    cmd_tr->add_option("--lambda", tr.lambda, "regulariser scale for all attributes");
    cmd_tr->add_option("--lambdas", tr.lambdas, "per-attribute regulariser scales");
    cmd_tr->add_option("--epsilons", tr.epsilons, "per-attribute loss weights");
    cmd_tr->add_option("--ensemble-size", tr.ensemble_size, "ensemble member count");
    cmd_tr->add_flag("--no-reg-sigma", tr.no_reg_sigma,
                     "drop the variance-calibration penalty");
    cmd_tr->add_flag("--avg-nll", tr.avg_nll,
                     "fit the averaged label instead of every annotation");
    cmd_tr->add_flag("--no-grad-through-phi", tr.no_grad_through_phi,
                     "treat the penalty weight as a constant in the gradient");
    cmd_tr->add_option("--early-stop-patience", tr.early_stop_patience,
                       "epochs without val improvement before stopping (0 = off)");
    cmd_tr->set_config("--config");

    EvalArgs ev;
    auto* cmd_ev = app.add_subcommand("eval", "evaluate a checkpoint");
    cmd_ev->add_option("--checkpoint", ev.checkpoint_path, "model file")->required();
    cmd_ev->add_option("--data", ev.data_path, "evaluation records")->required();
    cmd_ev->add_option("--truth", ev.truth_path, "synthetic truth file");
    cmd_ev->add_option("--out", ev.out_dir, "output directory")->required();
    cmd_ev->add_option("--mc-passes", ev.mc_passes, "MC-dropout forward passes");
    cmd_ev->add_option("--mc-seed", ev.mc_seed, "MC-dropout sampling seed");
    cmd_ev->add_option("--kde-bandwidth", ev.kde_bandwidth,
                       "'silverman' or a fixed bandwidth");
    cmd_ev->set_config("--config");

    RejectArgs rj;
    auto* cmd_rj = app.add_subcommand("reject", "reject-option curve from predictions");
    cmd_rj->add_option("--predictions", rj.predictions_path,
                       "predictions.tsv from eval")->required();
    cmd_rj->add_option("--out", rj.out_dir, "output directory")->required();
    cmd_rj->add_option("--fractions", rj.fractions,
                       "comma-separated rejection fractions (default 0..0.5 step 0.05)");
    cmd_rj->set_config("--config");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (app.got_subcommand(cmd_gen)) return cmd_generate(gen);
        if (app.got_subcommand(cmd_tr)) return cmd_train(tr);
        if (app.got_subcommand(cmd_ev)) return cmd_eval(ev);
        if (app.got_subcommand(cmd_rj)) return cmd_reject(rj);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
