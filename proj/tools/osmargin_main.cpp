#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "osmargin/cli.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    osm::Overrides overrides;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_train_overrides = true) {
    cmd->add_option("--config", args.config_path, "experiment config file")->required();
    cmd->add_option("--out", [&args](const std::vector<std::string>& v) {
        args.overrides.out_dir = v.front();
        return true;
    }, "output directory (overrides [task] out)");
    if (with_train_overrides) {
        cmd->add_option("--loss", [&args](const std::vector<std::string>& v) {
            args.overrides.loss = v.front();
            return true;
        }, "loss kind (overrides [train] loss)");
        cmd->add_option("--seed", [&args](const std::vector<std::string>& v) {
            args.overrides.seed = std::stoull(v.front());
            return true;
        }, "training seed (overrides [train] seed)");
        cmd->add_option("--epochs", [&args](const std::vector<std::string>& v) {
            args.overrides.epochs = std::stoi(v.front());
            return true;
        }, "epoch count (overrides [train] epochs)");
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"osmargin: one-sided-margin classification toolkit"};
    app.require_subcommand(1);

    CommonArgs train_args;
    CommonArgs sweep_args;
    CommonArgs compare_args;
    CommonArgs ocr_args;
    uint64_t gradcheck_seed = 12345;
    int gradcheck_count = 100;

    auto* train_cmd = app.add_subcommand("train", "train one model and emit report/summary/checkpoint");
    add_common(train_cmd, train_args);
    auto* sweep_cmd = app.add_subcommand("sweep", "one-factor-at-a-time OSM hyperparameter sweep");
    add_common(sweep_cmd, sweep_args);
    auto* compare_cmd = app.add_subcommand("compare", "loss-function comparison table over datasets");
    add_common(compare_cmd, compare_args);
    auto* gradcheck_cmd = app.add_subcommand("gradcheck", "finite-difference verification of all gradients");
    gradcheck_cmd->add_option("--seed", gradcheck_seed, "random seed");
    gradcheck_cmd->add_option("--count", gradcheck_count, "instances per suite");
    auto* ocr_cmd = app.add_subcommand("ocr-compare", "osm-ctc vs ctc on full and scaled-down models");
    add_common(ocr_cmd, ocr_args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (gradcheck_cmd->parsed()) {
            return osm::run_gradcheck(gradcheck_seed, gradcheck_count, std::cout) ? 0 : 1;
        }
        const CommonArgs& args = train_cmd->parsed()     ? train_args
                                 : sweep_cmd->parsed()   ? sweep_args
                                 : compare_cmd->parsed() ? compare_args
                                                         : ocr_args;
        const osm::ConfigFile file = osm::ConfigFile::parse_file(args.config_path);
        const osm::RunConfig config = osm::build_run_config(file, args.overrides);
        if (train_cmd->parsed()) osm::run_train(config, std::cout);
        if (sweep_cmd->parsed()) osm::run_sweep(config, std::cout);
        if (compare_cmd->parsed()) osm::run_compare(config, std::cout);
        if (ocr_cmd->parsed()) osm::run_ocr_compare(config, std::cout);
        return 0;
    } catch (const osm::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
