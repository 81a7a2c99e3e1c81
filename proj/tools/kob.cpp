// kob: scenario runner for the Kobayashi-metric lab.

#include <CLI11.hpp>
#include <iostream>

#include "kob/scenario.hpp"

namespace {

std::string usage()
{
    std::string s = "usage: kob <scenario> [--domain <id|file.json>] [--seed N] [--pairs N] [--eps X] [--c2 X]\n"
                    "           [--track mconvex|spsc] [--ctilde verbatim|consistent] [--out DIR] ...\n"
                    "scenarios:";
    for (const auto& n : kob::scenario_names()) s += " " + n;
    s += "\npresets:";
    for (const auto& n : kob::preset_ids()) s += " " + n;
    return s + "\n";
}

} // namespace

int main(int argc, char** argv)
{
    kob::ExperimentConfig cfg;
    CLI::App app{"Kobayashi-metric numerical lab", "kob"};
    std::string ctilde = "consistent";
    std::optional<std::string> track;
    app.add_option("scenario", cfg.scenario, "scenario name")->required();
    app.add_option("--domain", cfg.domain, "preset id or JSON descriptor file");
    app.add_option("--seed", cfg.seed, "64-bit seed");
    app.add_option("--pairs", cfg.pairs, "sample count (pairs, decades or samples by scenario)")->check(CLI::PositiveNumber);
    app.add_option("--points", cfg.points, "hyperbolicity points")->check(CLI::PositiveNumber);
    app.add_option("--quadruples", cfg.quadruples, "hyperbolicity quadruples")->check(CLI::PositiveNumber);
    app.add_option("--eps", cfg.eps, "visual parameter");
    app.add_option("--c2", cfg.c2, "Gehring-Hayman exponent");
    app.add_option("--alpha", cfg.alpha, "separation exponent");
    app.add_option("--track", track, "mconvex or spsc")->check(CLI::IsMember({"mconvex", "spsc"}));
    app.add_option("--m", cfg.m, "m-convexity order");
    app.add_option("--N", cfg.N, "ledger N")->check(CLI::PositiveNumber);
    app.add_option("--ctilde", ctilde, "C-tilde variant")->check(CLI::IsMember({"verbatim", "consistent"}));
    app.add_option("--lambda", cfg.lambda, "ledger lambda");
    app.add_option("--margin", cfg.margin, "boundary-holder exponent margin");
    app.add_option("--max-oracle", cfg.max_oracle, "distance: largest oracle distance kept");
    app.add_option("--vertex-budget", cfg.vertex_budget, "optimizer vertex budget");
    app.add_option("--out", cfg.out, "output directory");
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help() << usage();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "kob: " << e.what() << "\n" << usage();
        return 1;
    }
    if (!kob::is_scenario(cfg.scenario)) {
        std::cerr << "kob: unknown scenario '" << cfg.scenario << "'\n" << usage();
        return 1;
    }
    cfg.track = track;
    cfg.ctilde = ctilde == "verbatim" ? kob::CTildeVariant::Verbatim : kob::CTildeVariant::Consistent;
    const int code = kob::run_scenario(cfg, std::cerr);
    if (code != 1) std::cout << cfg.scenario << ": " << (code == 0 ? "pass" : "violation") << " (" << cfg.out << ")\n";
    return code;
}
