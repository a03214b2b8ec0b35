// alchemy: run experiments, reduce single terms, inspect population CSVs.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

#include "CLI11.hpp"
#include "alchemy/experiments.hpp"
#include "alchemy/stdlib.hpp"

using namespace alchemy;

namespace {

constexpr int kOk = 0, kConfigError = 1, kRuntimeError = 2;

struct RunArgs {
    std::string preset;
    std::string config;
    double scale = 1.0;
    std::optional<std::uint64_t> seed, replicates, collisions, soup_size;
    std::optional<std::string> out;
    std::optional<unsigned> workers;
    bool dump = false;
};

int run_command(const RunArgs& a) {
    ExperimentConfig config;
    try {
        if (a.preset.empty() && a.config.empty()) throw ConfigError("give --preset or --config");
        if (!a.preset.empty()) config = preset(a.preset);
        if (!a.config.empty()) {
            std::ifstream in(a.config);
            if (!in) throw ConfigError("cannot open config " + a.config);
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(in);
            } catch (const nlohmann::json::exception& e) {
                throw ConfigError(a.config + ": " + e.what());
            }
            config = a.preset.empty() ? load_config(a.config) : from_json(j, config);
        }
        if (a.scale != 1.0) apply_scale(config, a.scale);
        if (a.seed) config.master_seed = *a.seed;
        if (a.replicates) config.replicates = *a.replicates;
        if (a.collisions) config.total_collisions = *a.collisions;
        if (a.soup_size) config.soup_size = *a.soup_size;
        if (a.out) config.output_dir = *a.out;
        if (a.workers) config.workers = *a.workers;
        validate(config);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    }
    if (a.dump) {
        std::cout << to_json(config).dump(2) << '\n';
        return kOk;
    }

    try {
        auto report = run_experiment(config);
        std::cerr << "wrote " << report.output_dir.string() << " (" << config.cells.size() << " cells, "
                  << config.replicates << " replicates each, " << report.failed << " failed)\n";
        return report.failed ? kRuntimeError : kOk;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
}

// Free names that spell a library combinator (scc, S, true, ...) are bound
// to it, so `scc (\f.\x.f x)` works.
Expr bind_library(const ParseResult& parsed) {
    const auto n = parsed.free_names.size();
    if (n == 0) return parsed.expr;
    Expr e = parsed.expr;
    for (std::size_t k = 0; k < n; ++k) e = Expr::lam(e);
    for (std::size_t k = n; k-- > 0;) {
        auto c = combinator_from_name(parsed.free_names[k]);
        if (!c) throw ParseError("unbound variable '" + parsed.free_names[k] + "'", 0);
        e = Expr::app(e, combinator(*c));
    }
    return e;
}

int reduce_command(const std::string& path, std::uint32_t steps, std::uint32_t vertices) {
    std::string text;
    if (path == "-") {
        text.assign(std::istreambuf_iterator<char>(std::cin), {});
    } else {
        std::ifstream in(path);
        if (!in) {
            std::cerr << "cannot open " << path << '\n';
            return kConfigError;
        }
        text.assign(std::istreambuf_iterator<char>(in), {});
    }
    Expr term;
    try {
        term = bind_library(parse_with_free(text, ParseOptions{false}));
    } catch (const ParseError& e) {
        std::cerr << "parse error at " << e.position() << ": " << e.what() << '\n';
        return kConfigError;
    }
    std::unique_ptr<ReductionLimits> limits;
    try {
        limits = std::make_unique<ReductionLimits>(steps, vertices);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    }
    auto out = reduce_to_normal_form(term, *limits);
    if (std::holds_alternative<StepLimitExceeded>(out)) {
        std::cout << "step limit exceeded (" << steps << " steps)\n";
        return kOk;
    }
    if (std::holds_alternative<SizeLimitExceeded>(out)) {
        std::cout << "size limit exceeded (" << vertices << " vertices)\n";
        return kOk;
    }
    const auto& nf = std::get<NormalForm>(out);
    std::cout << print(nf.expr) << '\n';
    std::cout << "steps " << nf.steps_used << ", size " << nf.expr.size() << '\n';
    if (auto n = decode_church(nf.expr)) std::cout << "church " << *n << '\n';
    for (int c = 0; c <= static_cast<int>(Combinator::Eq); ++c)
        if (nf.expr == combinator(static_cast<Combinator>(c)))
            std::cout << "equals " << name_of(static_cast<Combinator>(c)) << '\n';
    return kOk;
}

int inspect_command(const std::string& path) {
    try {
        auto series = read_csv_file(path);
        std::cout << path << ": " << series.records.size() << " records";
        if (!series.records.empty()) std::cout << ", last collision " << series.records.back().collision_index;
        std::cout << '\n';
        if (series.records.empty()) return kOk;
        std::printf("%-12s %12s %12s %12s %12s\n", "label", "final", "final_frac", "max_frac", "mean_frac");
        for (const auto& label : series.labels) {
            double peak = 0;
            for (const auto& r : series.records)
                peak = std::max(peak, static_cast<double>(*r.count(label)) / static_cast<double>(r.soup_size));
            const auto& last = series.records.back();
            std::printf("%-12s %12llu %12.6f %12.6f %12.6g\n", label.c_str(),
                        static_cast<unsigned long long>(*last.count(label)),
                        static_cast<double>(*last.count(label)) / static_cast<double>(last.soup_size), peak,
                        time_averaged_population(series.records, label));
        }
        return kOk;
    } catch (const MetricsError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kConfigError;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Lambda-calculus artificial chemistry with amplifier test functions"};
    app.require_subcommand(1);

    RunArgs ra;
    auto* run_cmd = app.add_subcommand("run", "Run an experiment preset or config file");
    run_cmd->add_option("--preset", ra.preset, "heatmap, successor, add2, addition or sensitivity");
    run_cmd->add_option("--config", ra.config, "JSON config; keys override the preset");
    run_cmd->add_option("--scale", ra.scale, "Multiply soup size, collisions and replicates");
    run_cmd->add_option("--seed", ra.seed, "Master seed");
    run_cmd->add_option("--replicates", ra.replicates, "Replicates per cell");
    run_cmd->add_option("--collisions", ra.collisions, "Collisions per replicate");
    run_cmd->add_option("--soup-size", ra.soup_size, "Soup size N");
    run_cmd->add_option("--out", ra.out, "Output directory");
    run_cmd->add_option("--workers", ra.workers, "Worker threads (0 = all cores)");
    run_cmd->add_flag("--dump-config", ra.dump, "Print the resolved config as JSON and exit");

    std::string reduce_path;
    std::uint32_t max_steps = 8000, max_vertices = 1000;
    auto* reduce_cmd = app.add_subcommand("reduce", "Reduce one term to normal form");
    reduce_cmd->add_option("file", reduce_path, "Term file, or - for stdin")->required();
    reduce_cmd->add_option("--max-steps", max_steps, "Step budget");
    reduce_cmd->add_option("--max-vertices", max_vertices, "Vertex budget");

    std::string csv_path;
    auto* inspect_cmd = app.add_subcommand("inspect", "Summarize a replicate CSV");
    inspect_cmd->add_option("csv", csv_path, "Replicate CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kConfigError;
    }

    if (*run_cmd) return run_command(ra);
    if (*reduce_cmd) return reduce_command(reduce_path, max_steps, max_vertices);
    return inspect_command(csv_path);
}
