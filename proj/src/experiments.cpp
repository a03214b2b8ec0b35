#include "alchemy/experiments.hpp"

#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <deque>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "alchemy/stdlib.hpp"

namespace alchemy {

using nlohmann::json;

namespace {

constexpr std::string_view kAmplifierLabel = "amplifiers";

CellConfig cell(std::string name, std::vector<std::string> seeds, std::vector<TargetSeed> targets,
                std::vector<AmplifierGroup> amps) {
    return CellConfig{std::move(name), std::move(seeds), std::move(targets), std::move(amps)};
}

AmplifierGroup group(TestFamily f, double fraction) {
    AmplifierGroup g;
    g.family = f;
    g.fraction = fraction;
    return g;
}

std::string fmt_fraction(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

ExperimentConfig heatmap() {
    ExperimentConfig c;
    c.preset = "heatmap";
    c.soup_size = 5000;
    c.total_collisions = 1000000;
    c.replicates = 100;
    c.schedules.perturb_every = 1000;
    c.tracked = {"scc"};
    c.summary = SummaryKind::Threshold;
    c.threshold = 0.2;
    const int ny = 16, nx = 16;
    for (int y = 0; y < ny; ++y) {
        double target = 2e-5 * std::pow(0.1 / 2e-5, static_cast<double>(y) / (ny - 1));
        for (int x = 0; x < nx; ++x) {
            double tests = 0.3 * x / (nx - 1);
            std::vector<AmplifierGroup> amps;
            if (tests > 0) amps.push_back(group(TestFamily::Successor, tests));
            c.cells.push_back(cell("scc" + fmt_fraction(target) + "_tests" + fmt_fraction(tests), {"S", "K", "I"},
                                   {{"scc", target}}, std::move(amps)));
        }
    }
    return c;
}

ExperimentConfig successor() {
    ExperimentConfig c;
    c.preset = "successor";
    c.soup_size = 6000;
    c.replicates = 16;
    c.tracked = {"scc"};
    c.cells.push_back(cell("successor", {"S", "K", "I"}, {}, {group(TestFamily::Successor, 1000.0 / 6000.0)}));
    return c;
}

ExperimentConfig add2() {
    ExperimentConfig c;
    c.preset = "add2";
    c.soup_size = 5000;
    c.replicates = 1000;
    c.tracked = {"add2"};
    c.cells.push_back(cell("add2", {"S", "K", "I"}, {}, {group(TestFamily::AddTwo, 0.15)}));
    return c;
}

ExperimentConfig addition() {
    ExperimentConfig c;
    c.preset = "addition";
    c.soup_size = 5000;
    c.replicates = 1000;
    c.tracked = {"add", "scc"};
    c.cells.push_back(cell("addition", {"S", "K", "I", "P"}, {},
                           {group(TestFamily::Addition, 0.075), group(TestFamily::Successor, 0.075)}));
    return c;
}

ExperimentConfig sensitivity() {
    ExperimentConfig c;
    c.preset = "sensitivity";
    c.soup_size = 5000;
    c.replicates = 1000;
    c.tracked = {"scc", "add"};
    const std::vector<std::pair<std::string, std::vector<std::string>>> inputs = {
        {"random", {"random"}}, {"SKI", {"S", "K", "I"}}, {"SKIP", {"S", "K", "I", "P"}}};
    for (const auto& [name, seeds] : inputs) {
        c.cells.push_back(cell(name + "_none", seeds, {}, {}));
        c.cells.push_back(cell(name + "_scc", seeds, {}, {group(TestFamily::Successor, 0.15)}));
        c.cells.push_back(cell(name + "_add", seeds, {}, {group(TestFamily::Addition, 0.15)}));
        c.cells.push_back(cell(name + "_both", seeds, {},
                               {group(TestFamily::Successor, 0.075), group(TestFamily::Addition, 0.075)}));
    }
    return c;
}

}  // namespace

std::vector<std::string> preset_names() { return {"heatmap", "successor", "add2", "addition", "sensitivity"}; }

ExperimentConfig preset(std::string_view name) {
    if (name == "heatmap") return heatmap();
    if (name == "successor") return successor();
    if (name == "add2") return add2();
    if (name == "addition") return addition();
    if (name == "sensitivity") return sensitivity();
    throw ConfigError("unknown preset '" + std::string(name) + "'");
}

void apply_scale(ExperimentConfig& config, double factor) {
    if (!(factor > 0) || !std::isfinite(factor)) throw ConfigError("scale must be a positive number");
    auto scale = [&](std::uint64_t v) {
        return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(static_cast<double>(v) * factor)));
    };
    config.soup_size = scale(config.soup_size);
    config.total_collisions = scale(config.total_collisions);
    config.replicates = scale(config.replicates);
}

// ---------------------------------------------------------------------------
// Validation

namespace {

bool is_seed_name(const std::string& s) { return s == "random" || combinator_from_name(s).has_value(); }

bool safe_name(const std::string& s) {
    if (s.empty() || s == "." || s == "..") return false;
    for (unsigned char ch : s)
        if (!std::isalnum(ch) && ch != '_' && ch != '-' && ch != '.' && ch != '=') return false;
    return true;
}

}  // namespace

void validate(const ExperimentConfig& c) {
    auto need = [](bool ok, const std::string& what) {
        if (!ok) throw ConfigError(what);
    };
    need(c.soup_size > 0, "soup_size must be positive");
    need(c.total_collisions > 0, "total_collisions must be positive");
    need(c.replicates > 0, "replicates must be positive");
    need(c.schedules.measure_every > 0, "measure_every must be positive");
    need(c.total_collisions >= c.schedules.measure_every, "total_collisions must be at least measure_every");
    need(!c.schedules.perturb_every || *c.schedules.perturb_every > 0, "perturb_every must be positive or null");
    need(c.generator.min_size >= 1 && c.generator.min_size <= c.generator.max_size,
         "generator sizes must satisfy 1 <= min_size <= max_size");
    need(c.generator.abstraction_probability >= 0 && c.generator.abstraction_probability <= 1,
         "abstraction_probability must lie in [0, 1]");
    need(c.threshold >= 0 && c.threshold <= 1, "threshold must lie in [0, 1]");

    std::set<std::string> tracked;
    for (const auto& t : c.tracked) {
        need(combinator_from_name(t).has_value(), "unknown tracked combinator '" + t + "'");
        need(tracked.insert(t).second, "duplicate tracked combinator '" + t + "'");
    }
    need(!tracked.empty(), "at least one tracked combinator is required");

    need(!c.cells.empty(), "at least one cell is required");
    std::set<std::string> names;
    for (const auto& cell : c.cells) {
        need(safe_name(cell.name), "cell name '" + cell.name + "' must be non-empty and use [A-Za-z0-9_.=-]");
        need(names.insert(cell.name).second, "duplicate cell name '" + cell.name + "'");
        double used = 0;
        for (const auto& t : cell.targets) {
            need(combinator_from_name(t.combinator).has_value(), "unknown target '" + t.combinator + "'");
            need(t.fraction >= 0 && t.fraction <= 1, "target fraction outside [0, 1]");
            used += t.fraction;
        }
        for (const auto& a : cell.amplifiers) {
            need(a.fraction >= 0 && a.fraction <= 1, "amplifier fraction outside [0, 1]");
            need(a.lo <= a.hi, "amplifier range needs lo <= hi");
            need(a.factor >= 1, "amplification factor must be at least 1");
            used += a.fraction;
        }
        need(used <= 1 + 1e-9, "cell '" + cell.name + "' fractions exceed 1");
        for (const auto& s : cell.seeds) need(is_seed_name(s), "unknown seed '" + s + "'");
        need(!cell.seeds.empty() || std::abs(used - 1) <= 1e-9,
             "cell '" + cell.name + "' has no seeds to fill the remaining fraction");
    }
}

// ---------------------------------------------------------------------------
// JSON

namespace {

json filters_json(const FilterPolicy& f) {
    return {{"arity", f.require_arity},
            {"argument_use", f.require_argument_use},
            {"wrapped_boolean", f.reject_wrapped_booleans}};
}

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
    if (!j.is_object()) throw ConfigError(std::string(where) + " must be an object");
    for (const auto& [k, v] : j.items()) {
        bool ok = false;
        for (auto a : allowed) ok = ok || a == k;
        if (!ok) throw ConfigError("unknown key '" + k + "' in " + std::string(where));
    }
}

template <class T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

FilterPolicy filters_from(const json& j, FilterPolicy f) {
    check_keys(j, {"arity", "argument_use", "wrapped_boolean"}, "filters");
    read(j, "arity", f.require_arity);
    read(j, "argument_use", f.require_argument_use);
    read(j, "wrapped_boolean", f.reject_wrapped_booleans);
    return f;
}

CellConfig cell_from(const json& j) {
    check_keys(j, {"name", "seeds", "targets", "amplifiers"}, "cell");
    CellConfig c;
    read(j, "name", c.name);
    read(j, "seeds", c.seeds);
    if (j.contains("targets"))
        for (const auto& t : j.at("targets")) {
            check_keys(t, {"combinator", "fraction"}, "target");
            c.targets.push_back({t.at("combinator").get<std::string>(), t.at("fraction").get<double>()});
        }
    if (j.contains("amplifiers"))
        for (const auto& a : j.at("amplifiers")) {
            check_keys(a, {"family", "fraction", "lo", "hi", "factor", "filters"}, "amplifier group");
            AmplifierGroup g;
            auto fam = test_family_from_name(a.at("family").get<std::string>());
            if (!fam) throw ConfigError("unknown test family '" + a.at("family").get<std::string>() + "'");
            g.family = *fam;
            read(a, "fraction", g.fraction);
            read(a, "lo", g.lo);
            read(a, "hi", g.hi);
            read(a, "factor", g.factor);
            if (a.contains("filters")) g.filters = filters_from(a.at("filters"), g.filters);
            c.amplifiers.push_back(g);
        }
    return c;
}

json result_fields(const ExperimentConfig& c) {
    json cells = json::array();
    for (const auto& cell : c.cells) {
        json targets = json::array(), amps = json::array();
        for (const auto& t : cell.targets) targets.push_back({{"combinator", t.combinator}, {"fraction", t.fraction}});
        for (const auto& a : cell.amplifiers)
            amps.push_back({{"family", std::string(name_of(a.family))},
                            {"fraction", a.fraction},
                            {"lo", a.lo},
                            {"hi", a.hi},
                            {"factor", a.factor},
                            {"filters", filters_json(a.filters)}});
        cells.push_back({{"name", cell.name}, {"seeds", cell.seeds}, {"targets", targets}, {"amplifiers", amps}});
    }
    return {
        {"preset", c.preset},
        {"soup_size", c.soup_size},
        {"total_collisions", c.total_collisions},
        {"replicates", c.replicates},
        {"master_seed", c.master_seed},
        {"rng", std::string(Rng::kAlgorithm)},
        {"limits", {{"max_steps", c.limits.max_steps}, {"max_vertices", c.limits.max_vertices}}},
        {"schedules",
         {{"measure_every", c.schedules.measure_every},
          {"perturb_every", c.schedules.perturb_every ? json(*c.schedules.perturb_every) : json(nullptr)}}},
        {"generator",
         {{"min_size", c.generator.min_size},
          {"max_size", c.generator.max_size},
          {"abstraction_probability", c.generator.abstraction_probability},
          {"max_resamples", c.generator.max_resamples}}},
        {"tracked", c.tracked},
        {"summary", c.summary == SummaryKind::Threshold ? "threshold" : "time_average"},
        {"threshold", c.threshold},
        {"cells", cells},
    };
}

}  // namespace

json to_json(const ExperimentConfig& c) {
    auto j = result_fields(c);
    j["output_dir"] = c.output_dir;
    j["workers"] = c.workers;
    return j;
}

ExperimentConfig from_json(const json& j, ExperimentConfig c) {
    try {
        check_keys(j,
                   {"preset", "soup_size", "total_collisions", "replicates", "master_seed", "rng", "limits",
                    "schedules", "generator", "tracked", "summary", "threshold", "cells", "output_dir", "workers"},
                   "config");
        read(j, "preset", c.preset);
        read(j, "soup_size", c.soup_size);
        read(j, "total_collisions", c.total_collisions);
        read(j, "replicates", c.replicates);
        read(j, "master_seed", c.master_seed);
        if (j.contains("rng") && j.at("rng").get<std::string>() != Rng::kAlgorithm)
            throw ConfigError("unsupported rng '" + j.at("rng").get<std::string>() + "'");
        if (j.contains("limits")) {
            const auto& l = j.at("limits");
            check_keys(l, {"max_steps", "max_vertices"}, "limits");
            auto steps = l.value("max_steps", c.limits.max_steps);
            auto vertices = l.value("max_vertices", c.limits.max_vertices);
            try {
                c.limits = ReductionLimits(steps, vertices);
            } catch (const std::invalid_argument& e) {
                throw ConfigError(e.what());
            }
        }
        if (j.contains("schedules")) {
            const auto& s = j.at("schedules");
            check_keys(s, {"measure_every", "perturb_every"}, "schedules");
            read(s, "measure_every", c.schedules.measure_every);
            if (s.contains("perturb_every")) {
                const auto& p = s.at("perturb_every");
                c.schedules.perturb_every = p.is_null() ? std::nullopt : std::optional(p.get<std::uint64_t>());
            }
        }
        if (j.contains("generator")) {
            const auto& g = j.at("generator");
            check_keys(g, {"min_size", "max_size", "abstraction_probability", "max_resamples"}, "generator");
            read(g, "min_size", c.generator.min_size);
            read(g, "max_size", c.generator.max_size);
            read(g, "abstraction_probability", c.generator.abstraction_probability);
            read(g, "max_resamples", c.generator.max_resamples);
        }
        read(j, "tracked", c.tracked);
        if (j.contains("summary")) {
            auto s = j.at("summary").get<std::string>();
            if (s == "threshold") c.summary = SummaryKind::Threshold;
            else if (s == "time_average") c.summary = SummaryKind::TimeAverage;
            else throw ConfigError("summary must be 'threshold' or 'time_average'");
        }
        read(j, "threshold", c.threshold);
        if (j.contains("cells")) {
            c.cells.clear();
            for (const auto& cj : j.at("cells")) c.cells.push_back(cell_from(cj));
        }
        read(j, "output_dir", c.output_dir);
        read(j, "workers", c.workers);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    ExperimentConfig base;
    if (j.is_object() && j.contains("preset") && j.at("preset").is_string()) {
        auto name = j.at("preset").get<std::string>();
        for (const auto& p : preset_names())
            if (p == name) base = preset(name);
    }
    return from_json(j, base);
}

std::string config_hash(const ExperimentConfig& config) {
    auto text = result_fields(config).dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------
// Running

PopulationSpec population_for(const ExperimentConfig& config, const CellConfig& cell) {
    PopulationSpec spec;
    spec.size = config.soup_size;
    double used = 0;
    for (const auto& t : cell.targets) {
        used += t.fraction;
        if (t.fraction > 0)
            spec.entries.push_back({Molecules{combinator(*combinator_from_name(t.combinator))}, std::nullopt, t.fraction});
    }
    for (const auto& a : cell.amplifiers) {
        used += a.fraction;
        if (a.fraction <= 0) continue;
        const std::size_t span = a.hi - a.lo + 1;
        const std::size_t cases = a.family == TestFamily::Addition ? span * span : span;
        // Only as many distinct cases as the group can hold are built.
        auto wanted = static_cast<std::size_t>(std::ceil(a.fraction * static_cast<double>(config.soup_size)));
        auto specs = amplifier_family(a.family, std::max<std::size_t>(1, std::min(cases, wanted)), a.lo, a.hi,
                                      a.factor, a.filters);
        spec.entries.push_back({Amplifiers{std::move(specs)}, std::nullopt, a.fraction});
    }
    const double rest = 1.0 - used;
    if (!cell.seeds.empty() && rest > 1e-12) {
        const double each = rest / static_cast<double>(cell.seeds.size());
        for (const auto& s : cell.seeds) {
            if (s == "random") spec.entries.push_back({RandomMolecules{config.generator}, std::nullopt, each});
            else spec.entries.push_back({Molecules{combinator(*combinator_from_name(s))}, std::nullopt, each});
        }
    }
    return spec;
}

MotifSet motifs_for(const ExperimentConfig& config) {
    std::vector<Motif> motifs;
    for (const auto& t : config.tracked) motifs.push_back({t, combinator(*combinator_from_name(t))});
    motifs.push_back({std::string(kAmplifierLabel), AmplifierMotif{}});
    return MotifSet(std::move(motifs));
}

std::uint64_t seed_for(const ExperimentConfig& config, std::size_t cell, std::uint64_t replicate) {
    return replicate_seed(config.master_seed, cell * config.replicates + replicate);
}

std::vector<PopulationRecord> run_replicate(const ExperimentConfig& config, std::size_t cell,
                                            std::uint64_t replicate) {
    auto soup = init_soup(population_for(config, config.cells.at(cell)), seed_for(config, cell, replicate),
                          config.limits);
    auto motifs = motifs_for(config);
    return run(soup, config.total_collisions, config.schedules, [&](const Soup& s) { return motifs.measure(s); });
}

std::vector<double> replicate_metrics(const ExperimentConfig& config, std::span<const PopulationRecord> records) {
    std::vector<double> out;
    for (const auto& label : config.tracked) {
        if (config.summary == SummaryKind::Threshold)
            out.push_back(threshold_fraction(records, label, config.threshold) ? 1.0 : 0.0);
        else out.push_back(time_averaged_population(records, label));
    }
    return out;
}

namespace {

CellSummary aggregate(const ExperimentConfig& config, const CellConfig& cell,
                      const std::vector<std::vector<double>>& metrics, std::uint64_t failed) {
    CellSummary s;
    s.cell = cell.name;
    for (const auto& t : cell.targets) s.target_fraction += t.fraction;
    for (const auto& a : cell.amplifiers) s.test_fraction += a.fraction;
    s.completed = metrics.size();
    s.failed = failed;
    for (std::size_t k = 0; k < config.tracked.size(); ++k) {
        double sum = 0;
        for (const auto& m : metrics) sum += m[k];
        double value = metrics.empty() ? std::nan("") : sum / static_cast<double>(metrics.size());
        s.values.emplace_back(config.tracked[k], value);
    }
    return s;
}

std::string metric_suffix(const ExperimentConfig& c) {
    return c.summary == SummaryKind::Threshold ? "_over_threshold" : "_time_average";
}

std::string replicate_file(std::uint64_t r) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "replicate_%04llu.csv", static_cast<unsigned long long>(r));
    return buf;
}

}  // namespace

CellSummary summarize(const ExperimentConfig& config, const CellConfig& cell,
                      const std::vector<std::vector<PopulationRecord>>& series, std::uint64_t failed) {
    std::vector<std::vector<double>> metrics;
    for (const auto& s : series) metrics.push_back(replicate_metrics(config, s));
    return aggregate(config, cell, metrics, failed);
}

void write_summary(std::ostream& out, const ExperimentConfig& config, const std::vector<CellSummary>& cells) {
    out << "cell,target_fraction,test_fraction,completed,failed";
    for (const auto& t : config.tracked) out << ',' << t << metric_suffix(config);
    out << '\n';
    out << std::setprecision(17);
    for (const auto& c : cells) {
        out << c.cell << ',' << c.target_fraction << ',' << c.test_fraction << ',' << c.completed << ','
            << c.failed;
        for (const auto& [label, v] : c.values) out << ',' << v;
        out << '\n';
    }
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
    validate(config);
    namespace fs = std::filesystem;
    const fs::path root = config.output_dir;
    fs::create_directories(root);
    for (const auto& c : config.cells) fs::create_directories(root / c.name);

    const std::size_t cells = config.cells.size();
    const std::uint64_t jobs = cells * config.replicates;
    unsigned workers = config.workers ? config.workers : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, jobs));

    struct Done {
        std::uint64_t job;
        std::vector<PopulationRecord> records;
        std::string error;
        bool ok;
    };
    std::mutex mu;
    std::condition_variable cv;
    std::deque<Done> queue;
    std::uint64_t next_job = 0;

    auto worker = [&] {
        for (;;) {
            std::uint64_t job;
            {
                std::lock_guard lock(mu);
                if (next_job == jobs) return;
                job = next_job++;
            }
            Done d{job, {}, {}, true};
            try {
                d.records = run_replicate(config, job / config.replicates, job % config.replicates);
            } catch (const std::exception& e) {
                d.ok = false;
                d.error = e.what();
            } catch (...) {
                d.ok = false;
                d.error = "unknown failure";
            }
            {
                std::lock_guard lock(mu);
                queue.push_back(std::move(d));
            }
            cv.notify_one();
        }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);

    // This thread is the only writer. Per-replicate scalars are kept so the
    // summary can be aggregated in replicate order at the end.
    auto labels = motifs_for(config).labels();
    std::vector<std::optional<std::vector<double>>> metrics(jobs);
    std::vector<std::string> errors(jobs);
    std::vector<bool> ok(jobs, false);
    for (std::uint64_t received = 0; received < jobs; ++received) {
        Done d;
        {
            std::unique_lock lock(mu);
            cv.wait(lock, [&] { return !queue.empty(); });
            d = std::move(queue.front());
            queue.pop_front();
        }
        if (d.ok) {
            try {
                metrics[d.job] = replicate_metrics(config, d.records);
                const auto& c = config.cells[d.job / config.replicates];
                std::ofstream out(root / c.name / replicate_file(d.job % config.replicates), std::ios::binary);
                write_csv(out, d.records, labels);
                if (!out) throw std::runtime_error("write failed");
                ok[d.job] = true;
            } catch (const std::exception& e) {
                metrics[d.job].reset();
                errors[d.job] = e.what();
            }
        } else {
            errors[d.job] = d.error;
        }
    }
    for (auto& t : pool) t.join();

    ExperimentReport report;
    report.output_dir = root;
    json replicates = json::array();
    for (std::size_t c = 0; c < cells; ++c) {
        std::vector<std::vector<double>> done;
        std::uint64_t failed = 0;
        for (std::uint64_t r = 0; r < config.replicates; ++r) {
            auto job = c * config.replicates + r;
            json entry = {{"cell", config.cells[c].name}, {"replicate", r}, {"seed", seed_for(config, c, r)}};
            if (ok[job]) {
                done.push_back(*metrics[job]);
                entry["status"] = "ok";
                entry["csv"] = config.cells[c].name + "/" + replicate_file(r);
            } else {
                ++failed;
                entry["status"] = "failed";
                entry["error"] = errors[job];
            }
            replicates.push_back(std::move(entry));
        }
        report.failed += failed;
        report.cells.push_back(aggregate(config, config.cells[c], done, failed));
    }

    json manifest = {{"software_version", std::string(kSoftwareVersion)},
                     {"config_hash", config_hash(config)},
                     {"config", to_json(config)},
                     {"failed_replicates", report.failed},
                     {"replicates", replicates}};
    std::ofstream(root / "manifest.json", std::ios::binary) << manifest.dump(2) << '\n';
    std::ofstream summary(root / "summary.csv", std::ios::binary);
    write_summary(summary, config, report.cells);
    return report;
}

}  // namespace alchemy
