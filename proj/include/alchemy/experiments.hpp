#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "alchemy/amplifier.hpp"
#include "alchemy/metrics.hpp"
#include "alchemy/reduce.hpp"
#include "alchemy/soup.hpp"
#include "json.hpp"

namespace alchemy {

inline constexpr std::string_view kSoftwareVersion = "0.1.0";

struct TargetSeed {
    std::string combinator;  // stdlib name, e.g. "scc"
    double fraction = 0;
};

struct AmplifierGroup {
    TestFamily family = TestFamily::Successor;
    double fraction = 0;
    std::uint32_t lo = 0;
    std::uint32_t hi = 20;
    std::uint32_t factor = 100;
    FilterPolicy filters;
};

// One initial condition. Seeds split whatever fraction the targets and
// amplifiers leave over in equal parts; "random" seeds use the generator.
struct CellConfig {
    std::string name;
    std::vector<std::string> seeds;
    std::vector<TargetSeed> targets;
    std::vector<AmplifierGroup> amplifiers;
};

enum class SummaryKind { Threshold, TimeAverage };

struct ExperimentConfig {
    std::string preset;
    std::uint64_t soup_size = 5000;
    std::uint64_t total_collisions = 1000000;
    std::uint64_t replicates = 1;
    std::uint64_t master_seed = 1;
    ReductionLimits limits;
    Schedules schedules;
    GeneratorParams generator;
    // Combinator names counted in every record; an "amplifiers" column is added.
    std::vector<std::string> tracked = {"scc"};
    SummaryKind summary = SummaryKind::TimeAverage;
    double threshold = 0.2;
    std::vector<CellConfig> cells;
    std::string output_dir = "out";
    // 0 = hardware concurrency.
    unsigned workers = 0;
};

// Names accepted by preset().
std::vector<std::string> preset_names();

// Throws ConfigError for an unknown name.
ExperimentConfig preset(std::string_view name);

// Multiplies soup size, collisions and replicates (each at least 1).
void apply_scale(ExperimentConfig& config, double factor);

// Throws ConfigError describing the first violated constraint.
void validate(const ExperimentConfig& config);

nlohmann::json to_json(const ExperimentConfig& config);
// Missing keys keep the values already in `base`.
ExperimentConfig from_json(const nlohmann::json& j, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path);

// 16 hex digits over the canonical JSON of every field that affects results
// (output_dir and workers excluded).
std::string config_hash(const ExperimentConfig& config);

PopulationSpec population_for(const ExperimentConfig& config, const CellConfig& cell);
MotifSet motifs_for(const ExperimentConfig& config);

// Seed of replicate r in cell c; independent of worker count and order.
std::uint64_t seed_for(const ExperimentConfig& config, std::size_t cell, std::uint64_t replicate);

std::vector<PopulationRecord> run_replicate(const ExperimentConfig& config, std::size_t cell, std::uint64_t replicate);

struct CellSummary {
    std::string cell;
    double target_fraction = 0;
    double test_fraction = 0;
    std::uint64_t completed = 0;
    std::uint64_t failed = 0;
    // Per tracked label (amplifiers excluded): fraction of completed
    // replicates over threshold, or mean time-averaged population.
    std::vector<std::pair<std::string, double>> values;
};

struct ExperimentReport {
    std::vector<CellSummary> cells;
    std::uint64_t failed = 0;
    std::filesystem::path output_dir;
};

// Writes <out>/<cell>/replicate_<r>.csv, <out>/manifest.json and
// <out>/summary.csv. A replicate that throws is recorded as failed.
ExperimentReport run_experiment(const ExperimentConfig& config);

// One scalar per tracked label: 1 or 0 for over/under threshold, or the
// time-averaged fraction.
std::vector<double> replicate_metrics(const ExperimentConfig& config, std::span<const PopulationRecord> records);

// Summary of completed replicate series, aggregated in replicate order.
CellSummary summarize(const ExperimentConfig& config, const CellConfig& cell,
                      const std::vector<std::vector<PopulationRecord>>& series, std::uint64_t failed);

void write_summary(std::ostream& out, const ExperimentConfig& config, const std::vector<CellSummary>& cells);

}  // namespace alchemy
