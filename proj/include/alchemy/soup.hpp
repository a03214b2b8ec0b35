#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "alchemy/amplifier.hpp"
#include "alchemy/expr.hpp"
#include "alchemy/random.hpp"
#include "alchemy/record.hpp"
#include "alchemy/reduce.hpp"

namespace alchemy {

// ---------------------------------------------------------------------------
// Random expressions

struct GeneratorParams {
    std::uint32_t min_size = 4;
    std::uint32_t max_size = 24;
    double abstraction_probability = 0.5;
    std::uint32_t max_resamples = 100;
};

// Binary tree method: draw a tree size uniformly from [min_size, max_size],
// grow a random closed term of exactly that size (abstraction with the given
// probability, otherwise an application with a uniform split; leaves are
// uniformly chosen bound variables), then reduce it. Draws again when the
// reduction hits a limit; nullopt after max_resamples failures.
std::optional<Expr> random_expression(const GeneratorParams& params, Rng& rng, const ReductionLimits& limits = {});

// ---------------------------------------------------------------------------
// Population description

struct Molecules {
    Expr expr;
};
// Specs are used in round-robin order for the entry's count.
struct Amplifiers {
    std::vector<AmplifierSpec> specs;
};
struct RandomMolecules {
    GeneratorParams params;
};

struct PopulationEntry {
    std::variant<Molecules, Amplifiers, RandomMolecules> element;
    // Exactly one of count / fraction is used, consistently across entries.
    std::optional<std::uint64_t> count;
    std::optional<double> fraction;
};

struct PopulationSpec {
    // Required when entries are fractions; must match the sum otherwise.
    std::optional<std::uint64_t> size;
    std::vector<PopulationEntry> entries;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Counts per entry. Fractions resolve by largest remainder (ties to the
// earlier entry). Throws ConfigError for N = 0, mixed count/fraction entries
// or fractions that do not sum to 1 within 1e-9.
std::vector<std::uint64_t> resolve_counts(const PopulationSpec& spec);

// ---------------------------------------------------------------------------
// Soup

struct Molecule {
    Expr expr;
};
struct Amplifier {
    std::shared_ptr<const AmplifierSpec> spec;
};
using SoupElement = std::variant<Molecule, Amplifier>;

struct Reaction {
    SoupElement product;
};
struct AmplifiedReaction {
    Expr candidate;
    std::uint32_t copies = 0;
};
struct FailedCollision {
    std::variant<StepLimitExceeded, SizeLimitExceeded> reason;
};
struct EagerFail {};
using CollisionOutcome = std::variant<Reaction, AmplifiedReaction, FailedCollision, EagerFail>;

struct PerturbResult {
    std::uint64_t added = 0;
    // Set when there were too few molecules to displace.
    bool partial = false;
};

struct Schedules {
    std::uint64_t measure_every = 1000;
    // nullopt disables replenishment.
    std::optional<std::uint64_t> perturb_every = 100000;
};

class Soup {
public:
    // The initial amplifier multiset is remembered as the replenishment target.
    Soup(const std::vector<SoupElement>& elements, std::uint64_t seed, ReductionLimits limits = {});

    CollisionOutcome collide();
    PerturbResult perturb();

    std::size_t size() const { return slots_.size(); }
    std::uint64_t collisions() const { return collisions_; }
    const ReductionLimits& limits() const { return limits_; }

    SoupElement element(std::size_t i) const;
    std::vector<SoupElement> elements() const;

    // Molecules alpha-equivalent to e.
    std::uint64_t count(const Expr& e) const;
    std::uint64_t amplifier_count() const { return amplifier_total_; }
    // Amplifiers whose unit test matches spec's.
    std::uint64_t amplifier_count(const AmplifierSpec& spec) const;
    const std::vector<std::shared_ptr<const AmplifierSpec>>& amplifier_specs() const { return specs_; }
    std::uint64_t amplifier_count(std::size_t spec_index) const { return spec_counts_[spec_index]; }

    // Memoized collision results; the cache is cleared when it exceeds the
    // entry capacity or 16M stored tokens. Results are identical with any
    // capacity, including zero.
    void set_memo_capacity(std::size_t entries) { memo_capacity_ = entries; }
    std::size_t memo_hits() const { return memo_hits_; }

    Rng& rng() { return rng_; }

private:
    static constexpr std::int32_t kMolecule = -1;

    struct Slot {
        std::int32_t spec = kMolecule;
        std::uint64_t id = 0;  // molecules only
        Expr expr;             // molecules only
    };
    struct Interned {
        std::uint64_t id;
        std::uint64_t count;
    };
    struct MemoKey {
        std::uint64_t a, b;
        bool operator==(const MemoKey&) const = default;
    };
    struct MemoKeyHash {
        std::size_t operator()(const MemoKey& k) const { return splitmix64(k.a * 0x9e3779b97f4a7c15ull ^ k.b); }
    };
    enum class MemoKind : std::uint8_t { Product, StepLimit, SizeLimit, Pass, Fail };
    struct MemoValue {
        MemoKind kind;
        Expr product;
    };

    std::int32_t register_spec(const std::shared_ptr<const AmplifierSpec>& spec);
    Slot make_molecule(const Expr& e);
    Slot make_amplifier(std::int32_t spec);
    void place(std::size_t index, Slot slot);
    std::vector<std::uint32_t> draw_distinct(std::size_t k);
    MemoValue react(const Slot& a, const Slot& b);
    void remember(const MemoKey& key, const MemoValue& v);

    ReductionLimits limits_;
    Rng rng_;
    std::uint64_t collisions_ = 0;
    std::vector<Slot> slots_;
    std::vector<std::uint32_t> order_;  // permutation of slot indices for k-subset draws

    std::unordered_map<Expr, Interned> interned_;
    std::uint64_t next_id_ = 0;

    std::vector<std::shared_ptr<const AmplifierSpec>> specs_;
    std::vector<std::uint64_t> spec_counts_;
    std::vector<std::uint64_t> spec_initial_;
    std::uint64_t amplifier_total_ = 0;

    std::unordered_map<MemoKey, MemoValue, MemoKeyHash> memo_;
    std::size_t memo_capacity_ = 1u << 18;
    std::size_t memo_tokens_ = 0;
    std::size_t memo_hits_ = 0;
};

// Slots are laid out in entry order; the dynamics draw slots uniformly so the
// layout does not matter. Random members use a stream derived from seed.
Soup init_soup(const PopulationSpec& spec, std::uint64_t seed, ReductionLimits limits = {});

using Observer = std::function<PopulationRecord(const Soup&)>;

// Runs total_collisions collisions. After every measure_every-th collision the
// observer's record is appended; after every perturb_every-th collision the
// soup is replenished (measurement first).
std::vector<PopulationRecord> run(Soup& soup, std::uint64_t total_collisions, const Schedules& schedules,
                                  const Observer& observer);

}  // namespace alchemy
