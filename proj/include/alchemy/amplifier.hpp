#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "alchemy/expr.hpp"
#include "alchemy/reduce.hpp"

namespace alchemy {

// \f. eq (f n1 ... nk) expected, normalized.
struct UnitTest {
    std::vector<std::uint32_t> inputs;
    std::uint32_t expected = 0;
    Expr test_expr;

    std::size_t arity() const { return inputs.size(); }
    friend bool operator==(const UnitTest& a, const UnitTest& b) {
        return a.inputs == b.inputs && a.expected == b.expected;
    }
};

// Throws std::invalid_argument unless 1 <= inputs.size() <= 2.
UnitTest make_unit_test(std::vector<std::uint32_t> inputs, std::uint32_t expected);

struct FilterPolicy {
    bool require_arity = true;
    bool require_argument_use = true;
    bool reject_wrapped_booleans = true;
};

enum class Filter { Arity, ArgumentUse, WrappedBoolean };
std::string_view name_of(Filter f);

struct FilterPass {};
struct FilterRejection {
    Filter filter;
};
using FilterVerdict = std::variant<FilterPass, FilterRejection>;

inline bool passed(const FilterVerdict& v) { return std::holds_alternative<FilterPass>(v); }

// Trickster heuristics, in order: at least `arity` leading abstractions; not a
// boolean under extra leading abstractions; each of the first `arity` binders
// used in the body.
FilterVerdict passes_filters(const Expr& candidate, std::size_t arity, const FilterPolicy& policy = {});

struct AmplifierSpec {
    std::string id;
    UnitTest test;
    std::uint32_t amplification_factor = 100;
    FilterPolicy filters;

    friend bool operator==(const AmplifierSpec& a, const AmplifierSpec& b) { return a.test == b.test; }
};

AmplifierSpec make_amplifier(std::vector<std::uint32_t> inputs, std::uint32_t expected,
                             std::uint32_t factor = 100, FilterPolicy filters = {});

struct Pass {
    Expr candidate;
};
struct Fail {
    // Set when a trickster filter rejected the candidate before reduction.
    std::optional<Filter> filter;
};
struct Inert {
    std::variant<StepLimitExceeded, SizeLimitExceeded> reason;
};
using AmplifierResult = std::variant<Pass, Fail, Inert>;

AmplifierResult evaluate_candidate(const AmplifierSpec& spec, const Expr& candidate,
                                   const ReductionLimits& limits = {});

// Test families used by the experiments.
enum class TestFamily { Successor, AddTwo, Addition };
std::string_view name_of(TestFamily f);
std::optional<TestFamily> test_family_from_name(std::string_view name);

// Family a unit test belongs to, judged from its arity and expected value.
std::optional<TestFamily> family_of(const UnitTest& test);

// count specs of the family, cycling through its cases in a fixed order:
// successor/add-two cycle n over [lo, hi]; addition cycles (n, m) row-major
// over [lo, hi]^2.
std::vector<AmplifierSpec> amplifier_family(TestFamily family, std::size_t count, std::uint32_t lo = 0,
                                            std::uint32_t hi = 20, std::uint32_t factor = 100,
                                            FilterPolicy filters = {});

}  // namespace alchemy
