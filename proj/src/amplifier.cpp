#include "alchemy/amplifier.hpp"

#include <array>
#include <stdexcept>

#include "alchemy/stdlib.hpp"

namespace alchemy {

UnitTest make_unit_test(std::vector<std::uint32_t> inputs, std::uint32_t expected) {
    if (inputs.empty()) throw std::invalid_argument("unit test needs at least one input");
    if (inputs.size() > 2) throw std::invalid_argument("unit test arity must be 1 or 2");

    Expr call = Expr::var(0);
    for (auto n : inputs) call = Expr::app(call, church(n));
    auto body = apply(combinator(Combinator::Eq), {call, church(expected)});
    auto out = reduce_to_normal_form(Expr::lam(body), ReductionLimits(100000, 100000));
    auto nf = as_normal_form(out);
    if (!nf) throw std::logic_error("unit test term failed to normalize");
    return UnitTest{std::move(inputs), expected, nf->expr};
}

std::string_view name_of(Filter f) {
    switch (f) {
    case Filter::Arity: return "arity";
    case Filter::ArgumentUse: return "argument_use";
    case Filter::WrappedBoolean: return "wrapped_boolean";
    }
    return "?";
}

namespace {

void mark_uses(ExprView v, std::uint32_t depth, std::size_t arity, std::vector<bool>& used) {
    switch (v.kind()) {
    case Kind::Variable: {
        auto i = v.index();
        // Index depth + j names the binder j positions outside the body root,
        // i.e. leading binder arity - 1 - j.
        if (i >= depth && i - depth < arity) used[arity - 1 - (i - depth)] = true;
        break;
    }
    case Kind::Abstraction: mark_uses(v.body(), depth + 1, arity, used); break;
    case Kind::Application:
        mark_uses(v.function(), depth, arity, used);
        mark_uses(v.argument(), depth, arity, used);
        break;
    }
}

}  // namespace

FilterVerdict passes_filters(const Expr& candidate, std::size_t arity, const FilterPolicy& policy) {
    auto v = candidate.view();
    std::size_t leading = 0;
    auto body = v;
    while (body.is_lam()) {
        body = body.body();
        ++leading;
    }

    if (policy.require_arity && leading < arity) return FilterRejection{Filter::Arity};

    if (policy.reject_wrapped_booleans) {
        // true/false under j >= 0 extra outer binders: \x1..\xj.\a.\b.(a|b)
        if (leading >= 2 && body.is_var() && body.index() <= 1) return FilterRejection{Filter::WrappedBoolean};
    }

    if (policy.require_argument_use) {
        // Without enough binders there is nothing to check against; the arity
        // filter owns that case.
        if (leading >= arity) {
            auto inner = v;
            for (std::size_t i = 0; i < arity; ++i) inner = inner.body();
            std::vector<bool> used(arity, false);
            mark_uses(inner, 0, arity, used);
            for (bool u : used)
                if (!u) return FilterRejection{Filter::ArgumentUse};
        }
    }
    return FilterPass{};
}

AmplifierSpec make_amplifier(std::vector<std::uint32_t> inputs, std::uint32_t expected, std::uint32_t factor,
                             FilterPolicy filters) {
    if (factor == 0) throw std::invalid_argument("amplification factor must be at least 1");
    std::string id = "test(";
    for (std::size_t i = 0; i < inputs.size(); ++i) id += (i ? "," : "") + std::to_string(inputs[i]);
    id += ")=" + std::to_string(expected);
    return AmplifierSpec{std::move(id), make_unit_test(std::move(inputs), expected), factor, filters};
}

AmplifierResult evaluate_candidate(const AmplifierSpec& spec, const Expr& candidate, const ReductionLimits& limits) {
    auto verdict = passes_filters(candidate, spec.test.arity(), spec.filters);
    if (auto r = std::get_if<FilterRejection>(&verdict)) return Fail{r->filter};

    auto out = apply_and_reduce(spec.test.test_expr, candidate, limits);
    if (std::holds_alternative<StepLimitExceeded>(out)) return Inert{StepLimitExceeded{}};
    if (std::holds_alternative<SizeLimitExceeded>(out)) return Inert{SizeLimitExceeded{}};
    if (std::get<NormalForm>(out).expr == combinator(Combinator::True)) return Pass{candidate};
    return Fail{};
}

std::string_view name_of(TestFamily f) {
    switch (f) {
    case TestFamily::Successor: return "successor";
    case TestFamily::AddTwo: return "add2";
    case TestFamily::Addition: return "addition";
    }
    return "?";
}

std::optional<TestFamily> test_family_from_name(std::string_view name) {
    for (auto f : {TestFamily::Successor, TestFamily::AddTwo, TestFamily::Addition})
        if (name_of(f) == name) return f;
    return std::nullopt;
}

std::optional<TestFamily> family_of(const UnitTest& test) {
    if (test.arity() == 2 && test.expected == test.inputs[0] + test.inputs[1]) return TestFamily::Addition;
    if (test.arity() == 1 && test.expected == test.inputs[0] + 1) return TestFamily::Successor;
    if (test.arity() == 1 && test.expected == test.inputs[0] + 2) return TestFamily::AddTwo;
    return std::nullopt;
}

std::vector<AmplifierSpec> amplifier_family(TestFamily family, std::size_t count, std::uint32_t lo,
                                            std::uint32_t hi, std::uint32_t factor, FilterPolicy filters) {
    if (hi < lo) throw std::invalid_argument("empty test constant range");
    const std::uint32_t span = hi - lo + 1;
    const std::size_t cases = family == TestFamily::Addition ? std::size_t{span} * span : span;

    // Build each distinct case once; copies share the normalized test term.
    std::vector<AmplifierSpec> distinct;
    distinct.reserve(std::min(cases, count));
    for (std::size_t k = 0; k < std::min(cases, count); ++k) {
        switch (family) {
        case TestFamily::Successor: {
            auto n = lo + static_cast<std::uint32_t>(k);
            distinct.push_back(make_amplifier({n}, n + 1, factor, filters));
            break;
        }
        case TestFamily::AddTwo: {
            auto n = lo + static_cast<std::uint32_t>(k);
            distinct.push_back(make_amplifier({n}, n + 2, factor, filters));
            break;
        }
        case TestFamily::Addition: {
            auto n = lo + static_cast<std::uint32_t>(k / span);
            auto m = lo + static_cast<std::uint32_t>(k % span);
            distinct.push_back(make_amplifier({n, m}, n + m, factor, filters));
            break;
        }
        }
    }
    std::vector<AmplifierSpec> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) out.push_back(distinct[k % distinct.size()]);
    return out;
}

}  // namespace alchemy
