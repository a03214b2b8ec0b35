#include "doctest.h"

#include <random>

#include "alchemy/amplifier.hpp"
#include "alchemy/soup.hpp"
#include "alchemy/stdlib.hpp"
#include "support/reference.hpp"

using namespace alchemy;

namespace {

// \f. eq (f n1 .. nk) expected, normalized by the oracle
Expr oracle_test(std::vector<std::uint32_t> inputs, std::uint32_t expected) {
    ref::Term call = ref::var(0);
    for (auto n : inputs) call = ref::app(call, ref::numeral(n));
    auto eq = ref::from_expr(combinator(Combinator::Eq));
    auto t = ref::lam(ref::apply(eq, {call, ref::numeral(expected)}));
    auto out = ref::normalize(t, 100000, 100000);
    REQUIRE(std::holds_alternative<ref::Normal>(out));
    return ref::to_expr(std::get<ref::Normal>(out).term);
}

bool is_pass(const AmplifierResult& r) { return std::holds_alternative<Pass>(r); }

std::optional<Filter> rejected_by(const FilterVerdict& v) {
    if (auto r = std::get_if<FilterRejection>(&v)) return r->filter;
    return std::nullopt;
}

FilterPolicy only(bool arity, bool use, bool wrapped) { return FilterPolicy{arity, use, wrapped}; }

}  // namespace

TEST_CASE("unit test terms") {
    auto t = make_unit_test({4}, 5);
    CHECK(t.arity() == 1);
    CHECK(t.test_expr == oracle_test({4}, 5));
    CHECK(make_unit_test({2, 3}, 5).test_expr == oracle_test({2, 3}, 5));
    CHECK(make_unit_test({0}, 2).test_expr == oracle_test({0}, 2));
    CHECK(t.test_expr.closed());
    CHECK(in_normal_form(t.test_expr));
    CHECK_THROWS_AS(make_unit_test({}, 1), std::invalid_argument);
    CHECK_THROWS_AS(make_unit_test({1, 2, 3}, 6), std::invalid_argument);
    CHECK(make_unit_test({4}, 5) == make_unit_test({4}, 5));
    CHECK_FALSE(make_unit_test({4}, 5) == make_unit_test({4}, 6));
}

TEST_CASE("filter counterexamples") {
    // identity vs a two-input test: too few binders
    CHECK(rejected_by(passes_filters(parse("\\x.x"), 2)) == Filter::Arity);
    // constant function never looks at its input
    CHECK(rejected_by(passes_filters(parse("\\n.\\a.\\b.a b"), 1)) == Filter::ArgumentUse);
    // true under one extra binder
    CHECK(rejected_by(passes_filters(parse("\\q.\\a.\\b.a"), 1)) == Filter::WrappedBoolean);
    CHECK(rejected_by(passes_filters(parse("\\q.\\r.\\a.\\b.b"), 2, only(false, false, true))) ==
          Filter::WrappedBoolean);
    // bare true/false count as wrapped with zero extra binders
    CHECK(rejected_by(passes_filters(combinator(Combinator::False), 0)) == Filter::WrappedBoolean);
    // a bound variable other than the last two is not a boolean
    CHECK(passed(passes_filters(parse("\\q.\\a.\\b.q"), 1)));
}

TEST_CASE("the constant trickster is caught only by the argument-use filter") {
    auto trickster = parse("\\n.\\a.\\b.a(a b)");
    CHECK(passed(passes_filters(trickster, 1, only(true, false, false))));
    CHECK(passed(passes_filters(trickster, 1, only(false, false, true))));
    CHECK(rejected_by(passes_filters(trickster, 1, only(false, true, false))) == Filter::ArgumentUse);
    // and it would fool the ([1], 2) test without filters
    auto spec = make_amplifier({1}, 2, 100, only(false, false, false));
    CHECK(is_pass(evaluate_candidate(spec, trickster)));
    auto guarded = make_amplifier({1}, 2);
    auto r = evaluate_candidate(guarded, trickster);
    REQUIRE(std::holds_alternative<Fail>(r));
    CHECK(std::get<Fail>(r).filter == Filter::ArgumentUse);
}

TEST_CASE("reference functions pass the filters and all their tests") {
    for (std::uint32_t n = 0; n <= 20; ++n) {
        CHECK(is_pass(evaluate_candidate(make_amplifier({n}, n + 1), combinator(Combinator::Scc))));
        CHECK(is_pass(evaluate_candidate(make_amplifier({n}, n + 2), combinator(Combinator::Add2))));
    }
    for (std::uint32_t n = 0; n <= 20; n += 4)
        for (std::uint32_t m = 0; m <= 20; m += 5)
            CHECK(is_pass(evaluate_candidate(make_amplifier({n, m}, n + m), combinator(Combinator::Add))));
    CHECK(passed(passes_filters(combinator(Combinator::Scc), 1)));
    CHECK(passed(passes_filters(combinator(Combinator::Add2), 1)));
    CHECK(passed(passes_filters(combinator(Combinator::Add), 2)));
}

TEST_CASE("evaluate_candidate outcomes") {
    auto succ2 = make_amplifier({2}, 3);
    CHECK(is_pass(evaluate_candidate(succ2, combinator(Combinator::Scc))));
    // K is true itself, so the boolean filter stops it; without filters eq (K 2) 3 is still false
    auto k = evaluate_candidate(succ2, combinator(Combinator::K));
    REQUIRE(std::holds_alternative<Fail>(k));
    CHECK(std::get<Fail>(k).filter == Filter::WrappedBoolean);
    auto unfiltered = evaluate_candidate(make_amplifier({2}, 3, 100, only(false, false, false)), combinator(Combinator::K));
    REQUIRE(std::holds_alternative<Fail>(unfiltered));
    CHECK_FALSE(std::get<Fail>(unfiltered).filter.has_value());
    CHECK(is_pass(evaluate_candidate(make_amplifier({2, 3}, 5), combinator(Combinator::Add))));
    // add2 is not a successor
    CHECK(std::holds_alternative<Fail>(evaluate_candidate(succ2, combinator(Combinator::Add2))));

    // 10^10 blows the vertex budget
    auto blowup = parse("\\m. m m");
    CHECK(passed(passes_filters(blowup, 1)));
    auto inert = evaluate_candidate(make_amplifier({10}, 11), blowup);
    REQUIRE(std::holds_alternative<Inert>(inert));
    CHECK(std::holds_alternative<SizeLimitExceeded>(std::get<Inert>(inert).reason));
    // an endless candidate runs out of steps instead
    auto loop = parse("\\n.(\\x.x x)(\\x.x x) n");
    auto stuck = evaluate_candidate(make_amplifier({1}, 2, 100, only(false, false, false)), loop);
    REQUIRE(std::holds_alternative<Inert>(stuck));
    CHECK(std::holds_alternative<StepLimitExceeded>(std::get<Inert>(stuck).reason));
}

TEST_CASE("amplifier ids and validation") {
    CHECK(make_amplifier({2, 3}, 5).id == "test(2,3)=5");
    CHECK(make_amplifier({4}, 5).amplification_factor == 100);
    CHECK_THROWS_AS(make_amplifier({4}, 5, 0), std::invalid_argument);
}

TEST_CASE("test families") {
    CHECK(family_of(make_unit_test({3}, 4)) == TestFamily::Successor);
    CHECK(family_of(make_unit_test({3}, 5)) == TestFamily::AddTwo);
    CHECK(family_of(make_unit_test({3, 4}, 7)) == TestFamily::Addition);
    CHECK_FALSE(family_of(make_unit_test({3}, 9)).has_value());
    for (auto f : {TestFamily::Successor, TestFamily::AddTwo, TestFamily::Addition})
        CHECK(test_family_from_name(name_of(f)) == f);

    auto succ = amplifier_family(TestFamily::Successor, 1000);
    REQUIRE(succ.size() == 1000);
    for (std::size_t k = 0; k < succ.size(); ++k) {
        CHECK(succ[k].test.inputs == std::vector<std::uint32_t>{static_cast<std::uint32_t>(k % 21)});
        CHECK(succ[k].test.expected == k % 21 + 1);
    }
    auto add = amplifier_family(TestFamily::Addition, 30, 0, 4);
    CHECK(add[0].test.inputs == std::vector<std::uint32_t>{0, 0});
    CHECK(add[6].test.inputs == std::vector<std::uint32_t>{1, 1});
    CHECK(add[25].test.inputs == std::vector<std::uint32_t>{0, 0});
    CHECK(add[24].test.expected == 8);
    CHECK_THROWS_AS(amplifier_family(TestFamily::Successor, 3, 5, 4), std::invalid_argument);
}

TEST_CASE("property: passes are sound and filters only ever remove passes") {
    Rng rng(12);
    const auto specs = {make_amplifier({1}, 2, 100, only(false, false, false)),
                        make_amplifier({0}, 2, 100, only(false, false, false)),
                        make_amplifier({1, 2}, 3, 100, only(false, false, false))};
    const std::vector<FilterPolicy> policies = {only(true, true, true),  only(true, false, false),
                                                only(false, true, false), only(false, false, true),
                                                only(true, true, false), only(false, false, false)};
    int unfiltered_passes = 0;
    std::vector<Expr> candidates = {combinator(Combinator::Scc), combinator(Combinator::Add2),
                                    combinator(Combinator::Add), parse("\\n.\\a.\\b.a(a b)"),
                                    parse("\\n.\\a.\\b.a(a(a b))"), parse("\\q.\\a.\\b.a")};
    for (int k = 0; k < 1500; ++k)
        if (auto e = random_expression(GeneratorParams{4, 20, 0.5, 100}, rng)) candidates.push_back(*e);
    for (const auto& c : candidates) {
        for (const auto& base : specs) {
            auto open = evaluate_candidate(base, c);
            if (is_pass(open)) {
                ++unfiltered_passes;
                auto out = ref::normalize(ref::app(ref::from_expr(base.test.test_expr), ref::from_expr(c)));
                REQUIRE(std::holds_alternative<ref::Normal>(out));
                CHECK(ref::to_expr(std::get<ref::Normal>(out).term) == combinator(Combinator::True));
            }
            for (const auto& p : policies) {
                auto spec = base;
                spec.filters = p;
                if (is_pass(evaluate_candidate(spec, c))) CHECK(is_pass(open));
                // weakening any single filter keeps a pass a pass
                for (int drop = 0; drop < 3; ++drop) {
                    auto weaker = p;
                    if (drop == 0) weaker.require_arity = false;
                    if (drop == 1) weaker.require_argument_use = false;
                    if (drop == 2) weaker.reject_wrapped_booleans = false;
                    auto s2 = base;
                    s2.filters = weaker;
                    if (is_pass(evaluate_candidate(spec, c))) CHECK(is_pass(evaluate_candidate(s2, c)));
                }
            }
        }
    }
    MESSAGE(unfiltered_passes << " unfiltered passes");
    CHECK(unfiltered_passes > 0);
}
