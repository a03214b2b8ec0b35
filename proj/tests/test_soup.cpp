#include "doctest.h"

#include <algorithm>
#include <map>

#include "alchemy/metrics.hpp"
#include "alchemy/soup.hpp"
#include "alchemy/stdlib.hpp"
#include "support/reference.hpp"

using namespace alchemy;

namespace {

Expr S() { return combinator(Combinator::S); }
Expr K() { return combinator(Combinator::K); }
Expr I() { return combinator(Combinator::I); }
Expr Scc() { return combinator(Combinator::Scc); }

SoupElement mol(const Expr& e) { return Molecule{e}; }
SoupElement amp(const AmplifierSpec& s) { return Amplifier{std::make_shared<const AmplifierSpec>(s)}; }

std::vector<SoupElement> repeat(const SoupElement& e, std::size_t n) { return std::vector<SoupElement>(n, e); }

std::vector<SoupElement> concat(std::initializer_list<std::vector<SoupElement>> parts) {
    std::vector<SoupElement> out;
    for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
    return out;
}

// Molecule text or amplifier id per slot.
std::vector<std::string> snapshot(const Soup& soup) {
    std::vector<std::string> out;
    for (const auto& e : soup.elements()) {
        if (auto m = std::get_if<Molecule>(&e)) out.push_back(print(m->expr));
        else out.push_back("amp:" + std::get<Amplifier>(e).spec->id);
    }
    return out;
}

std::uint64_t molecules(const Soup& soup) { return soup.size() - soup.amplifier_count(); }

PopulationRecord count_all(const Soup& soup) {
    PopulationRecord r;
    r.collision_index = soup.collisions();
    r.soup_size = soup.size();
    return r;
}

}  // namespace

TEST_CASE("resolve_counts") {
    PopulationSpec spec{6000,
                        {{Molecules{S()}, std::nullopt, 5.0 / 18},
                         {Molecules{K()}, std::nullopt, 5.0 / 18},
                         {Molecules{I()}, std::nullopt, 5.0 / 18},
                         {Amplifiers{amplifier_family(TestFamily::Successor, 21)}, std::nullopt, 1.0 / 6}}};
    CHECK(resolve_counts(spec) == std::vector<std::uint64_t>{1667, 1667, 1666, 1000});

    PopulationSpec counts{std::nullopt, {{Molecules{S()}, 3, std::nullopt}, {Molecules{K()}, 4, std::nullopt}}};
    CHECK(resolve_counts(counts) == std::vector<std::uint64_t>{3, 4});
    counts.size = 8;
    CHECK_THROWS_AS(resolve_counts(counts), ConfigError);

    PopulationSpec bad_sum{100, {{Molecules{S()}, std::nullopt, 0.5}, {Molecules{K()}, std::nullopt, 0.4}}};
    CHECK_THROWS_AS(resolve_counts(bad_sum), ConfigError);
    PopulationSpec mixed{100, {{Molecules{S()}, 50, std::nullopt}, {Molecules{K()}, std::nullopt, 0.5}}};
    CHECK_THROWS_AS(resolve_counts(mixed), ConfigError);
    PopulationSpec empty{0, {{Molecules{S()}, std::nullopt, 1.0}}};
    CHECK_THROWS_AS(resolve_counts(empty), ConfigError);
}

TEST_CASE("initial populations") {
    SUBCASE("5000 seeds and 1000 successor amplifiers") {
        PopulationSpec spec{6000,
                            {{Molecules{S()}, std::nullopt, 5.0 / 18},
                             {Molecules{K()}, std::nullopt, 5.0 / 18},
                             {Molecules{I()}, std::nullopt, 5.0 / 18},
                             {Amplifiers{amplifier_family(TestFamily::Successor, 21)}, std::nullopt, 1.0 / 6}}};
        auto soup = init_soup(spec, 1);
        CHECK(soup.size() == 6000);
        CHECK(soup.count(S()) + soup.count(K()) + soup.count(I()) == 5000);
        CHECK(soup.amplifier_count() == 1000);
        // 1000 = 47 * 21 + 13: n = 0..12 appear 48 times, the rest 47
        for (std::uint32_t n = 0; n <= 20; ++n)
            CHECK(soup.amplifier_count(make_amplifier({n}, n + 1)) == (n < 13 ? 48u : 47u));
    }
    SUBCASE("15% amplifiers and S/K/I/P quarters") {
        PopulationSpec spec{5000,
                            {{Amplifiers{amplifier_family(TestFamily::Successor, 21)}, std::nullopt, 0.075},
                             {Amplifiers{amplifier_family(TestFamily::Addition, 375)}, std::nullopt, 0.075},
                             {Molecules{S()}, std::nullopt, 0.2125},
                             {Molecules{K()}, std::nullopt, 0.2125},
                             {Molecules{I()}, std::nullopt, 0.2125},
                             {Molecules{combinator(Combinator::P)}, std::nullopt, 0.2125}}};
        auto soup = init_soup(spec, 2);
        CHECK(soup.amplifier_count() == 750);
        CHECK(soup.count(S()) + soup.count(K()) + soup.count(I()) + soup.count(combinator(Combinator::P)) == 4250);
        CHECK(soup.count(combinator(Combinator::P)) >= 1062);
    }
    SUBCASE("heatmap pixel") {
        PopulationSpec spec{5000,
                            {{Molecules{Scc()}, std::nullopt, 0.0016},
                             {Amplifiers{amplifier_family(TestFamily::Successor, 21)}, std::nullopt, 0.1},
                             {Molecules{S()}, std::nullopt, 0.2998},
                             {Molecules{K()}, std::nullopt, 0.2993},
                             {Molecules{I()}, std::nullopt, 0.2993}}};
        auto soup = init_soup(spec, 3);
        CHECK(soup.count(Scc()) == 8);
        CHECK(soup.amplifier_count() == 500);
    }
    SUBCASE("random molecules are closed normal forms") {
        PopulationSpec spec{300, {{RandomMolecules{GeneratorParams{}}, std::nullopt, 1.0}}};
        auto soup = init_soup(spec, 4);
        for (const auto& e : soup.elements()) {
            const auto& m = std::get<Molecule>(e).expr;
            CHECK(m.closed());
            CHECK(in_normal_form(m));
        }
    }
}

TEST_CASE("molecule collisions replace one slot") {
    Soup soup({mol(I()), mol(K())}, 5);
    auto out = soup.collide();
    REQUIRE(std::holds_alternative<Reaction>(out));
    auto product = std::get<Molecule>(std::get<Reaction>(out).product).expr;
    // I K -> K, or K I -> \y.I
    CHECK((product == K() || product == Expr::lam(I())));
    CHECK(soup.size() == 2);
    CHECK(soup.count(product) >= 1);
    CHECK(soup.collisions() == 1);
}

TEST_CASE("amplified reactions insert factor copies") {
    int seen = 0;
    for (std::uint64_t seed = 0; seed < 4000 && seen < 5; ++seed) {
        Soup soup(concat({{amp(make_amplifier({2}, 3))}, repeat(mol(Scc()), 99), repeat(mol(K()), 100)}), seed);
        auto out = soup.collide();
        if (!std::holds_alternative<AmplifiedReaction>(out)) {
            CHECK((std::holds_alternative<Reaction>(out) || std::holds_alternative<EagerFail>(out)));
            continue;
        }
        ++seen;
        const auto& r = std::get<AmplifiedReaction>(out);
        CHECK(r.copies == 100);
        CHECK(r.candidate == Scc());
        CHECK(soup.size() == 200);
        // 100 distinct slots became scc; the overwritten K/amplifier slots are gone
        auto scc = soup.count(Scc());
        CHECK(scc >= 100);
        CHECK(scc == 99 + (100 - soup.count(K())) + (1 - soup.amplifier_count()));
    }
    CHECK(seen == 5);

    // factor larger than the soup fills every slot
    Soup tiny({amp(make_amplifier({2}, 3)), mol(Scc()), mol(Scc())}, 1);
    for (int k = 0; k < 50; ++k) {
        auto out = tiny.collide();
        if (auto r = std::get_if<AmplifiedReaction>(&out)) {
            CHECK(r->copies == 3);
            CHECK(tiny.count(Scc()) == 3);
            break;
        }
    }
}

TEST_CASE("amplifiers as arguments fail eagerly and change nothing") {
    int eager = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        Soup soup({mol(K()), amp(make_amplifier({2}, 3))}, seed);
        auto before = snapshot(soup);
        auto out = soup.collide();
        if (std::holds_alternative<EagerFail>(out)) {
            ++eager;
            CHECK(snapshot(soup) == before);
        } else {
            // amplifier applied to K: rejected, so the amplifier copies itself
            REQUIRE(std::holds_alternative<Reaction>(out));
            CHECK(std::holds_alternative<Amplifier>(std::get<Reaction>(out).product));
            CHECK(soup.amplifier_count() >= 1);
        }
        CHECK(soup.collisions() == 1);
    }
    CHECK(eager > 50);
}

TEST_CASE("limit outcomes leave the population unchanged") {
    auto blowup = parse("\\m. m m");
    int size_failures = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Soup soup({amp(make_amplifier({10}, 11)), mol(blowup)}, seed);
        auto before = snapshot(soup);
        auto out = soup.collide();
        if (auto f = std::get_if<FailedCollision>(&out)) {
            ++size_failures;
            CHECK(std::holds_alternative<SizeLimitExceeded>(f->reason));
        } else {
            CHECK(std::holds_alternative<EagerFail>(out));
        }
        CHECK(snapshot(soup) == before);
    }
    CHECK(size_failures > 20);

    // molecule pair without a normal form
    auto w = parse("\\x.x x");
    Soup loop({mol(w), mol(w)}, 3);
    auto out = loop.collide();
    REQUIRE(std::holds_alternative<FailedCollision>(out));
    CHECK(std::holds_alternative<StepLimitExceeded>(std::get<FailedCollision>(out).reason));
    CHECK(loop.count(w) == 2);
}

TEST_CASE("the removed slot is uniform over the whole soup") {
    // x_k = \y. church(k): every product church(a) is new, so exactly the
    // overwritten slot changes.
    const std::size_t n = 10;
    std::vector<SoupElement> elements;
    for (std::uint32_t k = 0; k < n; ++k) elements.push_back(mol(Expr::lam(church(k))));
    std::vector<int> hits(n, 0);
    const int trials = 20000;
    for (int t = 0; t < trials; ++t) {
        Soup soup(elements, static_cast<std::uint64_t>(t));
        auto before = snapshot(soup);
        REQUIRE(std::holds_alternative<Reaction>(soup.collide()));
        auto after = snapshot(soup);
        int changed = 0;
        for (std::size_t k = 0; k < n; ++k)
            if (before[k] != after[k]) {
                ++hits[k];
                ++changed;
            }
        CHECK(changed == 1);
    }
    double chi2 = 0, expected = static_cast<double>(trials) / n;
    for (int h : hits) chi2 += (h - expected) * (h - expected) / expected;
    // 9 degrees of freedom, p = 0.001
    CHECK(chi2 < 27.88);
}

TEST_CASE("population size is constant and molecules stay normal") {
    PopulationSpec spec{400,
                        {{Molecules{S()}, std::nullopt, 0.3},
                         {Molecules{K()}, std::nullopt, 0.3},
                         {Molecules{I()}, std::nullopt, 0.2},
                         {Amplifiers{amplifier_family(TestFamily::Successor, 21)}, std::nullopt, 0.2}}};
    auto soup = init_soup(spec, 9);
    for (int k = 0; k < 20000; ++k) {
        soup.collide();
        if (k % 500 == 0) {
            REQUIRE(soup.size() == 400);
            for (const auto& e : soup.elements())
                if (auto m = std::get_if<Molecule>(&e)) CHECK(in_normal_form(m->expr));
        }
        if (k % 5000 == 4999) {
            soup.perturb();
            CHECK(soup.size() == 400);
        }
    }
}

TEST_CASE("without amplifiers the dynamics match a bare reference loop") {
    Rng gen(77);
    std::vector<Expr> slots;
    std::vector<SoupElement> elements;
    for (int k = 0; k < 60; ++k) {
        Expr e = k % 3 == 0 ? S() : k % 3 == 1 ? K() : I();
        if (k % 5 == 0) e = *random_expression(GeneratorParams{4, 12, 0.5, 100}, gen);
        slots.push_back(e);
        elements.push_back(mol(e));
    }
    const ReductionLimits limits(100, 100);
    const std::uint64_t seed = 1234;
    Soup soup(elements, seed, limits);
    Rng rng(seed);
    for (int c = 0; c < 1500; ++c) {
        soup.collide();
        const auto n = slots.size();
        auto i = rng.below(n);
        auto j = rng.below(n - 1);
        if (j >= i) ++j;
        auto out = ref::normalize(ref::app(ref::from_expr(slots[i]), ref::from_expr(slots[j])), 100, 100);
        if (auto nf = std::get_if<ref::Normal>(&out)) slots[rng.below(n)] = ref::to_expr(nf->term);
        if (c % 100 == 99) {
            auto now = soup.elements();
            REQUIRE(now.size() == n);
            for (std::size_t k = 0; k < n; ++k) REQUIRE(std::get<Molecule>(now[k]).expr == slots[k]);
        }
    }
}

TEST_CASE("run schedules") {
    Soup soup(repeat(mol(I()), 50), 1);
    auto none = run(soup, 0, Schedules{1000, 100000}, count_all);
    CHECK(none.empty());
    CHECK(soup.collisions() == 0);

    auto records = run(soup, 1000000, Schedules{1000, 100000}, count_all);
    REQUIRE(records.size() == 1000);
    CHECK(records.front().collision_index == 1000);
    CHECK(records.back().collision_index == 1000000);

    Soup other(repeat(mol(I()), 50), 1);
    CHECK_THROWS_AS(run(other, 10, Schedules{0, 100000}, count_all), ConfigError);
    CHECK_THROWS_AS(run(other, 10, Schedules{1, 0}, count_all), ConfigError);
}

TEST_CASE("determinism, with and without the reaction cache") {
    PopulationSpec spec{500,
                        {{Molecules{S()}, std::nullopt, 0.3},
                         {Molecules{K()}, std::nullopt, 0.3},
                         {Molecules{I()}, std::nullopt, 0.25},
                         {Amplifiers{amplifier_family(TestFamily::Successor, 21)}, std::nullopt, 0.15}}};
    MotifSet motifs({{"scc", Scc()}, {"S", S()}, {"K", K()}, {"amplifiers", AmplifierMotif{}}});
    auto observe = [&](const Soup& s) { return motifs.measure(s); };
    auto a = init_soup(spec, 21);
    auto b = init_soup(spec, 21);
    auto c = init_soup(spec, 21);
    c.set_memo_capacity(0);
    Schedules sched{500, 5000};
    auto ra = run(a, 30000, sched, observe);
    auto rb = run(b, 30000, sched, observe);
    auto rc = run(c, 30000, sched, observe);
    CHECK(ra == rb);
    CHECK(ra == rc);
    CHECK(snapshot(a) == snapshot(c));
    CHECK(c.memo_hits() == 0);
    CHECK(a.memo_hits() > 0);

    auto d = init_soup(spec, 22);
    CHECK(run(d, 30000, sched, observe) != ra);
}

TEST_CASE("perturb restores the initial amplifier multiset") {
    SUBCASE("refills exactly the deficit from molecules") {
        PopulationSpec spec{2000,
                            {{Molecules{Scc()}, std::nullopt, 0.1},
                             {Molecules{K()}, std::nullopt, 0.4},
                             {Molecules{I()}, std::nullopt, 0.4},
                             {Amplifiers{amplifier_family(TestFamily::Successor, 21)}, std::nullopt, 0.1}}};
        auto soup = init_soup(spec, 5);
        REQUIRE(soup.amplifier_count() == 200);
        std::vector<std::uint64_t> initial;
        for (std::size_t s = 0; s < soup.amplifier_specs().size(); ++s) initial.push_back(soup.amplifier_count(s));
        int checked = 0;
        for (int round = 0; round < 20; ++round) {
            for (int k = 0; k < 300; ++k) soup.collide();
            std::uint64_t deficit = 0;
            for (std::size_t s = 0; s < initial.size(); ++s)
                if (soup.amplifier_count(s) < initial[s]) deficit += initial[s] - soup.amplifier_count(s);
            auto before = molecules(soup);
            auto result = soup.perturb();
            CHECK(result.added == deficit);
            CHECK_FALSE(result.partial);
            CHECK(molecules(soup) == before - deficit);
            CHECK(soup.size() == 2000);
            for (std::size_t s = 0; s < initial.size(); ++s) CHECK(soup.amplifier_count(s) >= initial[s]);
            if (deficit > 0) ++checked;
        }
        CHECK(checked > 0);
    }
    SUBCASE("intact or absent amplifiers add nothing") {
        Soup soup(concat({repeat(amp(make_amplifier({2}, 3)), 5), repeat(mol(K()), 5)}), 1);
        CHECK(soup.perturb().added == 0);
        Soup plain(repeat(mol(K()), 10), 1);
        CHECK(plain.perturb().added == 0);
        CHECK(plain.amplifier_specs().empty());
    }
}

TEST_CASE("random expressions") {
    Rng rng(3);
    for (int k = 0; k < 200; ++k) {
        auto e = random_expression(GeneratorParams{2, 2, 1.0, 100}, rng);
        REQUIRE(e);
        CHECK(*e == I());
    }
    GeneratorParams params{4, 24, 0.5, 100};
    double total = 0;
    int produced = 0;
    for (int k = 0; k < 10000; ++k) {
        auto e = random_expression(params, rng);
        if (!e) continue;
        ++produced;
        CHECK(e->closed());
        CHECK(in_normal_form(*e));
        total += static_cast<double>(e->size());
    }
    REQUIRE(produced > 9000);
    double mean = total / produced;
    MESSAGE("mean size " << mean);
    CHECK(mean >= 0.5 * params.min_size);
    CHECK(mean <= 1.5 * params.max_size);

    Rng x(99), y(99);
    for (int k = 0; k < 100; ++k) CHECK(random_expression(params, x) == random_expression(params, y));
}
