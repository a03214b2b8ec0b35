#include "alchemy/soup.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace alchemy {

// ---------------------------------------------------------------------------
// Random expressions

namespace {

void grow(std::uint32_t size, std::uint32_t depth, double p_abs, Rng& rng, Code& out) {
    if (size == 1) {
        out.push_back(code::var(static_cast<std::uint32_t>(rng.below(depth))));
        return;
    }
    // Closed terms need a binder above every leaf, and size 2 cannot split.
    if (depth == 0 || size == 2 || rng.chance(p_abs)) {
        out.push_back(code::lam());
        grow(size - 1, depth + 1, p_abs, rng, out);
        return;
    }
    auto left = static_cast<std::uint32_t>(rng.between(1, size - 2));
    out.push_back(code::app());
    grow(left, depth, p_abs, rng, out);
    grow(size - 1 - left, depth, p_abs, rng, out);
}

}  // namespace

std::optional<Expr> random_expression(const GeneratorParams& params, Rng& rng, const ReductionLimits& limits) {
    if (params.min_size < 2 || params.max_size < params.min_size)
        throw std::invalid_argument("random expression size range must satisfy 2 <= min <= max");
    for (std::uint32_t attempt = 0; attempt <= params.max_resamples; ++attempt) {
        auto size = static_cast<std::uint32_t>(rng.between(params.min_size, params.max_size));
        Code c;
        c.reserve(size);
        grow(size, 0, params.abstraction_probability, rng, c);
        auto out = reduce_to_normal_form(Expr::from_code(std::move(c)), limits);
        if (auto nf = as_normal_form(out)) return nf->expr;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Population description

std::vector<std::uint64_t> resolve_counts(const PopulationSpec& spec) {
    if (spec.entries.empty()) throw ConfigError("population has no entries");
    bool fractions = spec.entries.front().fraction.has_value();
    for (const auto& e : spec.entries) {
        if (e.count.has_value() == e.fraction.has_value())
            throw ConfigError("each population entry needs exactly one of count or fraction");
        if (e.fraction.has_value() != fractions) throw ConfigError("population mixes counts and fractions");
    }

    std::vector<std::uint64_t> counts;
    if (!fractions) {
        std::uint64_t total = 0;
        for (const auto& e : spec.entries) {
            counts.push_back(*e.count);
            total += *e.count;
        }
        if (total == 0) throw ConfigError("population size must be positive");
        if (spec.size && *spec.size != total) throw ConfigError("population counts do not sum to the soup size");
        return counts;
    }

    if (!spec.size || *spec.size == 0) throw ConfigError("population size must be positive");
    const auto n = *spec.size;
    double sum = 0;
    for (const auto& e : spec.entries) {
        if (*e.fraction < 0) throw ConfigError("negative population fraction");
        sum += *e.fraction;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("population fractions must sum to 1");

    std::vector<double> remainder;
    std::uint64_t assigned = 0;
    for (const auto& e : spec.entries) {
        double exact = *e.fraction * static_cast<double>(n);
        auto whole = static_cast<std::uint64_t>(std::floor(exact));
        counts.push_back(whole);
        remainder.push_back(exact - static_cast<double>(whole));
        assigned += whole;
    }
    std::vector<std::size_t> order(counts.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return remainder[a] > remainder[b]; });
    for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++counts[order[k % order.size()]];
    return counts;
}

// ---------------------------------------------------------------------------
// Soup

Soup::Soup(const std::vector<SoupElement>& elements, std::uint64_t seed, ReductionLimits limits)
    : limits_(limits), rng_(seed) {
    slots_.reserve(elements.size());
    for (const auto& e : elements) {
        if (auto m = std::get_if<Molecule>(&e)) {
            slots_.push_back(make_molecule(m->expr));
        } else {
            slots_.push_back(make_amplifier(register_spec(std::get<Amplifier>(e).spec)));
        }
    }
    spec_initial_ = spec_counts_;
    order_.resize(slots_.size());
    std::iota(order_.begin(), order_.end(), 0u);
}

std::int32_t Soup::register_spec(const std::shared_ptr<const AmplifierSpec>& spec) {
    for (std::size_t i = 0; i < specs_.size(); ++i)
        if (*specs_[i] == *spec) return static_cast<std::int32_t>(i);
    specs_.push_back(spec);
    spec_counts_.push_back(0);
    return static_cast<std::int32_t>(specs_.size() - 1);
}

Soup::Slot Soup::make_molecule(const Expr& e) {
    auto [it, inserted] = interned_.try_emplace(e, Interned{next_id_, 0});
    if (inserted) ++next_id_;
    ++it->second.count;
    return Slot{kMolecule, it->second.id, it->first};
}

Soup::Slot Soup::make_amplifier(std::int32_t spec) {
    ++spec_counts_[static_cast<std::size_t>(spec)];
    ++amplifier_total_;
    return Slot{spec, 0, Expr{}};
}

// Overwrite slot `index`, releasing whatever it held. The new slot's counts
// were already taken by make_*.
void Soup::place(std::size_t index, Slot slot) {
    auto& old = slots_[index];
    if (old.spec == kMolecule) {
        auto it = interned_.find(old.expr);
        if (--it->second.count == 0) interned_.erase(it);
    } else {
        --spec_counts_[static_cast<std::size_t>(old.spec)];
        --amplifier_total_;
    }
    old = std::move(slot);
}

std::vector<std::uint32_t> Soup::draw_distinct(std::size_t k) {
    const auto n = order_.size();
    for (std::size_t t = 0; t < k; ++t) {
        auto s = t + rng_.below(n - t);
        std::swap(order_[t], order_[s]);
    }
    return {order_.begin(), order_.begin() + static_cast<std::ptrdiff_t>(k)};
}

void Soup::remember(const MemoKey& key, const MemoValue& v) {
    if (memo_capacity_ == 0) return;
    constexpr std::size_t kMaxTokens = std::size_t{1} << 24;
    if (memo_.size() >= memo_capacity_ || memo_tokens_ >= kMaxTokens) {
        memo_.clear();
        memo_tokens_ = 0;
    }
    if (memo_.emplace(key, v).second && v.kind == MemoKind::Product) memo_tokens_ += v.product.size();
}

Soup::MemoValue Soup::react(const Slot& a, const Slot& b) {
    const bool amplifier = a.spec != kMolecule;
    const MemoKey key{amplifier ? (1ull << 63) | static_cast<std::uint64_t>(a.spec) : a.id, b.id};
    if (auto it = memo_.find(key); it != memo_.end()) {
        ++memo_hits_;
        return it->second;
    }

    MemoValue v{MemoKind::Fail, Expr{}};
    if (amplifier) {
        auto r = evaluate_candidate(*specs_[static_cast<std::size_t>(a.spec)], b.expr, limits_);
        if (std::holds_alternative<Pass>(r)) v.kind = MemoKind::Pass;
        else if (auto inert = std::get_if<Inert>(&r))
            v.kind = std::holds_alternative<StepLimitExceeded>(inert->reason) ? MemoKind::StepLimit
                                                                                : MemoKind::SizeLimit;
    } else {
        auto r = apply_and_reduce(a.expr, b.expr, limits_);
        if (auto nf = as_normal_form(r)) v = {MemoKind::Product, nf->expr};
        else if (std::holds_alternative<StepLimitExceeded>(r)) v.kind = MemoKind::StepLimit;
        else v.kind = MemoKind::SizeLimit;
    }
    remember(key, v);
    return v;
}

CollisionOutcome Soup::collide() {
    const auto n = slots_.size();
    if (n < 2) throw std::logic_error("collision needs at least two elements");
    ++collisions_;

    auto i = rng_.below(n);
    auto j = rng_.below(n - 1);
    if (j >= i) ++j;
    const Slot a = slots_[i];
    const Slot b = slots_[j];

    if (b.spec != kMolecule) return EagerFail{};

    auto v = react(a, b);
    switch (v.kind) {
    case MemoKind::StepLimit: return FailedCollision{StepLimitExceeded{}};
    case MemoKind::SizeLimit: return FailedCollision{SizeLimitExceeded{}};
    case MemoKind::Pass: {
        auto copies = std::min<std::uint64_t>(specs_[static_cast<std::size_t>(a.spec)]->amplification_factor, n);
        for (auto slot : draw_distinct(copies)) place(slot, make_molecule(b.expr));
        return AmplifiedReaction{b.expr, static_cast<std::uint32_t>(copies)};
    }
    case MemoKind::Fail: {
        place(rng_.below(n), make_amplifier(a.spec));
        return Reaction{Amplifier{specs_[static_cast<std::size_t>(a.spec)]}};
    }
    case MemoKind::Product: {
        place(rng_.below(n), make_molecule(v.product));
        return Reaction{Molecule{v.product}};
    }
    }
    return EagerFail{};
}

PerturbResult Soup::perturb() {
    PerturbResult result;
    std::vector<std::uint32_t> molecules;
    bool gathered = false;
    for (std::size_t s = 0; s < specs_.size(); ++s) {
        if (spec_counts_[s] >= spec_initial_[s]) continue;
        if (!gathered) {
            for (std::uint32_t k = 0; k < slots_.size(); ++k)
                if (slots_[k].spec == kMolecule) molecules.push_back(k);
            gathered = true;
        }
        auto deficit = spec_initial_[s] - spec_counts_[s];
        for (std::uint64_t d = 0; d < deficit; ++d) {
            if (molecules.empty()) {
                result.partial = true;
                return result;
            }
            auto pick = rng_.below(molecules.size());
            auto slot = molecules[pick];
            molecules[pick] = molecules.back();
            molecules.pop_back();
            place(slot, make_amplifier(static_cast<std::int32_t>(s)));
            ++result.added;
        }
    }
    return result;
}

SoupElement Soup::element(std::size_t i) const {
    const auto& s = slots_.at(i);
    if (s.spec == kMolecule) return Molecule{s.expr};
    return Amplifier{specs_[static_cast<std::size_t>(s.spec)]};
}

std::vector<SoupElement> Soup::elements() const {
    std::vector<SoupElement> out;
    out.reserve(slots_.size());
    for (std::size_t i = 0; i < slots_.size(); ++i) out.push_back(element(i));
    return out;
}

std::uint64_t Soup::count(const Expr& e) const {
    auto it = interned_.find(e);
    return it == interned_.end() ? 0 : it->second.count;
}

std::uint64_t Soup::amplifier_count(const AmplifierSpec& spec) const {
    for (std::size_t i = 0; i < specs_.size(); ++i)
        if (*specs_[i] == spec) return spec_counts_[i];
    return 0;
}

Soup init_soup(const PopulationSpec& spec, std::uint64_t seed, ReductionLimits limits) {
    auto counts = resolve_counts(spec);
    Rng gen(splitmix64(seed ^ 0x5eed5eed5eed5eedull));
    std::vector<SoupElement> elements;
    for (std::size_t k = 0; k < spec.entries.size(); ++k) {
        const auto& entry = spec.entries[k].element;
        if (auto m = std::get_if<Molecules>(&entry)) {
            elements.insert(elements.end(), counts[k], Molecule{m->expr});
        } else if (auto a = std::get_if<Amplifiers>(&entry)) {
            if (a->specs.empty()) throw ConfigError("amplifier entry has no specs");
            std::vector<std::shared_ptr<const AmplifierSpec>> shared;
            for (const auto& s : a->specs) shared.push_back(std::make_shared<const AmplifierSpec>(s));
            for (std::uint64_t c = 0; c < counts[k]; ++c) elements.push_back(Amplifier{shared[c % shared.size()]});
        } else {
            const auto& params = std::get<RandomMolecules>(entry).params;
            for (std::uint64_t c = 0; c < counts[k]; ++c) {
                auto e = random_expression(params, gen, limits);
                if (!e) throw std::runtime_error("random expression generator gave up");
                elements.push_back(Molecule{*e});
            }
        }
    }
    if (elements.size() < 2) throw ConfigError("soup needs at least two elements");
    return Soup(elements, seed, limits);
}

std::vector<PopulationRecord> run(Soup& soup, std::uint64_t total_collisions, const Schedules& schedules,
                                  const Observer& observer) {
    if (schedules.measure_every == 0 || (schedules.perturb_every && *schedules.perturb_every == 0))
        throw ConfigError("schedule intervals must be positive");
    std::vector<PopulationRecord> records;
    records.reserve(total_collisions / schedules.measure_every);
    for (std::uint64_t c = 0; c < total_collisions; ++c) {
        soup.collide();
        auto t = soup.collisions();
        if (t % schedules.measure_every == 0) records.push_back(observer(soup));
        if (schedules.perturb_every && t % *schedules.perturb_every == 0) soup.perturb();
    }
    return records;
}

}  // namespace alchemy
