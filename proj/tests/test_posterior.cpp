#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>

#include "ratelab/errors.hpp"
#include "ratelab/math_util.hpp"
#include "ratelab/posterior.hpp"
#include "support/instances.hpp"

using namespace ratelab;
using namespace ratelab::testkit;

namespace {

std::shared_ptr<const ModelFamily> two_member_family() {
    return std::make_shared<const ModelFamily>(ModelFamily::from_members(
        {FiniteDensity::bernoulli(0.3), FiniteDensity::bernoulli(0.45)}));
}

} // namespace

TEST_CASE("init state is the prior") {
    auto family = two_member_family();
    auto prior = std::make_shared<const Prior>(Prior::from_weights({0.25, 0.75}));
    const PosteriorState state = PosteriorState::init(family, prior, 1);
    CHECK(state.n() == 0);
    for (double lr : state.log_ratios()) CHECK(lr == 0.0);
    const std::vector<std::size_t> b = {0};
    CHECK(state.posterior_mass(b) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(state.log_evidence() == doctest::Approx(0.0).epsilon(1e-15));

    auto bad_prior = std::make_shared<const Prior>(Prior::uniform(3));
    CHECK_THROWS_AS(PosteriorState::init(family, bad_prior, 0), Error);
    CHECK_THROWS_AS(PosteriorState::init(family, prior, 5), Error);
}

TEST_CASE("single update matches the hand expansion") {
    auto family = two_member_family();
    auto prior = std::make_shared<const Prior>(Prior::from_weights({0.5, 0.5}));
    const PosteriorState s1 = PosteriorState::init(family, prior, 1).updated(1);
    // mass({i}) proportional to w_i p_i(x)/pstar(x)
    const double r0 = 0.3 / 0.45, r1 = 1.0;
    const std::vector<std::size_t> b0 = {0};
    CHECK(s1.posterior_mass(b0) == doctest::Approx(r0 / (r0 + r1)).epsilon(1e-14));
    CHECK(s1.n() == 1);
}

TEST_CASE("annihilated members stay with weight zero") {
    auto family = std::make_shared<const ModelFamily>(ModelFamily::from_members(
        {FiniteDensity::from_probs({1.0, 0.0}), FiniteDensity::bernoulli(0.5)}));
    auto prior = std::make_shared<const Prior>(Prior::uniform(2));
    PosteriorState state = PosteriorState::init(family, prior, 1);
    state = state.updated(1);  // member 0 cannot produce symbol 1
    CHECK(state.log_ratios()[0] == neg_inf);
    const std::vector<std::size_t> b0 = {0};
    CHECK(state.posterior_mass(b0) == 0.0);
    state = state.updated(0);
    CHECK(state.log_ratios()[0] == neg_inf);  // annihilation is permanent
    CHECK(state.posterior_mass(b0) == 0.0);
}

TEST_CASE("update refuses symbols impossible under the reference") {
    auto family = std::make_shared<const ModelFamily>(ModelFamily::from_members(
        {FiniteDensity::bernoulli(0.5), FiniteDensity::from_probs({1.0, 0.0})}));
    auto prior = std::make_shared<const Prior>(Prior::uniform(2));
    const PosteriorState state = PosteriorState::init(family, prior, 1);
    CHECK_THROWS_AS(state.updated(1), Error);
    CHECK_THROWS_AS(state.updated(7), Error);  // outside the alphabet
}

TEST_CASE("ten-step product-form oracle") {
    auto family = two_member_family();
    auto prior = std::make_shared<const Prior>(Prior::uniform(2));
    const std::size_t sequence[] = {1, 0, 0, 1, 1, 1, 0, 1, 0, 1};
    PosteriorState state = PosteriorState::init(family, prior, 1);
    for (std::size_t x : sequence) state = state.updated(x);

    // direct evaluation: counts times log ratios, no incremental updates
    std::size_t ones = 0;
    for (std::size_t x : sequence) ones += x;
    const std::size_t zeros = std::size(sequence) - ones;
    double direct[2];
    for (int i = 0; i < 2; ++i) {
        const FiniteDensity& p = family->member(i);
        const FiniteDensity& ps = family->member(1);
        direct[i] = zeros * (std::log(p[0]) - std::log(ps[0])) +
                    ones * (std::log(p[1]) - std::log(ps[1]));
    }
    const double z = std::exp(direct[0]) * 0.5 + std::exp(direct[1]) * 0.5;
    const std::vector<std::size_t> b0 = {0};
    CHECK(state.posterior_mass(b0) ==
          doctest::Approx(0.5 * std::exp(direct[0]) / z).epsilon(1e-12));
    CHECK(state.history_digest() != PosteriorState::init(family, prior, 1).history_digest());
}

TEST_CASE("posterior_mass set algebra") {
    Rng rng(311);
    auto family = random_family(rng, 3, 6);
    auto prior = random_prior(rng, 6);
    PosteriorState state = PosteriorState::init(family, prior, 2);
    const FiniteDensity truth = random_density(rng, 3);
    for (int i = 0; i < 40; ++i) state = state.updated(rng.sample(truth.probs()));

    const auto all = all_indices(*family);
    CHECK(state.posterior_mass(all) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(state.posterior_mass({}) == 0.0);
    const std::vector<std::size_t> b = {0, 2, 4};
    const std::vector<std::size_t> bc = {1, 3, 5};
    CHECK(state.posterior_mass(b) + state.posterior_mass(bc) ==
          doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("restricted_log_integral") {
    Rng rng(313);
    auto family = random_family(rng, 4, 8);
    auto prior = random_prior(rng, 8);
    PosteriorState state = PosteriorState::init(family, prior, 0);

    SUBCASE("n = 0 gives the prior log mass; empty set is -inf") {
        const std::vector<std::size_t> a = {1, 3};
        CHECK(state.restricted_log_integral(a).log_value ==
              doctest::Approx(std::log(prior->weight(1) + prior->weight(3))).epsilon(1e-14));
        CHECK(state.restricted_log_integral({}).log_value == neg_inf);
    }
    SUBCASE("matches direct summation and is additive over partitions") {
        const FiniteDensity truth = random_density(rng, 4);
        for (int i = 0; i < 60; ++i) state = state.updated(rng.sample(truth.probs()));
        const std::vector<std::size_t> a = {0, 2, 5, 7};
        double direct = 0.0;
        for (std::size_t i : a)
            direct += prior->weight(i) * std::exp(state.log_ratios()[i]);
        CHECK(std::exp(state.restricted_log_integral(a).log_value) ==
              doctest::Approx(direct).epsilon(1e-12));

        const std::vector<std::size_t> part1 = {0, 2};
        const std::vector<std::size_t> part2 = {5, 7};
        const double joined = log_sum_exp(state.restricted_log_integral(part1).log_value,
                                          state.restricted_log_integral(part2).log_value);
        CHECK(joined ==
              doctest::Approx(state.restricted_log_integral(a).log_value).epsilon(1e-12));
    }
}

TEST_CASE("predictive_density") {
    Rng rng(317);
    auto family = random_family(rng, 3, 5);
    auto prior = random_prior(rng, 5);
    PosteriorState state = PosteriorState::init(family, prior, 0);

    SUBCASE("singleton conditioning returns that member exactly") {
        const std::vector<std::size_t> a = {3};
        const FiniteDensity p = state.predictive_density(a);
        for (std::size_t x = 0; x < 3; ++x)
            CHECK(p[x] == doctest::Approx(family->member(3)[x]).epsilon(1e-15));
    }
    SUBCASE("prior predictive at n = 0") {
        const auto all = all_indices(*family);
        const FiniteDensity p = state.predictive_density(all);
        for (std::size_t x = 0; x < 3; ++x) {
            double expect = 0.0;
            for (std::size_t i = 0; i < 5; ++i) expect += prior->weight(i) * family->member(i)[x];
            CHECK(p[x] == doctest::Approx(expect).epsilon(1e-14));
        }
    }
    SUBCASE("output is a convex combination of the conditioning set") {
        const FiniteDensity truth = random_density(rng, 3);
        for (int i = 0; i < 30; ++i) state = state.updated(rng.sample(truth.probs()));
        const std::vector<std::size_t> a = {1, 2, 4};
        const FiniteDensity p = state.predictive_density(a);  // validates sum-to-one
        const std::vector<double> w = state.conditional_weights(a);
        double wsum = 0.0;
        for (std::size_t i : a) {
            CHECK(w[i] >= 0.0);
            wsum += w[i];
        }
        CHECK(wsum == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(w[0] == 0.0);
        for (std::size_t x = 0; x < 3; ++x) {
            double mix = 0.0;
            for (std::size_t i : a) mix += w[i] * family->member(i)[x];
            CHECK(p[x] == doctest::Approx(mix).epsilon(1e-14));
        }
    }
    SUBCASE("conditioning on a null set errors") {
        auto zero_prior =
            std::make_shared<const Prior>(Prior::from_weights({0.0, 0.5, 0.5, 0.0, 0.0}));
        const PosteriorState s = PosteriorState::init(family, zero_prior, 1);
        const std::vector<std::size_t> null_set = {0, 3};
        CHECK_THROWS_AS(s.predictive_density(null_set), Error);
    }
}

TEST_CASE("undefined posterior when every member is annihilated") {
    auto family = std::make_shared<const ModelFamily>(ModelFamily::from_members(
        {FiniteDensity::from_probs({1.0, 0.0}), FiniteDensity::from_probs({1.0, 0.0}),
         FiniteDensity::bernoulli(0.5)}));
    // the reference member carries no prior weight
    auto prior = std::make_shared<const Prior>(Prior::from_weights({0.5, 0.5, 0.0}));
    PosteriorState state = PosteriorState::init(family, prior, 2);
    state = state.updated(1);  // annihilates both weighted members
    const std::vector<std::size_t> b = {0, 1};
    CHECK_THROWS_AS(state.posterior_mass(b), Error);
}

TEST_CASE("incremental equals batch over long horizons") {
    Rng rng(331);
    auto family = random_family(rng, 4, 7);
    auto prior = random_prior(rng, 7);
    const FiniteDensity truth = random_density(rng, 4);
    const std::size_t n = 10000;

    PosteriorState state = PosteriorState::init(family, prior, 3);
    std::vector<std::size_t> counts(4, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t x = rng.sample(truth.probs());
        ++counts[x];
        state = state.updated(x);
    }
    // batch form: counts weighted by per-symbol log ratios
    std::vector<double> batch_terms(7);
    for (std::size_t i = 0; i < 7; ++i) {
        double lr = 0.0;
        for (std::size_t x = 0; x < 4; ++x)
            lr += static_cast<double>(counts[x]) *
                  (std::log(family->member(i)[x]) - std::log(family->member(3)[x]));
        batch_terms[i] = prior->log_weight(i) + lr;
    }
    const double batch_log_evidence = log_sum_exp(batch_terms);
    CHECK(state.log_evidence() == doctest::Approx(batch_log_evidence).epsilon(1e-12));
    const std::vector<std::size_t> b = {0, 1, 2};
    const double batch_restricted =
        log_sum_exp(std::vector<double>{batch_terms[0], batch_terms[1], batch_terms[2]});
    CHECK(state.posterior_mass(b) ==
          doctest::Approx(std::exp(batch_restricted - batch_log_evidence)).epsilon(1e-12));
}

TEST_CASE("posterior masses do not depend on the reference member") {
    Rng rng(337);
    auto family = random_family(rng, 3, 6);
    auto prior = random_prior(rng, 6);
    const FiniteDensity truth = random_density(rng, 3);

    PosteriorState a = PosteriorState::init(family, prior, 0);
    PosteriorState b = PosteriorState::init(family, prior, 4);
    Rng rng_a(999), rng_b(999);
    for (int i = 0; i < 1000; ++i) {
        const std::size_t xa = rng_a.sample(truth.probs());
        const std::size_t xb = rng_b.sample(truth.probs());
        REQUIRE(xa == xb);
        a = a.updated(xa);
        b = b.updated(xb);
    }
    const std::vector<std::size_t> set = {1, 3, 5};
    CHECK(a.posterior_mass(set) == doctest::Approx(b.posterior_mass(set)).epsilon(1e-12));
    const auto wa = a.posterior_weights();
    const auto wb = b.posterior_weights();
    for (std::size_t i = 0; i < wa.size(); ++i)
        CHECK(wa[i] == doctest::Approx(wb[i]).epsilon(1e-12));
}

TEST_CASE("snapshot is columnar and carries every member") {
    auto family = two_member_family();
    auto prior = std::make_shared<const Prior>(Prior::uniform(2));
    PosteriorState state = PosteriorState::init(family, prior, 1).updated(0).updated(1);
    const std::string tsv = state.snapshot_tsv();
    CHECK(tsv.find("# n\t2") != std::string::npos);
    CHECK(tsv.find("index\tlabel\tlog_ratio\tposterior_weight") != std::string::npos);
    CHECK(tsv.find("member_0") != std::string::npos);
    CHECK(tsv.find("member_1") != std::string::npos);
}
