#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ratelab/errors.hpp"
#include "ratelab/math_util.hpp"
#include "ratelab/model_space.hpp"
#include "support/instances.hpp"

using namespace ratelab;
using namespace ratelab::testkit;

namespace {

// Independent two-term oracle for Bernoulli KL.
double bern_kl_oracle(double a, double b) {
    return (1 - a) * std::log((1 - a) / (1 - b)) + a * std::log(a / b);
}

double sup_affinity_grid_oracle(const FiniteDensity& p0, const FiniteDensity& p,
                                const FiniteDensity& pstar) {
    double best = -1e300;
    for (int i = 0; i <= 10000; ++i) {
        const double alpha = 1e-9 + (1.0 - 2e-9) * i / 10000.0;
        double sum = 0.0;
        for (std::size_t x = 0; x < p0.alphabet_size(); ++x) {
            if (p0[x] == 0.0) continue;
            sum += p0[x] * std::pow(p[x] / pstar[x], alpha);
        }
        best = std::max(best, -std::log(sum));
    }
    return best;
}

} // namespace

TEST_CASE("density validation") {
    CHECK_NOTHROW(FiniteDensity::from_probs({0.25, 0.75}));
    CHECK_THROWS_AS(FiniteDensity::from_probs({0.5, 0.48}), Error);  // sums to 0.98
    CHECK_THROWS_AS(FiniteDensity::from_probs({-0.1, 1.1}), Error);
    CHECK_THROWS_AS(FiniteDensity::from_probs({}), Error);
    const FiniteDensity b = FiniteDensity::bernoulli(0.3);
    CHECK(b[0] == doctest::Approx(0.7));
    CHECK(b[1] == doctest::Approx(0.3));
}

TEST_CASE("kl_divergence basics") {
    const auto half = FiniteDensity::bernoulli(0.5);
    CHECK(kl_divergence(half, half) == 0.0);
    CHECK(std::abs(kl_divergence(half, FiniteDensity::bernoulli(0.3)) - 0.087177) <= 1e-6);
    CHECK(kl_divergence(half, FiniteDensity::bernoulli(0.3)) ==
          doctest::Approx(bern_kl_oracle(0.5, 0.3)).epsilon(1e-14));
    // support violation forces infinity
    CHECK(kl_divergence(half, FiniteDensity::from_probs({1.0, 0.0})) == pos_inf);
    CHECK_THROWS_AS(kl_divergence(half, FiniteDensity::from_probs({0.2, 0.3, 0.5})), Error);
}

TEST_CASE("kl_divergence nonnegativity, equality iff identical") {
    Rng rng(11);
    for (int i = 0; i < 300; ++i) {
        const std::size_t k = 2 + rng.next_u64() % 4;
        const FiniteDensity p0 = random_density(rng, k);
        const FiniteDensity p = random_density(rng, k);
        const double kl = kl_divergence(p0, p);
        CHECK(kl >= 0.0);
        if (!(p0 == p)) CHECK(kl > 0.0);
        CHECK(kl_divergence(p0, p0) == 0.0);
    }
}

TEST_CASE("alpha_log_affinity worked values") {
    const auto half = FiniteDensity::bernoulli(0.5);
    const auto p3 = FiniteDensity::bernoulli(0.3);
    // direct summation oracle: 0.5*sqrt(0.6) + 0.5*sqrt(1.4)
    const double oracle = -std::log(0.5 * std::sqrt(0.6) + 0.5 * std::sqrt(1.4));
    CHECK(alpha_log_affinity(half, p3, half, 0.5) == doctest::Approx(oracle).epsilon(1e-14));
    CHECK(std::abs(alpha_log_affinity(half, p3, half, 0.5) - 0.021320) <= 1e-6);
    for (double alpha : {0.1, 0.25, 0.5, 0.75, 0.9}) {
        CHECK(alpha_log_affinity(half, half, half, alpha) == 0.0);  // ratio identically 1
        CHECK(alpha_log_affinity(half, p3, p3, alpha) == 0.0);      // p == pstar
    }
    CHECK_THROWS_AS(alpha_log_affinity(half, p3, half, 0.0), Error);
    CHECK_THROWS_AS(alpha_log_affinity(half, p3, half, 1.0), Error);
    // pstar zero on the support of p0
    CHECK_THROWS_AS(alpha_log_affinity(half, p3, FiniteDensity::from_probs({1.0, 0.0}), 0.5),
                    Error);
}

TEST_CASE("sup_alpha_log_affinity") {
    const auto p0 = FiniteDensity::bernoulli(0.6);
    const auto pstar = FiniteDensity::bernoulli(0.45);
    const auto p = FiniteDensity::bernoulli(0.2);

    SUBCASE("constant objective at p == pstar") {
        const auto r = sup_alpha_log_affinity(p0, pstar, pstar);
        CHECK(r.value == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("sup dominates any fixed alpha") {
        const auto r = sup_alpha_log_affinity(p0, p, pstar);
        for (double alpha : {0.1, 0.3, 0.5, 0.7, 0.9})
            CHECK(r.value >= alpha_log_affinity(p0, p, pstar, alpha) - 1e-12);
    }
    SUBCASE("matches 10001-point grid search on random triples") {
        Rng rng(23);
        for (int i = 0; i < 50; ++i) {
            const FiniteDensity a = random_density(rng, 2, 1e-2);
            const FiniteDensity b = random_density(rng, 2, 1e-2);
            const FiniteDensity c = random_density(rng, 2, 1e-2);
            const auto r = sup_alpha_log_affinity(a, b, c);
            CHECK(r.value == doctest::Approx(sup_affinity_grid_oracle(a, b, c)).epsilon(1e-6));
            CHECK(r.alpha > 0.0);
            CHECK(r.alpha < 1.0);
        }
    }
}

TEST_CASE("gen_hellinger_sq") {
    const auto half = FiniteDensity::bernoulli(0.5);
    const auto p3 = FiniteDensity::bernoulli(0.3);

    CHECK(gen_hellinger_sq(p3, p3, half, half) == 0.0);
    // direct summation oracle; equals the classical value since p0/pstar == 1
    const double oracle =
        0.5 * ((std::sqrt(0.7) - std::sqrt(0.5)) * (std::sqrt(0.7) - std::sqrt(0.5)) +
               (std::sqrt(0.3) - std::sqrt(0.5)) * (std::sqrt(0.3) - std::sqrt(0.5)));
    CHECK(gen_hellinger_sq(p3, half, half, half) == doctest::Approx(oracle).epsilon(1e-14));
    CHECK(std::abs(gen_hellinger_sq(p3, half, half, half) - 0.021094) <= 1e-6);

    Rng rng(31);
    for (int i = 0; i < 200; ++i) {
        const std::size_t k = 2 + rng.next_u64() % 4;
        const FiniteDensity p1 = random_density(rng, k);
        const FiniteDensity p2 = random_density(rng, k);
        const FiniteDensity p0 = random_density(rng, k);
        const FiniteDensity ps = random_density(rng, k);
        // symmetric in (p1, p2)
        CHECK(gen_hellinger_sq(p1, p2, p0, ps) ==
              doctest::Approx(gen_hellinger_sq(p2, p1, p0, ps)).epsilon(1e-14));
        CHECK(gen_hellinger_sq(p1, p1, p0, ps) == 0.0);
        if (!(p1 == p2)) CHECK(gen_hellinger_sq(p1, p2, p0, ps) > 0.0);
        // classical Hellinger when p0 == pstar
        double classical = 0.0;
        for (std::size_t x = 0; x < k; ++x) {
            const double d = std::sqrt(p1[x]) - std::sqrt(p2[x]);
            classical += d * d;
        }
        classical *= 0.5;
        CHECK(gen_hellinger_sq(p1, p2, p0, p0) == doctest::Approx(classical).epsilon(1e-12));
    }
}

TEST_CASE("kl_projection") {
    const auto half = FiniteDensity::bernoulli(0.5);

    SUBCASE("family containing the truth") {
        const auto family = ModelFamily::from_members(
            {FiniteDensity::bernoulli(0.2), half, FiniteDensity::bernoulli(0.8)});
        const auto r = kl_projection(half, family);
        CHECK(r.index == 1);
        CHECK(r.kl_value == 0.0);
        CHECK(r.unique);
    }
    SUBCASE("worked pair: sweep oracle picks bern(0.3)") {
        const auto family = ModelFamily::from_members(
            {FiniteDensity::bernoulli(0.2), FiniteDensity::bernoulli(0.3)});
        const auto r = kl_projection(half, family);
        CHECK(r.index == 1);
        CHECK(std::abs(r.kl_value - 0.087177) <= 1e-6);
        CHECK(r.runner_up_gap ==
              doctest::Approx(bern_kl_oracle(0.5, 0.2) - bern_kl_oracle(0.5, 0.3))
                  .epsilon(1e-12));
        CHECK(r.unique);
    }
    SUBCASE("symmetry forces a tie") {
        const auto family = ModelFamily::from_members(
            {FiniteDensity::bernoulli(0.4), FiniteDensity::bernoulli(0.6)});
        const auto r = kl_projection(half, family);
        CHECK_FALSE(r.unique);
        CHECK(r.runner_up_gap <= KLProjectionResult::tie_tolerance);
    }
    SUBCASE("all members at infinite divergence") {
        const auto family = ModelFamily::from_members(
            {FiniteDensity::from_probs({1.0, 0.0}), FiniteDensity::from_probs({0.0, 1.0})});
        const auto full_support = FiniteDensity::bernoulli(0.5);
        CHECK_THROWS_AS(kl_projection(full_support, family), Error);
    }
    SUBCASE("mixed support still projects") {
        const auto family = ModelFamily::from_members(
            {FiniteDensity::from_probs({1.0, 0.0}), FiniteDensity::bernoulli(0.3)});
        const auto r = kl_projection(half, family);
        CHECK(r.index == 1);
        CHECK(r.unique);
        CHECK(r.runner_up_gap == pos_inf);
    }
}

TEST_CASE("kl_neighborhood_mass") {
    const auto half = FiniteDensity::bernoulli(0.5);
    const auto family = bernoulli_grid_family();
    const auto prior = std::make_shared<const Prior>(Prior::uniform(9));
    const auto& pstar = family->member(8);  // bern(0.45)

    SUBCASE("grid example equals per-member two-moment oracle") {
        const double eps = 0.1;
        std::size_t count = 0;
        for (std::size_t i = 0; i < family->size(); ++i) {
            double m1 = 0.0, m2 = 0.0;
            for (std::size_t x = 0; x < 2; ++x) {
                const double t = std::log(family->member(i)[x]) - std::log(pstar[x]);
                m1 += half[x] * t;
                m2 += half[x] * t * t;
            }
            if (-m1 <= eps * eps && m2 <= eps * eps) ++count;
        }
        CHECK(kl_neighborhood_mass(*family, *prior, half, pstar, eps) ==
              doctest::Approx(count / 9.0).epsilon(1e-12));
        CHECK(count == 1);  // only pstar itself at this radius
    }
    SUBCASE("eps large enough covers every finite-moment member") {
        CHECK(kl_neighborhood_mass(*family, *prior, half, pstar, 10.0) ==
              doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("pstar with positive weight is always inside") {
        for (double eps : {1e-6, 1e-3, 0.1}) {
            CHECK(kl_neighborhood_mass(*family, *prior, half, pstar, eps) >=
                  prior->weight(8) - 1e-15);
        }
    }
}

TEST_CASE("convexity inequality on mixing-closed families") {
    // For a family whose minimizer is the hull projection, every member p
    // satisfies d^2(p, p*) <= -log E0 (p/p*)^{1/2}.
    Rng rng(47);
    for (int i = 0; i < 200; ++i) {
        const ConvexFamilyInstance instance = random_convex_family(rng);
        const FiniteDensity& pstar = instance.family->member(instance.pstar_index);
        for (std::size_t j = 0; j < instance.family->size(); ++j) {
            const FiniteDensity& p = instance.family->member(j);
            const double d2 = gen_hellinger_sq(p, pstar, instance.truth, pstar);
            const double bound = alpha_log_affinity(instance.truth, p, pstar, 0.5);
            CHECK(d2 <= bound + 1e-10);
        }
    }
}

TEST_CASE("kl_projection_hull recovers interior mixtures") {
    const auto target = FiniteDensity::bernoulli(0.5);
    const auto gens = ModelFamily::from_members(
        {FiniteDensity::bernoulli(0.2), FiniteDensity::bernoulli(0.8)});
    const HullProjection hull = kl_projection_hull(target, gens);
    CHECK(hull.kkt_slack <= 1e-11);
    CHECK(hull.density[1] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(hull.kl_value == doctest::Approx(0.0).epsilon(1e-12));
}
