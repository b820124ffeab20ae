#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ratelab/errors.hpp"
#include "ratelab/experiment.hpp"
#include "ratelab/math_util.hpp"
#include "ratelab/posterior.hpp"
#include "ratelab/rng.hpp"
#include "support/instances.hpp"

using namespace ratelab;
using namespace ratelab::testkit;

namespace {

ExperimentConfig grid_config() {
    ExperimentConfig config;
    config.truth = FiniteDensity::bernoulli(0.5);
    config.family = bernoulli_grid_family();
    config.prior = std::make_shared<const Prior>(Prior::uniform(9));
    config.alpha = 0.5;
    config.eps = {EpsKind::constant, 0.05};
    config.m = {MKind::constant, 1.0};
    config.horizon = 256;
    config.replications = 60;
    config.master_seed = 20260808;
    config.shell_j_max = 4;
    return config;
}

} // namespace

TEST_CASE("schedules") {
    const EpsSchedule constant{EpsKind::constant, 0.3};
    CHECK(constant.at(1) == 0.3);
    CHECK(constant.at(100) == 0.3);
    const EpsSchedule inv{EpsKind::inv_sqrt, 2.0};
    CHECK(inv.at(4) == doctest::Approx(1.0));
    const EpsSchedule invlog{EpsKind::inv_sqrt_log, 1.0};
    CHECK(invlog.at(1) == 0.0);
    CHECK(invlog.at(100) == doctest::Approx(std::log(100.0) / 10.0));
    const MSchedule mlog{MKind::log_growth, 2.0};
    CHECK(mlog.at(100) == doctest::Approx(2.0 * std::log(100.0)));
}

TEST_CASE("checkpoint grid is geometric and ends at the horizon") {
    CHECK(checkpoint_grid(1) == std::vector<unsigned>{1});
    CHECK(checkpoint_grid(8) == std::vector<unsigned>{1, 2, 4, 8});
    CHECK(checkpoint_grid(2000) ==
          std::vector<unsigned>{1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024, 2000});
}

TEST_CASE("fit_rate") {
    SUBCASE("synthetic exact decay has slope -1") {
        std::vector<double> x, mass;
        for (unsigned n : {1u, 2u, 4u, 8u, 16u, 32u}) {
            x.push_back(n * 0.01);
            mass.push_back(std::exp(-static_cast<double>(n) * 0.01));
        }
        const RateFit fit = fit_rate(mass, x, {});
        CHECK(fit.defined);
        CHECK(fit.slope == doctest::Approx(-1.0).epsilon(1e-9));
    }
    SUBCASE("constant masses flag no-contraction") {
        const std::vector<double> x = {1, 2, 3, 4};
        const std::vector<double> mass = {0.25, 0.25, 0.25, 0.25};
        const RateFit fit = fit_rate(mass, x, {});
        CHECK(fit.defined);
        CHECK(fit.slope == doctest::Approx(0.0));
        CHECK(fit.diagnostic.find("no-contraction") != std::string::npos);
    }
    SUBCASE("fewer than three positive points is undefined") {
        const std::vector<double> x = {1, 2, 3};
        const std::vector<double> mass = {0.5, 0.0, 0.25};
        const RateFit fit = fit_rate(mass, x, {});
        CHECK_FALSE(fit.defined);
        CHECK(fit.diagnostic.find("fewer than 3") != std::string::npos);
    }
}

TEST_CASE("resolve_pstar enforces a unique projection") {
    ExperimentConfig config = grid_config();
    CHECK(resolve_pstar(config) == 8);  // bern(0.45)

    ExperimentConfig tied = config;
    tied.family = std::make_shared<const ModelFamily>(ModelFamily::from_members(
        {FiniteDensity::bernoulli(0.4), FiniteDensity::bernoulli(0.6)}));
    tied.prior = std::make_shared<const Prior>(Prior::uniform(2));
    CHECK_THROWS_AS(resolve_pstar(tied), Error);
    tied.pstar_index = 0;  // explicit pin overrides
    CHECK(resolve_pstar(tied) == 0);
}

TEST_CASE("run_contraction on the misspecified grid") {
    ExperimentConfig config = grid_config();
    const RateReport report = run_contraction(config);

    REQUIRE(report.checkpoints == checkpoint_grid(config.horizon));
    CHECK(report.pstar_index == 8);
    // radius 0.05 excludes exactly bern(0.40) and bern(0.45)
    for (std::size_t size : report.target_sizes) CHECK(size == 7);
    for (double mass : report.mean_mass) {
        CHECK(mass >= 0.0);
        CHECK(mass <= 1.0);
    }
    CHECK(report.mean_mass.back() < report.mean_mass.front());
    CHECK(report.fit.defined);
    CHECK(report.fit.slope < 0.0);
    CHECK(report.intervals_rendered);

    SUBCASE("per-replication masses obey conservation and match a replay") {
        const auto target = build_target_set(*config.family, 8, config.truth, 0.05);
        std::vector<std::size_t> complement;
        for (std::size_t i = 0; i < 9; ++i)
            if (std::find(target.begin(), target.end(), i) == target.end())
                complement.push_back(i);
        for (std::size_t r : {std::size_t{0}, std::size_t{7}}) {
            Rng rng(derive_seed(config.master_seed, r));
            PosteriorState state = PosteriorState::init(config.family, config.prior, 8);
            std::size_t gi = 0;
            for (unsigned step = 1; step <= config.horizon; ++step) {
                state = state.updated(rng.sample(config.truth.probs()));
                if (gi < report.checkpoints.size() && report.checkpoints[gi] == step) {
                    CHECK(report.replication_mass[gi][r] ==
                          doctest::Approx(state.posterior_mass(target)).epsilon(1e-14));
                    CHECK(state.posterior_mass(target) + state.posterior_mass(complement) ==
                          doctest::Approx(1.0).epsilon(1e-12));
                    ++gi;
                }
            }
        }
    }
}

TEST_CASE("determinism across thread counts") {
    ExperimentConfig config = grid_config();
    config.replications = 16;
    config.horizon = 64;
    config.threads = 1;
    const RateReport one = run_contraction(config);
    config.threads = 4;
    const RateReport four = run_contraction(config);
    CHECK(one.mean_mass == four.mean_mass);
    CHECK(one.half_width == four.half_width);
    CHECK(one.replication_mass == four.replication_mass);
    CHECK(one.fit.slope == four.fit.slope);
}

TEST_CASE("family containing only the truth contracts trivially") {
    ExperimentConfig config;
    config.truth = FiniteDensity::bernoulli(0.5);
    config.family = std::make_shared<const ModelFamily>(
        ModelFamily::from_members({FiniteDensity::bernoulli(0.5)}));
    config.prior = std::make_shared<const Prior>(Prior::uniform(1));
    config.eps = {EpsKind::constant, 0.1};
    config.horizon = 16;
    config.replications = 4;
    const RateReport report = run_contraction(config);
    for (double mass : report.mean_mass) CHECK(mass == 0.0);  // A_n is empty
    CHECK_FALSE(report.fit.defined);  // all-zero masses leave the slope undefined
}

TEST_CASE("well-specified truth concentrates") {
    ExperimentConfig config;
    config.truth = FiniteDensity::bernoulli(0.3);
    config.family = bernoulli_grid_family();  // contains bern(0.30)
    config.prior = std::make_shared<const Prior>(Prior::uniform(9));
    config.eps = {EpsKind::constant, 0.08};
    config.horizon = 1024;
    config.replications = 40;
    config.master_seed = 99;
    const RateReport report = run_contraction(config);
    CHECK(report.pstar_index == 5);  // bern(0.30)
    CHECK(report.mean_mass.back() < 0.05);
    CHECK(report.mean_mass.back() < report.mean_mass.front());
}

TEST_CASE("union and power bounds against an attached cover") {
    ExperimentConfig config = grid_config();
    const auto target = build_target_set(*config.family, 8, config.truth, 0.05);
    const Covering cover = build_cover(target, *config.family, config.truth,
                                       config.family->member(8), 0.5, 0.05 * 0.05 / 4.0);
    Rng rng(derive_seed(config.master_seed, 3));
    PosteriorState state = PosteriorState::init(config.family, config.prior, 8);
    for (int step = 0; step < 200; ++step) {
        state = state.updated(rng.sample(config.truth.probs()));
        const double total = state.posterior_mass(target);
        double element_sum = 0.0;
        for (const auto& element : cover.elements) {
            const double mass = state.posterior_mass(element.generators);
            element_sum += mass;
            CHECK(mass <= std::pow(mass, 0.5) + 1e-15);  // masses in [0,1]
        }
        CHECK(total <= element_sum + 1e-12);
    }
}

TEST_CASE("shell masses") {
    SUBCASE("zero table when every shell is empty") {
        ExperimentConfig config = grid_config();
        config.eps = {EpsKind::constant, 5.0};  // radii beyond the family
        config.replications = 4;
        config.horizon = 8;
        const ShellTable table = shell_masses(config);
        for (const auto& row : table.mean_shell_mass)
            for (double v : row) CHECK(v == 0.0);
        for (double v : table.mean_target_mass) CHECK(v == 0.0);
    }
    SUBCASE("single run matches per-member posterior weights") {
        ExperimentConfig config = grid_config();
        config.replications = 1;
        config.horizon = 128;
        const ShellTable table = shell_masses(config);

        Rng rng(derive_seed(config.master_seed, 0));
        PosteriorState state = PosteriorState::init(config.family, config.prior, 8);
        std::size_t gi = 0;
        for (unsigned step = 1; step <= config.horizon; ++step) {
            state = state.updated(rng.sample(config.truth.probs()));
            if (gi < table.checkpoints.size() && table.checkpoints[gi] == step) {
                const auto weights = state.posterior_weights();
                for (std::size_t j = 0; j < table.shells[gi].size(); ++j) {
                    double expect = 0.0;
                    for (std::size_t i : table.shells[gi][j].members) expect += weights[i];
                    CHECK(table.mean_shell_mass[gi][j] ==
                          doctest::Approx(expect).epsilon(1e-12));
                }
                ++gi;
            }
        }
        CHECK(gi == table.checkpoints.size());
    }
    SUBCASE("higher shells decay faster on the grid") {
        ExperimentConfig config = grid_config();
        config.eps = {EpsKind::constant, 0.04};
        config.replications = 30;
        config.horizon = 512;
        config.shell_j_max = 4;
        const ShellTable table = shell_masses(config);
        CHECK(table.cover_bound_ok);
        const auto& first = table.mean_shell_mass.front();
        const auto& last = table.mean_shell_mass.back();
        // by the horizon, the far shells hold less mass than shell 1
        for (std::size_t j = 1; j < last.size(); ++j) {
            if (first[j] > 0.0) CHECK(last[j] <= last[0] + 1e-12);
        }
    }
}

TEST_CASE("config validation rejects bad fields") {
    ExperimentConfig config = grid_config();
    config.alpha = 1.5;
    CHECK_THROWS_AS(config.validate(), Error);
    config = grid_config();
    config.replications = 0;
    CHECK_THROWS_AS(config.validate(), Error);
    config = grid_config();
    config.eps.c = -1.0;
    CHECK_THROWS_AS(config.validate(), Error);
    config = grid_config();
    config.pstar_index = 99;
    CHECK_THROWS_AS(config.validate(), Error);
}
