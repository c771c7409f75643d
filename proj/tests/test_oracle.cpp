#include "instances.hpp"
#include "oracle.hpp"

#include "durem/statistics.hpp"

#include <gtest/gtest.h>

namespace durem {
namespace {

TEST(Oracle, IncrementalDesignMatchesRecomputation) {
    std::mt19937_64 rng(11);
    std::size_t rows = 0;
    for (int k = 0; k < 60; ++k) {
        auto inst = testing::random_instance(rng);
        const auto seq = build_transitions(inst.history, inst.spec.dir, inst.spec.origin);
        const auto design = build_design(seq, inst.spec, inst.history, inst.covariates, inst.weights);
        const auto steps = testing::oracle_design(inst.history, inst.spec, inst.covariates, inst.weights);
        std::string why;
        EXPECT_TRUE(testing::matches_oracle(design, steps, 1e-12, why))
            << "instance " << k << " (" << to_string(inst.spec.dir) << "): " << why;
        rows += design.start.n_rows() + design.end.n_rows();
    }
    EXPECT_GT(rows, 1000u);
}

TEST(Oracle, DetectsPerturbedValues) {
    std::mt19937_64 rng(5);
    auto inst = testing::random_instance(rng, {4, 20, 1.0, true});
    const auto seq = build_transitions(inst.history, inst.spec.dir, inst.spec.origin);
    auto design = build_design(seq, inst.spec, inst.history, inst.covariates, inst.weights);
    const auto steps = testing::oracle_design(inst.history, inst.spec, inst.covariates, inst.weights);
    std::string why;
    ASSERT_TRUE(testing::matches_oracle(design, steps, 1e-12, why)) << why;
    design.start.values[design.start.values.size() / 2] += 1e-9;
    EXPECT_FALSE(testing::matches_oracle(design, steps, 1e-12, why));
}

TEST(Oracle, DetectsShiftedWeights) {
    std::mt19937_64 rng(8);
    for (int k = 0; k < 10; ++k) {
        auto inst = testing::random_instance(rng, {5, 30, 1.0, true});
        inst.weights.psi_s = 0.5;
        const auto seq = build_transitions(inst.history, inst.spec.dir, inst.spec.origin);
        const auto design = build_design(seq, inst.spec, inst.history, inst.covariates, inst.weights);
        auto other = inst.weights;
        other.psi_s = 0.5 + 1e-6;
        const auto steps = testing::oracle_design(inst.history, inst.spec, inst.covariates, other);
        std::string why;
        if (inst.history.size() > 3) {
            EXPECT_FALSE(testing::matches_oracle(design, steps, 1e-12, why));
        }
    }
}

}  // namespace
}  // namespace durem
