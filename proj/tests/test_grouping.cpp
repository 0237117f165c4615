#include <catch_amalgamated.hpp>

#include <bai/grouping.hpp>

#include <set>

using namespace bai;

TEST_CASE("groups for K = 8") {
    const auto code = construct_groups(8);
    REQUIRE(code.group_count == 3);
    CHECK(code.groups[0] == std::vector<ArmIndex>{1, 3, 5, 7});
    CHECK(code.groups[1] == std::vector<ArmIndex>{2, 3, 6, 7});
    CHECK(code.groups[2] == std::vector<ArmIndex>{4, 5, 6, 7});
    CHECK(code.dummy_arms.empty());
}

TEST_CASE("padding for K = 5") {
    const auto code = construct_groups(5);
    CHECK(code.padded_count == 8);
    CHECK(code.group_count == 3);
    CHECK(code.dummy_arms == std::vector<ArmIndex>{5, 6, 7});
    CHECK(code.is_dummy(6));
    CHECK_FALSE(code.is_dummy(4));
    CHECK_THROWS_AS(decode_best_arm(code, detection_pattern(code, 7)), Error);
    try {
        decode_best_arm(code, detection_pattern(code, 6));
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DecodedDummyArm);
    }
}

TEST_CASE("K = 2 uses a single group") {
    const auto code = construct_groups(2);
    CHECK(code.group_count == 1);
    CHECK(code.groups[0] == std::vector<ArmIndex>{1});
    CHECK(decode_best_arm(code, {false}) == 0);
    CHECK(decode_best_arm(code, {true}) == 1);
}

TEST_CASE("encode and decode are inverse for every arm") {
    for (std::size_t k = 2; k <= 300; ++k) {
        const auto code = construct_groups(k);
        std::set<DetectionVector> patterns;
        for (ArmIndex a = 0; a < code.padded_count; ++a) {
            const auto p = detection_pattern(code, a);
            patterns.insert(p);
            CHECK(decode_pattern(code, p) == a);
            // Membership agrees with the pattern bits.
            for (std::size_t g = 0; g < code.group_count; ++g) {
                const auto& m = code.groups[g];
                CHECK(p[g] == std::binary_search(m.begin(), m.end(), a));
            }
        }
        CHECK(patterns.size() == code.padded_count);
        for (const auto& g : code.groups) CHECK(g.size() == code.padded_count / 2);
    }
}

TEST_CASE("grouping errors") {
    CHECK_THROWS_AS(construct_groups(1), Error);
    const auto code = construct_groups(4);
    CHECK_THROWS_AS(detection_pattern(code, 4), Error);
    CHECK_THROWS_AS(decode_pattern(code, {true}), Error);
}
