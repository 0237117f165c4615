#pragma once

#include <bit>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "core.hpp"
#include "errors.hpp"

namespace bai {

/// One detection bit per group; bit k is set when the best arm is declared present in group k.
using DetectionVector = std::vector<bool>;

/**
 * Binary group code over a power-of-two padded arm set.
 *
 * Arm a (zero-based) belongs to group k iff bit k of a is set, so arm 0 is in
 * no group and the last padded arm is in all of them. Arms in
 * [arm_count, padded_count) are dummies.
 */
struct GroupCode {
    std::size_t arm_count = 0;
    std::size_t padded_count = 0;
    std::size_t group_count = 0;
    std::vector<std::vector<ArmIndex>> groups;
    std::vector<ArmIndex> dummy_arms;

    bool is_dummy(ArmIndex arm) const noexcept { return arm >= arm_count && arm < padded_count; }
};

inline GroupCode construct_groups(std::size_t k) {
    if (k < 2) fail(ErrorCode::InvalidK, "need at least two arms to build groups");
    GroupCode code;
    code.arm_count = k;
    code.padded_count = std::bit_ceil(k);
    code.group_count = static_cast<std::size_t>(std::countr_zero(code.padded_count));
    code.groups.resize(code.group_count);
    for (std::size_t g = 0; g < code.group_count; ++g) {
        auto& members = code.groups[g];
        members.reserve(code.padded_count / 2);
        for (ArmIndex a = 0; a < code.padded_count; ++a)
            if ((a >> g) & 1U) members.push_back(a);
    }
    for (ArmIndex a = k; a < code.padded_count; ++a) code.dummy_arms.push_back(a);
    return code;
}

inline DetectionVector detection_pattern(const GroupCode& code, ArmIndex arm) {
    if (arm >= code.padded_count)
        fail(ErrorCode::IndexOutOfRange, "arm " + std::to_string(arm) + " outside the padded arm set");
    DetectionVector bits(code.group_count);
    for (std::size_t g = 0; g < code.group_count; ++g) bits[g] = ((arm >> g) & 1U) != 0;
    return bits;
}

/// Arm whose pattern equals `detections`, possibly a dummy. No validity check on the result.
inline ArmIndex decode_pattern(const GroupCode& code, const DetectionVector& detections) {
    if (detections.size() != code.group_count)
        fail(ErrorCode::InvalidArgument, "detection vector length " + std::to_string(detections.size()) +
                                             " != group count " + std::to_string(code.group_count));
    ArmIndex arm = 0;
    for (std::size_t g = 0; g < code.group_count; ++g)
        if (detections[g]) arm |= ArmIndex{1} << g;
    return arm;
}

/// The arm common to all detected groups and absent from the rest.
inline ArmIndex decode_best_arm(const GroupCode& code, const DetectionVector& detections) {
    const ArmIndex arm = decode_pattern(code, detections);
    if (code.is_dummy(arm))
        fail(ErrorCode::DecodedDummyArm, "detections decode to dummy arm " + std::to_string(arm));
    return arm;
}

}  // namespace bai
