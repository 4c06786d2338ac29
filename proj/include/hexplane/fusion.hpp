#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace hexplane {

enum class FusionOp : std::uint8_t { Multiply = 0, Sum = 1, Concat = 2 };

std::string to_string(FusionOp op);
FusionOp fusion_op_from_string(const std::string& name);

/// Stage one combines the planes inside a group; stage two combines groups.
struct FusionScheme {
  FusionOp stage_one = FusionOp::Multiply;
  FusionOp stage_two = FusionOp::Concat;

  bool operator==(const FusionScheme&) const = default;
};

std::string to_string(const FusionScheme& scheme);

/// Length of one group's stage-one output for `planes` planes of `channels` each.
int group_output_length(FusionOp stage_one, int planes, int channels);

/// Fused-vector length (= basis rows). Throws ConfigError when stage two is
/// sum/multiply and the group outputs differ in length.
int fused_length(const FusionScheme& scheme, std::span<const int> group_lengths);

}  // namespace hexplane
