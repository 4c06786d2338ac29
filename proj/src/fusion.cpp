#include "hexplane/fusion.hpp"

#include "hexplane/core.hpp"

namespace hexplane {

std::string to_string(FusionOp op) {
  switch (op) {
    case FusionOp::Multiply: return "multiply";
    case FusionOp::Sum: return "sum";
    case FusionOp::Concat: return "concat";
  }
  return "?";
}

FusionOp fusion_op_from_string(const std::string& name) {
  if (name == "multiply") return FusionOp::Multiply;
  if (name == "sum") return FusionOp::Sum;
  if (name == "concat") return FusionOp::Concat;
  throw ConfigError("unknown fusion op '" + name + "'");
}

std::string to_string(const FusionScheme& scheme) {
  return to_string(scheme.stage_one) + "-" + to_string(scheme.stage_two);
}

int group_output_length(FusionOp stage_one, int planes, int channels) {
  return stage_one == FusionOp::Concat ? planes * channels : channels;
}

int fused_length(const FusionScheme& scheme, std::span<const int> group_lengths) {
  if (group_lengths.empty()) return 0;
  if (scheme.stage_two == FusionOp::Concat) {
    int total = 0;
    for (int n : group_lengths) total += n;
    return total;
  }
  for (int n : group_lengths) {
    if (n != group_lengths.front()) {
      throw ConfigError("stage-two " + to_string(scheme.stage_two) +
                        " fusion needs equal ranks in every group");
    }
  }
  return group_lengths.front();
}

}  // namespace hexplane
