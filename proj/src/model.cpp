#include "shortmr/net/cnn3d.hpp"

namespace shortmr {

void validate_model_spec(const ModelSpec& spec) {
  if (spec.stages < 1 || spec.stages > 8) {
    throw ValidationError("model: stages must be in [1,8]");
  }
  if (spec.base_channels < 1) {
    throw ValidationError("model: base_channels must be >= 1");
  }
  if (spec.classes != 2) {
    throw ValidationError("model: class count must be 2");
  }
  const std::int64_t div = std::int64_t{1} << (spec.stages - 1);
  for (int a = 0; a < 3; ++a) {
    if (spec.input_shape[a] < div || spec.input_shape[a] % div != 0) {
      throw ValidationError(
          "model: input shape must be divisible by 2^(stages-1)");
    }
  }
  feature_stage_index(spec);  // throws if the layer name is invalid
}

int feature_stage_index(const ModelSpec& spec) {
  const std::string& name = spec.feature_layer;
  if (name.rfind("stage", 0) != 0) {
    throw ValidationError("model: unknown feature layer '" + name + "'");
  }
  int idx = 0;
  try {
    idx = std::stoi(name.substr(5));
  } catch (const std::exception&) {
    throw ValidationError("model: unknown feature layer '" + name + "'");
  }
  if (idx < 1 || idx > spec.stages) {
    throw ValidationError("model: feature layer '" + name +
                          "' out of range for " + std::to_string(spec.stages) +
                          " stages");
  }
  return idx - 1;
}

}  // namespace shortmr
