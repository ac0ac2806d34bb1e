#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "models/block_offset.hpp"
#include "models/chunks.hpp"
#include "models/frac.hpp"
#include "models/linear.hpp"
#include "models/objects.hpp"

namespace polyheap {

class UnknownModel : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotImplemented : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline const std::vector<std::string>& model_names() {
  static const std::vector<std::string> names = {"linear",       "linear-unique", "linear-cut", "linear-ox",
                                                 "frac",         "block-offset",  "objects",    "chunks"};
  return names;
}

// Calls f with the named model instance. `sabotage` breaks the linear
// model's composition so conformance checks must fail.
template <class F>
decltype(auto) with_model(const std::string& name, bool sabotage, F&& f) {
  if (sabotage && name != "linear") throw UnknownModel("sabotage is only wired into linear");
  if (name == "linear") return f(Linear(Linear::Variant::Exact, sabotage));
  if (name == "linear-unique") return f(Linear(Linear::Variant::UniqueMatch));
  if (name == "linear-cut") return f(Linear(Linear::Variant::Cut));
  if (name == "linear-ox") return f(Linear(Linear::Variant::NoNeg));
  if (name == "frac") return f(Frac());
  if (name == "block-offset") return f(BlockOffset());
  if (name == "objects") return f(Objects());
  if (name == "chunks") return f(Chunks());
  if (name == "cheri") throw NotImplemented("the cheri model is not implemented");
  throw UnknownModel("unknown model '" + name + "'");
}

}  // namespace polyheap
