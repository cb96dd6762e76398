#pragma once

#include <vector>

#include "sslstm/labels.hpp"
#include "sslstm/text_norm.hpp"

namespace sslstm {

/// A normalized utterance with its gold label; the unit every model trains on.
struct Example {
  std::vector<Token> tokens;
  Label label = Label::others;
};

}  // namespace sslstm
