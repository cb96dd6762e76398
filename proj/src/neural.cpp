#include "sslstm/neural.hpp"

namespace sslstm {

std::string_view to_string(Channels c) {
  switch (c) {
    case Channels::both: return "both";
    case Channels::semantic: return "semantic";
    case Channels::sentiment: return "sentiment";
  }
  return "?";
}

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::identity: return "identity";
  }
  return "?";
}

Channels parse_channels(std::string_view s) {
  for (Channels c : {Channels::both, Channels::semantic, Channels::sentiment}) {
    if (s == to_string(c)) return c;
  }
  throw std::invalid_argument("unknown channel selection '" + std::string(s) +
                              "' (expected both, semantic or sentiment)");
}

Activation parse_activation(std::string_view s) {
  for (Activation a : {Activation::relu, Activation::tanh, Activation::identity}) {
    if (s == to_string(a)) return a;
  }
  throw std::invalid_argument("unknown activation '" + std::string(s) +
                              "' (expected relu, tanh or identity)");
}

}  // namespace sslstm
