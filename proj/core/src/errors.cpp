#include "pedcloud/errors.hpp"

#include <utility>

namespace pedcloud {

GenerationExhausted::GenerationExhausted(const std::string& what, std::vector<Box2D> produced)
    : Error(what), produced_(std::move(produced)) {}

}  // namespace pedcloud
