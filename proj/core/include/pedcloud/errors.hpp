#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "pedcloud/types.hpp"

namespace pedcloud {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// model_io
class ParseError : public Error { public: using Error::Error; };
class IoError : public Error { public: using Error::Error; };
class VersionError : public Error { public: using Error::Error; };

// projection_transfer
class BehindCamera : public Error { public: using Error::Error; };

// detection_eval
class MissingScore : public Error { public: using Error::Error; };

// npbb_gen
class EmptyInput : public Error { public: using Error::Error; };
class InvalidFraction : public Error { public: using Error::Error; };
class Infeasible : public Error { public: using Error::Error; };

/// Raised when a box cannot satisfy the overlap constraints within the
/// attempt budget. Carries the boxes accepted before the failure.
class GenerationExhausted : public Error {
public:
    GenerationExhausted(const std::string& what, std::vector<Box2D> produced);
    const std::vector<Box2D>& produced() const noexcept { return produced_; }

private:
    std::vector<Box2D> produced_;
};

// sampling_norm
class TooFewPoints : public Error { public: using Error::Error; };
class DegenerateCluster : public Error { public: using Error::Error; };

// dataset_mgmt
class UnknownScene : public Error { public: using Error::Error; };
class UnknownClass : public Error { public: using Error::Error; };

// classifier
class ShapeError : public Error { public: using Error::Error; };
class NonFiniteActivation : public Error { public: using Error::Error; };
class EmptyDataset : public Error { public: using Error::Error; };
class DivergedLoss : public Error { public: using Error::Error; };

// review_service
class NotFound : public Error { public: using Error::Error; };
class InvalidDecision : public Error { public: using Error::Error; };

}  // namespace pedcloud
