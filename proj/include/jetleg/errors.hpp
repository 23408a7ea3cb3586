#pragma once

#include <stdexcept>
#include <string>

namespace jetleg {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// approx
struct DimensionMismatch : Error { using Error::Error; };

// dynamics
struct NonFiniteState : Error { using Error::Error; };

// terrain / config
struct InvalidSpec : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

// priors
struct Unreachable : Error { using Error::Error; };
struct InfeasibleThrust : Error { using Error::Error; };
struct EmptyDataset : Error { using Error::Error; };
struct SchemaMismatch : Error { using Error::Error; };
struct CorruptFile : Error { using Error::Error; };

// jetdyn
struct RankDeficient : Error { using Error::Error; };

// amp
struct EmptyBatch : Error { using Error::Error; };
struct InsufficientSamples : Error { using Error::Error; };

// envtask
struct SteppedDoneEnv : Error { using Error::Error; };

// checkpoints
struct CheckpointMismatch : Error { using Error::Error; };

}  // namespace jetleg
