#pragma once

#include <stdexcept>
#include <string>

namespace syncsim {

/// Base class for every error thrown by this library.
struct SyncError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Random geometry stayed disconnected for the whole retry budget.
struct TopologyGenerationFailed : SyncError {
  using SyncError::SyncError;
};

/// A link's stacked coefficient matrices are numerically rank deficient
/// (e.g. all stamps identical), so no estimator can use the link.
struct DegenerateLink : SyncError {
  using SyncError::SyncError;
};

/// A factor-to-variable message required solving a singular 2x2 system.
struct DegenerateMessage : SyncError {
  using SyncError::SyncError;
};

/// A belief precision matrix could not be inverted.
struct SingularBelief : SyncError {
  using SyncError::SyncError;
};

/// The assembled joint posterior precision is not positive definite.
struct SingularPosterior : SyncError {
  using SyncError::SyncError;
};

/// An extracted inverse-skew estimate was non-positive, so no physical
/// (skew, phase) pair exists.
struct InvalidSkew : SyncError {
  using SyncError::SyncError;
};

/// The assembled Fisher information matrix is not invertible.
struct SingularFisher : SyncError {
  using SyncError::SyncError;
};

/// Bad experiment configuration: unknown key, unparsable value, missing
/// required entry, or an out-of-range setting.
struct ConfigError : SyncError {
  using SyncError::SyncError;
};

}  // namespace syncsim
