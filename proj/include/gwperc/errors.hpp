#pragma once

#include <stdexcept>

namespace gwperc {

/// Base class for all domain errors thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidParameter : Error { using Error::Error; };
struct InvalidPmf : Error { using Error::Error; };
struct InvalidScenario : Error { using Error::Error; };
struct SupercriticalInfinite : Error { using Error::Error; };
struct NearCritical : Error { using Error::Error; };
struct InvalidThreshold : Error { using Error::Error; };
struct InvalidRange : Error { using Error::Error; };
struct BudgetExceeded : Error { using Error::Error; };
struct ScenarioMismatch : Error { using Error::Error; };
struct EmptyCluster : Error { using Error::Error; };

}  // namespace gwperc
