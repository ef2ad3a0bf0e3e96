#pragma once

#include <stdexcept>
#include <string>

namespace metastable {

// Error taxonomy shared across the toolkit.  The CLI maps categories to
// process exit codes (config -> 2, assumption -> 3, numeric -> 4).
enum class ErrorCategory { config, assumption, numeric };

struct ToolkitError : std::runtime_error {
    ToolkitError(ErrorCategory cat, const std::string& what) : std::runtime_error(what), category(cat) {}
    ErrorCategory category;
};

struct ConfigError : ToolkitError {
    explicit ConfigError(const std::string& w) : ToolkitError(ErrorCategory::config, w) {}
};

// system-model
struct NoStableEquilibrium : ToolkitError {
    explicit NoStableEquilibrium(const std::string& w) : ToolkitError(ErrorCategory::assumption, w) {}
};
struct TangentRoot : ToolkitError {
    explicit TangentRoot(const std::string& w) : ToolkitError(ErrorCategory::assumption, w) {}
};
struct EmptyShrunkBasin : ToolkitError {
    explicit EmptyShrunkBasin(const std::string& w) : ToolkitError(ErrorCategory::config, w) {}
};

// quasipotential
struct QuadratureFailure : ToolkitError {
    explicit QuadratureFailure(const std::string& w) : ToolkitError(ErrorCategory::numeric, w) {}
};
struct HierarchyUnstable : ToolkitError {
    explicit HierarchyUnstable(const std::string& w) : ToolkitError(ErrorCategory::assumption, w) {}
};

// cycle-hierarchy
struct AssumptionAViolation : ToolkitError {
    explicit AssumptionAViolation(const std::string& w) : ToolkitError(ErrorCategory::assumption, w) {}
};

// metastable-profile
struct BothDiscontinuousAtMerge : ToolkitError {
    explicit BothDiscontinuousAtMerge(const std::string& w) : ToolkitError(ErrorCategory::assumption, w) {}
};
struct DegenerateData : ToolkitError {
    explicit DegenerateData(const std::string& w) : ToolkitError(ErrorCategory::config, w) {}
};
struct OrderingViolation : ToolkitError {
    explicit OrderingViolation(const std::string& w) : ToolkitError(ErrorCategory::assumption, w) {}
};
struct GenericityViolation : ToolkitError {
    explicit GenericityViolation(const std::string& w) : ToolkitError(ErrorCategory::assumption, w) {}
};
struct LambdaGammaUnbounded : ToolkitError {
    explicit LambdaGammaUnbounded(const std::string& w) : ToolkitError(ErrorCategory::numeric, w) {}
};

// verification
struct StepFailure : ToolkitError {
    explicit StepFailure(const std::string& w) : ToolkitError(ErrorCategory::numeric, w) {}
};
struct BudgetExceeded : ToolkitError {
    explicit BudgetExceeded(const std::string& w) : ToolkitError(ErrorCategory::numeric, w) {}
};
struct StabilityFailure : ToolkitError {
    explicit StabilityFailure(const std::string& w) : ToolkitError(ErrorCategory::numeric, w) {}
};

}  // namespace metastable
