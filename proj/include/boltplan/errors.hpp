#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace boltplan {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid configuration value (bad counts, dimensions, ratios, thresholds).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed corpus structure (non-alternating items, bad start/end symbols).
class StructuralError : public Error {
public:
    StructuralError(const std::string& msg, int seq_id)
        : Error(msg + " (seq_id " + std::to_string(seq_id) + ")"), seq_id_(seq_id) {}
    int seq_id() const { return seq_id_; }

private:
    int seq_id_;
};

/// Unknown observation id or missing latent/label entry.
class LookupError : public Error {
public:
    using Error::Error;
};

/// A requested relationship class has no pairs in the corpus.
class SamplingError : public Error {
public:
    using Error::Error;
};

/// Non-finite loss encountered during training.
class TrainingError : public Error {
public:
    TrainingError(const std::string& msg, int epoch)
        : Error(msg + " (epoch " + std::to_string(epoch) + ")"), epoch_(epoch) {}
    int epoch() const { return epoch_; }

private:
    int epoch_;
};

/// Fewer distinct points than requested clusters.
class DegenerateInputError : public Error {
public:
    using Error::Error;
};

/// Inconsistent fitted model (e.g. empty cluster).
class ModelError : public Error {
public:
    using Error::Error;
};

/// Every mixture component density underflowed for the queried latent.
class GroundingError : public Error {
public:
    using Error::Error;
};

/// No demonstrated transition supports the action from the current belief.
class InfeasibleActionError : public Error {
public:
    using Error::Error;
};

/// No cluster count in the searched range met the threshold. Carries the
/// full incorrect-sequence curve for reporting.
class SelectionError : public Error {
public:
    SelectionError(const std::string& msg, std::vector<std::pair<int, double>> curve)
        : Error(msg), curve_(std::move(curve)) {}
    const std::vector<std::pair<int, double>>& curve() const { return curve_; }

private:
    std::vector<std::pair<int, double>> curve_;
};

/// Search frontier exhausted or depth bound hit before the goal test passed.
/// Carries the lowest goal divergence seen for diagnostics.
class NoPlanError : public Error {
public:
    NoPlanError(const std::string& msg, double best_kl, int best_depth)
        : Error(msg), best_kl_(best_kl), best_depth_(best_depth) {}
    double best_kl() const { return best_kl_; }
    int best_depth() const { return best_depth_; }

private:
    double best_kl_;
    int best_depth_;
};

/// Action applied to a finished environment.
class ProtocolError : public Error {
public:
    using Error::Error;
};

/// Bundle file problems: missing file, syntax, version, cross-field checks.
class BundleError : public Error {
public:
    using Error::Error;
};

class BundleParseError : public BundleError {
public:
    BundleParseError(const std::string& msg, std::size_t byte)
        : BundleError(msg + " (byte " + std::to_string(byte) + ")"), byte_(byte) {}
    std::size_t byte() const { return byte_; }

private:
    std::size_t byte_;
};

class BundleVersionError : public BundleError {
public:
    using BundleError::BundleError;
};

class BundleValidationError : public BundleError {
public:
    BundleValidationError(const std::string& msg, std::string field)
        : BundleError(msg + " (field '" + field + "')"), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

}  // namespace boltplan
