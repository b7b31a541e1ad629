#pragma once

#include <stdexcept>
#include <string>

namespace kpc {

// Error identities used across the library. Each maps to one failure mode
// named in a module contract; tests match on the code, not the message.
enum class errc {
    malformed_csv,
    invalid_rotation,
    empty_data,
    zero_variance,
    incompatible_metric,
    degenerate_bandwidth,
    type_mismatch,
    too_few_points,
    size_mismatch,
    degenerate_denominator,
    non_psd_gram,
    negative_diagonal,
    rank_deficient,
    degenerate_y,
    not_positive_definite,
    asymmetric_config,
    invalid_argument,
};

class Error : public std::runtime_error {
  public:
    Error(errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    errc code() const noexcept { return code_; }

  private:
    errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) { throw Error(code, what); }

inline const char* errc_name(errc code) {
    switch (code) {
        case errc::malformed_csv: return "MalformedCsv";
        case errc::invalid_rotation: return "InvalidRotation";
        case errc::empty_data: return "EmptyData";
        case errc::zero_variance: return "ZeroVariance";
        case errc::incompatible_metric: return "IncompatibleMetric";
        case errc::degenerate_bandwidth: return "DegenerateBandwidth";
        case errc::type_mismatch: return "TypeMismatch";
        case errc::too_few_points: return "TooFewPoints";
        case errc::size_mismatch: return "SizeMismatch";
        case errc::degenerate_denominator: return "DegenerateDenominator";
        case errc::non_psd_gram: return "NonPsdGram";
        case errc::negative_diagonal: return "NegativeDiagonal";
        case errc::rank_deficient: return "RankDeficient";
        case errc::degenerate_y: return "DegenerateY";
        case errc::not_positive_definite: return "NotPositiveDefinite";
        case errc::asymmetric_config: return "AsymmetricConfig";
        case errc::invalid_argument: return "InvalidArgument";
    }
    return "Unknown";
}

}  // namespace kpc
