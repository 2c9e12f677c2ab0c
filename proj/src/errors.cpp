#include "olab/errors.hpp"

namespace olab {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidWord: return "invalid-word";
        case ErrorCode::DegeneratePair: return "degenerate-pair";
        case ErrorCode::Numeric: return "numeric";
        case ErrorCode::Domain: return "domain";
        case ErrorCode::Precondition: return "precondition";
        case ErrorCode::Resolution: return "resolution";
        case ErrorCode::PointBudget: return "point-budget";
        case ErrorCode::InsufficientDefectDepth: return "insufficient-defect-depth";
        case ErrorCode::NetTooCoarse: return "net-too-coarse";
        case ErrorCode::AuditInconsistency: return "audit-inconsistency";
        case ErrorCode::UnknownName: return "unknown-name";
        case ErrorCode::Config: return "config";
    }
    return "error";
}

void fail(ErrorCode code, const std::string& what) {
    throw Error(code, std::string(error_code_name(code)) + ": " + what);
}

}  // namespace olab
