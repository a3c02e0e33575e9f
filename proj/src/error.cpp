#include "htree/error.hpp"

namespace htree {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::parse: return "ParseError";
    case ErrorCode::disjoint_support: return "DisjointSupport";
    case ErrorCode::infeasible_boundary: return "InfeasibleBoundary";
    case ErrorCode::size_cap_exceeded: return "SizeCapExceeded";
    case ErrorCode::enumeration_cap_exceeded: return "EnumerationCapExceeded";
    case ErrorCode::non_positive_rate: return "NonPositiveRate";
    case ErrorCode::alpha_not_above_one: return "AlphaNotAboveOne";
    case ErrorCode::missing_edge_weight: return "MissingEdgeWeight";
    case ErrorCode::invalid_flow: return "InvalidFlow";
    case ErrorCode::empty_edge_set: return "EmptyEdgeSet";
    case ErrorCode::empty_interval: return "EmptyInterval";
  }
  return "Unknown";
}

}  // namespace htree
