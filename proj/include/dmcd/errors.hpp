#ifndef DMCD_ERRORS_HPP
#define DMCD_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace dmcd {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Graph construction / query errors.
struct CycleDetected : Error {
    explicit CycleDetected(const std::string& msg = "edge set admits no topological order")
        : Error(msg) {}
};
struct UnknownEndpoint : Error {
    explicit UnknownEndpoint(const std::string& msg) : Error(msg) {}
};
struct DuplicateNode : Error {
    explicit DuplicateNode(const std::string& msg) : Error(msg) {}
};
struct UnknownNode : Error {
    explicit UnknownNode(const std::string& msg) : Error(msg) {}
};
struct InvalidQuery : Error {
    explicit InvalidQuery(const std::string& msg) : Error(msg) {}
};
struct AdjacentPair : Error {
    explicit AdjacentPair(const std::string& msg) : Error(msg) {}
};

// Dataset errors.
struct HeaderMismatch : Error {
    explicit HeaderMismatch(const std::string& msg) : Error(msg) {}
};
struct ParseError : Error {
    explicit ParseError(const std::string& msg) : Error(msg) {}
};
struct EmptyTable : Error {
    explicit EmptyTable(const std::string& msg = "no complete rows after ingestion") : Error(msg) {}
};
struct EmptyColumn : Error {
    explicit EmptyColumn(const std::string& msg = "empty column") : Error(msg) {}
};
struct InvalidSpec : Error {
    explicit InvalidSpec(const std::string& msg) : Error(msg) {}
};

// Independence-test errors.
struct InsufficientSamples : Error {
    explicit InsufficientSamples(const std::string& msg) : Error(msg) {}
};

// Multiplicity errors.
struct EmptyBatch : Error {
    explicit EmptyBatch(const std::string& msg = "empty p-value batch") : Error(msg) {}
};

// Audit errors.
struct NodeNotInDataset : Error {
    explicit NodeNotInDataset(const std::string& msg) : Error(msg) {}
};

// Evaluation errors.
struct NodeMismatch : Error {
    explicit NodeMismatch(const std::string& msg) : Error(msg) {}
};
struct EmptyList : Error {
    explicit EmptyList(const std::string& msg = "empty report list") : Error(msg) {}
};
struct MixedBoundedFlags : Error {
    explicit MixedBoundedFlags(const std::string& msg = "reports mix bounded and unbounded metrics")
        : Error(msg) {}
};

// Drafting / provider errors.
struct EmptyMetadata : Error {
    explicit EmptyMetadata(const std::string& msg = "metadata list is empty") : Error(msg) {}
};
struct SchemaError : Error {
    explicit SchemaError(const std::string& msg) : Error(msg) {}
};
struct UnknownVariable : Error {
    explicit UnknownVariable(const std::string& msg) : Error(msg) {}
};
struct IsolatedNode : Error {
    explicit IsolatedNode(const std::string& msg) : Error(msg) {}
};
struct NoDiscrepancies : Error {
    explicit NoDiscrepancies(const std::string& msg = "audit report contains no discrepancies")
        : Error(msg) {}
};
struct AuthError : Error {
    explicit AuthError(const std::string& msg) : Error(msg) {}
};
struct Timeout : Error {
    explicit Timeout(const std::string& msg) : Error(msg) {}
};
struct RateLimited : Error {
    explicit RateLimited(const std::string& msg) : Error(msg) {}
};
struct MalformedResponseBody : Error {
    explicit MalformedResponseBody(const std::string& msg) : Error(msg) {}
};
struct MockMissError : Error {
    explicit MockMissError(const std::string& msg) : Error(msg) {}
};

// Pipeline errors.
struct IoError : Error {
    explicit IoError(const std::string& msg) : Error(msg) {}
};
struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

}  // namespace dmcd

#endif
