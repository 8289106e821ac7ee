#pragma once

#include <stdexcept>
#include <string>

namespace cqa {

// Input is not well formed (lexical or grammatical).
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// A relation name occurs in two atoms of one query.
struct SelfJoinError : std::runtime_error {
    explicit SelfJoinError(const std::string& what) : std::runtime_error(what) {}
};

// A fact's width disagrees with the relation it claims to belong to.
struct ArityMismatch : std::runtime_error {
    explicit ArityMismatch(const std::string& what) : std::runtime_error(what) {}
};

// A fact mentions a relation the query does not declare.
struct UnknownRelation : std::runtime_error {
    explicit UnknownRelation(const std::string& what) : std::runtime_error(what) {}
};

// Two key-equal distinct facts in a relation declared consistent.
struct InconsistentConsistentRelation : std::runtime_error {
    explicit InconsistentConsistentRelation(const std::string& what) : std::runtime_error(what) {}
};

// An operation was addressed at an atom that is not part of the query.
struct AtomNotInQuery : std::runtime_error {
    explicit AtomNotInQuery(const std::string& what) : std::runtime_error(what) {}
};

// The repair space (or a gblock's repair space) exceeds the configured cap.
struct RepairSpaceTooLarge : std::runtime_error {
    explicit RepairSpaceTooLarge(const std::string& what) : std::runtime_error(what) {}
};

// certain_fo was asked to handle a query whose attack graph is cyclic.
struct NotFOQuery : std::runtime_error {
    explicit NotFOQuery(const std::string& what) : std::runtime_error(what) {}
};

// A stated precondition of an operation does not hold for the given input.
struct PreconditionError : std::runtime_error {
    explicit PreconditionError(const std::string& what) : std::runtime_error(what) {}
};

// Query shape unsuitable for the operation (e.g. composite-key mode-i atoms
// where simple keys are required).
struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

// A database that should have been gpurified turned out not to be.
struct NotGPurified : std::runtime_error {
    explicit NotGPurified(const std::string& what) : std::runtime_error(what) {}
};

// desugar_consistent on a query without any mode-c atom.
struct NoConsistentAtom : std::runtime_error {
    explicit NoConsistentAtom(const std::string& what) : std::runtime_error(what) {}
};

// An internal structural invariant failed; indicates input outside the
// supported fragment rather than a recoverable condition.
struct UnsupportedStructure : std::runtime_error {
    explicit UnsupportedStructure(const std::string& what) : std::runtime_error(what) {}
};

} // namespace cqa
