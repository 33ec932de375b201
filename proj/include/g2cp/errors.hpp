#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace g2cp {

struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Wire/text parse failure with position info and the token set that would
// have been accepted at that point.
struct ParseError : Error {
    int line = 0;
    int column = 0;
    std::vector<std::string> expected;

    ParseError(int ln, int col, std::vector<std::string> exp, const std::string& what)
        : Error("parse error at " + std::to_string(ln) + ":" + std::to_string(col) + ": " + what),
          line(ln),
          column(col),
          expected(std::move(exp)) {}
};

struct DanglingEdge : Error {
    int line = 0;
    DanglingEdge(int ln, const std::string& what) : Error(what), line(ln) {}
};

struct SchemaViolation : Error {
    using Error::Error;
};

struct UnknownNode : Error {
    using Error::Error;
};

struct UnknownVersion : Error {
    using Error::Error;
};

struct UnknownContextSymbol : Error {
    using Error::Error;
};

struct SourceEmpty : Error {
    SourceEmpty() : Error("source selector resolved to no nodes") {}
    using Error::Error;
};

struct ConcurrentWriteConflict : Error {
    using Error::Error;
};

struct EmptyGraph : Error {
    using Error::Error;
};

struct UnknownSender : Error {
    using Error::Error;
};

struct NoEntitiesLinked : Error {
    using Error::Error;
};

struct CorruptEntry : Error {
    using Error::Error;
};

struct BrokenChain : Error {
    using Error::Error;
};

struct AssertionFailure : Error {
    using Error::Error;
};

// Value-level check failure used where callers expect the full list of
// problems rather than a thrown exception.
struct Violation {
    std::string code;
    std::string detail;

    bool operator==(const Violation&) const = default;
};

}  // namespace g2cp
