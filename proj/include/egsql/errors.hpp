#pragma once

#include <stdexcept>
#include <string>

namespace egsql {

// File missing or unreadable.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Structurally invalid record in an interchange file. line is 1-based, 0 when unknown.
struct FormatError : std::runtime_error {
    int line = 0;
    explicit FormatError(const std::string& msg, int line_no = 0)
        : std::runtime_error(line_no > 0 ? "line " + std::to_string(line_no) + ": " + msg : msg),
          line(line_no) {}
};

// An example names a table id the catalog does not contain.
struct UnknownTableError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A gold query is inconsistent with its table (e.g. out-of-range column index).
struct InvalidGoldError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// SQL text that does not parse. position is a byte offset into the input.
struct SqlParseError : std::runtime_error {
    size_t position = 0;
    SqlParseError(const std::string& msg, size_t pos)
        : std::runtime_error(msg + " (at offset " + std::to_string(pos) + ")"), position(pos) {}
};

// A scorer broke its contract (probabilities out of range, illegal action, bad sum).
struct ScorerViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Logit script entry whose probabilities are malformed.
struct DistributionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Training requested on an empty example set.
struct EmptyTrainingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Feature extraction produced nothing usable (e.g. empty questions everywhere).
struct DegenerateFeaturesError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A candidate generator could not propose any grammatical query.
struct NoViableCandidateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace egsql
