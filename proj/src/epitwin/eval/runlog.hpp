#pragma once

#include <json.hpp>

#include <string>
#include <vector>

namespace epitwin::eval {

enum class CandidateStatus { ok, parse_error, verify_error, runtime_error };

const char* status_name(CandidateStatus s);

/// One record per generation attempt of the evolve loop.
struct CandidateRecord {
    int generation = 0;
    CandidateStatus status = CandidateStatus::ok;
    double v = 0.0;         // validation RMSE, meaningful when status == ok
    std::string error;      // message otherwise
    std::string error_code; // PARSE_ERROR, FORMAT_ERROR, ... for the breakdown
    bool duplicate = false; // deduplicated against the population, not re-evaluated
};

struct RunLog {
    std::vector<CandidateRecord> records;
    nlohmann::ordered_json to_json() const;
};

/// Failed attempts among the last `window` records.
int bug_counts_at(const RunLog& log, int window = 20);

} // namespace epitwin::eval
