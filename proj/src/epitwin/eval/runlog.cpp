#include "epitwin/eval/runlog.hpp"

namespace epitwin::eval {

const char* status_name(CandidateStatus s)
{
    switch (s) {
    case CandidateStatus::ok: return "ok";
    case CandidateStatus::parse_error: return "parse_error";
    case CandidateStatus::verify_error: return "verify_error";
    case CandidateStatus::runtime_error: return "runtime_error";
    }
    return "?";
}

nlohmann::ordered_json RunLog::to_json() const
{
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : records) {
        nlohmann::ordered_json rec;
        rec["g"] = r.generation;
        rec["status"] = status_name(r.status);
        if (r.status == CandidateStatus::ok) {
            rec["v"] = r.v;
            if (r.duplicate)
                rec["duplicate"] = true;
        } else {
            rec["error"] = r.error;
            rec["error_code"] = r.error_code;
        }
        arr.push_back(rec);
    }
    return arr;
}

int bug_counts_at(const RunLog& log, int window)
{
    const int n = static_cast<int>(log.records.size());
    const int lo = n > window ? n - window : 0;
    int bugs = 0;
    for (int i = lo; i < n; ++i)
        if (log.records[static_cast<std::size_t>(i)].status != CandidateStatus::ok)
            ++bugs;
    return bugs;
}

} // namespace epitwin::eval
