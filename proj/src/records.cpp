#include "stik/records.hpp"

#include <ostream>

#include "stik/textio.hpp"

namespace stik {

namespace {

void write_row(std::ostream& out, const IterationRecord& r, bool timing) {
    out << r.k << ',' << r.tau << ',' << format_double(r.increment) << ',' << format_double(r.lambda_eff)
        << ',' << format_double(r.res2) << ',';
    if (r.relerr) out << format_double(*r.relerr);
    out << ',' << format_double(timing ? r.seconds : 0.0) << '\n';
}

constexpr const char* header = "k,tau,Lambda,lambda_eff,res2,relerr,seconds";

}  // namespace

void write_records_csv(std::ostream& out, const std::vector<IterationRecord>& records, bool timing) {
    out << header << '\n';
    for (const auto& r : records) write_row(out, r, timing);
}

void write_replicates_csv(std::ostream& out, const std::vector<ReplicateRecords>& runs, bool timing) {
    out << "replicate," << header << '\n';
    for (const auto& run : runs) {
        for (const auto& r : run.records) {
            out << run.replicate << ',';
            write_row(out, r, timing);
        }
    }
}

}  // namespace stik
